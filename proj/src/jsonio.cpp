#include "qdml/jsonio.hpp"

#include <cmath>
#include <cstdio>

#include "qdml/errors.hpp"

namespace qdml {

JsonValue JsonValue::boolean(bool v) {
    JsonValue j;
    j.node_ = v;
    return j;
}

JsonValue JsonValue::integer(std::int64_t v) {
    JsonValue j;
    j.node_ = v;
    return j;
}

JsonValue JsonValue::unsigned_integer(std::uint64_t v) {
    JsonValue j;
    j.node_ = v;
    return j;
}

JsonValue JsonValue::real(double v) {
    JsonValue j;
    j.node_ = v;
    return j;
}

JsonValue JsonValue::string(std::string v) {
    JsonValue j;
    j.node_ = std::move(v);
    return j;
}

JsonValue JsonValue::array() {
    JsonValue j;
    j.node_ = Array{};
    return j;
}

JsonValue JsonValue::object() {
    JsonValue j;
    j.node_ = Object{};
    return j;
}

bool JsonValue::is_array() const { return std::holds_alternative<Array>(node_); }
bool JsonValue::is_object() const { return std::holds_alternative<Object>(node_); }

void JsonValue::push(JsonValue v) {
    auto* arr = std::get_if<Array>(&node_);
    if (!arr) throw StructuralError("push target is not a JSON array");
    arr->push_back(std::move(v));
}

void JsonValue::set(std::string key, JsonValue v) {
    auto* obj = std::get_if<Object>(&node_);
    if (!obj) throw StructuralError("set target is not a JSON object");
    for (auto& [k, val] : *obj) {
        if (k == key) {
            val = std::move(v);
            return;
        }
    }
    obj->emplace_back(std::move(key), std::move(v));
}

std::string format_real17(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string escape_json(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

void JsonValue::write(std::string& out, int indent, int depth) const {
    const std::string pad(static_cast<std::size_t>(indent) * static_cast<std::size_t>(depth), ' ');
    const std::string pad_in(static_cast<std::size_t>(indent) * static_cast<std::size_t>(depth + 1),
                             ' ');
    struct Visitor {
        std::string& out;
        int indent;
        int depth;
        const std::string& pad;
        const std::string& pad_in;

        void operator()(std::nullptr_t) const { out += "null"; }
        void operator()(bool v) const { out += v ? "true" : "false"; }
        void operator()(std::int64_t v) const { out += std::to_string(v); }
        void operator()(std::uint64_t v) const { out += std::to_string(v); }
        void operator()(double v) const { out += format_real17(v); }
        void operator()(const std::string& v) const {
            out += '"';
            out += escape_json(v);
            out += '"';
        }
        void operator()(const Array& arr) const {
            if (arr.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < arr.size(); ++i) {
                out += pad_in;
                arr[i].write(out, indent, depth + 1);
                if (i + 1 < arr.size()) out += ',';
                out += '\n';
            }
            out += pad;
            out += ']';
        }
        void operator()(const Object& obj) const {
            if (obj.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            for (std::size_t i = 0; i < obj.size(); ++i) {
                out += pad_in;
                out += '"';
                out += escape_json(obj[i].first);
                out += "\": ";
                obj[i].second.write(out, indent, depth + 1);
                if (i + 1 < obj.size()) out += ',';
                out += '\n';
            }
            out += pad;
            out += '}';
        }
    };
    std::visit(Visitor{out, indent, depth, pad, pad_in}, node_);
}

std::string JsonValue::dump(int indent) const {
    std::string out;
    write(out, indent, 0);
    out += '\n';
    return out;
}

}  // namespace qdml
