#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qdml {

// Insertion-ordered JSON builder with deterministic output: object keys keep
// the order they were set in, reals print with 17 significant digits, and the
// layout is fixed, so equal documents serialize to equal bytes. Parsing is
// delegated to a third-party reader; this type only writes.
class JsonValue {
public:
    JsonValue() : node_(nullptr) {}

    static JsonValue null() { return JsonValue(); }
    static JsonValue boolean(bool v);
    static JsonValue integer(std::int64_t v);
    static JsonValue unsigned_integer(std::uint64_t v);
    static JsonValue real(double v);
    static JsonValue string(std::string v);
    static JsonValue array();
    static JsonValue object();

    bool is_array() const;
    bool is_object() const;

    // Array append / object insert. Throw if the node has another type.
    void push(JsonValue v);
    void set(std::string key, JsonValue v);

    std::string dump(int indent = 2) const;

private:
    using Array = std::vector<JsonValue>;
    using Object = std::vector<std::pair<std::string, JsonValue>>;
    std::variant<std::nullptr_t, bool, std::int64_t, std::uint64_t, double, std::string, Array,
                 Object>
        node_;

    void write(std::string& out, int indent, int depth) const;
};

// 17-significant-digit decimal form, the round-trip-exact precision for
// binary64. Non-finite values have no JSON spelling and render as null.
std::string format_real17(double v);

// Minimal JSON string escaping (quotes, backslash, control characters).
std::string escape_json(const std::string& s);

}  // namespace qdml
