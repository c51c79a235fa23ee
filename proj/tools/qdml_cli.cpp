#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qdml/errors.hpp"
#include "qdml/experiments.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw qdml::ConfigError("bad_value", "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const fs::path& path, const std::string& content) {
    const fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw qdml::ConfigError("bad_value", "cannot write " + path.string());
    out << content;
}

void run_and_write(const std::string& config_text, const fs::path& out_dir) {
    const qdml::ExperimentOutput out = qdml::run_experiment(config_text);
    spill(out_dir / "summary.json", out.summary_json);
    if (!out.series_csv.empty()) spill(out_dir / "series.csv", out.series_csv);
    if (!out.events_log.empty()) spill(out_dir / "events.log", out.events_log);
    std::cout << (out_dir / "summary.json").string() << "\n";
}

// Inject the CLI seed override; --out-dir stays out of the config so the
// artifact directory never changes the output bytes. Malformed documents
// pass through untouched so the validator owns the error message.
std::string with_overrides(const std::string& text, const std::optional<std::int64_t>& seed) {
    if (!seed) return text;
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return text;
    doc["seed"] = *seed;
    return doc.dump();
}

fs::path dir_from_config(const std::string& text, const fs::path& fallback) {
    const nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (!doc.is_discarded() && doc.is_object() && doc.contains("out_dir") &&
        doc.at("out_dir").is_string())
        return fs::path(doc.at("out_dir").get<std::string>());
    return fallback;
}

std::string option_name(const std::string& field) {
    std::string name = "--" + field;
    for (auto& c : name)
        if (c == '_') c = '-';
    return name;
}

struct FieldBinding {
    std::string name;
    std::string type;
    CLI::Option* opt = nullptr;
    std::int64_t i = 0;
    double d = 0.0;
    bool b = false;
    std::string s;
    std::vector<std::int64_t> iv;
    std::vector<double> dv;
};

struct KindCommand {
    std::string kind;
    CLI::App* sub = nullptr;
    std::deque<FieldBinding> fields;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic runner for split-circuit experiments"};
    app.require_subcommand(1);

    CLI::App* list_cmd =
        app.add_subcommand("list", "print the machine-readable experiment catalog");

    CLI::App* run_cmd = app.add_subcommand("run", "execute a config file or a batch list");
    std::string config_path;
    std::string batch_path;
    std::int64_t seed_override = 0;
    std::string dir_override;
    CLI::Option* copt = run_cmd->add_option("-c,--config", config_path, "experiment config JSON");
    CLI::Option* bopt =
        run_cmd->add_option("--batch", batch_path, "text file listing one config path per line");
    CLI::Option* sopt = run_cmd->add_option("--seed", seed_override, "override the config seed");
    CLI::Option* oopt = run_cmd->add_option("--out-dir", dir_override, "artifact directory");
    copt->excludes(bopt);
    bopt->excludes(copt);

    // One subcommand per catalog kind, options generated from the schema so
    // the two entry points cannot drift apart.
    const nlohmann::json catalog = nlohmann::json::parse(qdml::list_experiments());
    std::deque<KindCommand> kind_cmds;
    for (const auto& entry : catalog.at("experiments")) {
        KindCommand kc;
        kc.kind = entry.at("kind").get<std::string>();
        kc.sub = app.add_subcommand(kc.kind, entry.at("description").get<std::string>());
        for (const auto& fj : entry.at("fields")) {
            FieldBinding fb;
            fb.name = fj.at("name").get<std::string>();
            fb.type = fj.at("type").get<std::string>();
            const std::string oname = option_name(fb.name);
            const std::string desc = fj.at("description").get<std::string>();
            kc.fields.push_back(std::move(fb));
            FieldBinding& slot = kc.fields.back();
            if (slot.type == "int")
                slot.opt = kc.sub->add_option(oname, slot.i, desc);
            else if (slot.type == "real")
                slot.opt = kc.sub->add_option(oname, slot.d, desc);
            else if (slot.type == "bool")
                slot.opt = kc.sub->add_flag(oname, slot.b, desc);
            else if (slot.type == "string")
                slot.opt = kc.sub->add_option(oname, slot.s, desc);
            else if (slot.type == "int_array")
                slot.opt = kc.sub->add_option(oname, slot.iv, desc);
            else
                slot.opt = kc.sub->add_option(oname, slot.dv, desc);
        }
        kind_cmds.push_back(std::move(kc));
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            std::cout << qdml::list_experiments();
            return 0;
        }

        if (run_cmd->parsed()) {
            std::optional<std::int64_t> seed;
            std::optional<std::string> dir;
            if (sopt->count() > 0) seed = seed_override;
            if (oopt->count() > 0) dir = dir_override;

            if (bopt->count() > 0) {
                std::ifstream list_in(batch_path);
                if (!list_in)
                    throw qdml::ConfigError("bad_value", "cannot read " + batch_path);
                const fs::path base = dir ? fs::path(*dir) : fs::path(".");
                std::string line;
                while (std::getline(list_in, line)) {
                    const auto from = line.find_first_not_of(" \t\r");
                    if (from == std::string::npos) continue;
                    const auto to = line.find_last_not_of(" \t\r");
                    const std::string item = line.substr(from, to - from + 1);
                    if (item.empty() || item[0] == '#') continue;
                    const std::string text = with_overrides(slurp(item), seed);
                    run_and_write(text, base / fs::path(item).stem());
                }
                return 0;
            }
            if (copt->count() == 0)
                throw qdml::ConfigError("missing_field", "run needs --config or --batch");
            const std::string text = with_overrides(slurp(config_path), seed);
            run_and_write(text, dir ? fs::path(*dir) : dir_from_config(text, "."));
            return 0;
        }

        for (const KindCommand& kc : kind_cmds) {
            if (!kc.sub->parsed()) continue;
            nlohmann::json config;
            config["kind"] = kc.kind;
            fs::path out_dir = ".";
            for (const FieldBinding& fb : kc.fields) {
                if (fb.opt->count() == 0) continue;
                if (fb.name == "out_dir") {  // artifact directory, not config
                    out_dir = fs::path(fb.s);
                    continue;
                }
                if (fb.type == "int")
                    config[fb.name] = fb.i;
                else if (fb.type == "real")
                    config[fb.name] = fb.d;
                else if (fb.type == "bool")
                    config[fb.name] = fb.b;
                else if (fb.type == "string")
                    config[fb.name] = fb.s;
                else if (fb.type == "int_array")
                    config[fb.name] = fb.iv;
                else
                    config[fb.name] = fb.dv;
            }
            run_and_write(config.dump(), out_dir);
            return 0;
        }
    } catch (const qdml::ConfigError& e) {
        std::cout << qdml::error_record(e.code, e.what());
        return 2;
    } catch (const qdml::Error& e) {
        std::cout << qdml::error_record("bad_value", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::cout << qdml::error_record("internal_error", e.what());
        return 1;
    }
    return 0;
}
