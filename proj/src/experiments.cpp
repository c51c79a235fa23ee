#include "qdml/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdml/baselines.hpp"
#include "qdml/circuits.hpp"
#include "qdml/expressivity.hpp"
#include "qdml/gradients.hpp"
#include "qdml/jsonio.hpp"
#include "qdml/protocol.hpp"
#include "qdml/rng.hpp"
#include "qdml/training.hpp"

namespace qdml {

namespace {

// ---- schema -----------------------------------------------------------------

enum class FieldType { integer, real, boolean, text, int_array, real_array };

const char* type_name(FieldType t) {
    switch (t) {
        case FieldType::integer: return "int";
        case FieldType::real: return "real";
        case FieldType::boolean: return "bool";
        case FieldType::text: return "string";
        case FieldType::int_array: return "int_array";
        case FieldType::real_array: return "real_array";
    }
    return "?";
}

struct FieldSpec {
    const char* name;
    FieldType type;
    bool required;
    const char* default_json;  // nullptr = no default (omitted when absent)
    const char* example_json;  // catalog example; nullptr = use default_json
    const char* description;
};

struct KindSpec {
    const char* kind;
    const char* description;
    std::vector<FieldSpec> fields;
};

const FieldSpec kSeedField{"seed", FieldType::integer, false, "0", "0",
                           "root seed; every random stream derives from it"};
const FieldSpec kOutDirField{"out_dir", FieldType::text, false, nullptr, "\"out\"",
                             "directory for summary.json and friends (runner-level)"};

const std::vector<KindSpec>& catalog_table() {
    static const std::vector<KindSpec> kinds = {
        {"inference",
         "shot-based loss estimate on a random layered circuit under the two-party split",
         {{"n", FieldType::integer, true, nullptr, "4", "qubit count"},
          {"L", FieldType::integer, true, nullptr, "3", "layer count"},
          {"shots", FieldType::integer, true, nullptr, "100", "measurement shots"},
          {"P", FieldType::integer, false, "1", nullptr, "rotations per block"},
          {"trace", FieldType::boolean, false, "false", nullptr, "record per-message events"}}},
        {"gradcheck",
         "parameter-shift vs finite-difference vs interaction-observable gradients on one circuit",
         {{"n", FieldType::integer, true, nullptr, "3", "qubit count"},
          {"L", FieldType::integer, true, nullptr, "2", "layer count"},
          {"P", FieldType::integer, true, nullptr, "2", "rotations per block"},
          {"fd_step", FieldType::real, false, "1e-05", nullptr, "finite-difference step"}}},
        {"dpcd",
         "probabilistic coordinate descent: one sparse +-1 estimate per step",
         {{"n", FieldType::integer, true, nullptr, "2", "qubit count"},
          {"L", FieldType::integer, true, nullptr, "1", "layer count"},
          {"P", FieldType::integer, true, nullptr, "2", "rotations per block"},
          {"T", FieldType::integer, true, nullptr, "20", "iterations"},
          {"eta", FieldType::real, true, nullptr, "0.1", "constant step size"}}},
        {"stdgd",
         "dense descent on shot-budgeted gradient estimates",
         {{"n", FieldType::integer, true, nullptr, "2", "qubit count"},
          {"L", FieldType::integer, true, nullptr, "1", "layer count"},
          {"P", FieldType::integer, true, nullptr, "2", "rotations per block"},
          {"T", FieldType::integer, true, nullptr, "5", "iterations"},
          {"eta", FieldType::real, true, nullptr, "0.2", "constant step size"},
          {"eps", FieldType::real, true, nullptr, "0.2", "per-coordinate accuracy"},
          {"delta", FieldType::real, true, nullptr, "0.1", "failure probability"}}},
        {"stdft",
         "fine-tuning descent over the last block's parameters from an upfront copy pool",
         {{"n", FieldType::integer, true, nullptr, "2", "qubit count"},
          {"L", FieldType::integer, false, "1", nullptr, "layer count"},
          {"P", FieldType::integer, true, nullptr, "2", "trainable rotations in the last block"},
          {"T", FieldType::integer, true, nullptr, "5", "iterations"},
          {"eta", FieldType::real, true, nullptr, "0.2", "constant step size"},
          {"eps", FieldType::real, true, nullptr, "0.25", "per-observable accuracy"},
          {"delta", FieldType::real, true, nullptr, "0.1", "failure probability"}}},
        {"linclass",
         "sketch-and-compare margin classification with exact bit accounting",
         {{"N", FieldType::integer, true, nullptr, "64", "input dimension"},
          {"gamma", FieldType::real, true, nullptr, "0.8", "promised margin"},
          {"trials", FieldType::integer, true, nullptr, "5", "independent instances"},
          {"C", FieldType::real, false, "64", nullptr, "sketch dimension constant"},
          {"bits_per_coord", FieldType::integer, false, "16", nullptr,
           "quantization bits per sketched coordinate"}}},
        {"spectrum",
         "frequency content of a Hadamard-mixed phase ladder by path-pair enumeration",
         {{"Nprime", FieldType::integer, true, nullptr, "4", "ladder basis size (power of two)"},
          {"L", FieldType::integer, true, nullptr, "2", "layer count"},
          {"tol", FieldType::real, false, "1e-12", nullptr, "coefficient cutoff"},
          {"grid_points", FieldType::integer, false, "101", nullptr,
           "cross-check grid resolution"}}},
        {"seprank",
         "numerical separation rank of the two-variable ladder loss on a product grid",
         {{"Nprime", FieldType::integer, true, nullptr, "2", "ladder basis size (power of two)"},
          {"L", FieldType::integer, true, nullptr, "2", "layer count"},
          {"grid", FieldType::integer, false, "64", nullptr, "points per variable"},
          {"threshold", FieldType::real, false, "1e-08", nullptr,
           "relative singular-value cutoff"}}},
        {"universal",
         "sup error of the synthesized truncated Fourier series against a target function",
         {{"target", FieldType::text, true, nullptr, "\"triangle\"",
           "\"triangle\" or \"trig\" (explicit coefficients)"},
          {"Ms", FieldType::int_array, true, nullptr, "[8, 16]", "harmonic truncation points"},
          {"fp", FieldType::real_array, false, nullptr, nullptr,
           "cosine coefficients by harmonic (trig target only)"},
          {"fm", FieldType::real_array, false, nullptr, nullptr,
           "sine coefficients by harmonic (trig target only)"},
          {"grid_points", FieldType::integer, false, "10000", nullptr, "sup-norm grid"}}},
        {"dataparallel",
         "two-party amplitude encoding of a row-split matrix in one quantum message",
         {{"rows", FieldType::integer, true, nullptr, "4", "matrix rows (even power of two)"},
          {"cols", FieldType::integer, true, nullptr, "4", "matrix columns (power of two)"},
          {"trace", FieldType::boolean, false, "false", nullptr, "record per-message events"}}},
    };
    return kinds;
}

const KindSpec* find_kind(const std::string& kind) {
    for (const auto& k : catalog_table())
        if (kind == k.kind) return &k;
    return nullptr;
}

// ---- parsed config ----------------------------------------------------------

struct Params {
    std::map<std::string, std::int64_t> ints;
    std::map<std::string, double> reals;
    std::map<std::string, bool> bools;
    std::map<std::string, std::string> texts;
    std::map<std::string, std::vector<std::int64_t>> int_arrays;
    std::map<std::string, std::vector<double>> real_arrays;

    bool has(const std::string& name) const {
        return ints.count(name) || reals.count(name) || bools.count(name) || texts.count(name) ||
               int_arrays.count(name) || real_arrays.count(name);
    }
    std::int64_t get_int(const std::string& name) const { return ints.at(name); }
    double get_real(const std::string& name) const {
        auto it = reals.find(name);
        if (it != reals.end()) return it->second;
        return static_cast<double>(ints.at(name));
    }
    bool get_bool(const std::string& name) const { return bools.at(name); }
    const std::string& get_text(const std::string& name) const { return texts.at(name); }
};

void store_field(Params& out, const FieldSpec& f, const nlohmann::json& v) {
    const auto bad = [&](const char* want) {
        throw ConfigError("bad_type", std::string("field '") + f.name + "' must be a " + want);
    };
    switch (f.type) {
        case FieldType::integer:
            if (!v.is_number_integer() && !v.is_number_unsigned()) bad("whole number");
            out.ints[f.name] = v.get<std::int64_t>();
            break;
        case FieldType::real:
            if (!v.is_number()) bad("number");
            out.reals[f.name] = v.get<double>();
            break;
        case FieldType::boolean:
            if (!v.is_boolean()) bad("boolean");
            out.bools[f.name] = v.get<bool>();
            break;
        case FieldType::text:
            if (!v.is_string()) bad("string");
            out.texts[f.name] = v.get<std::string>();
            break;
        case FieldType::int_array: {
            if (!v.is_array()) bad("array of whole numbers");
            std::vector<std::int64_t> arr;
            for (const auto& e : v) {
                if (!e.is_number_integer() && !e.is_number_unsigned())
                    bad("array of whole numbers");
                arr.push_back(e.get<std::int64_t>());
            }
            out.int_arrays[f.name] = std::move(arr);
            break;
        }
        case FieldType::real_array: {
            if (!v.is_array()) bad("array of numbers");
            std::vector<double> arr;
            for (const auto& e : v) {
                if (!e.is_number()) bad("array of numbers");
                arr.push_back(e.get<double>());
            }
            out.real_arrays[f.name] = std::move(arr);
            break;
        }
    }
}

const FieldSpec* find_field(const KindSpec& kind, const std::string& name) {
    if (name == kSeedField.name) return &kSeedField;
    if (name == kOutDirField.name) return &kOutDirField;
    for (const auto& f : kind.fields)
        if (name == f.name) return &f;
    return nullptr;
}

struct ParsedConfig {
    const KindSpec* kind = nullptr;
    Params params;
    std::uint64_t seed = 0;
};

ParsedConfig parse_config(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("parse_error", "config is not valid JSON");
    if (!doc.is_object()) throw ConfigError("bad_type", "config must be a JSON object");
    if (!doc.contains("kind")) throw ConfigError("missing_field", "config needs a 'kind' field");
    if (!doc.at("kind").is_string())
        throw ConfigError("bad_type", "field 'kind' must be a string");
    const std::string kind_name = doc.at("kind").get<std::string>();
    const KindSpec* kind = find_kind(kind_name);
    if (!kind) throw ConfigError("unknown_kind", "unknown experiment kind '" + kind_name + "'");

    ParsedConfig cfg;
    cfg.kind = kind;
    for (const auto& [key, value] : doc.items()) {
        if (key == "kind") continue;
        const FieldSpec* f = find_field(*kind, key);
        if (!f)
            throw ConfigError("unknown_field",
                              "field '" + key + "' is not part of kind '" + kind_name + "'");
        store_field(cfg.params, *f, value);
    }
    // Fill defaults, then check required fields.
    const auto fill_default = [&](const FieldSpec& f) {
        if (cfg.params.has(f.name)) return;
        if (f.required)
            throw ConfigError("missing_field", std::string("kind '") + kind_name +
                                                   "' requires field '" + f.name + "'");
        if (f.default_json) store_field(cfg.params, f, nlohmann::json::parse(f.default_json));
    };
    fill_default(kSeedField);
    for (const auto& f : kind->fields) fill_default(f);
    const std::int64_t seed = cfg.params.get_int("seed");
    if (seed < 0) throw ConfigError("bad_value", "seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    return cfg;
}

void require_positive(const Params& p, const char* name) {
    if (p.get_int(name) < 1)
        throw ConfigError("bad_value", std::string("field '") + name + "' must be positive");
}

// ---- rendering helpers -------------------------------------------------------

JsonValue json_of_field(const Params& p, const FieldSpec& f) {
    switch (f.type) {
        case FieldType::integer: return JsonValue::integer(p.ints.at(f.name));
        case FieldType::real: return JsonValue::real(p.reals.at(f.name));
        case FieldType::boolean: return JsonValue::boolean(p.bools.at(f.name));
        case FieldType::text: return JsonValue::string(p.texts.at(f.name));
        case FieldType::int_array: {
            JsonValue arr = JsonValue::array();
            for (const auto v : p.int_arrays.at(f.name)) arr.push(JsonValue::integer(v));
            return arr;
        }
        case FieldType::real_array: {
            JsonValue arr = JsonValue::array();
            for (const auto v : p.real_arrays.at(f.name)) arr.push(JsonValue::real(v));
            return arr;
        }
    }
    return JsonValue::null();
}

JsonValue config_echo(const ParsedConfig& cfg) {
    JsonValue echo = JsonValue::object();
    echo.set("kind", JsonValue::string(cfg.kind->kind));
    echo.set("seed", JsonValue::unsigned_integer(cfg.seed));
    for (const auto& f : cfg.kind->fields)
        if (cfg.params.has(f.name)) echo.set(f.name, json_of_field(cfg.params, f));
    if (cfg.params.has("out_dir"))
        echo.set("out_dir", JsonValue::string(cfg.params.get_text("out_dir")));
    return echo;
}

JsonValue ledger_json(const CommLedger& ledger) {
    JsonValue j = JsonValue::object();
    j.set("quantum_messages", JsonValue::unsigned_integer(ledger.quantum_messages()));
    j.set("qubits_sent", JsonValue::unsigned_integer(ledger.qubits_sent()));
    j.set("classical_messages", JsonValue::unsigned_integer(ledger.classical_messages()));
    j.set("classical_bits", JsonValue::unsigned_integer(ledger.classical_bits()));
    j.set("rounds", JsonValue::unsigned_integer(ledger.rounds()));
    JsonValue theory = JsonValue::object();
    for (const auto& [k, v] : ledger.theory()) theory.set(k, JsonValue::real(v));
    j.set("theory", theory);
    return j;
}

std::string events_text(const CommLedger& ledger) {
    if (ledger.events().empty()) return {};
    std::string out;
    for (const auto& ev : ledger.events()) {
        out += "round=" + std::to_string(ev.round);
        out += " speaker=";
        out += ev.speaker == Side::alice ? "alice" : "bob";
        if (ev.qubits > 0) {
            out += " kind=quantum width=" + std::to_string(ev.qubits);
        } else {
            out += " kind=classical bits=" + std::to_string(ev.bits);
        }
        out += " name=" + ev.name + "\n";
    }
    if (ledger.trace_truncated()) out += "# trace truncated\n";
    return out;
}

struct RunArtifacts {
    JsonValue results = JsonValue::object();
    CommLedger ledger;
    std::string series;
    std::string events;
};

std::vector<double> random_params(std::size_t count, RngStream rng) {
    std::vector<double> v(count);
    for (auto& x : v) x = rng.uniform(-std::numbers::pi, std::numbers::pi);
    return v;
}

std::vector<std::vector<double>> random_lambda_rows(int Nprime, int L, RngStream rng) {
    std::vector<std::vector<double>> lambda(static_cast<std::size_t>(L),
                                            std::vector<double>(static_cast<std::size_t>(Nprime)));
    for (auto& row : lambda)
        for (auto& v : row) v = rng.uniform(-1.5, 1.5);
    return lambda;
}

// Random single-qubit Pauli string on n qubits.
PauliString random_pauli(int n, RngStream& rng) {
    const int qubit = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    const Pauli p[] = {Pauli::X, Pauli::Y, Pauli::Z};
    return PauliString::single(n, qubit, p[rng.next_below(3)]);
}

// Circuit whose trainable parameters all live in the final A-type block, the
// shape the fine-tuning estimator requires; everything earlier is frozen at
// random angles.
SmoothPreset fine_tune_preset(int n, int L, int P, RngStream& rng) {
    ModelSpec m;
    m.n_qubits = n;
    m.encoder.kind = EncoderSpec::Kind::fixed_basis;
    m.encoder.basis_index = 0;
    m.loss_obs = PauliString::single(n, 0, Pauli::Z);
    int slot = 0;
    for (int l = 0; l < L; ++l) {
        LayerSpec layer;
        for (int j = 0; j < P; ++j)
            layer.b_ops.push_back(make_fixed_rotation(random_pauli(n, rng),
                                                      rng.uniform(-std::numbers::pi, std::numbers::pi)));
        if (l == L - 1) {
            for (int j = 0; j < P; ++j) {
                const double beta = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.6, 1.4);
                layer.a_ops.push_back(make_rotation(random_pauli(n, rng), beta, slot));
                m.param_sites.push_back(ParamSite{Side::alice, l, j, beta});
                ++slot;
            }
        } else {
            for (int j = 0; j < P; ++j)
                layer.a_ops.push_back(make_fixed_rotation(
                    random_pauli(n, rng), rng.uniform(-std::numbers::pi, std::numbers::pi)));
        }
        m.layers.push_back(std::move(layer));
    }
    validate_model(m);
    SmoothPreset preset;
    preset.model = std::move(m);
    preset.betas = beta_vector(preset.model);
    return preset;
}

std::string csv_row(std::initializer_list<std::string> cells) {
    std::string row;
    bool first = true;
    for (const auto& c : cells) {
        if (!first) row += ',';
        row += c;
        first = false;
    }
    row += '\n';
    return row;
}

std::string training_series(const TrainRun& run) {
    std::string csv = "iteration,loss,slot,eta,qubits_cum,classical_bits_cum\n";
    for (std::size_t t = 0; t < run.trajectory.size(); ++t) {
        const auto& pt = run.trajectory[t];
        csv += csv_row({std::to_string(t), format_real17(pt.loss), std::to_string(pt.slot),
                        format_real17(pt.eta), std::to_string(pt.qubits_cum),
                        std::to_string(pt.classical_bits_cum)});
    }
    return csv;
}

JsonValue training_results(const TrainRun& run) {
    JsonValue r = JsonValue::object();
    r.set("iterations", JsonValue::unsigned_integer(run.trajectory.size() - 1));
    r.set("initial_loss", JsonValue::real(run.trajectory.front().loss));
    r.set("final_loss", JsonValue::real(run.trajectory.back().loss));
    double best = run.trajectory.front().loss;
    for (const auto& pt : run.trajectory) best = std::min(best, pt.loss);
    r.set("best_loss", JsonValue::real(best));
    r.set("region_exits", JsonValue::integer(run.region_exits));
    return r;
}

// ---- runners ----------------------------------------------------------------

RunArtifacts run_inference_kind(const ParsedConfig& cfg) {
    const Params& p = cfg.params;
    require_positive(p, "n");
    require_positive(p, "L");
    require_positive(p, "shots");
    require_positive(p, "P");
    RngStream root(cfg.seed);
    RngStream model_rng = root.split(1);
    const SmoothPreset preset = preset_smooth(static_cast<int>(p.get_int("n")),
                                              static_cast<int>(p.get_int("L")),
                                              static_cast<int>(p.get_int("P")), model_rng);
    const auto params = random_params(preset.model.num_params(), root.split(2));
    RngStream run_rng = root.split(3);
    const auto res = run_inference(preset.model, Partition{}, params, {},
                                   static_cast<int>(p.get_int("shots")), run_rng, {},
                                   p.get_bool("trace"));

    RunArtifacts art;
    art.results.set("estimate", JsonValue::real(res.estimate));
    art.results.set("exact_loss", JsonValue::real(res.exact_loss));
    art.results.set("abs_error", JsonValue::real(std::abs(res.estimate - res.exact_loss)));
    art.results.set("shots", JsonValue::integer(p.get_int("shots")));
    art.ledger = res.ledger;
    std::string csv = "shot,outcome,running_mean\n";
    double acc = 0.0;
    for (std::size_t s = 0; s < res.samples.size(); ++s) {
        acc += res.samples[s];
        csv += csv_row({std::to_string(s), std::to_string(res.samples[s]),
                        format_real17(acc / static_cast<double>(s + 1))});
    }
    art.series = std::move(csv);
    art.events = events_text(res.ledger);
    return art;
}

RunArtifacts run_gradcheck_kind(const ParsedConfig& cfg) {
    const Params& p = cfg.params;
    require_positive(p, "n");
    require_positive(p, "L");
    require_positive(p, "P");
    const double fd_step = p.get_real("fd_step");
    if (!(fd_step > 0.0)) throw ConfigError("bad_value", "field 'fd_step' must be positive");
    RngStream root(cfg.seed);
    RngStream model_rng = root.split(1);
    const SmoothPreset preset = preset_smooth(static_cast<int>(p.get_int("n")),
                                              static_cast<int>(p.get_int("L")),
                                              static_cast<int>(p.get_int("P")), model_rng);
    const ModelSpec& m = preset.model;
    const auto params = random_params(m.num_params(), root.split(2));

    const GradientEstimate ps = grad_param_shift(m, params);
    const GradientEstimate fd = grad_finite_diff(m, params, {}, fd_step);
    RunArtifacts art;
    std::string csv = "slot,param_shift,finite_diff,interaction_over_c\n";
    double max_ps_fd = 0.0, max_e_ps = 0.0;
    JsonValue slots = JsonValue::array();
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto obs = grad_observable(m, GradKind::E, static_cast<int>(k));
        const auto ev = expectation_grad_obs(m, Partition{}, params, {}, obs);
        art.ledger.merge(ev.ledger);
        const double e_over_c = ev.value / kCalibE;
        max_ps_fd = std::max(max_ps_fd, std::abs(ps.values[k] - fd.values[k]));
        max_e_ps = std::max(max_e_ps, std::abs(e_over_c - ps.values[k]));
        JsonValue row = JsonValue::object();
        row.set("slot", JsonValue::unsigned_integer(k));
        row.set("param_shift", JsonValue::real(ps.values[k]));
        row.set("finite_diff", JsonValue::real(fd.values[k]));
        row.set("interaction_over_c", JsonValue::real(e_over_c));
        slots.push(std::move(row));
        csv += csv_row({std::to_string(k), format_real17(ps.values[k]),
                        format_real17(fd.values[k]), format_real17(e_over_c)});
    }
    art.results.set("max_abs_param_shift_vs_finite_diff", JsonValue::real(max_ps_fd));
    art.results.set("max_abs_interaction_vs_param_shift", JsonValue::real(max_e_ps));
    art.results.set("calibration", JsonValue::real(kCalibE));
    art.results.set("slots", std::move(slots));
    art.series = std::move(csv);
    return art;
}

RunArtifacts run_training_kind(const ParsedConfig& cfg) {
    const Params& p = cfg.params;
    require_positive(p, "n");
    require_positive(p, "L");
    require_positive(p, "P");
    if (p.get_int("T") < 0) throw ConfigError("bad_value", "field 'T' must be nonnegative");
    const std::string kind = cfg.kind->kind;
    RngStream root(cfg.seed);
    RngStream model_rng = root.split(1);
    const int n = static_cast<int>(p.get_int("n"));
    const int L = static_cast<int>(p.get_int("L"));
    const int P = static_cast<int>(p.get_int("P"));
    const SmoothPreset preset =
        kind == "stdft" ? fine_tune_preset(n, L, P, model_rng) : preset_smooth(n, L, P, model_rng);
    const ModelSpec& m = preset.model;
    const auto params0 = random_params(m.num_params(), root.split(2));
    RngStream train_rng = root.split(3);
    const int T = static_cast<int>(p.get_int("T"));
    const double eta = p.get_real("eta");
    const std::vector<double> schedule(static_cast<std::size_t>(T), eta);

    TrainRun run;
    if (kind == "dpcd") {
        run = dpcd(m, Partition{}, params0, {}, schedule, train_rng);
    } else if (kind == "stdgd") {
        run = stdgd(m, Partition{}, params0, {}, eta, T, p.get_real("eps"), p.get_real("delta"),
                    train_rng);
    } else {
        run = stdft(m, Partition{}, params0, {}, schedule, p.get_real("eps"), p.get_real("delta"),
                    train_rng);
    }
    run.seed = cfg.seed;

    RunArtifacts art;
    art.results = training_results(run);
    if (kind == "stdft") {
        art.results.set("pool_size",
                        JsonValue::unsigned_integer(stdft_pool_size(
                            P, T, p.get_real("eps"), p.get_real("delta"))));
    }
    art.ledger = run.ledger;
    art.series = training_series(run);
    return art;
}

RunArtifacts run_linclass_kind(const ParsedConfig& cfg) {
    const Params& p = cfg.params;
    require_positive(p, "N");
    require_positive(p, "trials");
    const double gamma = p.get_real("gamma");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ConfigError("bad_value", "field 'gamma' must lie in (0, 1]");
    const int N = static_cast<int>(p.get_int("N"));
    const int trials = static_cast<int>(p.get_int("trials"));
    const double C = p.get_real("C");
    const int bits = static_cast<int>(p.get_int("bits_per_coord"));

    RngStream root(cfg.seed);
    RngStream gen = root.split(1);
    const RngStream sketch_root = root.split(2);
    RunArtifacts art;
    int successes = 0;
    std::uint64_t bits_per_trial = 0;
    int k = 0;
    for (int t = 0; t < trials; ++t) {
        const int label = (t % 2 == 0) ? 1 : -1;
        const auto inst = gen_margin_instance(N, gamma, label, gen);
        const auto res = classify_distributed(inst, gamma, C, bits,
                                              sketch_root.split(static_cast<std::uint64_t>(t)));
        successes += res.predicted == inst.label ? 1 : 0;
        bits_per_trial = res.ledger.classical_bits();
        k = res.k;
        art.ledger.merge(res.ledger);
    }
    const double rate = static_cast<double>(successes) / static_cast<double>(trials);
    art.results.set("k", JsonValue::integer(k));
    art.results.set("bits_per_trial", JsonValue::unsigned_integer(bits_per_trial));
    art.results.set("trials", JsonValue::integer(trials));
    art.results.set("successes", JsonValue::integer(successes));
    art.results.set("success_rate", JsonValue::real(rate));
    std::string csv = "N,gamma,k,bits,trials,success_rate\n";
    csv += csv_row({std::to_string(N), format_real17(gamma), std::to_string(k),
                    std::to_string(bits_per_trial), std::to_string(trials), format_real17(rate)});
    art.series = std::move(csv);
    return art;
}

RunArtifacts run_spectrum_kind(const ParsedConfig& cfg) {
    const Params& p = cfg.params;
    require_positive(p, "Nprime");
    require_positive(p, "L");
    require_positive(p, "grid_points");
    const int Np = static_cast<int>(p.get_int("Nprime"));
    const int L = static_cast<int>(p.get_int("L"));
    RngStream root(cfg.seed);
    const auto lambda = random_lambda_rows(Np, L, root.split(1));
    const auto table = enumerate_spectrum(Np, L, lambda, p.get_real("tol"));
    const ModelSpec m = preset_spectrum_ladder(Np, L, lambda);
    const int gp = static_cast<int>(p.get_int("grid_points"));
    std::vector<double> xs(static_cast<std::size_t>(gp));
    for (int i = 0; i < gp; ++i)
        xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(gp);
    const double deviation = spectrum_vs_grid(m, table, xs);

    // Count predicted by the two-layer product formula; exact for L = 2,
    // reported alongside the measured value for comparison plots.
    double predicted = Np;
    for (int l = 1; l < L; ++l) predicted *= static_cast<double>(Np) * (Np - 1) / 2.0;

    RunArtifacts art;
    art.results.set("predicted_count", JsonValue::real(predicted));
    art.results.set("measured_count", JsonValue::unsigned_integer(table.entries.size()));
    art.results.set("max_grid_deviation", JsonValue::real(deviation));
    JsonValue entries = JsonValue::array();
    for (const auto& e : table.entries) {
        JsonValue row = JsonValue::object();
        row.set("frequency", JsonValue::real(e.frequency));
        row.set("coefficient", JsonValue::real(e.coefficient));
        entries.push(std::move(row));
    }
    art.results.set("entries", std::move(entries));
    std::string csv = "Nprime,L,predicted_count,measured_count\n";
    csv += csv_row({std::to_string(Np), std::to_string(L), format_real17(predicted),
                    std::to_string(table.entries.size())});
    art.series = std::move(csv);
    return art;
}

RunArtifacts run_seprank_kind(const ParsedConfig& cfg) {
    const Params& p = cfg.params;
    require_positive(p, "Nprime");
    require_positive(p, "L");
    require_positive(p, "grid");
    const int Np = static_cast<int>(p.get_int("Nprime"));
    const int L = static_cast<int>(p.get_int("L"));
    const int grid = static_cast<int>(p.get_int("grid"));
    RngStream root(cfg.seed);
    const auto lambda = random_lambda_rows(Np, L, root.split(1));
    const ModelSpec m = preset_two_variable_ladder(Np, L, lambda);
    std::vector<double> ys(static_cast<std::size_t>(grid)), zs(static_cast<std::size_t>(grid));
    for (int i = 0; i < grid; ++i) {
        ys[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(grid);
        zs[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(grid);
    }
    const auto report = separation_rank(m, ys, zs, p.get_real("threshold"));

    RunArtifacts art;
    art.results.set("rank", JsonValue::integer(report.rank));
    art.results.set("rows", JsonValue::integer(report.rows));
    art.results.set("cols", JsonValue::integer(report.cols));
    art.results.set("threshold", JsonValue::real(report.threshold));
    JsonValue sv = JsonValue::array();
    for (const double s : report.singular_values) sv.push(JsonValue::real(s));
    art.results.set("singular_values", std::move(sv));
    std::string csv = "index,singular_value\n";
    for (std::size_t i = 0; i < report.singular_values.size(); ++i)
        csv += csv_row({std::to_string(i), format_real17(report.singular_values[i])});
    art.series = std::move(csv);
    return art;
}

RunArtifacts run_universal_kind(const ParsedConfig& cfg) {
    const Params& p = cfg.params;
    require_positive(p, "grid_points");
    const std::string& target = p.get_text("target");
    const auto& ms_in = p.int_arrays.at("Ms");
    if (ms_in.empty()) throw ConfigError("bad_value", "field 'Ms' must be nonempty");
    std::vector<int> Ms;
    for (const auto v : ms_in) {
        if (v < 1) throw ConfigError("bad_value", "every M must be positive");
        Ms.push_back(static_cast<int>(v));
    }

    std::function<double(double)> f;
    std::function<std::pair<double, double>(int)> fhat;
    if (target == "triangle") {
        f = triangle_wave;
        fhat = triangle_fourier;
    } else if (target == "trig") {
        if (!p.real_arrays.count("fp") || !p.real_arrays.count("fm"))
            throw ConfigError("missing_field", "trig target needs 'fp' and 'fm'");
        const auto& fp = p.real_arrays.at("fp");
        const auto& fm = p.real_arrays.at("fm");
        if (fp.size() != fm.size())
            throw ConfigError("bad_value", "'fp' and 'fm' must have equal length");
        f = [fp, fm](double x) {
            double v = 0.0;
            for (std::size_t m = 0; m < fp.size(); ++m) {
                v += fp[m] * std::cos(2.0 * std::numbers::pi * static_cast<double>(m) * x);
                v += fm[m] * std::sin(2.0 * std::numbers::pi * static_cast<double>(m) * x);
            }
            return v;
        };
        fhat = [fp, fm](int m) -> std::pair<double, double> {
            if (m >= 0 && m < static_cast<int>(fp.size()))
                return {fp[static_cast<std::size_t>(m)], fm[static_cast<std::size_t>(m)]};
            return {0.0, 0.0};
        };
    } else {
        throw ConfigError("bad_value", "field 'target' must be \"triangle\" or \"trig\"");
    }

    const auto curve =
        universal_error_curve(f, fhat, Ms, static_cast<int>(p.get_int("grid_points")));
    RunArtifacts art;
    JsonValue points = JsonValue::array();
    std::string csv = "M,sup_error\n";
    bool decreasing = true;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        JsonValue row = JsonValue::object();
        row.set("M", JsonValue::integer(curve[i].M));
        row.set("sup_error", JsonValue::real(curve[i].sup_error));
        points.push(std::move(row));
        csv += csv_row({std::to_string(curve[i].M), format_real17(curve[i].sup_error)});
        if (i > 0 && !(curve[i].sup_error < curve[i - 1].sup_error)) decreasing = false;
    }
    art.results.set("target", JsonValue::string(target));
    art.results.set("points", std::move(points));
    art.results.set("strictly_decreasing", JsonValue::boolean(decreasing));
    art.series = std::move(csv);
    return art;
}

RunArtifacts run_dataparallel_kind(const ParsedConfig& cfg) {
    const Params& p = cfg.params;
    require_positive(p, "rows");
    require_positive(p, "cols");
    const int rows = static_cast<int>(p.get_int("rows"));
    const int cols = static_cast<int>(p.get_int("cols"));
    if (rows % 2 != 0) throw ConfigError("bad_value", "field 'rows' must be even");
    RngStream root(cfg.seed);
    RngStream fill = root.split(1);
    const std::size_t half = static_cast<std::size_t>(rows / 2) * static_cast<std::size_t>(cols);
    std::vector<double> xa(half), xb(half);
    double norm2 = 0.0;
    for (auto& v : xa) {
        v = fill.gaussian();
        norm2 += v * v;
    }
    for (auto& v : xb) {
        v = fill.gaussian();
        norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : xa) v *= inv;
    for (auto& v : xb) v *= inv;

    const auto res = dataparallel_prepare(xa, xb, rows, cols, p.get_bool("trace"));
    double worst = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
        worst = std::max(worst, std::abs(res.state.amps[i] - cplx{xa[i], 0.0}));
        worst = std::max(worst, std::abs(res.state.amps[half + i] - cplx{xb[i], 0.0}));
    }

    RunArtifacts art;
    art.results.set("rows", JsonValue::integer(rows));
    art.results.set("cols", JsonValue::integer(cols));
    art.results.set("message_width", JsonValue::unsigned_integer(res.ledger.qubits_sent()));
    art.results.set("messages", JsonValue::unsigned_integer(res.ledger.quantum_messages()));
    art.results.set("encode_error", JsonValue::real(worst));
    art.ledger = res.ledger;
    art.events = events_text(res.ledger);
    return art;
}

RunArtifacts dispatch(const ParsedConfig& cfg) {
    const std::string kind = cfg.kind->kind;
    if (kind == "inference") return run_inference_kind(cfg);
    if (kind == "gradcheck") return run_gradcheck_kind(cfg);
    if (kind == "dpcd" || kind == "stdgd" || kind == "stdft") return run_training_kind(cfg);
    if (kind == "linclass") return run_linclass_kind(cfg);
    if (kind == "spectrum") return run_spectrum_kind(cfg);
    if (kind == "seprank") return run_seprank_kind(cfg);
    if (kind == "universal") return run_universal_kind(cfg);
    if (kind == "dataparallel") return run_dataparallel_kind(cfg);
    throw ConfigError("unknown_kind", "unknown experiment kind '" + kind + "'");
}

}  // namespace

ExperimentOutput run_experiment(const std::string& config_text) {
    const ParsedConfig cfg = parse_config(config_text);
    RunArtifacts art = dispatch(cfg);

    JsonValue summary = JsonValue::object();
    summary.set("kind", JsonValue::string(cfg.kind->kind));
    summary.set("seed", JsonValue::unsigned_integer(cfg.seed));
    summary.set("config", config_echo(cfg));
    summary.set("results", std::move(art.results));
    summary.set("ledger", ledger_json(art.ledger));

    ExperimentOutput out;
    out.summary_json = summary.dump();
    out.series_csv = std::move(art.series);
    out.events_log = std::move(art.events);
    return out;
}

void validate_experiment(const std::string& config_text) { (void)parse_config(config_text); }

std::string list_experiments() {
    JsonValue root = JsonValue::object();
    JsonValue kinds = JsonValue::array();
    for (const auto& k : catalog_table()) {
        JsonValue entry = JsonValue::object();
        entry.set("kind", JsonValue::string(k.kind));
        entry.set("description", JsonValue::string(k.description));
        JsonValue fields = JsonValue::array();
        const auto add_field = [&fields](const FieldSpec& f) {
            JsonValue fj = JsonValue::object();
            fj.set("name", JsonValue::string(f.name));
            fj.set("type", JsonValue::string(type_name(f.type)));
            fj.set("required", JsonValue::boolean(f.required));
            const char* def = f.default_json;
            const char* ex = f.example_json ? f.example_json : def;
            if (def) fj.set("default", JsonValue::string(def));
            if (ex) fj.set("example", JsonValue::string(ex));
            fj.set("description", JsonValue::string(f.description));
            fields.push(std::move(fj));
        };
        for (const auto& f : k.fields) add_field(f);
        add_field(kSeedField);
        add_field(kOutDirField);
        entry.set("fields", std::move(fields));
        kinds.push(std::move(entry));
    }
    root.set("experiments", std::move(kinds));
    return root.dump();
}

std::string error_record(const std::string& code, const std::string& message) {
    JsonValue rec = JsonValue::object();
    JsonValue err = JsonValue::object();
    err.set("code", JsonValue::string(code));
    err.set("message", JsonValue::string(message));
    rec.set("error", std::move(err));
    return rec.dump();
}

}  // namespace qdml
