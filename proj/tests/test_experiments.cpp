#include <cstdint>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "qdml/errors.hpp"
#include "qdml/experiments.hpp"
#include "qdml/jsonio.hpp"

using namespace qdml;

namespace {

std::string validate_code(const std::string& text) {
    try {
        validate_experiment(text);
    } catch (const ConfigError& e) {
        return e.code;
    }
    return "ok";
}

std::string run_code(const std::string& text) {
    try {
        (void)run_experiment(text);
    } catch (const ConfigError& e) {
        return e.code;
    }
    return "ok";
}

}  // namespace

TEST_CASE("json writer: 17-digit reals, escaping, stable key order") {
    CHECK(format_real17(0.1) == "0.10000000000000001");
    CHECK(format_real17(1.0) == "1");
    CHECK(format_real17(-2.5e-300) == "-2.5e-300");  // trailing zeros dropped
    CHECK(format_real17(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_real17(std::numeric_limits<double>::quiet_NaN()) == "null");
    CHECK(format_real17(std::numeric_limits<double>::infinity()) == "null");

    CHECK(escape_json("a\"b\\c") == "a\\\"b\\\\c");
    CHECK(escape_json("line\nbreak\ttab") == "line\\nbreak\\ttab");
    CHECK(escape_json(std::string(1, '\x01')) == "\\u0001");

    JsonValue obj = JsonValue::object();
    obj.set("z_first", JsonValue::integer(-3));
    JsonValue arr = JsonValue::array();
    arr.push(JsonValue::boolean(true));
    arr.push(JsonValue::null());
    arr.push(JsonValue::string("x"));
    obj.set("a_second", std::move(arr));
    obj.set("empty", JsonValue::object());
    const std::string expected =
        "{\n"
        "  \"z_first\": -3,\n"
        "  \"a_second\": [\n"
        "    true,\n"
        "    null,\n"
        "    \"x\"\n"
        "  ],\n"
        "  \"empty\": {}\n"
        "}\n";
    CHECK(obj.dump() == expected);

    obj.set("z_first", JsonValue::integer(7));  // replaces in place, order kept
    CHECK(obj.dump().find("\"z_first\": 7") < obj.dump().find("\"a_second\""));

    JsonValue plain = JsonValue::integer(1);
    CHECK_THROWS_AS(plain.push(JsonValue::null()), StructuralError);
    CHECK_THROWS_AS(plain.set("k", JsonValue::null()), StructuralError);
}

TEST_CASE("catalog: all ten kinds, required fields named, examples validate") {
    const nlohmann::json catalog = nlohmann::json::parse(list_experiments());
    const auto& kinds = catalog.at("experiments");
    const std::vector<std::string> expected = {"inference", "gradcheck", "dpcd",    "stdgd",
                                               "stdft",     "linclass",  "spectrum", "seprank",
                                               "universal", "dataparallel"};
    REQUIRE(kinds.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(kinds[i].at("kind").get<std::string>() == expected[i]);

    for (const auto& entry : kinds) {
        nlohmann::json config;
        config["kind"] = entry.at("kind");
        bool saw_required = false;
        for (const auto& field : entry.at("fields")) {
            REQUIRE(field.contains("name"));
            REQUIRE(field.contains("type"));
            REQUIRE(field.contains("required"));
            if (field.at("required").get<bool>()) {
                saw_required = true;
                REQUIRE_MESSAGE(field.contains("example"),
                                "required field needs a catalog example");
            }
            if (field.contains("example") && field.at("name") != "out_dir")
                config[field.at("name").get<std::string>()] =
                    nlohmann::json::parse(field.at("example").get<std::string>());
        }
        CHECK(saw_required);  // every kind has at least one required field
        CAPTURE(entry.at("kind").get<std::string>());
        CHECK(validate_code(config.dump()) == "ok");
    }
}

TEST_CASE("config validation: machine-readable error codes") {
    CHECK(validate_code("not json at all") == "parse_error");
    CHECK(validate_code("[1, 2]") == "bad_type");
    CHECK(validate_code("{}") == "missing_field");
    CHECK(validate_code(R"({"kind": 7})") == "bad_type");
    CHECK(validate_code(R"({"kind": "frobnicate"})") == "unknown_kind");
    CHECK(validate_code(R"({"kind": "inference", "n": 4, "L": 3, "shots": 100, "bogus": 1})") ==
          "unknown_field");
    CHECK(validate_code(R"({"kind": "inference", "n": 4, "L": 3})") == "missing_field");
    CHECK(validate_code(R"({"kind": "inference", "n": 4.5, "L": 3, "shots": 100})") == "bad_type");
    CHECK(validate_code(R"({"kind": "inference", "n": 4, "L": 3, "shots": 100, "seed": -1})") ==
          "bad_value");
    CHECK(validate_code(R"({"kind": "inference", "n": 4, "L": 3, "shots": 100})") == "ok");

    CHECK(run_code(R"({"kind": "universal", "target": "trig", "Ms": [4]})") == "missing_field");
    CHECK(run_code(R"({"kind": "universal", "target": "sawtooth", "Ms": [4]})") == "bad_value");
    CHECK(run_code(R"({"kind": "linclass", "N": 64, "gamma": 1.5, "trials": 1})") == "bad_value");
    CHECK(run_code(R"({"kind": "dataparallel", "rows": 3, "cols": 4})") == "bad_value");

    const std::string record = error_record("unknown_kind", "no such kind");
    const nlohmann::json parsed = nlohmann::json::parse(record);
    CHECK(parsed.at("error").at("code") == "unknown_kind");
    CHECK(parsed.at("error").at("message") == "no such kind");
}

TEST_CASE("inference experiment: canonical ledger arithmetic and summary shape") {
    const std::string config = R"({"kind": "inference", "n": 4, "L": 3, "shots": 100, "seed": 11})";
    const ExperimentOutput out = run_experiment(config);

    const nlohmann::json summary = nlohmann::json::parse(out.summary_json);
    CHECK(summary.at("kind") == "inference");
    CHECK(summary.at("seed") == 11);
    CHECK(summary.at("config").at("n") == 4);
    CHECK(summary.at("config").at("P") == 1);  // default echoed
    CHECK(summary.at("ledger").at("qubits_sent") == 2400);
    CHECK(summary.at("ledger").at("quantum_messages") == 600);
    const double est = summary.at("results").at("estimate").get<double>();
    const double exact = summary.at("results").at("exact_loss").get<double>();
    CHECK(std::abs(est) <= 1.0);
    CHECK(std::abs(exact) <= 1.0);

    // top-level key order is part of the output contract
    const auto pos = [&](const char* key) { return out.summary_json.find(key); };
    CHECK(pos("\"kind\"") < pos("\"seed\""));
    CHECK(pos("\"seed\"") < pos("\"config\""));
    CHECK(pos("\"config\"") < pos("\"results\""));
    CHECK(pos("\"results\"") < pos("\"ledger\""));

    CHECK(out.series_csv.substr(0, out.series_csv.find('\n')) == "shot,outcome,running_mean");
    CHECK(out.events_log.empty());  // trace off by default

    const ExperimentOutput traced = run_experiment(
        R"({"kind": "inference", "n": 4, "L": 3, "shots": 2, "seed": 11, "trace": true})");
    CHECK(traced.events_log.find("kind=quantum width=4") != std::string::npos);
    CHECK(traced.events_log.find("round=") != std::string::npos);
    CHECK(traced.events_log.find("speaker=") != std::string::npos);
}

TEST_CASE("experiments are byte-deterministic in (config, seed)") {
    const std::vector<std::string> configs = {
        R"({"kind": "inference", "n": 3, "L": 2, "shots": 40, "seed": 5})",
        R"({"kind": "gradcheck", "n": 2, "L": 2, "P": 2, "seed": 5})",
        R"({"kind": "dpcd", "n": 2, "L": 1, "P": 2, "T": 10, "eta": 0.1, "seed": 5})",
        R"({"kind": "stdgd", "n": 2, "L": 1, "P": 2, "T": 3, "eta": 0.2, "eps": 0.3, "delta": 0.2, "seed": 5})",
        R"({"kind": "stdft", "n": 2, "P": 2, "T": 3, "eta": 0.2, "eps": 0.4, "delta": 0.2, "seed": 5})",
        R"({"kind": "linclass", "N": 32, "gamma": 0.8, "trials": 4, "seed": 5})",
        R"({"kind": "spectrum", "Nprime": 2, "L": 2, "seed": 5})",
        R"({"kind": "seprank", "Nprime": 2, "L": 2, "grid": 16, "seed": 5})",
        R"({"kind": "universal", "target": "triangle", "Ms": [4, 8], "grid_points": 512, "seed": 5})",
        R"({"kind": "dataparallel", "rows": 4, "cols": 4, "trace": true, "seed": 5})",
    };
    for (const auto& config : configs) {
        CAPTURE(config);
        const ExperimentOutput a = run_experiment(config);
        const ExperimentOutput b = run_experiment(config);
        CHECK(a.summary_json == b.summary_json);
        CHECK(a.series_csv == b.series_csv);
        CHECK(a.events_log == b.events_log);
        CHECK(!a.summary_json.empty());
        const nlohmann::json summary = nlohmann::json::parse(a.summary_json);
        CHECK(summary.contains("ledger"));  // every summary embeds the ledger
        CHECK(summary.at("ledger").contains("classical_bits"));
    }

    const ExperimentOutput s5 =
        run_experiment(R"({"kind": "inference", "n": 3, "L": 2, "shots": 40, "seed": 5})");
    const ExperimentOutput s6 =
        run_experiment(R"({"kind": "inference", "n": 3, "L": 2, "shots": 40, "seed": 6})");
    CHECK(s5.summary_json != s6.summary_json);
}

TEST_CASE("experiment series carry the documented csv headers") {
    const auto header = [](const ExperimentOutput& out) {
        return out.series_csv.substr(0, out.series_csv.find('\n'));
    };
    CHECK(header(run_experiment(
              R"({"kind": "linclass", "N": 32, "gamma": 0.8, "trials": 2})")) ==
          "N,gamma,k,bits,trials,success_rate");
    CHECK(header(run_experiment(R"({"kind": "spectrum", "Nprime": 2, "L": 2})")) ==
          "Nprime,L,predicted_count,measured_count");
    CHECK(header(run_experiment(
              R"({"kind": "universal", "target": "triangle", "Ms": [4], "grid_points": 256})")) ==
          "M,sup_error");
    CHECK(header(run_experiment(R"({"kind": "seprank", "Nprime": 2, "L": 2, "grid": 8})")) ==
          "index,singular_value");
    CHECK(header(run_experiment(
              R"({"kind": "dpcd", "n": 2, "L": 1, "P": 2, "T": 2, "eta": 0.1})")) ==
          "iteration,loss,slot,eta,qubits_cum,classical_bits_cum");
}

TEST_CASE("experiment results honor module-level identities") {
    // gradcheck: three gradient views agree on a smooth circuit
    const nlohmann::json grad = nlohmann::json::parse(
        run_experiment(R"({"kind": "gradcheck", "n": 3, "L": 2, "P": 2, "seed": 3})").summary_json);
    CHECK(grad.at("results").at("max_abs_param_shift_vs_finite_diff").get<double>() < 1e-6);
    CHECK(grad.at("results").at("max_abs_interaction_vs_param_shift").get<double>() < 1e-9);

    // spectrum: reconstruction matches the simulated loss on the cross-check grid
    const nlohmann::json spectrum = nlohmann::json::parse(
        run_experiment(R"({"kind": "spectrum", "Nprime": 4, "L": 2, "seed": 9})").summary_json);
    CHECK(spectrum.at("results").at("max_grid_deviation").get<double>() < 1e-9);
    CHECK(spectrum.at("results").at("measured_count") == 24);
    CHECK(spectrum.at("results").at("predicted_count") == 24.0);

    // dataparallel: one quantum message of width log2(rows * cols)
    const nlohmann::json dp = nlohmann::json::parse(
        run_experiment(R"({"kind": "dataparallel", "rows": 8, "cols": 4, "seed": 2})").summary_json);
    CHECK(dp.at("results").at("messages") == 1);
    CHECK(dp.at("results").at("message_width") == 5);
    CHECK(dp.at("results").at("encode_error").get<double>() < 1e-12);

    // linclass: dimension-free sketch size appears in the summary
    const nlohmann::json lc = nlohmann::json::parse(
        run_experiment(R"({"kind": "linclass", "N": 48, "gamma": 0.8, "trials": 2, "seed": 4})")
            .summary_json);
    CHECK(lc.at("results").at("k") == 6400);
    CHECK(lc.at("results").at("bits_per_trial") == 6400 * 16 + 1);

    // universal: triangle-wave errors shrink as the truncation grows
    const nlohmann::json uni = nlohmann::json::parse(
        run_experiment(
            R"({"kind": "universal", "target": "triangle", "Ms": [4, 8, 16], "grid_points": 2048})")
            .summary_json);
    CHECK(uni.at("results").at("strictly_decreasing") == true);

    // trig target with explicit coefficients is reproduced exactly past its length
    const nlohmann::json trig = nlohmann::json::parse(
        run_experiment(
            R"({"kind": "universal", "target": "trig", "Ms": [4], "fp": [0.1, 0.4, 0.0, 0.2], "fm": [0.0, 0.1, 0.3, 0.0], "grid_points": 512})")
            .summary_json);
    const double sup = trig.at("results").at("points").at(0).at("sup_error").get<double>();
    CHECK(sup < 1e-9);
}

TEST_CASE("training experiments report descent and exact ledger totals") {
    const nlohmann::json run = nlohmann::json::parse(
        run_experiment(
            R"({"kind": "dpcd", "n": 2, "L": 1, "P": 2, "T": 40, "eta": 0.15, "seed": 21})")
            .summary_json);
    CHECK(run.at("results").at("iterations") == 40);
    CHECK(run.at("results").at("best_loss").get<double>() <=
          run.at("results").at("initial_loss").get<double>());
    CHECK(run.at("ledger").at("qubits_sent").get<std::int64_t>() > 0);

    const nlohmann::json ft = nlohmann::json::parse(
        run_experiment(
            R"({"kind": "stdft", "n": 2, "P": 2, "T": 3, "eta": 0.2, "eps": 0.5, "delta": 0.2, "seed": 8})")
            .summary_json);
    CHECK(ft.at("results").contains("pool_size"));
    CHECK(ft.at("results").at("iterations") == 3);
}
