#pragma once

#include <string>

#include "qdml/errors.hpp"

namespace qdml {

// A config rejected before execution. `code` is the stable machine-readable
// discriminator for scripts: "parse_error", "bad_type", "missing_field",
// "unknown_field", "unknown_kind", or "bad_value".
struct ConfigError : Error {
    std::string code;
    ConfigError(std::string code_, const std::string& message)
        : Error(message), code(std::move(code_)) {}
};

struct ExperimentOutput {
    std::string summary_json;  // always produced
    std::string series_csv;    // empty when the kind emits no series
    std::string events_log;    // empty unless tracing captured events
};

// Parse, validate, execute, and render one experiment. The summary embeds
// the results, the full communication ledger, the seed, and an echo of the
// effective config (defaults filled in), so identical config text always
// yields identical output bytes. Throws ConfigError on a bad config; errors
// raised by the run itself propagate as their own types.
ExperimentOutput run_experiment(const std::string& config_text);

// Validation without execution: throws exactly when run_experiment would
// reject the config.
void validate_experiment(const std::string& config_text);

// Machine-readable catalog of all experiment kinds, their fields, types,
// defaults, and example values. Configs built from the examples pass
// validate_experiment.
std::string list_experiments();

// One-line JSON error record for nonzero-exit paths.
std::string error_record(const std::string& code, const std::string& message);

}  // namespace qdml
