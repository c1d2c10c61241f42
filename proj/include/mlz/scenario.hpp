#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mlz/model.hpp"
#include "mlz/propagator.hpp"

namespace mlz {

using Json = nlohmann::json;

/// Schema/invariant check only, no computation. All problems are collected
/// into one report rather than thrown one at a time.
struct ValidationReport {
    bool valid = true;
    std::vector<std::string> errors;
};
ValidationReport validate_scenario(const Json& doc);

/// Result of executing one scenario: the CSV path, the run manifest, and
/// the exit code contract (0 ok, 1 validation failure, 2 not converged).
struct RunOutcome {
    int exit_code = 0;
    std::string csv_path;
    Json manifest;
    Json error; // machine-readable error record when exit_code != 0
};

RunOutcome run_scenario(const Json& doc, const std::string& out_dir, int threads);

/// Applies one `key=value` override with a dotted path into the document.
/// The value is parsed as JSON when possible, else kept as a string.
void apply_override(Json& doc, const std::string& assignment);

/// Builds a DiabaticModel from a nested model record (used by the
/// `spectrum` and `propagate` kinds).
DiabaticModel model_from_json(const Json& spec);

/// Builds a ThreeStateFamily from a family record.
ThreeStateFamily family_from_json(const Json& spec);

/// Scatter settings; when the record omits rel_tol, `default_rel_tol`
/// applies (the CLI feeds MLZ_DEFAULT_TOL through this hook).
ScatterConfig scatter_from_json(const Json& rec, double default_rel_tol = 1e-10);

/// Fixed-format scientific CSV cell: 12 significant digits.
std::string csv_number(double x);

} // namespace mlz
