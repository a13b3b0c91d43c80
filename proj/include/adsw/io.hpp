#pragma once

#include <string>

#include "adsw/operator_core.hpp"
#include "adsw/propagation.hpp"
#include "adsw/switching.hpp"
#include "adsw/types.hpp"

#include "json.hpp"

namespace adsw {

// Matrix file format: { "dim": n, "entries": [[re, im], ...] } row-major.
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);

// Problem format: { "h0": <matrix>, "v": <matrix>,
//                   "groundEnergy": real?, "degeneracy": int? }
// P0 is derived, never stored. Missing groundEnergy/degeneracy are detected
// from H0's lowest cluster. Throws ParseError / NotHermitian /
// DegeneracyMismatch.
PerturbationProblem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const PerturbationProblem& p);

PerturbationProblem load_problem(const std::string& path);
void save_problem(const PerturbationProblem& p, const std::string& path);

// Profile config: { "kind": "exponential" } | { "kind": "bump", "rf": r } |
//                 { "kind": "table", "tau": [...], "f": [...] }
SwitchingProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const SwitchingProfile& p);

// Propagator dump: metadata (kind, epsilon, t-range, step count, defects)
// with the unitary in the [re, im] row-major matrix format.
nlohmann::json propagator_to_json(const PropagatorResult& result);

nlohmann::json load_json(const std::string& path);
void save_json(const nlohmann::json& j, const std::string& path);

}  // namespace adsw
