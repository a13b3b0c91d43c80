#include "adsw/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <Eigen/Eigenvalues>

#include "adsw/degeneracy.hpp"
#include "adsw/gml.hpp"
#include "adsw/propagation.hpp"

namespace adsw {

using nlohmann::json;

namespace {

const std::set<std::string> kExperiments = {
    "assumptions", "basis",     "geometric", "gml",
    "sweep",       "multistep", "gaps",      "divergence-demo"};

const std::map<std::string, std::set<std::string>> kExperimentParams = {
    {"assumptions", {"gridSpacing"}},
    {"basis", {}},
    {"geometric", {"tol"}},
    {"gml", {"epsilon", "j", "kind", "tol"}},
    {"sweep", {"epsilons", "j", "adiabaticErrors", "tol"}},
    {"multistep", {"breakpoints", "epsilon", "j", "tol"}},
    {"gaps", {"tGrid", "tMin", "points"}},
    {"divergence-demo", {"epsilons", "state", "tol", "deltaFloor"}},
};

void require_known_params(const std::string& experiment, const json& params) {
  const auto& allowed = kExperimentParams.at(experiment);
  for (const auto& [key, value] : params.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw Error(ErrorCode::ConfigParse, "unknown parameter '" + key +
                                              "' for experiment '" +
                                              experiment + "'");
    }
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  }
  out << text;
}

double param_real(const json& params, const std::string& key, double fallback) {
  return params.contains(key) ? params.at(key).get<double>() : fallback;
}

int param_int(const json& params, const std::string& key, int fallback) {
  return params.contains(key) ? params.at(key).get<int>() : fallback;
}

json tolerance(double value, const std::string& source) {
  return {{"value", value}, {"source", source}};
}

InitialBasis basis_with_lift(const PerturbationProblem& problem) {
  InitialBasis basis = build_initial_basis(problem);
  for (const auto& g : basis.residual_groups) {
    if (g.size() > 1) return second_order_lift(problem, basis);
  }
  return basis;
}

Vector state_from_param(const json& params, const std::string& key,
                        const InitialBasis& basis, int dim) {
  if (!params.contains(key)) {
    // default: equal superposition of the first two basis vectors (or the
    // single one), the canonical divergence witness
    Vector v = basis.vectors[0];
    if (basis.size() > 1) {
      v = (basis.vectors[0] + basis.vectors[1]) / std::sqrt(2.0);
    }
    return v;
  }
  const auto& arr = params.at(key);
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(dim)) {
    throw Error(ErrorCode::ConfigParse, "'" + key + "' must list " +
                                            std::to_string(dim) +
                                            " [re, im] pairs");
  }
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    const auto& e = arr.at(i);
    v(i) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
  }
  return v;
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::ConfigParse, "scenario config must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "problem" && key != "profile" && key != "experiment" &&
        key != "parameters" && key != "output") {
      throw Error(ErrorCode::ConfigParse, "unknown config key '" + key + "'");
    }
  }
  ScenarioConfig c;
  if (!j.contains("problem") || !j.contains("experiment")) {
    throw Error(ErrorCode::ConfigParse,
                "config needs 'problem' and 'experiment'");
  }
  c.problem_path = j.at("problem").get<std::string>();
  c.experiment = j.at("experiment").get<std::string>();
  if (!kExperiments.count(c.experiment)) {
    throw Error(ErrorCode::ConfigParse,
                "unknown experiment '" + c.experiment + "'");
  }
  c.profile = j.contains("profile") ? j.at("profile")
                                    : json{{"kind", "exponential"}};
  c.parameters = j.contains("parameters") ? j.at("parameters") : json::object();
  if (!c.parameters.is_object()) {
    throw Error(ErrorCode::ConfigParse, "'parameters' must be an object");
  }
  c.output_dir = j.contains("output") ? j.at("output").get<std::string>() : ".";
  return c;
}

ScenarioResult run_scenario(const ScenarioConfig& config, bool verbose,
                            int workers) {
  ScenarioResult result;
  json& report = result.report;
  report["experiment"] = config.experiment;
  report["problem"] = config.problem_path;

  PerturbationProblem problem;
  SwitchingProfile profile = SwitchingProfile::exponential();
  try {
    problem = load_problem(config.problem_path);
    profile = profile_from_json(config.profile);
  } catch (const Error& e) {
    report["error"] = e.what();
    result.exit_code = 2;
    return result;
  }
  report["profile"] = config.profile;

  const std::filesystem::path outdir(config.output_dir);
  std::filesystem::create_directories(outdir);
  const json& params = config.parameters;
  bool pass = true;

  try {
    require_known_params(config.experiment, params);
    if (config.experiment == "assumptions") {
      const double spacing = param_real(params, "gridSpacing", 0.01);
      std::vector<double> grid;
      const int n = std::max(2, static_cast<int>(std::round(1.0 / spacing)));
      for (int i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) / n);
      const AssumptionReport rep = check_assumptions(problem, grid, &profile);
      report["assumption1"] = {{"pass", rep.degeneracy_ok},
                               {"detectedDegeneracy", rep.detected_degeneracy}};
      report["assumption2"] = {{"pass", rep.gap_ok},
                               {"minGlobalGap", rep.min_global_gap},
                               {"argminLambda", rep.argmin_gap_lambda},
                               {"declaredFloor", problem.gap_floor()}};
      report["assumption3"] = {{"pass", rep.splitting_ok},
                               {"pvpEigenvalues", rep.pvp_eigenvalues},
                               {"minPairwiseGap",
                                std::isfinite(rep.min_pairwise_gap)
                                    ? json(rep.min_pairwise_gap)
                                    : json("inf")},
                               {"lambdaStar", rep.lambda_star}};
      report["gridSpacing"] = spacing;
      report["gridPoints"] = grid.size();
      if (rep.profile) {
        report["assumption4"] = {{"pass", rep.profile->all_ok()},
                                 {"integralF", rep.profile->integral_f},
                                 {"integralFpp", rep.profile->integral_fpp},
                                 {"integralFpSq", rep.profile->integral_fp_sq}};
      }
      pass = rep.all_ok() && (!rep.profile || rep.profile->all_ok());
    } else if (config.experiment == "basis") {
      const InitialBasis basis = basis_with_lift(problem);
      std::vector<double> grid;
      for (int i = 0; i < 8; ++i) {
        grid.push_back(1e-3 * std::pow(5e-2 / 1e-3, i / 7.0));
      }
      const SeriesReport series = expansion_check(problem, basis, grid);
      write_text((outdir / "expansion.csv").string(), series.to_csv());
      report["firstResidualSlopes"] = series.first_slopes;
      if (series.second_order_available) {
        report["secondResidualSlopes"] = series.second_slopes;
      }
      report["firstShifts"] = basis.first_shifts;
      report["residualGroups"] = basis.residual_groups;
      report["liftApplied"] = basis.lift_applied;
      if (basis.second_shifts) report["secondShifts"] = *basis.second_shifts;
      report["residualDegenerateGroups"] = basis.residual_degenerate_groups;
      double max_offdiag = 0.0;
      for (int a = 0; a < basis.size(); ++a) {
        for (int b = 0; b < basis.size(); ++b) {
          if (a == b) continue;
          max_offdiag = std::max(
              max_offdiag, std::abs(basis.vectors[a].dot(problem.v().mat() *
                                                         basis.vectors[b])));
        }
      }
      report["maxOffDiagonalPVP"] = max_offdiag;
      pass = max_offdiag <= 1e-10;
      report["tolerances"] = {
          {"offDiagonal", tolerance(1e-10, "library invariant")}};
    } else if (config.experiment == "geometric") {
      const InitialBasis basis = basis_with_lift(problem);
      const double tol = param_real(params, "tol", 1e-8);
      Eigen::SelfAdjointEigenSolver<Matrix> es(problem.hamiltonian(1.0));
      const PropagatorResult transport = kato_from_past(problem, profile, tol);
      save_json(propagator_to_json(transport),
                (outdir / "kato_propagator.json").string());
      json states = json::array();
      for (int j = 0; j < basis.size(); ++j) {
        const Vector psi = transport.unitary * basis.vectors[j];
        const double energy =
            std::real(psi.dot(problem.hamiltonian(1.0) * psi)) /
            psi.squaredNorm();
        const double residual = eigen_residual(problem.hamiltonian(1.0), psi);
        double best_overlap = 0.0;
        for (int i = 0; i < es.eigenvectors().cols(); ++i) {
          best_overlap = std::max(
              best_overlap,
              std::abs(es.eigenvectors().col(i).dot(psi)) / psi.norm());
        }
        states.push_back({{"j", j},
                          {"rayleighEnergy", energy},
                          {"eigenResidual", residual},
                          {"denseOverlap", best_overlap}});
        pass = pass && residual <= 1e-5;
      }
      report["states"] = states;
      report["tolerances"] = {
          {"eigenResidual", tolerance(1e-5, "library invariant")},
          {"truncation", tolerance(tol, "scenario parameter")}};
    } else if (config.experiment == "gml") {
      const InitialBasis basis = basis_with_lift(problem);
      const double eps = param_real(params, "epsilon", 0.1);
      const int j = param_int(params, "j", 0);
      const double tol = param_real(params, "tol", 1e-6);
      const std::string kind = params.contains("kind")
                                   ? params.at("kind").get<std::string>()
                                   : "full";
      const GmlOutcome out = gml_ratio(problem, profile, basis, j, eps,
                                       kind == "adiabatic"
                                           ? EvolutionKind::Adiabatic
                                           : EvolutionKind::Full,
                                       tol);
      report["epsilon"] = eps;
      report["j"] = j;
      report["absDenominator"] = std::abs(out.denominator);
      report["eigenResidual"] = out.eigen_residual;
      report["rayleighEnergy"] = out.rayleigh_energy;
      report["conditionNorm"] = out.condition_norm;
      report["truncationDelta"] = out.cauchy_delta;
    } else if (config.experiment == "sweep") {
      // default: geometric sequence of ratio 1/2 from 0.4, five points
      std::vector<double> eps_list = {0.4, 0.2, 0.1, 0.05, 0.025};
      if (params.contains("epsilons")) {
        eps_list = params.at("epsilons").get<std::vector<double>>();
      }
      if (eps_list.size() < 4) {
        throw Error(ErrorCode::ConfigParse,
                    "sweep needs at least 4 epsilons");
      }
      const InitialBasis basis = basis_with_lift(problem);
      const int j = param_int(params, "j", 0);
      const bool adiab = !params.contains("adiabaticErrors") ||
                         params.at("adiabaticErrors").get<bool>();
      const double tol = param_real(params, "tol", 1e-6);
      const SweepRecord rec =
          gml_sweep(problem, profile, basis, j, eps_list, adiab, tol, workers);
      write_text((outdir / "sweep.csv").string(), rec.to_csv());
      json deltas = json::array();
      bool decreasing = true;
      for (std::size_t i = 0; i < rec.cauchy_deltas.size(); ++i) {
        deltas.push_back(rec.cauchy_deltas[i]);
        if (i > 0 && !(rec.cauchy_deltas[i] < rec.cauchy_deltas[i - 1])) {
          decreasing = false;
        }
      }
      report["cauchyDeltas"] = deltas;
      report["deltasStrictlyDecreasing"] = decreasing;
      if (adiab) {
        report["adiabaticErrors"] = rec.adiabatic_errors;
        report["fittedSlope"] = rec.fitted_slope;
      }
      bool all_ok = true;
      for (const auto& e : rec.entries) {
        if (!e.outcome) all_ok = false;
      }
      report["allEntriesConverged"] = all_ok;
      pass = all_ok && decreasing;
    } else if (config.experiment == "multistep") {
      const InitialBasis basis = basis_with_lift(problem);
      const int j = param_int(params, "j", 0);
      const double eps = param_real(params, "epsilon", 0.05);
      std::vector<double> breakpoints = {0.0, 0.5, 1.0};
      if (params.contains("breakpoints")) {
        breakpoints = params.at("breakpoints").get<std::vector<double>>();
      }
      const GmlOutcome out =
          multistep_gml(problem, profile, basis, j, breakpoints, eps,
                        param_real(params, "tol", 1e-6));
      report["breakpoints"] = breakpoints;
      report["epsilon"] = eps;
      report["eigenResidual"] = out.eigen_residual;
      report["rayleighEnergy"] = out.rayleigh_energy;
      report["maxStageConditionNorm"] = out.condition_norm;
      report["absFinalDenominator"] = std::abs(out.denominator);
    } else if (config.experiment == "gaps") {
      std::vector<double> tgrid;
      if (params.contains("tGrid")) {
        tgrid = params.at("tGrid").get<std::vector<double>>();
      } else {
        const double tmin = param_real(params, "tMin", -8.0);
        const int n = param_int(params, "points", 200);
        // end strictly below 0 only if f vanishes there; f(0)=1 is fine
        for (int i = 0; i <= n; ++i) {
          tgrid.push_back(tmin + (0.0 - tmin) * i / n);
        }
      }
      const GapDiagnostics diag = gap_diagnostics(problem, profile, tgrid);
      write_text((outdir / "gaps.csv").string(), diag.to_csv());
      report["alphaMin"] = diag.alpha_min;
      report["alphaMax"] = diag.alpha_max;
      report["noSplitting"] = diag.no_splitting;
    } else if (config.experiment == "divergence-demo") {
      const InitialBasis basis = build_initial_basis(problem);
      std::vector<double> eps_list = {0.1, 0.05, 0.025, 0.0125};
      if (params.contains("epsilons")) {
        eps_list = params.at("epsilons").get<std::vector<double>>();
      }
      const Vector psi = state_from_param(params, "state", basis, problem.dim());
      const double tol = param_real(params, "tol", 1e-6);
      const double floor = param_real(params, "deltaFloor", 0.1);
      std::vector<Vector> states;
      json rows = json::array();
      for (double eps : eps_list) {
        const GmlOutcome out =
            permanent_degeneracy_ratio(problem, profile, psi, psi, eps, tol);
        rows.push_back({{"epsilon", eps},
                        {"absDenominator", std::abs(out.denominator)},
                        {"eigenResidual", out.eigen_residual}});
        states.push_back(out.state);
      }
      std::vector<double> deltas;
      for (std::size_t i = 0; i + 1 < states.size(); ++i) {
        deltas.push_back(
            (phase_align(states[i], psi) - phase_align(states[i + 1], psi))
                .norm());
      }
      const double min_delta =
          *std::min_element(deltas.begin(), deltas.end());
      report["entries"] = rows;
      report["cauchyDeltas"] = deltas;
      report["minCauchyDelta"] = min_delta;
      report["verdict"] = min_delta >= floor ? "no-limit" : "converged";
      report["tolerances"] = {{"deltaFloor", tolerance(floor, "scenario parameter")}};
    }
  } catch (const Error& e) {
    report["error"] = e.what();
    result.exit_code =
        (e.code() == ErrorCode::ConfigParse || e.code() == ErrorCode::ParseError)
            ? 2
            : 1;
    save_json(report, (outdir / "report.json").string());
    return result;
  }

  report["pass"] = pass;
  save_json(report, (outdir / "report.json").string());
  if (verbose) {
    std::cerr << report.dump(2) << "\n";
  }
  result.exit_code = pass ? 0 : 1;
  return result;
}

}  // namespace adsw
