#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adsw/degeneracy.hpp"
#include "adsw/operator_core.hpp"
#include "adsw/propagation.hpp"
#include "adsw/switching.hpp"
#include "adsw/types.hpp"

namespace adsw {

inline constexpr double kDenominatorFloor = 1e-8;
inline constexpr double kConditionMargin = 1e-6;

struct GmlOutcome {
  Vector state;            // the ratio Psi_j (not normalized)
  Complex denominator;     // <psi | U_int psi> (or <phi_ref | U_int psi>)
  double epsilon = 0.0;
  double eigen_residual = 0.0;   // vs H0 + V, Rayleigh-shifted, norm-relative
  double rayleigh_energy = 0.0;
  double condition_norm = 0.0;   // || P_j(-inf) - P_j(0) || (NaN if unknown)
  double cauchy_delta = 0.0;     // truncation self-check from evolve_from_past
};

struct SweepEntry {
  double epsilon = 0.0;
  std::optional<GmlOutcome> outcome;
  std::string error;  // set when the ratio failed at this epsilon
};

struct SweepRecord {
  std::vector<SweepEntry> entries;          // epsilons strictly decreasing
  std::vector<double> cauchy_deltas;        // between consecutive outcomes
  std::vector<double> adiabatic_errors;     // ||U^eps - U_A^eps||, optional
  double fitted_slope = 0.0;                // log-log slope of the above
  bool adiabatic_errors_present = false;

  std::string to_csv() const;
};

// Psi_j = A(0, t0) phi_{j,0} and its Rayleigh energy w.r.t. H0 + V.
std::pair<Vector, double> geometric_eigenstate(
    const PerturbationProblem& problem, const SwitchingProfile& profile,
    const InitialBasis& basis, int j, double tol = 1e-8, double step = 0.01);

// The Gell-Mann-Low ratio U_int(0,-inf) phi_j / <phi_j | U_int phi_j>.
// Throws VanishingDenominator below kDenominatorFloor.
GmlOutcome gml_ratio(const PerturbationProblem& problem,
                     const SwitchingProfile& profile, const InitialBasis& basis,
                     int j, double epsilon,
                     EvolutionKind kind = EvolutionKind::Full,
                     double tol = 1e-6);

// || |phi_j><phi_j| - P_j(1) || and whether it clears 1 - margin.
std::pair<bool, double> check_ratio_condition(const PerturbationProblem& problem,
                                              const InitialBasis& basis, int j);

// Runs gml_ratio (Full) per epsilon; phase-aligned Cauchy deltas between
// consecutive states; optionally || U^eps - U_A^eps || with a log-log fit.
SweepRecord gml_sweep(const PerturbationProblem& problem,
                      const SwitchingProfile& profile, const InitialBasis& basis,
                      int j, const std::vector<double>& eps_list,
                      bool with_adiabatic_errors = false, double tol = 1e-6,
                      int workers = 1);

// Sequential switching through H0 + lambda_k V + (lambda_{k+1}-lambda_k) f V,
// one ratio per stage, each stage in the interaction picture of its own
// unperturbed operator. Throws StageConditionViolated when a stage's
// projector displacement reaches 1.
GmlOutcome multistep_gml(const PerturbationProblem& problem,
                         const SwitchingProfile& profile,
                         const InitialBasis& basis, int j,
                         const std::vector<double>& breakpoints, double epsilon,
                         double tol = 1e-6);

// Ratio with a fixed reference vector in the denominator,
// <phi_ref | U_int psi>, for permanently degenerate tracked blocks.
GmlOutcome permanent_degeneracy_ratio(const PerturbationProblem& problem,
                                      const SwitchingProfile& profile,
                                      const Vector& psi, const Vector& phi_ref,
                                      double epsilon, double tol = 1e-6);

struct GapRow {
  double t = 0.0;
  double f = 0.0;
  double global_gap = 0.0;
  std::vector<double> local_gaps;   // per tracked label
  std::vector<double> gap_ratios;   // delta_j(t) / f(t)
};

struct GapDiagnostics {
  std::vector<GapRow> rows;
  double alpha_min = 0.0;  // empirical bounds of delta_j / f
  double alpha_max = 0.0;
  bool no_splitting = false;  // all local gaps ~ 0 (V does not split E0)

  std::string to_csv() const;
};

GapDiagnostics gap_diagnostics(const PerturbationProblem& problem,
                               const SwitchingProfile& profile,
                               const std::vector<double>& t_grid);

// Rotates `state` so that <reference, state> is real positive.
Vector phase_align(const Vector& state, const Vector& reference);

// Residual of v as an eigenvector of h, Rayleigh-shifted, norm-relative.
double eigen_residual(const Matrix& h, const Vector& v);

}  // namespace adsw
