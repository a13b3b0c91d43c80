#pragma once

#include <optional>
#include <vector>

#include "adsw/operator_core.hpp"
#include "adsw/switching.hpp"
#include "adsw/types.hpp"

namespace adsw {

enum class EvolutionKind { Full, Adiabatic, Kato };

const char* evolution_kind_name(EvolutionKind kind);

struct PropagatorResult {
  Matrix unitary;
  double t_start = 0.0;
  double t_end = 0.0;
  std::optional<double> epsilon;  // absent for the Kato evolution
  long step_count = 0;
  double unitarity_defect = 0.0;      // after re-unitarization
  double pre_unitarity_defect = 0.0;  // worst defect seen before polar fix
  EvolutionKind kind = EvolutionKind::Full;
};

struct GeneratorSample {
  double t = 0.0;
  Matrix h;                       // H(t)
  Matrix k;                       // K(t), anti-Hermitian
  std::vector<double> local_gaps; // delta_j(t) per tracked label
  double bound_constant = 0.0;    // ||K(t)|| / f'(t) (0 when f' = 0)
};

// H(t) = h0 + f(t) * v. Multistep stages reuse this with shifted operators.
struct LinearSwitchFamily {
  Matrix h0;
  Matrix v;

  static LinearSwitchFamily of(const PerturbationProblem& p) {
    return {p.h0().mat(), p.v().mat()};
  }
  Matrix at(double f) const { return h0 + f * v; }
};

inline constexpr double kDefaultStepFactor = 0.02;
inline constexpr double kDefaultDLambda = 1e-4;

// step = eps * kDefaultStepFactor / ||H(1)||, resolving the 1/eps phase.
double default_step(const PerturbationProblem& problem, double epsilon,
                    double factor = kDefaultStepFactor);

// K(t) = f'(t) * Ktilde(f(t)) with Ktilde = -sum_B P_B dP_B/dlambda over the
// tracked blocks and the rest-of-spectrum block, assembled in commutator form
// (exactly anti-Hermitian). dP/dlambda by central finite difference with
// maximal-overlap matching; tracked levels whose splitting is below the
// finite-difference noise floor are treated as one block.
GeneratorSample kato_generator(const PerturbationProblem& problem,
                               const SwitchingProfile& profile, double t,
                               double d_lambda = kDefaultDLambda);

// Integrates dA/ds = K(s) A from the identity; kind = Kato.
PropagatorResult kato_evolve(const PerturbationProblem& problem,
                             const SwitchingProfile& profile, double s0,
                             double s1, double step,
                             double d_lambda = kDefaultDLambda);

// Integrates i eps dU/dt = H(t) U; kind = Full. Throws StepTooCoarse when
// step > eps * 0.1 / ||H(1)||.
PropagatorResult full_evolve(const PerturbationProblem& problem,
                             const SwitchingProfile& profile, double epsilon,
                             double t0, double t1, double step);
PropagatorResult full_evolve(const LinearSwitchFamily& family,
                             const SwitchingProfile& profile, double epsilon,
                             double t0, double t1, double step);

// Integrates i eps dU/dt = (H(t) + i eps K(t)) U; kind = Adiabatic.
PropagatorResult adiabatic_evolve(const PerturbationProblem& problem,
                                  const SwitchingProfile& profile,
                                  double epsilon, double t0, double t1,
                                  double step,
                                  double d_lambda = kDefaultDLambda);

// e^{i tEnd H0 / eps} U e^{-i tStart H0 / eps}, in H0's eigenbasis.
Matrix interaction_picture(const PropagatorResult& result,
                           const HermitianOperator& h0);
Matrix interaction_picture(const PropagatorResult& result, const Matrix& h0);

struct FromPastResult {
  Matrix u_int;          // interaction-picture propagator U_int(0, t0)
  double t0 = 0.0;       // truncation of t0 -> -inf
  double cauchy_delta = 0.0;  // || U_int(0,t0) - U_int(0, 1.5 t0) ||
  PropagatorResult propagator;
};

// Finite surrogate of U_int(0, -inf): truncates at
// t0 = truncation_time(profile, tol * eps) and verifies Cauchy behavior
// against a 1.5x earlier start. Throws NotConverged above 10 * tol.
FromPastResult evolve_from_past(const PerturbationProblem& problem,
                                const SwitchingProfile& profile,
                                double epsilon, EvolutionKind kind,
                                double tol);
FromPastResult evolve_from_past(const LinearSwitchFamily& family,
                                const SwitchingProfile& profile,
                                double epsilon, double tol);

// Kato transport A(0, t0) with t0 = truncation_time(profile, tol).
PropagatorResult kato_from_past(const PerturbationProblem& problem,
                                const SwitchingProfile& profile, double tol,
                                double step = 0.01,
                                double d_lambda = kDefaultDLambda);

}  // namespace adsw
