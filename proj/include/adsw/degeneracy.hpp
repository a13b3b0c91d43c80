#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adsw/operator_core.hpp"
#include "adsw/types.hpp"

namespace adsw {

// Orthonormal basis of ran(P0) diagonalizing P0 V P0, with the first- and
// (optionally) second-order energy shifts and cross coefficients of the
// perturbation hierarchy.
struct InitialBasis {
  std::vector<Vector> vectors;            // phi_{j,0}, sorted by alpha_j
  std::vector<double> first_shifts;       // alpha_j = E_{j,1}
  std::vector<std::vector<int>> residual_groups;  // partition by equal alpha
  std::optional<std::vector<double>> second_shifts;  // E_{j,2}, after lift
  // c1(j,k): coefficient of phi_{k,0} in phi_{j,1}. Finite only for j,k in
  // distinct groups; NaN marks undetermined entries.
  Matrix cross_coefficients;
  bool lift_applied = false;
  // Groups the V R0 V lift failed to split further.
  std::vector<int> residual_degenerate_groups;

  int size() const { return static_cast<int>(vectors.size()); }
  int group_of(int j) const;
  bool cross_defined(int j, int k) const;
};

// Diagonalizes P0 V P0 restricted to ran(P0); eigenvectors lifted back to
// the ambient space, sorted by ascending alpha_j, phases gauged so the
// largest component is real positive. Distinct-group cross coefficients are
// filled from the second-order solvability condition.
InitialBasis build_initial_basis(const PerturbationProblem& problem);

// Within each residual group diagonalizes <phi_k, V R0 V phi_j> and replaces
// the group's vectors by its eigenbasis; E_{j,2} = -(eigenvalues). Throws
// NoDegenerateGroup when every group is a singleton.
InitialBasis second_order_lift(const PerturbationProblem& problem,
                               const InitialBasis& basis);

// phi_{j,1} = sum_{k != j} c1_{j,k} phi_{k,0} - R0 V phi_{j,0}.
// Throws UndefinedCrossCoefficients when j's group has size > 1 (the
// hierarchy is only resolved to depth 2).
Vector first_order_vector(const PerturbationProblem& problem,
                          const InitialBasis& basis, int j);

struct SeriesRow {
  double lambda;
  std::vector<double> tracked_energies;     // per label j
  std::vector<double> first_residuals;      // |E_j - E0 - lambda alpha_j|
  std::vector<double> second_residuals;     // minus lambda^2 E_{j,2} (if lift)
  std::vector<double> projector_residuals;  // ||P_j - |phi_hat><phi_hat||| (if phi_j1)
};

struct SeriesReport {
  std::vector<SeriesRow> rows;
  std::vector<double> first_slopes;        // log-log residual slope per j
  std::vector<double> second_slopes;       // present when lift ran
  std::vector<double> projector_slopes;    // present when phi_j1 available
  std::vector<double> max_first_residual;  // per j, for the ~0 cases
  std::vector<double> max_second_residual;
  std::vector<double> max_projector_residual;
  bool second_order_available = false;
  bool vectors_available = false;

  std::string to_csv() const;
};

// Fits the expansion residuals of the tracked energies (and, when available,
// the first-order vectors) over an ascending grid in (0, 0.1].
SeriesReport expansion_check(const PerturbationProblem& problem,
                             const InitialBasis& basis,
                             const std::vector<double>& lambda_grid);

}  // namespace adsw
