#pragma once

#include <optional>
#include <vector>

#include "adsw/switching.hpp"
#include "adsw/types.hpp"

namespace adsw {

// Dense self-adjoint operator. Construction symmetrizes the input and
// records the asymmetry defect of the raw matrix.
class HermitianOperator {
 public:
  HermitianOperator() = default;

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Matrix& mat() const { return mat_; }
  double asymmetry_defect() const { return asymmetry_defect_; }

  friend HermitianOperator validate_hermitian(const Matrix& raw);

 private:
  Matrix mat_;
  double asymmetry_defect_ = 0.0;
};

// Symmetrizes (M + M^dag)/2. Throws NonSquare / AsymmetryTooLarge
// (relative defect above 1e-8).
HermitianOperator validate_hermitian(const Matrix& raw);

inline constexpr double kDefaultClusterTol = 1e-10;
inline constexpr double kDefaultGapFloor = 1e-6;

// The pair (H0, V) together with the degenerate level (E0, N, P0) that the
// switching starts from. P0 is derived from H0's spectrum at construction.
class PerturbationProblem {
 public:
  static PerturbationProblem make(HermitianOperator h0, HermitianOperator v,
                                  double ground_energy, int degeneracy,
                                  double gap_floor = kDefaultGapFloor,
                                  double cluster_tol = kDefaultClusterTol);

  int dim() const { return h0_.dim(); }
  const HermitianOperator& h0() const { return h0_; }
  const HermitianOperator& v() const { return v_; }
  double ground_energy() const { return ground_energy_; }
  int degeneracy() const { return degeneracy_; }
  const Matrix& p0() const { return p0_; }
  double gap_floor() const { return gap_floor_; }

  Matrix hamiltonian(double lambda) const;

  // Orthonormal columns spanning ran(P0), from H0's eigenvectors.
  const Matrix& ground_frame() const { return ground_frame_; }
  // Full eigendecomposition of H0 (ascending).
  const RealVector& h0_eigenvalues() const { return h0_eigenvalues_; }
  const Matrix& h0_eigenvectors() const { return h0_eigenvectors_; }
  // Indices of the E0 cluster inside the H0 eigendecomposition.
  const std::vector<int>& ground_indices() const { return ground_indices_; }

 private:
  HermitianOperator h0_, v_;
  double ground_energy_ = 0.0;
  int degeneracy_ = 0;
  double gap_floor_ = kDefaultGapFloor;
  Matrix p0_;
  Matrix ground_frame_;
  RealVector h0_eigenvalues_;
  Matrix h0_eigenvectors_;
  std::vector<int> ground_indices_;
};

struct SpectralCluster {
  std::vector<int> members;  // eigenvalue indices, ascending
  double mean_value = 0.0;
  Matrix projector;
  bool tracked = false;
};

// Eigenstructure of H(lambda) = H0 + lambda V with degeneracy clustering and
// the N levels connected to E0 identified. Tracked labels j = 0..N-1 map to
// eigenvalue indices; levels inside one cluster share the cluster projector.
class SpectralFrame {
 public:
  double lambda() const { return lambda_; }
  int dim() const { return static_cast<int>(eigenvalues_.size()); }
  int tracked_count() const { return static_cast<int>(tracked_.size()); }

  const RealVector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }
  const std::vector<SpectralCluster>& clusters() const { return clusters_; }

  double tracked_eigenvalue(int j) const { return eigenvalues_[tracked_[j]]; }
  int tracked_index(int j) const { return tracked_[j]; }
  // Projector of the cluster containing tracked level j (rank > 1 while the
  // levels are still clustered, rank 1 once the perturbation split them).
  const Matrix& tracked_projector(int j) const;
  // Sum of all tracked cluster projectors (rank N).
  Matrix tracked_group_projector() const;
  // Complement projector onto the rest of the spectrum.
  Matrix rest_projector() const;

  double global_gap() const { return global_gap_; }
  const std::vector<double>& local_gaps() const { return local_gaps_; }

  friend SpectralFrame spectral_frame(const PerturbationProblem&, double,
                                      double, const SpectralFrame*);

 private:
  double lambda_ = 0.0;
  RealVector eigenvalues_;
  Matrix eigenvectors_;
  std::vector<SpectralCluster> clusters_;
  std::vector<int> tracked_;          // label j -> eigenvalue index
  std::vector<int> cluster_of_;       // eigenvalue index -> cluster index
  double global_gap_ = 0.0;
  std::vector<double> local_gaps_;    // per tracked label
};

// Eigen-decomposes H(lambda), clusters near-degenerate eigenvalues and
// identifies the tracked levels by maximal projector overlap against `prev`
// (or against P0 when prev is null). Throws ClusterAmbiguity / GapViolation.
SpectralFrame spectral_frame(const PerturbationProblem& problem, double lambda,
                             double cluster_tol = kDefaultClusterTol,
                             const SpectralFrame* prev = nullptr);

// Marches frames over an ascending lambda grid, keeping tracked labels
// consistent between consecutive grid points.
std::vector<SpectralFrame> track_grid(const PerturbationProblem& problem,
                                      const std::vector<double>& lambdas,
                                      double cluster_tol = kDefaultClusterTol);

// Matches tracked labels of `frame` to the given vectors by maximal overlap.
// Returns perm with perm[k] = tracked label of vectors[k].
// Throws TrackingFailure when the assignment is ambiguous.
std::vector<int> match_tracked_to_vectors(const SpectralFrame& frame,
                                          const std::vector<Vector>& vectors);

struct AssumptionReport {
  bool degeneracy_ok = false;       // N-fold degeneracy of E0 at lambda = 0
  int detected_degeneracy = 0;
  bool gap_ok = false;              // min Delta(lambda) over the grid >= floor
  double min_global_gap = 0.0;
  double argmin_gap_lambda = 0.0;
  bool splitting_ok = false;        // P0VP0 non-degenerate and levels stay split
  std::vector<double> pvp_eigenvalues;
  double min_pairwise_gap = 0.0;    // over lambda >= lambda_star grid points
  double lambda_star = 0.0;
  std::vector<double> grid;
  std::optional<ProfileReport> profile;  // Assumption-4 certification

  bool all_ok() const { return degeneracy_ok && gap_ok && splitting_ok; }
};

// Grid certification of the structural assumptions. The report carries
// pass/fail flags; nothing is thrown for failed assumptions.
AssumptionReport check_assumptions(const PerturbationProblem& problem,
                                   const std::vector<double>& lambda_grid,
                                   const SwitchingProfile* profile = nullptr);

// R0 w = (I - P0)(H0 - E0)^{-1}(I - P0) w, computed in H0's eigenbasis with
// the E0 cluster excluded.
Vector reduced_resolvent_apply(const PerturbationProblem& problem,
                               const Vector& w);

// Spectral norm ||P - Q|| for two orthogonal projectors.
// Throws NotAProjector when either argument fails idempotency/Hermiticity.
double projector_distance(const Matrix& p, const Matrix& q);

}  // namespace adsw
