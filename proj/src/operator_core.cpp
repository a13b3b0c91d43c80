#include "adsw/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "adsw/switching.hpp"

namespace adsw {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::AsymmetryTooLarge: return "AsymmetryTooLarge";
    case ErrorCode::ClusterAmbiguity: return "ClusterAmbiguity";
    case ErrorCode::GapViolation: return "GapViolation";
    case ErrorCode::NotAProjector: return "NotAProjector";
    case ErrorCode::PositiveTime: return "PositiveTime";
    case ErrorCode::NoDegenerateGroup: return "NoDegenerateGroup";
    case ErrorCode::UndefinedCrossCoefficients: return "UndefinedCrossCoefficients";
    case ErrorCode::TrackingFailure: return "TrackingFailure";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::IntegrationFailure: return "IntegrationFailure";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::VanishingDenominator: return "VanishingDenominator";
    case ErrorCode::StageConditionViolated: return "StageConditionViolated";
    case ErrorCode::DegeneracyMismatch: return "DegeneracyMismatch";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ProblemLoad: return "ProblemLoad";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::ExperimentFailure: return "ExperimentFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double spectral_norm(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double hermiticity_defect(const Matrix& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return spectral_norm(m - m.adjoint()) / scale;
}

Vector fix_phase(const Vector& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const Complex z = v(imax);
  if (std::abs(z) == 0.0) return v;
  return v * (std::conj(z) / std::abs(z));
}

HermitianOperator validate_hermitian(const Matrix& raw) {
  if (raw.rows() != raw.cols()) {
    throw Error(ErrorCode::NonSquare, "matrix is " + std::to_string(raw.rows()) +
                                          "x" + std::to_string(raw.cols()));
  }
  if (raw.rows() < 1) {
    throw Error(ErrorCode::NonSquare, "empty matrix");
  }
  HermitianOperator op;
  op.asymmetry_defect_ = hermiticity_defect(raw);
  if (op.asymmetry_defect_ > 1e-8) {
    throw Error(ErrorCode::AsymmetryTooLarge,
                "relative defect " + std::to_string(op.asymmetry_defect_));
  }
  op.mat_ = 0.5 * (raw + raw.adjoint());
  return op;
}

PerturbationProblem PerturbationProblem::make(HermitianOperator h0,
                                              HermitianOperator v,
                                              double ground_energy,
                                              int degeneracy, double gap_floor,
                                              double cluster_tol) {
  if (h0.dim() != v.dim()) {
    throw Error(ErrorCode::InvalidArgument, "H0 and V dimensions differ");
  }
  if (degeneracy < 1 || degeneracy > h0.dim()) {
    throw Error(ErrorCode::InvalidArgument, "degeneracy out of range");
  }
  PerturbationProblem p;
  p.h0_ = std::move(h0);
  p.v_ = std::move(v);
  p.degeneracy_ = degeneracy;
  p.gap_floor_ = gap_floor;

  Eigen::SelfAdjointEigenSolver<Matrix> es(p.h0_.mat());
  p.h0_eigenvalues_ = es.eigenvalues();
  p.h0_eigenvectors_ = es.eigenvectors();

  const int n = p.h0_.dim();
  const double diam = p.h0_eigenvalues_(n - 1) - p.h0_eigenvalues_(0);
  const double scale = std::max({diam, std::abs(ground_energy), 1.0});
  const double tol = std::max(cluster_tol, 1e-14) * scale;

  for (int i = 0; i < n; ++i) {
    if (std::abs(p.h0_eigenvalues_(i) - ground_energy) <= tol) {
      p.ground_indices_.push_back(i);
    }
  }
  if (p.ground_indices_.empty()) {
    throw Error(ErrorCode::DegeneracyMismatch,
                "no H0 eigenvalue near declared ground energy");
  }
  if (static_cast<int>(p.ground_indices_.size()) != degeneracy) {
    throw Error(ErrorCode::DegeneracyMismatch,
                "declared degeneracy " + std::to_string(degeneracy) +
                    " but detected cluster size " +
                    std::to_string(p.ground_indices_.size()));
  }

  double mean = 0.0;
  for (int i : p.ground_indices_) mean += p.h0_eigenvalues_(i);
  p.ground_energy_ = mean / static_cast<double>(degeneracy);

  p.ground_frame_.resize(n, degeneracy);
  for (int k = 0; k < degeneracy; ++k) {
    p.ground_frame_.col(k) = p.h0_eigenvectors_.col(p.ground_indices_[k]);
  }
  p.p0_ = p.ground_frame_ * p.ground_frame_.adjoint();
  return p;
}

Matrix PerturbationProblem::hamiltonian(double lambda) const {
  return h0_.mat() + lambda * v_.mat();
}

const Matrix& SpectralFrame::tracked_projector(int j) const {
  return clusters_[cluster_of_[tracked_[j]]].projector;
}

Matrix SpectralFrame::tracked_group_projector() const {
  Matrix p = Matrix::Zero(dim(), dim());
  for (const auto& c : clusters_) {
    if (c.tracked) p += c.projector;
  }
  return p;
}

Matrix SpectralFrame::rest_projector() const {
  return Matrix::Identity(dim(), dim()) - tracked_group_projector();
}

SpectralFrame spectral_frame(const PerturbationProblem& problem, double lambda,
                             double cluster_tol, const SpectralFrame* prev) {
  if (cluster_tol <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "clusterTol must be positive");
  }
  const int n = problem.dim();
  const int ntr = problem.degeneracy();

  SpectralFrame frame;
  frame.lambda_ = lambda;
  Eigen::SelfAdjointEigenSolver<Matrix> es(problem.hamiltonian(lambda));
  frame.eigenvalues_ = es.eigenvalues();
  frame.eigenvectors_ = es.eigenvectors();

  const double diam = frame.eigenvalues_(n - 1) - frame.eigenvalues_(0);
  const double tol = cluster_tol * std::max(diam, 1e-300);

  // consecutive clustering (eigenvalues ascending)
  frame.cluster_of_.assign(n, 0);
  std::vector<std::vector<int>> groups;
  groups.push_back({0});
  for (int i = 1; i < n; ++i) {
    if (frame.eigenvalues_(i) - frame.eigenvalues_(i - 1) <= tol) {
      groups.back().push_back(i);
    } else {
      groups.push_back({i});
    }
  }

  for (std::size_t g = 0; g < groups.size(); ++g) {
    SpectralCluster c;
    c.members = groups[g];
    double mean = 0.0;
    Matrix proj = Matrix::Zero(n, n);
    for (int i : c.members) {
      mean += frame.eigenvalues_(i);
      proj += frame.eigenvectors_.col(i) * frame.eigenvectors_.col(i).adjoint();
      frame.cluster_of_[i] = static_cast<int>(g);
    }
    c.mean_value = mean / static_cast<double>(c.members.size());
    c.projector = std::move(proj);
    frame.clusters_.push_back(std::move(c));
  }

  // tracked selection: maximal overlap against prev's tracked group (or P0)
  const Matrix reference =
      prev ? prev->tracked_group_projector() : problem.p0();
  std::vector<double> cluster_score(frame.clusters_.size(), 0.0);
  for (std::size_t g = 0; g < frame.clusters_.size(); ++g) {
    for (int i : frame.clusters_[g].members) {
      const Vector u = frame.eigenvectors_.col(i);
      cluster_score[g] += std::real(u.dot(reference * u));
    }
    cluster_score[g] /= static_cast<double>(frame.clusters_[g].members.size());
  }
  std::vector<std::size_t> order(frame.clusters_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cluster_score[a] > cluster_score[b];
  });

  std::vector<int> tracked_levels;
  int taken = 0;
  for (std::size_t g : order) {
    if (taken == ntr) break;
    const int sz = static_cast<int>(frame.clusters_[g].members.size());
    if (taken + sz > ntr) {
      throw Error(ErrorCode::ClusterAmbiguity,
                  "tracked levels cannot be separated from the rest: a "
                  "cluster of size " +
                      std::to_string(sz) + " straddles the boundary at lambda=" +
                      std::to_string(lambda));
    }
    frame.clusters_[g].tracked = true;
    for (int i : frame.clusters_[g].members) tracked_levels.push_back(i);
    taken += sz;
  }
  std::sort(tracked_levels.begin(), tracked_levels.end());

  if (prev) {
    // continuity guard: tracked subspaces of consecutive frames must overlap
    double total = 0.0;
    for (int i : tracked_levels) {
      const Vector u = frame.eigenvectors_.col(i);
      total += std::real(u.dot(reference * u));
    }
    if (total < 0.6 * ntr) {
      throw Error(ErrorCode::TrackingFailure,
                  "tracked subspace overlap dropped to " +
                      std::to_string(total / ntr) + " at lambda=" +
                      std::to_string(lambda));
    }
  }

  // label assignment
  frame.tracked_.assign(ntr, -1);
  if (!prev) {
    for (int j = 0; j < ntr; ++j) frame.tracked_[j] = tracked_levels[j];
  } else {
    // match each previous label to the current level of maximal overlap;
    // within a shared cluster the scores tie and eigenvalue order decides
    std::vector<bool> used(tracked_levels.size(), false);
    std::vector<std::pair<double, int>> best(ntr);
    std::vector<int> label_order(ntr);
    std::iota(label_order.begin(), label_order.end(), 0);
    Eigen::MatrixXd score(ntr, tracked_levels.size());
    for (int j = 0; j < ntr; ++j) {
      const Matrix& pj = prev->tracked_projector(j);
      for (std::size_t k = 0; k < tracked_levels.size(); ++k) {
        const Vector u = frame.eigenvectors_.col(tracked_levels[k]);
        score(j, k) = std::real(u.dot(pj * u));
      }
    }
    // greedy on descending best score, eigenvalue-ascending tiebreak
    std::sort(label_order.begin(), label_order.end(), [&](int a, int b) {
      double ma = score.row(a).maxCoeff(), mb = score.row(b).maxCoeff();
      if (ma != mb) return ma > mb;
      return a < b;
    });
    for (int j : label_order) {
      int pick = -1;
      double best_s = -1.0;
      for (std::size_t k = 0; k < tracked_levels.size(); ++k) {
        if (used[k]) continue;
        if (score(j, k) > best_s + 1e-12) {
          best_s = score(j, k);
          pick = static_cast<int>(k);
        }
      }
      used[pick] = true;
      frame.tracked_[j] = tracked_levels[pick];
    }
  }

  // gaps
  frame.local_gaps_.assign(ntr, std::numeric_limits<double>::infinity());
  for (int j = 0; j < ntr; ++j) {
    const double ej = frame.eigenvalues_(frame.tracked_[j]);
    for (int i = 0; i < n; ++i) {
      if (i == frame.tracked_[j]) continue;
      frame.local_gaps_[j] =
          std::min(frame.local_gaps_[j], std::abs(frame.eigenvalues_(i) - ej));
    }
  }
  frame.global_gap_ = std::numeric_limits<double>::infinity();
  for (int j = 0; j < ntr; ++j) {
    const double ej = frame.eigenvalues_(frame.tracked_[j]);
    for (int i = 0; i < n; ++i) {
      if (std::find(tracked_levels.begin(), tracked_levels.end(), i) !=
          tracked_levels.end())
        continue;
      frame.global_gap_ =
          std::min(frame.global_gap_, std::abs(frame.eigenvalues_(i) - ej));
    }
  }
  if (ntr < n && frame.global_gap_ <= 1e2 * std::numeric_limits<double>::epsilon() *
                                          std::max(diam, 1.0)) {
    throw Error(ErrorCode::GapViolation,
                "gap to the rest of the spectrum vanished at lambda=" +
                    std::to_string(lambda));
  }
  return frame;
}

std::vector<SpectralFrame> track_grid(const PerturbationProblem& problem,
                                      const std::vector<double>& lambdas,
                                      double cluster_tol) {
  std::vector<SpectralFrame> frames;
  frames.reserve(lambdas.size());
  const SpectralFrame* prev = nullptr;
  for (double lam : lambdas) {
    frames.push_back(spectral_frame(problem, lam, cluster_tol, prev));
    prev = &frames.back();
  }
  return frames;
}

std::vector<int> match_tracked_to_vectors(const SpectralFrame& frame,
                                          const std::vector<Vector>& vectors) {
  const int n = static_cast<int>(vectors.size());
  if (n != frame.tracked_count()) {
    throw Error(ErrorCode::InvalidArgument,
                "vector count does not match tracked count");
  }
  Eigen::MatrixXd score(n, n);  // score(k, j) = <phi_k, P_j phi_k>
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      score(k, j) =
          std::real(vectors[k].dot(frame.tracked_projector(j) * vectors[k])) /
          std::max(vectors[k].squaredNorm(), 1e-300);
    }
  }
  std::vector<int> perm(n, -1);
  std::vector<bool> used(n, false);
  // greedy, highest scores first; shared-cluster ties resolved by label order
  for (int round = 0; round < n; ++round) {
    int bk = -1, bj = -1;
    double bs = -1.0;
    for (int k = 0; k < n; ++k) {
      if (perm[k] >= 0) continue;
      for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        if (score(k, j) > bs + 1e-12) {
          bs = score(k, j);
          bk = k;
          bj = j;
        }
      }
    }
    if (bs < 0.45) {
      throw Error(ErrorCode::TrackingFailure,
                  "maximal-overlap matching of levels to basis vectors is "
                  "ambiguous (best overlap " +
                      std::to_string(bs) + ")");
    }
    perm[bk] = bj;
    used[bj] = true;
  }
  return perm;
}

AssumptionReport check_assumptions(const PerturbationProblem& problem,
                                   const std::vector<double>& lambda_grid,
                                   const SwitchingProfile* profile) {
  AssumptionReport rep;
  rep.grid = lambda_grid;

  rep.detected_degeneracy = static_cast<int>(problem.ground_indices().size());
  rep.degeneracy_ok = rep.detected_degeneracy == problem.degeneracy();

  // Assumption on the gap: march the grid, track the minimum
  rep.min_global_gap = std::numeric_limits<double>::infinity();
  rep.min_pairwise_gap = std::numeric_limits<double>::infinity();
  rep.lambda_star = 0.0;
  for (double lam : lambda_grid) {
    if (lam > 0.0) {
      rep.lambda_star = rep.lambda_star == 0.0 ? lam : rep.lambda_star;
      break;
    }
  }
  const SpectralFrame* prev = nullptr;
  SpectralFrame cur;
  for (double lam : lambda_grid) {
    cur = spectral_frame(problem, lam, kDefaultClusterTol, prev);
    if (cur.global_gap() < rep.min_global_gap) {
      rep.min_global_gap = cur.global_gap();
      rep.argmin_gap_lambda = lam;
    }
    if (lam >= rep.lambda_star && lam > 0.0 && problem.degeneracy() > 1) {
      for (int j = 0; j < cur.tracked_count(); ++j) {
        for (int k = j + 1; k < cur.tracked_count(); ++k) {
          rep.min_pairwise_gap = std::min(
              rep.min_pairwise_gap, std::abs(cur.tracked_eigenvalue(j) -
                                             cur.tracked_eigenvalue(k)));
        }
      }
    }
    prev = &cur;
  }
  rep.gap_ok = rep.min_global_gap >= problem.gap_floor();

  // Degeneracy splitting: spectrum of P0 V P0 restricted to ran(P0)
  const Matrix& frame0 = problem.ground_frame();
  const Matrix pvp = frame0.adjoint() * problem.v().mat() * frame0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(pvp);
  rep.pvp_eigenvalues.assign(es.eigenvalues().data(),
                             es.eigenvalues().data() + es.eigenvalues().size());
  bool distinct = true;
  const double ascale =
      std::max(es.eigenvalues().cwiseAbs().maxCoeff(),
               es.eigenvalues()(es.eigenvalues().size() - 1) -
                   es.eigenvalues()(0));
  for (std::size_t i = 1; i < rep.pvp_eigenvalues.size(); ++i) {
    if (rep.pvp_eigenvalues[i] - rep.pvp_eigenvalues[i - 1] <=
        1e-10 * std::max(ascale, 1e-300)) {
      distinct = false;
    }
  }
  if (problem.degeneracy() == 1) {
    rep.min_pairwise_gap = std::numeric_limits<double>::infinity();
    rep.splitting_ok = true;
  } else {
    rep.splitting_ok = distinct && rep.min_pairwise_gap > 0.0;
  }

  if (profile) {
    const double left =
        std::max(truncation_time(*profile, 1e-10), -60.0);
    std::vector<double> tgrid;
    const int m = 2001;
    for (int i = 0; i < m; ++i) {
      tgrid.push_back(left + (0.0 - left) * i / (m - 1));
    }
    rep.profile = certify_profile(*profile, tgrid);
  }
  return rep;
}

Vector reduced_resolvent_apply(const PerturbationProblem& problem,
                               const Vector& w) {
  const int n = problem.dim();
  Vector out = Vector::Zero(n);
  const auto& evals = problem.h0_eigenvalues();
  const auto& evecs = problem.h0_eigenvectors();
  const auto& ground = problem.ground_indices();
  for (int i = 0; i < n; ++i) {
    if (std::find(ground.begin(), ground.end(), i) != ground.end()) continue;
    const Complex c = evecs.col(i).dot(w);
    out += evecs.col(i) * (c / (evals(i) - problem.ground_energy()));
  }
  return out;
}

double projector_distance(const Matrix& p, const Matrix& q) {
  const double tol = 1e-6;
  auto check = [&](const Matrix& m, const char* name) {
    if (m.rows() != m.cols()) {
      throw Error(ErrorCode::NotAProjector, std::string(name) + " not square");
    }
    if (spectral_norm(m - m.adjoint()) > tol ||
        spectral_norm(m * m - m) > tol) {
      throw Error(ErrorCode::NotAProjector,
                  std::string(name) + " fails idempotency/Hermiticity");
    }
  };
  check(p, "P");
  check(q, "Q");
  return spectral_norm(p - q);
}

}  // namespace adsw
