#include "adsw/degeneracy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace adsw {

namespace {

constexpr double kGroupRelTol = 1e-10;

double shift_scale(const std::vector<double>& alphas) {
  double amax = 0.0;
  for (double a : alphas) amax = std::max(amax, std::abs(a));
  const double diam =
      alphas.empty() ? 0.0 : alphas.back() - alphas.front();
  return std::max({amax, diam, 1e-300});
}

std::vector<std::vector<int>> group_by_value(const std::vector<double>& sorted,
                                             double tol) {
  std::vector<std::vector<int>> groups;
  if (sorted.empty()) return groups;
  groups.push_back({0});
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] <= tol) {
      groups.back().push_back(static_cast<int>(i));
    } else {
      groups.push_back({static_cast<int>(i)});
    }
  }
  return groups;
}

// c1(j,k) from the second-order solvability condition, defined across
// distinct groups only; diagonal is fixed to 0 by the normalization gauge.
void fill_cross_coefficients(const PerturbationProblem& problem,
                             InitialBasis& basis) {
  const int n = basis.size();
  basis.cross_coefficients =
      Matrix::Constant(n, n, Complex(std::numeric_limits<double>::quiet_NaN(), 0));
  std::vector<Vector> r0v(n);
  for (int j = 0; j < n; ++j) {
    r0v[j] = reduced_resolvent_apply(problem, problem.v().mat() * basis.vectors[j]);
  }
  for (int j = 0; j < n; ++j) {
    basis.cross_coefficients(j, j) = Complex(0, 0);
    for (int k = 0; k < n; ++k) {
      if (k == j || basis.group_of(j) == basis.group_of(k)) continue;
      const Complex vrv = basis.vectors[k].dot(problem.v().mat() * r0v[j]);
      basis.cross_coefficients(j, k) =
          -vrv / (basis.first_shifts[j] - basis.first_shifts[k]);
    }
  }
}

}  // namespace

int InitialBasis::group_of(int j) const {
  for (std::size_t g = 0; g < residual_groups.size(); ++g) {
    for (int m : residual_groups[g]) {
      if (m == j) return static_cast<int>(g);
    }
  }
  return -1;
}

bool InitialBasis::cross_defined(int j, int k) const {
  const Complex c = cross_coefficients(j, k);
  return !std::isnan(c.real()) && !std::isnan(c.imag());
}

InitialBasis build_initial_basis(const PerturbationProblem& problem) {
  const Matrix& frame = problem.ground_frame();
  const Matrix pvp = frame.adjoint() * problem.v().mat() * frame;
  Eigen::SelfAdjointEigenSolver<Matrix> es(pvp);

  InitialBasis basis;
  const int n = problem.degeneracy();
  basis.vectors.resize(n);
  basis.first_shifts.resize(n);
  for (int j = 0; j < n; ++j) {
    basis.first_shifts[j] = es.eigenvalues()(j);  // ascending
    basis.vectors[j] = fix_phase(frame * es.eigenvectors().col(j));
  }
  basis.residual_groups = group_by_value(
      basis.first_shifts, kGroupRelTol * shift_scale(basis.first_shifts));
  fill_cross_coefficients(problem, basis);
  return basis;
}

InitialBasis second_order_lift(const PerturbationProblem& problem,
                               const InitialBasis& input) {
  bool any = false;
  for (const auto& g : input.residual_groups) any = any || g.size() > 1;
  if (!any) {
    throw Error(ErrorCode::NoDegenerateGroup,
                "all first-order shifts are distinct");
  }

  InitialBasis basis = input;
  const Matrix& v = problem.v().mat();
  const int n = basis.size();

  // E_{j,2} = -<phi_j, V R0 V phi_j> also for singletons
  std::vector<double> second(n, 0.0);
  std::vector<Vector> r0v(n);
  for (int j = 0; j < n; ++j) {
    r0v[j] = reduced_resolvent_apply(problem, v * basis.vectors[j]);
  }

  basis.residual_degenerate_groups.clear();
  for (std::size_t g = 0; g < basis.residual_groups.size(); ++g) {
    const auto& members = basis.residual_groups[g];
    const int m = static_cast<int>(members.size());
    if (m == 1) {
      const int j = members[0];
      second[j] = -std::real(basis.vectors[j].dot(v * r0v[j]));
      continue;
    }
    Matrix vrv(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        vrv(a, b) = basis.vectors[members[a]].dot(v * r0v[members[b]]);
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(vrv);
    // E2 = -mu; order group members by ascending E2, i.e. descending mu
    std::vector<Vector> rotated(m);
    std::vector<double> mu(m);
    for (int a = 0; a < m; ++a) {
      const int src = m - 1 - a;
      mu[a] = es.eigenvalues()(src);
      Vector phi = Vector::Zero(problem.dim());
      for (int b = 0; b < m; ++b) {
        phi += es.eigenvectors()(b, src) * basis.vectors[members[b]];
      }
      rotated[a] = fix_phase(phi);
    }
    for (int a = 0; a < m; ++a) {
      basis.vectors[members[a]] = rotated[a];
      second[members[a]] = -mu[a];
    }
    double scale = 0.0;
    for (int a = 0; a < m; ++a) scale = std::max(scale, std::abs(mu[a]));
    bool still_degenerate = false;
    for (int a = 1; a < m; ++a) {
      if (std::abs(mu[a] - mu[a - 1]) <= kGroupRelTol * std::max(scale, 1e-300)) {
        still_degenerate = true;
      }
    }
    if (still_degenerate) {
      basis.residual_degenerate_groups.push_back(static_cast<int>(g));
    }
  }

  basis.second_shifts = std::move(second);
  basis.lift_applied = true;
  fill_cross_coefficients(problem, basis);
  return basis;
}

Vector first_order_vector(const PerturbationProblem& problem,
                          const InitialBasis& basis, int j) {
  if (j < 0 || j >= basis.size()) {
    throw Error(ErrorCode::InvalidArgument, "basis index out of range");
  }
  // V phi_j = 0 makes phi_j an exact eigenvector of the whole family, so
  // every correction vanishes identically
  const double vscale =
      std::max(1.0, problem.v().mat().cwiseAbs().maxCoeff());
  if ((problem.v().mat() * basis.vectors[j]).norm() <= 1e-13 * vscale) {
    return Vector::Zero(problem.dim());
  }
  const int g = basis.group_of(j);
  if (basis.residual_groups[g].size() > 1) {
    throw Error(ErrorCode::UndefinedCrossCoefficients,
                "cross coefficients inside a residual group are not "
                "determined at this order (j=" +
                    std::to_string(j) + ")");
  }
  Vector phi1 =
      -reduced_resolvent_apply(problem, problem.v().mat() * basis.vectors[j]);
  for (int k = 0; k < basis.size(); ++k) {
    if (k == j) continue;
    if (!basis.cross_defined(j, k)) {
      throw Error(ErrorCode::UndefinedCrossCoefficients,
                  "c1(" + std::to_string(j) + "," + std::to_string(k) +
                      ") undefined");
    }
    phi1 += basis.cross_coefficients(j, k) * basis.vectors[k];
  }
  return phi1;
}

namespace {

// least-squares slope of log(y) vs log(x) over points with y above floor
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                    double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > floor)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 3) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

SeriesReport expansion_check(const PerturbationProblem& problem,
                             const InitialBasis& basis,
                             const std::vector<double>& lambda_grid) {
  if (lambda_grid.size() < 5) {
    throw Error(ErrorCode::InvalidArgument, "need at least 5 grid points");
  }
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (lambda_grid[i] <= 0.0 || lambda_grid[i] > 0.1) {
      throw Error(ErrorCode::InvalidArgument, "grid must lie in (0, 0.1]");
    }
    if (i > 0 && lambda_grid[i] <= lambda_grid[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "grid must be ascending");
    }
  }

  const int n = basis.size();
  const double e0 = problem.ground_energy();

  SeriesReport rep;
  rep.second_order_available = basis.second_shifts.has_value();
  std::vector<Vector> phi1(n);
  std::vector<bool> phi1_ok(n, false);
  for (int j = 0; j < n; ++j) {
    if (basis.residual_groups[basis.group_of(j)].size() == 1) {
      phi1[j] = first_order_vector(problem, basis, j);
      phi1_ok[j] = true;
      rep.vectors_available = true;
    }
  }

  rep.max_first_residual.assign(n, 0.0);
  rep.max_second_residual.assign(n, 0.0);
  rep.max_projector_residual.assign(n, 0.0);
  std::vector<std::vector<double>> r1(n), r2(n), rp(n);

  const SpectralFrame* prev = nullptr;
  SpectralFrame frame;
  for (double lam : lambda_grid) {
    frame = spectral_frame(problem, lam, kDefaultClusterTol, prev);
    const std::vector<int> perm = match_tracked_to_vectors(frame, basis.vectors);

    SeriesRow row;
    row.lambda = lam;
    row.tracked_energies.resize(n);
    row.first_residuals.resize(n);
    if (rep.second_order_available) row.second_residuals.resize(n);
    if (rep.vectors_available) row.projector_residuals.assign(n, 0.0);

    for (int k = 0; k < n; ++k) {
      const double ej = frame.tracked_eigenvalue(perm[k]);
      row.tracked_energies[k] = ej;
      const double res1 = std::abs(ej - e0 - lam * basis.first_shifts[k]);
      row.first_residuals[k] = res1;
      r1[k].push_back(res1);
      rep.max_first_residual[k] = std::max(rep.max_first_residual[k], res1);
      if (rep.second_order_available) {
        const double res2 = std::abs(ej - e0 - lam * basis.first_shifts[k] -
                                     lam * lam * (*basis.second_shifts)[k]);
        row.second_residuals[k] = res2;
        r2[k].push_back(res2);
        rep.max_second_residual[k] = std::max(rep.max_second_residual[k], res2);
      }
      if (phi1_ok[k]) {
        Vector hat = basis.vectors[k] + lam * phi1[k];
        hat /= hat.norm();
        const double resp =
            spectral_norm(frame.tracked_projector(perm[k]) - dyad(hat));
        row.projector_residuals[k] = resp;
        rp[k].push_back(resp);
        rep.max_projector_residual[k] =
            std::max(rep.max_projector_residual[k], resp);
      }
    }
    rep.rows.push_back(std::move(row));
    prev = &frame;
  }

  const double floor = 1e-13 * std::max(1.0, std::abs(e0));
  for (int k = 0; k < n; ++k) {
    rep.first_slopes.push_back(loglog_slope(lambda_grid, r1[k], floor));
    if (rep.second_order_available) {
      rep.second_slopes.push_back(loglog_slope(lambda_grid, r2[k], floor));
    }
    if (phi1_ok[k]) {
      rep.projector_slopes.push_back(loglog_slope(lambda_grid, rp[k], floor));
    } else if (rep.vectors_available) {
      rep.projector_slopes.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return rep;
}

std::string SeriesReport::to_csv() const {
  std::ostringstream out;
  const int n = rows.empty() ? 0 : static_cast<int>(rows[0].tracked_energies.size());
  out << "lambda";
  for (int j = 0; j < n; ++j) out << ",E_" << j;
  for (int j = 0; j < n; ++j) out << ",res1_" << j;
  if (second_order_available) {
    for (int j = 0; j < n; ++j) out << ",res2_" << j;
  }
  if (vectors_available) {
    for (int j = 0; j < n; ++j) out << ",proj_" << j;
  }
  out << "\n";
  for (const auto& row : rows) {
    out << format_real(row.lambda);
    for (double e : row.tracked_energies) out << "," << format_real(e);
    for (double r : row.first_residuals) out << "," << format_real(r);
    if (second_order_available) {
      for (double r : row.second_residuals) out << "," << format_real(r);
    }
    if (vectors_available) {
      for (double r : row.projector_residuals) out << "," << format_real(r);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace adsw
