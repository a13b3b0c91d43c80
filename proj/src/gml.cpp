#include "adsw/gml.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace adsw {

namespace {

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// Marches frames from just above lambda = 0 to lambda = 1, capturing the
// tracked projectors at the requested snapshot values. perm maps basis
// index -> tracked label (established at the first grid point).
struct TrackedPath {
  std::vector<int> perm;
  std::vector<std::vector<Matrix>> snapshots;  // per snapshot, per label
};

TrackedPath march_tracked(const PerturbationProblem& problem,
                          const InitialBasis& basis,
                          const std::vector<double>& snapshot_lambdas,
                          double grid_step = 1e-3) {
  TrackedPath path;
  const int n = std::max(2, static_cast<int>(std::ceil(1.0 / grid_step)));
  SpectralFrame prev = spectral_frame(problem, 1.0 / n);
  path.perm = match_tracked_to_vectors(prev, basis.vectors);
  std::size_t next_snap = 0;
  auto capture = [&](const SpectralFrame& f, double lam) {
    while (next_snap < snapshot_lambdas.size() &&
           lam >= snapshot_lambdas[next_snap] - 0.5 / n) {
      std::vector<Matrix> projs;
      for (int j = 0; j < f.tracked_count(); ++j) {
        projs.push_back(f.tracked_projector(j));
      }
      path.snapshots.push_back(std::move(projs));
      ++next_snap;
    }
  };
  capture(prev, 1.0 / n);
  for (int i = 2; i <= n; ++i) {
    const double lam = static_cast<double>(i) / n;
    SpectralFrame cur = spectral_frame(problem, lam, kDefaultClusterTol, &prev);
    capture(cur, lam);
    prev = std::move(cur);
  }
  return path;
}

GmlOutcome outcome_from_ratio(const PerturbationProblem& problem, Vector state,
                              Complex den, double epsilon, double cond_norm,
                              double cauchy) {
  GmlOutcome o;
  o.state = std::move(state);
  o.denominator = den;
  o.epsilon = epsilon;
  const Matrix hfull = problem.hamiltonian(1.0);
  o.eigen_residual = eigen_residual(hfull, o.state);
  o.rayleigh_energy =
      std::real(o.state.dot(hfull * o.state)) / o.state.squaredNorm();
  o.condition_norm = cond_norm;
  o.cauchy_delta = cauchy;
  return o;
}

}  // namespace

double eigen_residual(const Matrix& h, const Vector& v) {
  const double n2 = v.squaredNorm();
  if (n2 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const Vector hv = h * v;
  const double rho = std::real(v.dot(hv)) / n2;
  return (hv - rho * v).norm() / std::sqrt(n2);
}

Vector phase_align(const Vector& state, const Vector& reference) {
  const Complex z = reference.dot(state);
  if (std::abs(z) == 0.0) return state;
  return state * (std::conj(z) / std::abs(z));
}

std::pair<Vector, double> geometric_eigenstate(
    const PerturbationProblem& problem, const SwitchingProfile& profile,
    const InitialBasis& basis, int j, double tol, double step) {
  if (j < 0 || j >= basis.size()) {
    throw Error(ErrorCode::InvalidArgument, "basis index out of range");
  }
  const PropagatorResult a = kato_from_past(problem, profile, tol, step);
  Vector psi = a.unitary * basis.vectors[j];
  const Matrix hfull = problem.hamiltonian(1.0);
  const double energy = std::real(psi.dot(hfull * psi)) / psi.squaredNorm();
  return {std::move(psi), energy};
}

std::pair<bool, double> check_ratio_condition(const PerturbationProblem& problem,
                                              const InitialBasis& basis,
                                              int j) {
  if (j < 0 || j >= basis.size()) {
    throw Error(ErrorCode::InvalidArgument, "basis index out of range");
  }
  const TrackedPath path = march_tracked(problem, basis, {1.0});
  // sine of the angle between phi_j and ran(P_j(1)); identical to the
  // spectral norm || |phi><phi| - P_j(1) || when the level has split to
  // rank one, and the meaningful generalization when it never splits
  const Matrix& pj = path.snapshots.at(0)[path.perm[j]];
  const Vector& phi = basis.vectors[j];
  const double norm = (phi - pj * phi).norm() / phi.norm();
  return {norm < 1.0 - kConditionMargin, norm};
}

GmlOutcome gml_ratio(const PerturbationProblem& problem,
                     const SwitchingProfile& profile, const InitialBasis& basis,
                     int j, double epsilon, EvolutionKind kind, double tol) {
  if (j < 0 || j >= basis.size()) {
    throw Error(ErrorCode::InvalidArgument, "basis index out of range");
  }
  const auto [ok, cond_norm] = check_ratio_condition(problem, basis, j);
  (void)ok;  // advisory; a failing condition manifests in the denominator
  const FromPastResult past = evolve_from_past(problem, profile, epsilon, kind, tol);
  const Vector& psi = basis.vectors[j];
  Vector num = past.u_int * psi;
  const Complex den = psi.dot(num);
  if (std::abs(den) < kDenominatorFloor) {
    throw Error(ErrorCode::VanishingDenominator,
                "|<psi|U_int psi>| = " + std::to_string(std::abs(den)));
  }
  num /= den;
  return outcome_from_ratio(problem, std::move(num), den, epsilon, cond_norm,
                            past.cauchy_delta);
}

SweepRecord gml_sweep(const PerturbationProblem& problem,
                      const SwitchingProfile& profile, const InitialBasis& basis,
                      int j, const std::vector<double>& eps_list,
                      bool with_adiabatic_errors, double tol, int workers) {
  if (eps_list.size() < 4) {
    throw Error(ErrorCode::InvalidArgument, "need at least 4 epsilons");
  }
  for (std::size_t i = 1; i < eps_list.size(); ++i) {
    if (!(eps_list[i] < eps_list[i - 1])) {
      throw Error(ErrorCode::InvalidArgument,
                  "epsilons must be strictly decreasing");
    }
  }
  if (!(eps_list.back() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "epsilons must be positive");
  }

  const auto [ok, cond_norm] = check_ratio_condition(problem, basis, j);
  (void)ok;

  SweepRecord rec;
  rec.entries.resize(eps_list.size());
  rec.adiabatic_errors_present = with_adiabatic_errors;
  if (with_adiabatic_errors) {
    rec.adiabatic_errors.assign(eps_list.size(), 0.0);
  }

  auto run_one = [&](std::size_t i) {
    SweepEntry& entry = rec.entries[i];
    entry.epsilon = eps_list[i];
    try {
      const FromPastResult past =
          evolve_from_past(problem, profile, eps_list[i], EvolutionKind::Full, tol);
      const Vector& psi = basis.vectors[j];
      Vector num = past.u_int * psi;
      const Complex den = psi.dot(num);
      if (std::abs(den) < kDenominatorFloor) {
        throw Error(ErrorCode::VanishingDenominator,
                    "|<psi|U_int psi>| = " + std::to_string(std::abs(den)));
      }
      num /= den;
      entry.outcome = outcome_from_ratio(problem, std::move(num), den,
                                         eps_list[i], cond_norm,
                                         past.cauchy_delta);
      if (with_adiabatic_errors) {
        const FromPastResult adiab = evolve_from_past(
            problem, profile, eps_list[i], EvolutionKind::Adiabatic, tol);
        rec.adiabatic_errors[i] = spectral_norm(past.propagator.unitary -
                                                adiab.propagator.unitary);
      }
    } catch (const Error& e) {
      entry.error = e.what();
    }
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < eps_list.size(); ++i) run_one(i);
  } else {
    std::vector<std::future<void>> futures;
    std::atomic<std::size_t> next{0};
    const int nw = std::min<int>(workers, static_cast<int>(eps_list.size()));
    for (int w = 0; w < nw; ++w) {
      futures.push_back(std::async(std::launch::async, [&]() {
        for (std::size_t i = next.fetch_add(1); i < eps_list.size();
             i = next.fetch_add(1)) {
          run_one(i);
        }
      }));
    }
    for (auto& f : futures) f.get();
  }

  // phase-aligned Cauchy deltas against the geometric eigenstate gauge
  const Vector ref = geometric_eigenstate(problem, profile, basis, j).first;
  for (std::size_t i = 0; i + 1 < rec.entries.size(); ++i) {
    if (rec.entries[i].outcome && rec.entries[i + 1].outcome) {
      rec.cauchy_deltas.push_back(
          (phase_align(rec.entries[i].outcome->state, ref) -
           phase_align(rec.entries[i + 1].outcome->state, ref))
              .norm());
    } else {
      rec.cauchy_deltas.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  if (with_adiabatic_errors) {
    rec.fitted_slope = loglog_slope(eps_list, rec.adiabatic_errors);
  }
  return rec;
}

GmlOutcome multistep_gml(const PerturbationProblem& problem,
                         const SwitchingProfile& profile,
                         const InitialBasis& basis, int j,
                         const std::vector<double>& breakpoints, double epsilon,
                         double tol) {
  if (j < 0 || j >= basis.size()) {
    throw Error(ErrorCode::InvalidArgument, "basis index out of range");
  }
  if (breakpoints.size() < 2 || breakpoints.front() != 0.0 ||
      breakpoints.back() != 1.0) {
    throw Error(ErrorCode::InvalidArgument,
                "breakpoints must run from 0 to 1");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw Error(ErrorCode::InvalidArgument,
                  "breakpoints must be strictly increasing");
    }
  }

  // validate the per-stage projector displacement along the marched path
  const std::vector<double> stage_ends(breakpoints.begin() + 1,
                                       breakpoints.end());
  const TrackedPath path = march_tracked(problem, basis, stage_ends);
  double max_stage_norm = 0.0;
  {
    Matrix stage_start = dyad(basis.vectors[j]);
    for (std::size_t k = 0; k < path.snapshots.size(); ++k) {
      const Matrix& pj = path.snapshots[k][path.perm[j]];
      const double norm = spectral_norm(pj - stage_start);
      max_stage_norm = std::max(max_stage_norm, norm);
      if (norm >= 1.0 - 1e-9) {
        throw Error(ErrorCode::StageConditionViolated,
                    "projector displacement " + std::to_string(norm) +
                        " across stage " + std::to_string(k));
      }
      stage_start = pj;
    }
  }

  Vector psi = basis.vectors[j];
  Complex last_den(0, 0);
  double max_cauchy = 0.0;
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double l0 = breakpoints[k];
    const double l1 = breakpoints[k + 1];
    LinearSwitchFamily family{problem.hamiltonian(l0),
                              (l1 - l0) * problem.v().mat()};
    const FromPastResult past = evolve_from_past(family, profile, epsilon, tol);
    Vector num = past.u_int * psi;
    const Complex den = psi.dot(num);
    if (std::abs(den) < kDenominatorFloor) {
      throw Error(ErrorCode::VanishingDenominator,
                  "stage " + std::to_string(k) + ": |<psi|U psi>| = " +
                      std::to_string(std::abs(den)));
    }
    num /= den;
    last_den = den;
    max_cauchy = std::max(max_cauchy, past.cauchy_delta);
    if (k + 2 < breakpoints.size()) {
      psi = num / num.norm();
    } else {
      psi = std::move(num);
    }
  }
  return outcome_from_ratio(problem, std::move(psi), last_den, epsilon,
                            max_stage_norm, max_cauchy);
}

GmlOutcome permanent_degeneracy_ratio(const PerturbationProblem& problem,
                                      const SwitchingProfile& profile,
                                      const Vector& psi, const Vector& phi_ref,
                                      double epsilon, double tol) {
  if (psi.size() != problem.dim() || phi_ref.size() != problem.dim()) {
    throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");
  }
  const FromPastResult past =
      evolve_from_past(problem, profile, epsilon, EvolutionKind::Full, tol);
  Vector num = past.u_int * psi;
  const Complex den = phi_ref.dot(num);
  if (std::abs(den) < kDenominatorFloor) {
    throw Error(ErrorCode::VanishingDenominator,
                "|<phi_ref|U_int psi>| = " + std::to_string(std::abs(den)));
  }
  num /= den;
  return outcome_from_ratio(problem, std::move(num), den, epsilon,
                            std::numeric_limits<double>::quiet_NaN(),
                            past.cauchy_delta);
}

GapDiagnostics gap_diagnostics(const PerturbationProblem& problem,
                               const SwitchingProfile& profile,
                               const std::vector<double>& t_grid) {
  if (t_grid.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty time grid");
  }
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "time grid must be ascending");
    }
  }
  GapDiagnostics diag;
  diag.alpha_min = std::numeric_limits<double>::infinity();
  diag.alpha_max = 0.0;
  double max_local = 0.0;
  const SpectralFrame* prev = nullptr;
  SpectralFrame frame;
  for (double t : t_grid) {
    const double f = profile(t).f;
    if (!(f > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "profile must be positive on the grid (t=" +
                      std::to_string(t) + ")");
    }
    frame = spectral_frame(problem, std::min(f, 1.0), kDefaultClusterTol, prev);
    GapRow row;
    row.t = t;
    row.f = f;
    row.global_gap = frame.global_gap();
    row.local_gaps = frame.local_gaps();
    for (double d : row.local_gaps) {
      const double ratio = d / f;
      row.gap_ratios.push_back(ratio);
      diag.alpha_min = std::min(diag.alpha_min, ratio);
      diag.alpha_max = std::max(diag.alpha_max, ratio);
      max_local = std::max(max_local, d);
    }
    diag.rows.push_back(std::move(row));
    prev = &frame;
  }
  diag.no_splitting = max_local <= 1e-12;
  return diag;
}

std::string SweepRecord::to_csv() const {
  std::ostringstream out;
  out << "epsilon,abs_denominator,eigen_residual,rayleigh_energy,"
         "truncation_delta,cauchy_delta";
  if (adiabatic_errors_present) out << ",adiabatic_error";
  out << ",error\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    out << format_real(e.epsilon) << ",";
    if (e.outcome) {
      out << format_real(std::abs(e.outcome->denominator)) << ","
          << format_real(e.outcome->eigen_residual) << ","
          << format_real(e.outcome->rayleigh_energy) << ","
          << format_real(e.outcome->cauchy_delta) << ",";
    } else {
      out << ",,,,";
    }
    if (i < cauchy_deltas.size() && std::isfinite(cauchy_deltas[i])) {
      out << format_real(cauchy_deltas[i]);
    }
    if (adiabatic_errors_present) {
      out << "," << format_real(adiabatic_errors[i]);
    }
    out << "," << e.error << "\n";
  }
  return out.str();
}

std::string GapDiagnostics::to_csv() const {
  std::ostringstream out;
  const std::size_t n = rows.empty() ? 0 : rows[0].local_gaps.size();
  out << "t,f,global_gap";
  for (std::size_t j = 0; j < n; ++j) out << ",delta_" << j;
  for (std::size_t j = 0; j < n; ++j) out << ",ratio_" << j;
  out << "\n";
  for (const auto& r : rows) {
    out << format_real(r.t) << "," << format_real(r.f) << ","
        << format_real(r.global_gap);
    for (double d : r.local_gaps) out << "," << format_real(d);
    for (double d : r.gap_ratios) out << "," << format_real(d);
    out << "\n";
  }
  return out.str();
}

}  // namespace adsw
