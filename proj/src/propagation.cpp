#include "adsw/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace adsw {

const char* evolution_kind_name(EvolutionKind kind) {
  switch (kind) {
    case EvolutionKind::Full: return "full";
    case EvolutionKind::Adiabatic: return "adiabatic";
    case EvolutionKind::Kato: return "kato";
  }
  return "unknown";
}

double default_step(const PerturbationProblem& problem, double epsilon,
                    double factor) {
  const double norm = spectral_norm(problem.hamiltonian(1.0));
  return epsilon * factor / std::max(norm, 1e-12);
}

namespace {

double polar_project(Matrix& u) {
  Eigen::JacobiSVD<Matrix> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
  double defect = 0.0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    defect = std::max(defect, std::abs(svd.singularValues()(i) - 1.0));
  }
  u = svd.matrixU() * svd.matrixV().adjoint();
  return defect;
}

struct IntegrationOutput {
  Matrix u;
  long steps = 0;
  double pre_defect = 0.0;
  double post_defect = 0.0;
};

// Classical RK4 on the right-multiplicative ODE dU/dt = G(t) U with polar
// re-unitarization each step. Snapshots (optional) are taken at exact step
// boundaries.
IntegrationOutput integrate_unitary(
    const std::function<Matrix(double)>& generator, int dim, double t0,
    double t1, double step, const std::vector<double>* snapshot_times = nullptr,
    std::vector<Matrix>* snapshots = nullptr) {
  IntegrationOutput out;
  out.u = Matrix::Identity(dim, dim);
  if (t1 <= t0) return out;
  if (!(step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "step must be positive");
  }

  // align step boundaries with the requested snapshot times
  std::vector<double> marks;
  if (snapshot_times) {
    for (double s : *snapshot_times) {
      if (s > t0 && s < t1) marks.push_back(s);
    }
  }
  std::sort(marks.begin(), marks.end());
  marks.push_back(t1);

  double t = t0;
  Matrix g_right = generator(t);
  std::size_t mark_idx = 0;
  for (double target : marks) {
    const long n = std::max<long>(1, static_cast<long>(std::ceil((target - t) / step)));
    const double h = (target - t) / static_cast<double>(n);
    for (long k = 0; k < n; ++k) {
      const Matrix& g0 = g_right;
      const Matrix gm = generator(t + 0.5 * h);
      const Matrix g1 = generator(t + h);
      const Matrix k1 = g0 * out.u;
      const Matrix k2 = gm * (out.u + 0.5 * h * k1);
      const Matrix k3 = gm * (out.u + 0.5 * h * k2);
      const Matrix k4 = g1 * (out.u + h * k3);
      out.u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!out.u.allFinite()) {
        throw Error(ErrorCode::IntegrationFailure,
                    "non-finite propagator at t=" + std::to_string(t));
      }
      const double defect = polar_project(out.u);
      out.pre_defect = std::max(out.pre_defect, defect);
      if (defect > 1e-3) {
        throw Error(ErrorCode::IntegrationFailure,
                    "unitarity defect " + std::to_string(defect) +
                        " at t=" + std::to_string(t));
      }
      g_right = g1;
      t += h;
      ++out.steps;
    }
    t = target;
    if (snapshots && mark_idx + 1 < marks.size()) {
      snapshots->push_back(out.u);
    }
    ++mark_idx;
  }
  out.post_defect =
      spectral_norm(out.u.adjoint() * out.u - Matrix::Identity(dim, dim));
  return out;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Tracked-block structure for the finite-difference Kato generator. Levels
// whose mutual splitting is below the FD noise floor are merged into one
// block; the rest of the spectrum is always one block.
struct GeneratorContext {
  const PerturbationProblem* problem = nullptr;
  double cluster_tol = kDefaultClusterTol;
  std::optional<SpectralFrame> last;  // continuity reference along a sweep
};

Matrix kato_tilde(GeneratorContext& ctx, double lambda, double d_lambda,
                  SpectralFrame* center_out) {
  const PerturbationProblem& problem = *ctx.problem;
  const int dim = problem.dim();
  const int ntr = problem.degeneracy();

  const SpectralFrame* ref = ctx.last ? &*ctx.last : nullptr;
  SpectralFrame center = spectral_frame(problem, lambda, ctx.cluster_tol, ref);

  // sample points: central difference away from the endpoints, 3-point
  // one-sided stencils at them
  double la, lb;            // evaluation points besides the center
  double wa, wb, wc;        // finite-difference weights
  if (lambda < d_lambda) {
    la = lambda + d_lambda;
    lb = lambda + 2.0 * d_lambda;
    wc = -3.0 / (2.0 * d_lambda);
    wa = 4.0 / (2.0 * d_lambda);
    wb = -1.0 / (2.0 * d_lambda);
  } else if (lambda > 1.0 - d_lambda) {
    la = lambda - d_lambda;
    lb = lambda - 2.0 * d_lambda;
    wc = 3.0 / (2.0 * d_lambda);
    wa = -4.0 / (2.0 * d_lambda);
    wb = 1.0 / (2.0 * d_lambda);
  } else {
    la = lambda - d_lambda;
    lb = lambda + d_lambda;
    wc = 0.0;
    wa = -1.0 / (2.0 * d_lambda);
    wb = 1.0 / (2.0 * d_lambda);
  }
  const SpectralFrame fa = spectral_frame(problem, clamp01(la), ctx.cluster_tol, &center);
  const SpectralFrame fb = spectral_frame(problem, clamp01(lb), ctx.cluster_tol, &center);

  // FD-stability guard: eigenvector noise ~ eps_mach * diam / splitting must
  // stay a small fraction of the difference quotient scale
  const double diam = center.eigenvalues()(dim - 1) - center.eigenvalues()(0);
  const double guard = std::numeric_limits<double>::epsilon() *
                       std::max(diam, 1.0) / (1e-3 * d_lambda);

  std::vector<std::vector<int>> blocks;  // tracked labels per block
  blocks.push_back({0});
  for (int j = 1; j < ntr; ++j) {
    if (center.tracked_eigenvalue(j) - center.tracked_eigenvalue(j - 1) <= guard) {
      blocks.back().push_back(j);
    } else {
      blocks.push_back({j});
    }
  }

  auto block_projector = [&](const SpectralFrame& f,
                             const std::vector<int>& labels) {
    Matrix p = Matrix::Zero(dim, dim);
    for (int j : labels) {
      const Vector u = f.eigenvectors().col(f.tracked_index(j));
      p += u * u.adjoint();
    }
    return p;
  };

  Matrix ktilde = Matrix::Zero(dim, dim);
  Matrix tracked_c = Matrix::Zero(dim, dim);
  Matrix tracked_d = Matrix::Zero(dim, dim);
  for (const auto& labels : blocks) {
    const Matrix pc = block_projector(center, labels);
    const Matrix dp = wa * block_projector(fa, labels) +
                      wb * block_projector(fb, labels) + wc * pc;
    ktilde += -0.5 * (pc * dp - dp * pc);
    tracked_c += pc;
    tracked_d += dp;
  }
  if (ntr < dim) {
    const Matrix pc = Matrix::Identity(dim, dim) - tracked_c;
    const Matrix dp = -tracked_d;  // projectors sum to the identity
    ktilde += -0.5 * (pc * dp - dp * pc);
  }

  if (center_out) *center_out = center;
  ctx.last = std::move(center);
  return ktilde;
}

GeneratorSample generator_sample(GeneratorContext& ctx,
                                 const SwitchingProfile& profile, double t,
                                 double d_lambda) {
  const auto s = profile(t);
  const double lambda = clamp01(s.f);

  GeneratorSample out;
  out.t = t;
  out.h = ctx.problem->hamiltonian(lambda);
  SpectralFrame center;
  if (s.fp == 0.0) {
    // K = f' Ktilde vanishes identically; only the gaps are reported
    center = spectral_frame(*ctx.problem, lambda, ctx.cluster_tol,
                            ctx.last ? &*ctx.last : nullptr);
    out.k = Matrix::Zero(ctx.problem->dim(), ctx.problem->dim());
    out.bound_constant = 0.0;
    ctx.last = center;
  } else {
    const Matrix ktilde = kato_tilde(ctx, lambda, d_lambda, &center);
    out.k = s.fp * ktilde;
    out.bound_constant = spectral_norm(out.k) / s.fp;
  }
  out.local_gaps = center.local_gaps();
  return out;
}

void require_window(double t0, double t1) {
  if (!(t0 <= t1) || t1 > 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "time window must satisfy t0 <= t1 <= 0");
  }
}

PropagatorResult make_result(IntegrationOutput&& out, double t0, double t1,
                             std::optional<double> epsilon,
                             EvolutionKind kind) {
  PropagatorResult r;
  r.unitary = std::move(out.u);
  r.t_start = t0;
  r.t_end = t1;
  r.epsilon = epsilon;
  r.step_count = out.steps;
  r.unitarity_defect = out.post_defect;
  r.pre_unitarity_defect = out.pre_defect;
  r.kind = kind;
  return r;
}

}  // namespace

GeneratorSample kato_generator(const PerturbationProblem& problem,
                               const SwitchingProfile& profile, double t,
                               double d_lambda) {
  GeneratorContext ctx;
  ctx.problem = &problem;
  return generator_sample(ctx, profile, t, d_lambda);
}

PropagatorResult kato_evolve(const PerturbationProblem& problem,
                             const SwitchingProfile& profile, double s0,
                             double s1, double step, double d_lambda) {
  require_window(s0, s1);
  GeneratorContext ctx;
  ctx.problem = &problem;
  auto gen = [&](double t) -> Matrix {
    const auto s = profile(std::min(t, 0.0));
    if (s.fp == 0.0) {
      return Matrix::Zero(problem.dim(), problem.dim());
    }
    return s.fp * kato_tilde(ctx, clamp01(s.f), d_lambda, nullptr);
  };
  auto out = integrate_unitary(gen, problem.dim(), s0, s1, step);
  return make_result(std::move(out), s0, s1, std::nullopt, EvolutionKind::Kato);
}

PropagatorResult full_evolve(const LinearSwitchFamily& family,
                             const SwitchingProfile& profile, double epsilon,
                             double t0, double t1, double step) {
  require_window(t0, t1);
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  }
  const double hnorm = spectral_norm(family.at(1.0));
  if (step > epsilon * 0.1 / std::max(hnorm, 1e-12)) {
    throw Error(ErrorCode::StepTooCoarse,
                "step " + std::to_string(step) + " does not resolve the fast "
                "phase; need <= " + std::to_string(epsilon * 0.1 / hnorm));
  }
  const Complex mi_over_eps(0.0, -1.0 / epsilon);
  auto gen = [&](double t) -> Matrix {
    return mi_over_eps * family.at(profile(std::min(t, 0.0)).f);
  };
  auto out = integrate_unitary(gen, static_cast<int>(family.h0.rows()), t0, t1, step);
  return make_result(std::move(out), t0, t1, epsilon, EvolutionKind::Full);
}

PropagatorResult full_evolve(const PerturbationProblem& problem,
                             const SwitchingProfile& profile, double epsilon,
                             double t0, double t1, double step) {
  return full_evolve(LinearSwitchFamily::of(problem), profile, epsilon, t0, t1,
                     step);
}

PropagatorResult adiabatic_evolve(const PerturbationProblem& problem,
                                  const SwitchingProfile& profile,
                                  double epsilon, double t0, double t1,
                                  double step, double d_lambda) {
  require_window(t0, t1);
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  }
  const double hnorm = spectral_norm(problem.hamiltonian(1.0));
  if (step > epsilon * 0.1 / std::max(hnorm, 1e-12)) {
    throw Error(ErrorCode::StepTooCoarse,
                "step " + std::to_string(step) + " does not resolve the fast "
                "phase; need <= " + std::to_string(epsilon * 0.1 / hnorm));
  }
  GeneratorContext ctx;
  ctx.problem = &problem;
  const Complex mi_over_eps(0.0, -1.0 / epsilon);
  auto gen = [&](double t) -> Matrix {
    const auto s = profile(std::min(t, 0.0));
    Matrix g = mi_over_eps * problem.hamiltonian(s.f);
    if (s.fp != 0.0) {
      g += s.fp * kato_tilde(ctx, clamp01(s.f), d_lambda, nullptr);
    }
    return g;
  };
  auto out = integrate_unitary(gen, problem.dim(), t0, t1, step);
  return make_result(std::move(out), t0, t1, epsilon, EvolutionKind::Adiabatic);
}

Matrix interaction_picture(const PropagatorResult& result, const Matrix& h0) {
  if (!result.epsilon) {
    throw Error(ErrorCode::InvalidArgument,
                "interaction picture requires an epsilon-carrying propagator");
  }
  const double eps = *result.epsilon;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h0);
  auto phase = [&](double t) -> Matrix {
    Vector d(es.eigenvalues().size());
    for (int i = 0; i < d.size(); ++i) {
      d(i) = std::exp(Complex(0.0, t * es.eigenvalues()(i) / eps));
    }
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
  };
  return phase(result.t_end) * result.unitary * phase(-result.t_start);
}

Matrix interaction_picture(const PropagatorResult& result,
                           const HermitianOperator& h0) {
  return interaction_picture(result, h0.mat());
}

namespace {

FromPastResult from_past_impl(const LinearSwitchFamily& family,
                              const PerturbationProblem* problem,
                              const SwitchingProfile& profile, double epsilon,
                              EvolutionKind kind, double tol) {
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  }
  if (kind == EvolutionKind::Adiabatic && !problem) {
    throw Error(ErrorCode::InvalidArgument,
                "the adiabatic generator needs the tracked problem");
  }
  const double t0 = truncation_time(profile, tol * epsilon);
  const double hnorm = spectral_norm(family.at(1.0));
  const double step = epsilon * kDefaultStepFactor / std::max(hnorm, 1e-12);
  const bool compact = profile.kind() != SwitchingProfile::Kind::Exponential;
  const double t0_early = compact ? t0 : 1.5 * t0;

  Eigen::SelfAdjointEigenSolver<Matrix> es(family.h0);
  auto phase = [&](double t) -> Matrix {
    Vector d(es.eigenvalues().size());
    for (int i = 0; i < d.size(); ++i) {
      d(i) = std::exp(Complex(0.0, t * es.eigenvalues()(i) / epsilon));
    }
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
  };

  GeneratorContext ctx;
  if (problem) ctx.problem = problem;
  const Complex mi_over_eps(0.0, -1.0 / epsilon);
  auto gen = [&](double t) -> Matrix {
    const auto s = profile(std::min(t, 0.0));
    Matrix g = mi_over_eps * family.at(s.f);
    if (kind == EvolutionKind::Adiabatic && s.fp != 0.0) {
      g += s.fp * kato_tilde(ctx, clamp01(s.f), kDefaultDLambda, nullptr);
    }
    return g;
  };

  FromPastResult res;
  res.t0 = t0;
  const int dim = static_cast<int>(family.h0.rows());
  if (t0 >= 0.0) {
    res.u_int = Matrix::Identity(dim, dim);
    res.propagator = make_result({Matrix::Identity(dim, dim), 0, 0.0, 0.0}, 0.0,
                                 0.0, epsilon, kind);
    return res;
  }

  if (compact) {
    auto out = integrate_unitary(gen, dim, t0, 0.0, step);
    res.propagator = make_result(std::move(out), t0, 0.0, epsilon, kind);
    res.u_int = res.propagator.unitary * phase(-t0);
    res.cauchy_delta = 0.0;  // exact: f vanishes identically left of t0
    return res;
  }

  // one pass from the earlier start with a snapshot at t0;
  // U(0, t0) = U(0, t0_early) * U(t0, t0_early)^dag
  std::vector<double> snap_times = {t0};
  std::vector<Matrix> snaps;
  auto out = integrate_unitary(gen, dim, t0_early, 0.0, step, &snap_times, &snaps);
  const Matrix u_full = out.u;                 // U(0, t0_early)
  const Matrix u_to_t0 = snaps.at(0);          // U(t0, t0_early)
  Matrix u_main = u_full * u_to_t0.adjoint();  // U(0, t0)
  polar_project(u_main);

  res.propagator = make_result(std::move(out), t0, 0.0, epsilon, kind);
  res.propagator.unitary = u_main;
  res.propagator.t_start = t0;
  res.u_int = u_main * phase(-t0);
  const Matrix u_int_early = u_full * phase(-t0_early);
  res.cauchy_delta = spectral_norm(res.u_int - u_int_early);
  if (res.cauchy_delta > 10.0 * tol) {
    throw Error(ErrorCode::NotConverged,
                "truncation Cauchy difference " +
                    std::to_string(res.cauchy_delta) + " exceeds 10*tol");
  }
  return res;
}

}  // namespace

FromPastResult evolve_from_past(const PerturbationProblem& problem,
                                const SwitchingProfile& profile,
                                double epsilon, EvolutionKind kind,
                                double tol) {
  if (kind == EvolutionKind::Kato) {
    throw Error(ErrorCode::InvalidArgument,
                "use kato_from_past for the geometric evolution");
  }
  return from_past_impl(LinearSwitchFamily::of(problem), &problem, profile,
                        epsilon, kind, tol);
}

FromPastResult evolve_from_past(const LinearSwitchFamily& family,
                                const SwitchingProfile& profile,
                                double epsilon, double tol) {
  return from_past_impl(family, nullptr, profile, epsilon,
                        EvolutionKind::Full, tol);
}

PropagatorResult kato_from_past(const PerturbationProblem& problem,
                                const SwitchingProfile& profile, double tol,
                                double step, double d_lambda) {
  const double t0 = truncation_time(profile, tol);
  if (t0 >= 0.0) {
    PropagatorResult r;
    r.unitary = Matrix::Identity(problem.dim(), problem.dim());
    r.t_start = r.t_end = 0.0;
    r.kind = EvolutionKind::Kato;
    return r;
  }
  return kato_evolve(problem, profile, t0, 0.0, step, d_lambda);
}

}  // namespace adsw
