#include "adsw/switching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adsw {

SwitchingProfile SwitchingProfile::exponential() {
  SwitchingProfile p;
  p.kind_ = Kind::Exponential;
  return p;
}

SwitchingProfile SwitchingProfile::smooth_bump(double rf) {
  if (!(rf < 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "bump support endpoint must be < 0");
  }
  SwitchingProfile p;
  p.kind_ = Kind::SmoothBump;
  p.rf_ = rf;
  return p;
}

SwitchingProfile SwitchingProfile::tabulated(std::vector<double> tau,
                                             std::vector<double> f) {
  if (tau.size() != f.size() || tau.size() < 3) {
    throw Error(ErrorCode::InvalidArgument,
                "tabulated profile needs >= 3 matching samples");
  }
  for (std::size_t i = 1; i < tau.size(); ++i) {
    if (tau[i] <= tau[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "tau grid must be increasing");
    }
  }
  if (tau.back() > 0.0) {
    throw Error(ErrorCode::InvalidArgument, "tau grid must end at or before 0");
  }
  SwitchingProfile p;
  p.kind_ = Kind::Tabulated;
  p.rf_ = tau.front();
  p.tau_ = std::move(tau);
  p.f_ = std::move(f);

  // natural cubic spline second derivatives (tridiagonal solve)
  const int n = static_cast<int>(p.tau_.size());
  p.spp_.assign(n, 0.0);
  std::vector<double> sub(n, 0.0), diag(n, 1.0), sup(n, 0.0), rhs(n, 0.0);
  for (int i = 1; i + 1 < n; ++i) {
    const double hl = p.tau_[i] - p.tau_[i - 1];
    const double hr = p.tau_[i + 1] - p.tau_[i];
    sub[i] = hl / 6.0;
    diag[i] = (hl + hr) / 3.0;
    sup[i] = hr / 6.0;
    rhs[i] = (p.f_[i + 1] - p.f_[i]) / hr - (p.f_[i] - p.f_[i - 1]) / hl;
  }
  for (int i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  p.spp_[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    p.spp_[i] = (rhs[i] - sup[i] * p.spp_[i + 1]) / diag[i];
  }
  return p;
}

double SwitchingProfile::support_left() const {
  switch (kind_) {
    case Kind::Exponential:
      return -std::numeric_limits<double>::max();
    case Kind::SmoothBump:
    case Kind::Tabulated:
      return rf_;
  }
  return rf_;
}

SwitchingProfile::Sample SwitchingProfile::operator()(double tau) const {
  if (tau > 0.0) {
    throw Error(ErrorCode::PositiveTime,
                "profile evaluated at tau = " + std::to_string(tau));
  }
  switch (kind_) {
    case Kind::Exponential: {
      const double e = std::exp(tau);
      return {e, e, e};
    }
    case Kind::SmoothBump: {
      if (tau <= rf_) return {0.0, 0.0, 0.0};
      const double w = -rf_;
      const double x = (tau - rf_) / w;
      const double f = ((6.0 * x - 15.0) * x + 10.0) * x * x * x;
      const double fp = ((30.0 * x - 60.0) * x + 30.0) * x * x / w;
      const double fpp = ((120.0 * x - 180.0) * x + 60.0) * x / (w * w);
      return {f, fp, fpp};
    }
    case Kind::Tabulated: {
      if (tau <= tau_.front()) return {0.0, 0.0, 0.0};
      const auto it = std::upper_bound(tau_.begin(), tau_.end(), tau);
      int i = static_cast<int>(it - tau_.begin()) - 1;
      i = std::min(i, static_cast<int>(tau_.size()) - 2);
      const double h = tau_[i + 1] - tau_[i];
      const double a = (tau_[i + 1] - tau) / h;
      const double b = (tau - tau_[i]) / h;
      const double f = a * f_[i] + b * f_[i + 1] +
                       ((a * a * a - a) * spp_[i] + (b * b * b - b) * spp_[i + 1]) *
                           h * h / 6.0;
      const double fp = (f_[i + 1] - f_[i]) / h -
                        (3.0 * a * a - 1.0) * h * spp_[i] / 6.0 +
                        (3.0 * b * b - 1.0) * h * spp_[i + 1] / 6.0;
      const double fpp = a * spp_[i] + b * spp_[i + 1];
      return {f, fp, fpp};
    }
  }
  return {0.0, 0.0, 0.0};
}

ProfileReport certify_profile(const SwitchingProfile& profile,
                              const std::vector<double>& grid) {
  if (grid.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "certification grid too small");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > 0.0) {
      throw Error(ErrorCode::InvalidArgument, "grid must lie in (-inf, 0]");
    }
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "grid must be sorted ascending");
    }
  }

  ProfileReport rep;
  rep.monotone_ok = true;
  rep.range_ok = true;
  double prev_f = -std::numeric_limits<double>::infinity();
  for (double tau : grid) {
    const auto s = profile(tau);
    if (s.f < prev_f) {
      rep.monotone_ok = false;
      rep.max_monotone_violation =
          std::max(rep.max_monotone_violation, prev_f - s.f);
    }
    if (s.f < -1e-12 || s.f > 1.0 + 1e-12) rep.range_ok = false;
    prev_f = s.f;
  }
  rep.endpoint_ok = std::abs(profile(0.0).f - 1.0) <= 1e-9;

  // per-interval Simpson with midpoint evaluation
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double a = grid[i], b = grid[i + 1];
    const double m = 0.5 * (a + b);
    const auto sa = profile(a), sm = profile(m), sb = profile(b);
    const double h = (b - a) / 6.0;
    rep.integral_f += h * (std::abs(sa.f) + 4.0 * std::abs(sm.f) + std::abs(sb.f));
    rep.integral_fpp +=
        h * (std::abs(sa.fpp) + 4.0 * std::abs(sm.fpp) + std::abs(sb.fpp));
    rep.integral_fp_sq +=
        h * (sa.fp * sa.fp + 4.0 * sm.fp * sm.fp + sb.fp * sb.fp);
  }
  rep.integrals_finite = std::isfinite(rep.integral_f) &&
                         std::isfinite(rep.integral_fpp) &&
                         std::isfinite(rep.integral_fp_sq);
  return rep;
}

double truncation_time(const SwitchingProfile& profile, double tol) {
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  }
  switch (profile.kind()) {
    case SwitchingProfile::Kind::Exponential:
      return std::min(std::log(tol), 0.0);
    case SwitchingProfile::Kind::SmoothBump:
      return profile.support_left();
    case SwitchingProfile::Kind::Tabulated: {
      // cumulative mass from the left end; zero mass assumed left of the grid
      const double left = profile.support_left();
      double acc = 0.0;
      double t = left;
      const int steps = 4096;
      const double h = (0.0 - left) / steps;
      for (int i = 0; i < steps; ++i) {
        const double a = left + i * h, b = a + h;
        const double add =
            h / 6.0 *
            (profile(a).f + 4.0 * profile(0.5 * (a + b)).f + profile(b).f);
        if (acc + add > tol) return t;
        acc += add;
        t = b;
      }
      return 0.0;
    }
  }
  return 0.0;
}

}  // namespace adsw
