#pragma once

#include <vector>

#include "adsw/types.hpp"

namespace adsw {

// Switching function f : (-inf, 0] -> [0, 1], non-decreasing, f(0) = 1,
// evaluable together with its first two derivatives.
class SwitchingProfile {
 public:
  enum class Kind { Exponential, SmoothBump, Tabulated };

  struct Sample {
    double f;
    double fp;
    double fpp;
  };

  static SwitchingProfile exponential();
  // Quintic smoothstep supported on [rf, 0], rf < 0; zero to the left.
  static SwitchingProfile smooth_bump(double rf);
  // Natural cubic spline through (tau, f), constant 0 left of the grid.
  static SwitchingProfile tabulated(std::vector<double> tau,
                                    std::vector<double> f);

  Kind kind() const { return kind_; }
  // Left end of the support for SmoothBump/Tabulated; -inf conceptually for
  // Exponential (returns the most negative representable time).
  double support_left() const;

  // (f, f', f'') at tau <= 0. Throws PositiveTime.
  Sample operator()(double tau) const;
  double value(double tau) const { return (*this)(tau).f; }
  double derivative(double tau) const { return (*this)(tau).fp; }

 private:
  SwitchingProfile() = default;

  Kind kind_ = Kind::Exponential;
  double rf_ = 0.0;
  std::vector<double> tau_, f_, spp_;  // spline knots, values, 2nd derivatives
};

struct ProfileReport {
  bool monotone_ok = false;
  bool endpoint_ok = false;      // f(0) = 1
  bool range_ok = false;         // 0 <= f <= 1 on the grid
  double max_monotone_violation = 0.0;
  double integral_f = 0.0;       // int |f|
  double integral_fpp = 0.0;     // int |f''|
  double integral_fp_sq = 0.0;   // int (f')^2
  bool integrals_finite = false;

  bool all_ok() const {
    return monotone_ok && endpoint_ok && range_ok && integrals_finite;
  }
};

// Numerically certifies monotonicity, f(0)=1, range, and quadrature
// estimates of the integrability witnesses over the given grid.
ProfileReport certify_profile(const SwitchingProfile& profile,
                              const std::vector<double>& grid);

// Largest tau0 <= 0 with int_{-inf}^{tau0} f <= tol. Closed form for
// Exponential (ln tol), support endpoint for SmoothBump, cumulative
// quadrature for Tabulated.
double truncation_time(const SwitchingProfile& profile, double tol);

}  // namespace adsw
