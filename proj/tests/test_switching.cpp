#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "adsw/switching.hpp"

using namespace adsw;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
  return g;
}

}  // namespace

TEST_CASE("exponential profile values") {
  const auto p = SwitchingProfile::exponential();
  auto s = p(0.0);
  CHECK(s.f == 1.0);
  CHECK(s.fp == 1.0);
  CHECK(s.fpp == 1.0);
  s = p(-std::log(2.0));
  CHECK(s.f == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.fp == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(p(0.5), Error);
}

TEST_CASE("smooth bump endpoint values and C2 matching") {
  const auto p = SwitchingProfile::smooth_bump(-1.0);
  auto s = p(-1.0);
  CHECK(s.f == 0.0);
  CHECK(s.fp == 0.0);
  CHECK(s.fpp == 0.0);
  s = p(0.0);
  CHECK(s.f == 1.0);
  CHECK(s.fp == 0.0);
  CHECK(s.fpp == doctest::Approx(0.0).epsilon(1e-12));

  // one-sided second differences of f'' agree across both support endpoints
  const double h = 1e-4;
  for (double edge : {-1.0, 0.0}) {
    const double inside = edge == -1.0 ? p(edge + h).fpp : p(edge - h).fpp;
    const double at_edge = p(edge).fpp;
    CHECK(std::abs(inside - at_edge) < 60.0 * h + 1e-6);
  }
}

TEST_CASE("finite differences recover the stated derivatives") {
  std::vector<double> grid = linspace(-12.0, 0.0, 241);
  std::vector<double> samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) samples[i] = std::exp(grid[i]);
  const auto profiles = {SwitchingProfile::exponential(),
                         SwitchingProfile::smooth_bump(-2.0),
                         SwitchingProfile::tabulated(grid, samples)};
  for (const auto& p : profiles) {
    for (double tau : {-1.303, -0.717, -0.223}) {
      std::vector<double> hs = {1e-2, 1e-3, 1e-4, 1e-5};
      std::vector<double> err_fp, err_fpp;
      for (double h : hs) {
        const double fd1 = (p(tau + h).f - p(tau - h).f) / (2.0 * h);
        const double fd2 = (p(tau + h).fp - p(tau - h).fp) / (2.0 * h);
        err_fp.push_back(std::abs(fd1 - p(tau).fp));
        err_fpp.push_back(std::abs(fd2 - p(tau).fpp));
      }
      // log-log slope of the truncation error should be quadratic
      for (auto* err : {&err_fp, &err_fpp}) {
        if ((*err)[0] < 1e-12) continue;  // derivative locally constant
        const double slope = std::log((*err)[0] / (*err)[2]) /
                             std::log(hs[0] / hs[2]);
        CHECK(slope > 1.9);
      }
    }
  }
}

TEST_CASE("profiles stay within range with nonnegative slope") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ud(-30.0, 0.0);
  std::vector<double> grid = linspace(-30.0, 0.0, 301);
  std::vector<double> samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) samples[i] = std::exp(grid[i]);
  const auto e = SwitchingProfile::exponential();
  const auto b = SwitchingProfile::smooth_bump(-3.0);
  const auto t = SwitchingProfile::tabulated(grid, samples);
  for (int i = 0; i < 10000; ++i) {
    const double tau = ud(rng);
    for (const auto& p : {e, b, t}) {
      const auto s = p(tau);
      CHECK(s.f >= -1e-9);
      CHECK(s.f <= 1.0 + 1e-9);
      CHECK(s.fp >= -1e-6);
    }
  }
}

TEST_CASE("certification of the exponential profile") {
  const auto p = SwitchingProfile::exponential();
  const auto rep = certify_profile(p, linspace(-40.0, 0.0, 4001));
  CHECK(rep.monotone_ok);
  CHECK(rep.endpoint_ok);
  CHECK(rep.range_ok);
  CHECK(rep.integrals_finite);
  // closed forms: int e^t = 1, int |f''| = 1, int (f')^2 = 1/2
  CHECK(rep.integral_f == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rep.integral_fpp == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rep.integral_fp_sq == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("certification of the bump profile") {
  const auto p = SwitchingProfile::smooth_bump(-1.0);
  const auto rep = certify_profile(p, linspace(-2.0, 0.0, 2001));
  CHECK(rep.all_ok());
  CHECK(rep.integral_f == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("tabulated profile with a decreasing step fails monotonicity") {
  std::vector<double> tau = linspace(-4.0, 0.0, 41);
  std::vector<double> f(41);
  for (int i = 0; i < 41; ++i) f[i] = std::exp(tau[i]);
  f[20] = f[19] - 0.05;  // one decreasing step
  const auto p = SwitchingProfile::tabulated(tau, f);
  const auto rep = certify_profile(p, linspace(-4.0, 0.0, 801));
  CHECK_FALSE(rep.monotone_ok);
}

TEST_CASE("tabulated spline reproduces a smooth profile") {
  std::vector<double> tau = linspace(-12.0, 0.0, 241);
  std::vector<double> f(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) f[i] = std::exp(tau[i]);
  const auto p = SwitchingProfile::tabulated(tau, f);
  for (double t : {-5.73, -2.11, -0.37}) {
    CHECK(p(t).f == doctest::Approx(std::exp(t)).epsilon(1e-5));
    CHECK(p(t).fp == doctest::Approx(std::exp(t)).epsilon(1e-3));
  }
}

TEST_CASE("truncation time") {
  const auto e = SwitchingProfile::exponential();
  CHECK(truncation_time(e, 1e-6) ==
        doctest::Approx(std::log(1e-6)).epsilon(1e-14));
  CHECK(truncation_time(e, 1.0) == 0.0);
  const auto b = SwitchingProfile::smooth_bump(-1.0);
  CHECK(truncation_time(b, 1e-8) == -1.0);
  CHECK(truncation_time(b, 0.3) == -1.0);
}
