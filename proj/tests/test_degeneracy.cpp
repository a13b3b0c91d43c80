#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "adsw/degeneracy.hpp"
#include "adsw/io.hpp"
#include "test_support.hpp"

using namespace adsw;
using test::canonical_problem;

namespace {

PerturbationProblem lift_problem() {
  return load_problem(test::data_path("problems/degenerate_lift.json"));
}

}  // namespace

TEST_CASE("canonical first shifts are the closed-form 2x2 eigenvalues") {
  const auto problem = canonical_problem();
  const auto basis = build_initial_basis(problem);
  REQUIRE(basis.size() == 2);
  CHECK(basis.first_shifts[0] ==
        doctest::Approx(-1.1180339887498949).epsilon(1e-12));
  CHECK(basis.first_shifts[1] ==
        doctest::Approx(1.1180339887498949).epsilon(1e-12));
  CHECK(basis.residual_groups.size() == 2);

  // the basis diagonalizes P0 V P0
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) {
      const Complex m = basis.vectors[k].dot(problem.v().mat() * basis.vectors[j]);
      if (j == k) {
        CHECK(std::abs(m - basis.first_shifts[j]) < 1e-12);
      } else {
        CHECK(std::abs(m) < 1e-10);
      }
    }
  }
  // orthonormal, inside ran(P0)
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(basis.vectors[j].norm() - 1.0) < 1e-12);
    CHECK(((Matrix::Identity(4, 4) - problem.p0()) * basis.vectors[j]).norm() <
          1e-12);
  }
}

TEST_CASE("zero perturbation gives one group of vanishing shifts") {
  const auto problem = PerturbationProblem::make(
      validate_hermitian(test::canonical_h0()),
      validate_hermitian(Matrix::Zero(4, 4)), 0.0, 2, 0.5);
  const auto basis = build_initial_basis(problem);
  CHECK(basis.first_shifts[0] == 0.0);
  CHECK(basis.first_shifts[1] == 0.0);
  CHECK(basis.residual_groups.size() == 1);
  CHECK(basis.residual_groups[0].size() == 2);
}

TEST_CASE("a perturbation diagonal in the natural frame keeps it") {
  Matrix v = Matrix::Zero(4, 4);
  v(0, 0) = -0.3;
  v(1, 1) = 0.7;
  const auto problem = PerturbationProblem::make(
      validate_hermitian(test::canonical_h0()), validate_hermitian(v), 0.0, 2,
      0.5);
  const auto basis = build_initial_basis(problem);
  CHECK(basis.first_shifts[0] == doctest::Approx(-0.3));
  CHECK(basis.first_shifts[1] == doctest::Approx(0.7));
  CHECK(std::abs(basis.vectors[0](0)) == doctest::Approx(1.0));
  CHECK(std::abs(basis.vectors[1](1)) == doctest::Approx(1.0));
}

TEST_CASE("solvability: (E1 - V) phi0 lies in the orthogonal complement") {
  const auto problem = canonical_problem();
  const auto basis = build_initial_basis(problem);
  for (int j = 0; j < 2; ++j) {
    const Vector rhs = basis.first_shifts[j] * basis.vectors[j] -
                       problem.v().mat() * basis.vectors[j];
    CHECK((problem.p0() * rhs).norm() < 1e-10);
  }
}

TEST_CASE("first shifts are independent of the internal frame of the "
          "degenerate space") {
  const auto problem = canonical_problem();
  const auto ref = build_initial_basis(problem).first_shifts;
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    // conjugate V by a unitary that acts inside ran(P0) and commutes with H0
    const Matrix u2 = test::random_unitary(rng, 2);
    Matrix u = Matrix::Identity(4, 4);
    u.topLeftCorner(2, 2) = u2;
    const Matrix v2 = u * problem.v().mat() * u.adjoint();
    const auto p2 = PerturbationProblem::make(
        validate_hermitian(test::canonical_h0()), validate_hermitian(v2), 0.0,
        2, 0.5);
    const auto alt = build_initial_basis(p2).first_shifts;
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(alt[j] - ref[j]) < 1e-10);
    }
  }
}

TEST_CASE("random problems keep the basis diagonalization tight") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> dims(3, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = dims(rng);
    std::uniform_int_distribution<int> degs(1, std::min(3, dim - 1));
    const auto problem = test::random_problem(rng, dim, degs(rng));
    const auto basis = build_initial_basis(problem);
    for (int j = 0; j < basis.size(); ++j) {
      for (int k = 0; k < basis.size(); ++k) {
        if (j == k) continue;
        CHECK(std::abs(basis.vectors[k].dot(problem.v().mat() *
                                            basis.vectors[j])) < 1e-10);
      }
    }
  }
}

TEST_CASE("second-order lift on the shipped degenerate problem") {
  const auto problem = lift_problem();
  const auto basis = build_initial_basis(problem);
  REQUIRE(basis.residual_groups.size() == 1);
  REQUIRE(basis.residual_groups[0].size() == 2);
  CHECK(basis.first_shifts[0] == doctest::Approx(0.2));

  const auto lifted = second_order_lift(problem, basis);
  REQUIRE(lifted.second_shifts.has_value());
  // frozen from the 2x2 closed form of B diag(1, 1/2) B^T with the shipped
  // off-block B = [[0.3, -0.15], [0.1, 0.35]]
  CHECK((*lifted.second_shifts)[0] ==
        doctest::Approx(-0.10171164610283573).epsilon(1e-10));
  CHECK((*lifted.second_shifts)[1] ==
        doctest::Approx(-0.07078835389716429).epsilon(1e-10));
  CHECK(lifted.residual_degenerate_groups.empty());

  // lifted vectors diagonalize V R0 V within the group
  const Matrix& v = problem.v().mat();
  const Complex off = lifted.vectors[0].dot(
      v * reduced_resolvent_apply(problem, v * lifted.vectors[1]));
  CHECK(std::abs(off) < 1e-12);
}

TEST_CASE("lift errors when every group is a singleton") {
  const auto problem = canonical_problem();
  const auto basis = build_initial_basis(problem);
  try {
    second_order_lift(problem, basis);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoDegenerateGroup);
  }
}

TEST_CASE("lift flags residual degeneracy when V R0 V cannot split") {
  // V maps the degenerate space to itself only: V R0 V vanishes on it
  Matrix v = Matrix::Zero(4, 4);
  v(0, 1) = v(1, 0) = 0.0;  // P0 V P0 = 0, fully degenerate
  v(2, 3) = v(3, 2) = 0.4;  // acts on the complement only
  const auto problem = PerturbationProblem::make(
      validate_hermitian(test::canonical_h0()), validate_hermitian(v), 0.0, 2,
      0.5);
  const auto lifted = second_order_lift(problem, build_initial_basis(problem));
  CHECK((*lifted.second_shifts)[0] == doctest::Approx(0.0));
  CHECK((*lifted.second_shifts)[1] == doctest::Approx(0.0));
  CHECK(lifted.residual_degenerate_groups.size() == 1);
}

TEST_CASE("second shifts match a quadratic fit of the dense splitting") {
  const auto problem = lift_problem();
  const auto lifted = second_order_lift(problem, build_initial_basis(problem));
  const std::vector<double> lams = {1e-3, 2e-3, 4e-3};
  for (int j = 0; j < 2; ++j) {
    // fit r(lam) = E2 + E3 lam on r = (E(lam) - E0 - lam alpha)/lam^2
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double lam : lams) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(problem.hamiltonian(lam));
      const double r = (es.eigenvalues()(j) - problem.ground_energy() -
                        lam * lifted.first_shifts[j]) /
                       (lam * lam);
      sx += lam;
      sy += r;
      sxx += lam * lam;
      sxy += lam * r;
    }
    const int m = static_cast<int>(lams.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    CHECK(std::abs(intercept - (*lifted.second_shifts)[j]) <
          0.05 * std::abs((*lifted.second_shifts)[j]));
  }
}

TEST_CASE("first-order vector identities") {
  const auto problem = canonical_problem();
  const auto basis = build_initial_basis(problem);

  SUBCASE("zero perturbation gives a zero vector") {
    const auto p0 = PerturbationProblem::make(
        validate_hermitian(test::canonical_h0()),
        validate_hermitian(Matrix::Zero(4, 4)), 0.0, 2, 0.5);
    const auto b0 = build_initial_basis(p0);
    CHECK(first_order_vector(p0, b0, 0).norm() == 0.0);
  }

  SUBCASE("hierarchy defect on the complement") {
    for (int j = 0; j < 2; ++j) {
      const Vector phi1 = first_order_vector(problem, basis, j);
      const Vector lhs = (problem.h0().mat() -
                          problem.ground_energy() * Matrix::Identity(4, 4)) *
                         phi1;
      const Vector rhs = (basis.first_shifts[j] * Matrix::Identity(4, 4) -
                          problem.v().mat()) *
                         basis.vectors[j];
      const Matrix q = Matrix::Identity(4, 4) - problem.p0();
      CHECK((q * (lhs - rhs)).norm() < 1e-9);
      // normalization gauge: no component along phi_j itself
      CHECK(std::abs(basis.vectors[j].dot(phi1)) < 1e-12);
    }
  }

  SUBCASE("matches the analytic eigenvector derivative") {
    const double lam = 1e-4;
    for (int j = 0; j < 2; ++j) {
      const Vector phi1 = first_order_vector(problem, basis, j);
      Eigen::SelfAdjointEigenSolver<Matrix> es(problem.hamiltonian(lam));
      Vector exact = es.eigenvectors().col(j);
      // impose the <phi_j0, phi(lam)> = 1 gauge
      exact /= basis.vectors[j].dot(exact);
      const Vector fd = (exact - basis.vectors[j]) / lam;
      CHECK((fd - phi1).norm() < 100.0 * lam);
    }
  }

  SUBCASE("block-diagonal V keeps the correction inside the degenerate space") {
    Matrix v = Matrix::Zero(4, 4);
    v(0, 0) = 0.2;
    v(0, 1) = v(1, 0) = 0.4;
    v(1, 1) = -0.2;
    v(2, 2) = 0.3;
    const auto p = PerturbationProblem::make(
        validate_hermitian(test::canonical_h0()), validate_hermitian(v), 0.0,
        2, 0.5);
    const auto b = build_initial_basis(p);
    const Vector phi1 = first_order_vector(p, b, 0);
    CHECK(((Matrix::Identity(4, 4) - p.p0()) * phi1).norm() < 1e-12);
  }
}

TEST_CASE("lifted groups refuse first-order vectors at this depth") {
  const auto problem = lift_problem();
  const auto lifted = second_order_lift(problem, build_initial_basis(problem));
  try {
    first_order_vector(problem, lifted, 0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndefinedCrossCoefficients);
  }
}

TEST_CASE("expansion residual slopes") {
  std::vector<double> grid;
  for (int i = 0; i < 8; ++i) {
    grid.push_back(1e-3 * std::pow(5e-2 / 1e-3, i / 7.0));
  }

  SUBCASE("canonical problem: first-order residual is quadratic") {
    const auto problem = canonical_problem();
    const auto rep = expansion_check(problem, build_initial_basis(problem), grid);
    for (double s : rep.first_slopes) CHECK(s >= 1.9);
    // the first-order vectors certify P_j(0+) = |phi_j><phi_j| to O(lambda^2)
    REQUIRE(rep.vectors_available);
    for (double s : rep.projector_slopes) CHECK(s >= 1.9);
  }

  SUBCASE("zero perturbation: residuals at rounding level") {
    const auto p0 = PerturbationProblem::make(
        validate_hermitian(test::canonical_h0()),
        validate_hermitian(Matrix::Zero(4, 4)), 0.0, 2, 0.5);
    const auto rep = expansion_check(p0, build_initial_basis(p0), grid);
    for (double r : rep.max_first_residual) CHECK(r < 1e-12);
  }

  SUBCASE("lifted problem: second-order residual is cubic") {
    const auto problem = lift_problem();
    const auto lifted = second_order_lift(problem, build_initial_basis(problem));
    const auto rep = expansion_check(problem, lifted, grid);
    REQUIRE(rep.second_order_available);
    for (double s : rep.second_slopes) CHECK(s >= 2.9);
  }
}

TEST_CASE("series report serializes to CSV") {
  std::vector<double> grid;
  for (int i = 0; i < 6; ++i) grid.push_back(1e-3 * (i + 1));
  const auto problem = canonical_problem();
  const auto rep = expansion_check(problem, build_initial_basis(problem), grid);
  const std::string csv = rep.to_csv();
  CHECK(csv.find("lambda,E_0,E_1,res1_0,res1_1") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header + 6 rows
}
