#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "adsw/operator_core.hpp"
#include "test_support.hpp"

using namespace adsw;
using test::canonical_problem;

TEST_CASE("validate_hermitian accepts Hermitian input with zero defect") {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  const auto op = validate_hermitian(m);
  CHECK(op.asymmetry_defect() == 0.0);
  CHECK((op.mat() - m).norm() == 0.0);

  Matrix pauli_y(2, 2);
  pauli_y << Complex(0, 0), Complex(0, 1), Complex(0, -1), Complex(0, 0);
  CHECK(validate_hermitian(pauli_y).asymmetry_defect() == 0.0);
}

TEST_CASE("validate_hermitian rejects bad input") {
  Matrix bad(2, 2);
  bad << 0, 1, 0, 0;
  CHECK_THROWS_WITH_AS(validate_hermitian(bad), doctest::Contains("defect"),
                       Error);
  try {
    validate_hermitian(bad);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AsymmetryTooLarge);
  }

  Matrix rect(2, 3);
  rect.setZero();
  try {
    validate_hermitian(rect);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonSquare);
  }
}

TEST_CASE("spectral frame at lambda = 0 reproduces the H0 structure") {
  const auto problem = canonical_problem();
  const auto frame = spectral_frame(problem, 0.0);
  CHECK(frame.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(frame.eigenvalues()(1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(frame.eigenvalues()(2) == doctest::Approx(1.0));
  CHECK(frame.eigenvalues()(3) == doctest::Approx(2.0));
  CHECK(spectral_norm(frame.tracked_group_projector() - problem.p0()) < 1e-12);
  CHECK(frame.global_gap() == doctest::Approx(1.0));
}

TEST_CASE("spectral frame tracked eigenvalues against a dense eigensolve") {
  const auto problem = canonical_problem();
  const double lam = 0.1;
  const auto frame = spectral_frame(problem, lam);
  Eigen::SelfAdjointEigenSolver<Matrix> es(problem.hamiltonian(lam));
  CHECK(frame.tracked_eigenvalue(0) == doctest::Approx(es.eigenvalues()(0)));
  CHECK(frame.tracked_eigenvalue(1) == doctest::Approx(es.eigenvalues()(1)));
  // first-order splitting +- lambda * sqrt(1.25)
  CHECK(std::abs(frame.tracked_eigenvalue(0) - (-lam * 1.1180339887498949)) <
        2.0 * lam * lam);
  CHECK(std::abs(frame.tracked_eigenvalue(1) - (lam * 1.1180339887498949)) <
        2.0 * lam * lam);
}

TEST_CASE("zero perturbation leaves every frame at the H0 frame") {
  const auto problem = PerturbationProblem::make(
      validate_hermitian(test::canonical_h0()),
      validate_hermitian(Matrix::Zero(4, 4)), 0.0, 2, 0.5);
  const auto f0 = spectral_frame(problem, 0.0);
  for (double lam : {0.25, 0.5, 1.0}) {
    const auto f = spectral_frame(problem, lam);
    CHECK((f.eigenvalues() - f0.eigenvalues()).norm() < 1e-13);
    CHECK(spectral_norm(f.tracked_group_projector() -
                        f0.tracked_group_projector()) < 1e-12);
  }
}

TEST_CASE("frame invariants over random lambda draws") {
  const auto problem = canonical_problem();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double lam = ud(rng);
    const auto frame = spectral_frame(problem, lam);
    Matrix sum = Matrix::Zero(4, 4);
    Matrix recon = Matrix::Zero(4, 4);
    for (std::size_t a = 0; a < frame.clusters().size(); ++a) {
      const auto& ca = frame.clusters()[a];
      sum += ca.projector;
      CHECK(spectral_norm(ca.projector * ca.projector - ca.projector) < 1e-10);
      CHECK(spectral_norm(ca.projector - ca.projector.adjoint()) < 1e-10);
      recon += ca.mean_value * ca.projector;
      for (std::size_t b = a + 1; b < frame.clusters().size(); ++b) {
        CHECK(spectral_norm(ca.projector * frame.clusters()[b].projector) <
              1e-10);
      }
    }
    CHECK(spectral_norm(sum - Matrix::Identity(4, 4)) < 1e-10);
    CHECK(spectral_norm(recon - problem.hamiltonian(lam)) < 1e-9);
  }
}

TEST_CASE("tracking is continuous on a fine grid") {
  // per-level projectors exist once the perturbation has split the cluster,
  // so the grid starts just above lambda = 0
  const auto problem = canonical_problem();
  std::vector<double> lams;
  for (int i = 1; i <= 1000; ++i) lams.push_back(i / 1000.0);
  const auto frames = track_grid(problem, lams);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(spectral_norm(frames[i].tracked_projector(j) -
                          frames[i - 1].tracked_projector(j)) < 0.1);
    }
  }
}

TEST_CASE("assumption report on the canonical problem") {
  const auto problem = canonical_problem();
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  const auto rep = check_assumptions(problem, grid);
  CHECK(rep.degeneracy_ok);
  CHECK(rep.gap_ok);
  CHECK(rep.splitting_ok);
  CHECK(rep.min_global_gap > 0.5);
  CHECK(rep.pvp_eigenvalues[0] ==
        doctest::Approx(-1.1180339887498949).epsilon(1e-12));
}

TEST_CASE("identity perturbation fails the splitting assumption") {
  const auto problem = PerturbationProblem::make(
      validate_hermitian(test::canonical_h0()),
      validate_hermitian(Matrix::Identity(4, 4)), 0.0, 2, 0.5);
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  const auto rep = check_assumptions(problem, grid);
  CHECK(rep.degeneracy_ok);
  CHECK_FALSE(rep.splitting_ok);
}

TEST_CASE("declared N = 1 on a nondegenerate level passes trivially") {
  Matrix h0 = Matrix::Zero(3, 3);
  h0(1, 1) = 1.0;
  h0(2, 2) = 2.0;
  std::mt19937_64 rng(3);
  const auto problem = PerturbationProblem::make(
      validate_hermitian(h0),
      validate_hermitian(test::random_hermitian(rng, 3, 0.3)), 0.0, 1, 0.5);
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  const auto rep = check_assumptions(problem, grid);
  CHECK(rep.degeneracy_ok);
  CHECK(rep.splitting_ok);
}

TEST_CASE("reduced resolvent on basis vectors") {
  const auto problem = canonical_problem();
  Vector w = Vector::Zero(4);

  SUBCASE("inputs inside the degenerate space vanish") {
    w(0) = 1.0;
    CHECK(reduced_resolvent_apply(problem, w).norm() < 1e-14);
    w(0) = 0.5;
    w(1) = Complex(0, -0.5);
    CHECK(reduced_resolvent_apply(problem, w).norm() < 1e-14);
  }
  SUBCASE("diagonal action on the complement") {
    w(2) = 1.0;
    CHECK((reduced_resolvent_apply(problem, w) - w).norm() < 1e-14);
    w(3) = 1.0;
    Vector expect = Vector::Zero(4);
    expect(2) = 1.0;
    expect(3) = 0.5;
    CHECK((reduced_resolvent_apply(problem, w) - expect).norm() < 1e-14);
  }
}

TEST_CASE("resolvent identity (H0 - E0) R0 w = (I - P0) w on random input") {
  const auto problem = canonical_problem();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Vector w(4);
    for (int i = 0; i < 4; ++i) w(i) = Complex(nd(rng), nd(rng));
    const Vector r = reduced_resolvent_apply(problem, w);
    const Vector lhs = (problem.h0().mat() -
                        problem.ground_energy() * Matrix::Identity(4, 4)) *
                       r;
    const Vector rhs = w - problem.p0() * w;
    CHECK((lhs - rhs).norm() < 1e-9);
    CHECK((problem.p0() * r).norm() < 1e-12);
  }
}

TEST_CASE("projector distance") {
  Matrix p = Matrix::Zero(2, 2), q = Matrix::Zero(2, 2);
  p(0, 0) = 1.0;
  q(1, 1) = 1.0;
  CHECK(projector_distance(p, p) == 0.0);
  CHECK(projector_distance(p, q) == doctest::Approx(1.0));

  Vector u(2);
  u << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  CHECK(projector_distance(p, dyad(u)) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));

  Matrix not_proj(2, 2);
  not_proj << 0.5, 0.5, 0.5, 0.6;
  try {
    projector_distance(p, not_proj);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotAProjector);
  }
}

TEST_CASE("projector distance is symmetric and satisfies the triangle "
          "inequality") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix q = test::random_unitary(rng, 4);
    Matrix p1 = q.col(0) * q.col(0).adjoint();
    Matrix p2 = q.col(1) * q.col(1).adjoint();
    const Matrix q2 = test::random_unitary(rng, 4);
    Matrix p3 = q2.col(0) * q2.col(0).adjoint();
    const double d12 = projector_distance(p1, p2);
    const double d21 = projector_distance(p2, p1);
    const double d13 = projector_distance(p1, p3);
    const double d32 = projector_distance(p3, p2);
    CHECK(d12 == doctest::Approx(d21).epsilon(1e-12));
    CHECK(d12 <= d13 + d32 + 1e-12);
  }
}

TEST_CASE("declared degeneracy straddling a cluster is rejected") {
  // H0 with a 3-fold degenerate bottom level but N = 2 declared cannot
  // split the zero cluster
  Matrix h0 = Matrix::Zero(4, 4);
  h0(3, 3) = 2.0;
  try {
    PerturbationProblem::make(validate_hermitian(h0),
                              validate_hermitian(Matrix::Zero(4, 4)), 0.0, 2,
                              0.5);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegeneracyMismatch);
  }
}

TEST_CASE("a coarse cluster tolerance makes the tracked set inseparable") {
  const auto problem = canonical_problem();
  try {
    spectral_frame(problem, 0.0, 0.6);  // merges the whole spectrum
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ClusterAmbiguity);
  }
}
