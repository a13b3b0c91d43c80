#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace adsw {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

enum class ErrorCode {
  NonSquare,
  AsymmetryTooLarge,
  ClusterAmbiguity,
  GapViolation,
  NotAProjector,
  PositiveTime,
  NoDegenerateGroup,
  UndefinedCrossCoefficients,
  TrackingFailure,
  StepTooCoarse,
  IntegrationFailure,
  NotConverged,
  VanishingDenominator,
  StageConditionViolated,
  DegeneracyMismatch,
  NotHermitian,
  ParseError,
  ProblemLoad,
  ConfigParse,
  ExperimentFailure,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Spectral norm (largest singular value).
double spectral_norm(const Matrix& m);

// Hermiticity defect relative to the largest entry magnitude.
double hermiticity_defect(const Matrix& m);

// Rotates v so that its largest-magnitude component is real positive.
Vector fix_phase(const Vector& v);

// Frobenius-normalized check helpers used across modules.
inline Matrix dyad(const Vector& v) { return v * v.adjoint(); }

// 17-significant-digit decimal form, reproducible across runs.
std::string format_real(double x);

}  // namespace adsw
