#include "adsw/io.hpp"

#include <fstream>

#include <Eigen/Eigenvalues>

namespace adsw {

using nlohmann::json;

Matrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries")) {
    throw Error(ErrorCode::ParseError, "matrix needs 'dim' and 'entries'");
  }
  const int dim = j.at("dim").get<int>();
  if (dim < 1) throw Error(ErrorCode::ParseError, "dim must be >= 1");
  const auto& entries = j.at("entries");
  if (!entries.is_array() ||
      entries.size() != static_cast<std::size_t>(dim) * dim) {
    throw Error(ErrorCode::ParseError,
                "entries must hold dim*dim [re, im] pairs (row-major)");
  }
  Matrix m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      const auto& e = entries.at(r * dim + c);
      if (!e.is_array() || e.size() != 2) {
        throw Error(ErrorCode::ParseError, "each entry must be [re, im]");
      }
      m(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json entries = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      entries.push_back({m(r, c).real(), m(r, c).imag()});
    }
  }
  return {{"dim", m.rows()}, {"entries", entries}};
}

PerturbationProblem problem_from_json(const json& j) {
  if (!j.is_object() || !j.contains("h0") || !j.contains("v")) {
    throw Error(ErrorCode::ParseError, "problem needs 'h0' and 'v'");
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "h0" && key != "v" && key != "groundEnergy" &&
        key != "degeneracy" && key != "gapFloor") {
      throw Error(ErrorCode::ParseError, "unknown problem key '" + key + "'");
    }
  }
  HermitianOperator h0, v;
  try {
    h0 = validate_hermitian(matrix_from_json(j.at("h0")));
    v = validate_hermitian(matrix_from_json(j.at("v")));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::AsymmetryTooLarge) {
      throw Error(ErrorCode::NotHermitian, e.what());
    }
    if (e.code() == ErrorCode::NonSquare) {
      throw Error(ErrorCode::ParseError, e.what());
    }
    throw;
  }

  // the level is the lowest cluster of H0 unless groundEnergy points
  // elsewhere; a declared degeneracy must match the detected cluster size
  Eigen::SelfAdjointEigenSolver<Matrix> es(h0.mat());
  const auto& w = es.eigenvalues();
  const double diam = w(w.size() - 1) - w(0);
  const double ground_energy = j.contains("groundEnergy")
                                   ? j.at("groundEnergy").get<double>()
                                   : w(0);
  const double tol =
      kDefaultClusterTol * std::max({diam, std::abs(ground_energy), 1.0});
  int detected = 0;
  for (int i = 0; i < w.size(); ++i) {
    if (std::abs(w(i) - ground_energy) <= tol) ++detected;
  }
  const int degeneracy =
      j.contains("degeneracy") ? j.at("degeneracy").get<int>() : detected;
  if (degeneracy != detected) {
    throw Error(ErrorCode::DegeneracyMismatch,
                "declared degeneracy " + std::to_string(degeneracy) +
                    " but detected cluster size " + std::to_string(detected));
  }
  const double gap_floor =
      j.contains("gapFloor") ? j.at("gapFloor").get<double>() : kDefaultGapFloor;
  return PerturbationProblem::make(std::move(h0), std::move(v), ground_energy,
                                   degeneracy, gap_floor);
}

json problem_to_json(const PerturbationProblem& p) {
  return {{"h0", matrix_to_json(p.h0().mat())},
          {"v", matrix_to_json(p.v().mat())},
          {"groundEnergy", p.ground_energy()},
          {"degeneracy", p.degeneracy()}};
}

PerturbationProblem load_problem(const std::string& path) {
  return problem_from_json(load_json(path));
}

void save_problem(const PerturbationProblem& p, const std::string& path) {
  save_json(problem_to_json(p), path);
}

SwitchingProfile profile_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw Error(ErrorCode::ParseError, "profile needs 'kind'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "exponential") {
    return SwitchingProfile::exponential();
  }
  if (kind == "bump") {
    if (!j.contains("rf")) {
      throw Error(ErrorCode::ParseError, "bump profile needs 'rf'");
    }
    return SwitchingProfile::smooth_bump(j.at("rf").get<double>());
  }
  if (kind == "table") {
    if (!j.contains("tau") || !j.contains("f")) {
      throw Error(ErrorCode::ParseError, "table profile needs 'tau' and 'f'");
    }
    return SwitchingProfile::tabulated(j.at("tau").get<std::vector<double>>(),
                                       j.at("f").get<std::vector<double>>());
  }
  throw Error(ErrorCode::ParseError, "unknown profile kind '" + kind + "'");
}

json profile_to_json(const SwitchingProfile& p) {
  switch (p.kind()) {
    case SwitchingProfile::Kind::Exponential:
      return {{"kind", "exponential"}};
    case SwitchingProfile::Kind::SmoothBump:
      return {{"kind", "bump"}, {"rf", p.support_left()}};
    case SwitchingProfile::Kind::Tabulated:
      break;
  }
  throw Error(ErrorCode::InvalidArgument,
              "tabulated profiles round-trip through their own tables");
}

json propagator_to_json(const PropagatorResult& result) {
  json j = {{"kind", evolution_kind_name(result.kind)},
            {"tStart", result.t_start},
            {"tEnd", result.t_end},
            {"stepCount", result.step_count},
            {"unitarityDefect", result.unitarity_defect},
            {"preUnitarityDefect", result.pre_unitarity_defect},
            {"unitary", matrix_to_json(result.unitary)}};
  if (result.epsilon) j["epsilon"] = *result.epsilon;
  return j;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(e.what()) + " in " + path);
  }
  return j;
}

void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  }
  out << j.dump(2) << "\n";
}

}  // namespace adsw
