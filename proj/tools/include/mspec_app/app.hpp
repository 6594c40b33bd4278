#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mspec_app/config.hpp"
#include "mspec/transform.hpp"

namespace mspec::app {

struct RunOptions {
  std::string config;
  std::string out = ".";
  Overrides overrides;
};

/// Runs one command and writes its report into `out`. Returns the process exit code:
/// 0 ok, 1 validation, 2 numerical, 3 theory, 4 config.
int run(const std::string& command, const RunOptions& options, std::ostream& log);

const std::vector<std::string>& commands();

/// Number formatting shared by all CSV writers (round-trip precision).
std::string fmt(double v);

json validate_report(const ProblemConfig& cfg);
/// Throws StructuralError (exit 1) when the problem does not validate.
SpectralProblem make_problem(const ProblemConfig& cfg);

json analyze_report(const SpectralProblem& p);
std::string mfun_csv(const SpectralProblem& p, const std::vector<Complex>& grid);
std::string eigen_csv(const std::vector<EigenPair>& pairs);

json tau_report(const SpectralMeasureModel& model);
/// Inverse of tau_report for the atom part (A, B, atoms, notes).
SpectralMeasureModel tau_from_json(const json& j);

struct ExpandReport {
  std::string csv;
  json summary;
};
ExpandReport expand_report(const SpectralProblem& p, const ExpandSpec& spec, const EpsilonSchedule& eps);

/// Full invariant suite. "ok" is false when any non-informational check fails.
json verify_report(const ProblemConfig& cfg);

struct FatouReport {
  std::string csv;
  json summary;
};
FatouReport fatou_report(const FatouSpec& spec);

json matrix_json(const CMatrix& m);
CMatrix matrix_from_json(const json& j);

}  // namespace mspec::app
