#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mspec/assembly.hpp"
#include "mspec/fatou.hpp"
#include "mspec/propagation.hpp"
#include "mspec/spectral.hpp"

namespace mspec::app {

using nlohmann::json;

struct ExpandSpec {
  Forcing f;
  double K = 200.0;
};

struct FatouSpec {
  fatou::ScalarMeasureModel mu;
  fatou::BoundedFunction f;
  std::vector<double> points;
  std::vector<double> radii;
  double delta = 0.1;
};

/// Parsed problem file. Matrices are row-major; complex entries are [re, im] pairs or plain reals;
/// polynomial coefficients are ascending in the global variable x.
struct ProblemConfig {
  int schema_version = 1;
  std::string name;
  bool has_system = false;
  SystemSpec system;
  BoundaryConditions boundary;
  ProblemOptions options;
  std::vector<Complex> lambda_grid;
  EpsilonSchedule eps;
  std::optional<std::pair<double, double>> range;
  std::optional<ExpandSpec> expand;
  std::optional<FatouSpec> fatou;
  json raw;
};

/// Command line overrides applied on top of the file.
struct Overrides {
  std::string tol;          ///< "key=value,key=value"
  std::string lambda_grid;  ///< "lo:hi:step;im1,im2" or "re+imi,re+imi" list
  std::string eps;          ///< "1e-2,1e-3,1e-4"
  std::string range;        ///< "lo:hi"
};

/// Throws ConfigError naming the offending field path (e.g. "q.atoms[1].matrix").
ProblemConfig parse_config(const json& j);
ProblemConfig load_config(const std::string& path);
void apply_overrides(ProblemConfig& cfg, const Overrides& o);

/// Real number from a JSON number or one of the strings "pi", "-pi/2", "2pi", "inf", "-inf".
double parse_real(const json& v, const std::string& field);
Complex parse_complex(const json& v, const std::string& field);
CMatrix parse_matrix(const json& v, const std::string& field, Eigen::Index rows = -1, Eigen::Index cols = -1);

std::vector<Complex> parse_lambda_grid(const std::string& spec);
std::vector<double> parse_list(const std::string& spec, const std::string& field);
std::pair<double, double> parse_range(const std::string& spec);

/// Config field path of a validation issue at location x in measure `name` ("q" or "w").
std::string locate_issue(const ProblemConfig& cfg, const std::string& name, double x);

}  // namespace mspec::app
