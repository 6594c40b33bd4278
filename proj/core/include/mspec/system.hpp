#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mspec/measures.hpp"
#include "mspec/types.hpp"

namespace mspec {

enum class EndpointKind { regular, singular };

/// Endpoint data. At a singular endpoint the user supplies, for each lambda, a basis (columns)
/// of the coefficient vectors eta for which U(., lambda) eta is square integrable near the endpoint.
struct EndpointData {
  EndpointKind kind = EndpointKind::regular;
  std::function<CMatrix(Complex)> l2_span;
};

/// The problem J u' + (q - lambda w) u = w f on (a, b).
struct SystemSpec {
  Eigen::Index n = 0;
  CMatrix J;
  MatrixMeasure q;
  MatrixMeasure w;
  double a = 0.0;
  double b = 0.0;
  EndpointData left;
  EndpointData right;
  /// Optional anchor points, one per subinterval between partition points.
  std::optional<std::vector<double>> anchors;
};

/// Boundary data: G_a is (g^* J)^+(a) and G_b is (g^* J)^-(b), one row per condition.
/// At a singular endpoint `limit_a` / `limit_b` return lim g^* J U(x, lambda) instead of G U.
struct BoundaryConditions {
  CMatrix G_a;
  CMatrix G_b;
  std::function<CMatrix(Complex)> limit_a;
  std::function<CMatrix(Complex)> limit_b;

  Eigen::Index count() const { return G_a.rows(); }
};

/// Structural checks: J skew-hermitian and invertible, q hermitian, w nonnegative,
/// matching dimensions and domains, finite density segments.
ValidationReport validate_system(const SystemSpec& sys, double tol = 1e-10);

/// Residual of G_b J^{-1} G_b^* - G_a J^{-1} G_a^*; zero for self-adjoint conditions.
double self_adjointness_residual(const SystemSpec& sys, const BoundaryConditions& bc);
ValidationReport validate_boundary(const SystemSpec& sys, const BoundaryConditions& bc, double tol = 1e-10);

/// The set of lambda where B_+(x, lambda) is singular.
struct SingularLambdas {
  enum class Kind { empty, finite, all } kind = Kind::empty;
  std::vector<Complex> roots;
  /// Coefficients of det B_+(x, lambda), ascending.
  std::vector<Complex> det_coefficients;

  bool meets_real(double tol = 1e-8) const;
};

struct AtomRecord {
  double x = 0.0;
  SingularLambdas lambdas;
  bool partition = false;
};

struct SingularitySet {
  std::vector<AtomRecord> atoms;
  std::vector<double> partition;
  std::vector<Complex> tilde_lambda;
  /// With finitely many atoms the exceptional set is finite, hence closed and isolated.
  bool isolated_closed = true;

  Eigen::Index N() const { return static_cast<Eigen::Index>(partition.size()); }
};

/// Atom locations of q and w combined.
std::vector<double> atom_locations(const SystemSpec& sys);

SingularLambdas singular_lambdas_at(const SystemSpec& sys, double x, double tol = 1e-12);
SingularitySet partition_points(const SystemSpec& sys, double tol = 1e-12);

/// (B_-(x, lambda), B_+(x, lambda)).
std::pair<CMatrix, CMatrix> jump_matrices(const SystemSpec& sys, double x, Complex lambda);

/// One point per subinterval (x_j, x_{j+1}): the configured anchors if present, else the midpoint
/// (nudged off atoms), or unit distance from the finite end of an unbounded subinterval.
std::vector<double> choose_anchors(const SystemSpec& sys, const SingularitySet& s);

/// Subinterval ends x_0 = a < x_1 < ... < x_N < x_{N+1} = b.
std::vector<double> subinterval_edges(const SystemSpec& sys, const SingularitySet& s);

}  // namespace mspec
