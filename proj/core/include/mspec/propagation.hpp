#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "mspec/ode.hpp"
#include "mspec/quadrature.hpp"
#include "mspec/system.hpp"
#include "mspec/types.hpp"

namespace mspec {

/// Right-hand side f of the inhomogeneous equation. `value` must return the balanced value at atoms.
/// f vanishes outside [support_lower, support_upper].
struct Forcing {
  std::function<CVector(double)> value;
  std::vector<double> breakpoints;
  double support_lower = 0.0;
  double support_upper = 0.0;

  static Forcing constant(const CVector& v, double lower, double upper);
};

struct PropagationOptions {
  ode::Options ode;
  /// Transfers across atoms with cond(B_+) or cond(B_-) above this are declared singular.
  double condition_cap = 1e12;
  /// Use the matrix exponential on pieces with constant coefficients.
  bool exact_constant_pieces = true;
  QuadratureOptions quadrature;
};

/// Balanced BV matrix function on the closure [lower, upper] of one subinterval, extended by zero.
/// Columns are independent solutions (a single column for a vector solution).
class PiecewiseSolution {
 public:
  Complex lambda() const { return lambda_; }
  Eigen::Index subinterval() const { return j_; }
  double lower() const { return knots_.front(); }
  double upper() const { return knots_.back(); }
  double origin() const { return origin_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  const std::vector<double>& knots() const { return knots_; }

  CMatrix left_limit(double x) const;
  CMatrix right_limit(double x) const;
  /// Balanced value by default; outside the closure the value is zero, and at the closure ends
  /// the missing one-sided limit is zero.
  CMatrix value(double x, Side side = Side::balanced) const;

  /// Largest jump-condition residual ||B_+ u^+ - B_- u^- - dw f|| over interior atoms.
  double jump_residual() const { return jump_residual_; }

 private:
  friend class Propagator;

  struct Piece {
    enum class Kind { constant, exponential, nodes } kind = Kind::constant;
    double lo = 0.0;
    double hi = 0.0;
    double origin = 0.0;
    CMatrix origin_value;
    // exponential: y(x) = V exp(D (x - origin)) V^{-1} y(origin), or expm when not diagonalisable
    CMatrix generator;
    bool diagonal = false;
    CMatrix V, Vinv;
    CVector D;
    // nodes: ascending in t
    std::vector<double> t;
    std::vector<CMatrix> y;
    ode::MatrixRhs rhs;

    CMatrix evaluate(double x) const;
  };

  Complex lambda_;
  Eigen::Index j_ = 0;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  double origin_ = 0.0;
  std::vector<double> knots_;
  std::vector<CMatrix> left_;
  std::vector<CMatrix> right_;
  std::vector<Piece> pieces_;
  double jump_residual_ = 0.0;

  std::size_t knot_index(double x) const;
};

/// Fundamental matrices U_0..U_N at one lambda; U_j(xi_j) = I.
class FundamentalSet {
 public:
  FundamentalSet() = default;
  explicit FundamentalSet(std::vector<std::shared_ptr<const PiecewiseSolution>> blocks);

  Complex lambda() const { return blocks_.front()->lambda(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(blocks_.size()); }
  const PiecewiseSolution& block(Eigen::Index j) const { return *blocks_[static_cast<std::size_t>(j)]; }

  /// The n x n(N+1) row (U_0(x), ..., U_N(x)) with the requested one-sided or balanced values.
  CMatrix script_u(double x, Side side = Side::balanced) const;

 private:
  std::vector<std::shared_ptr<const PiecewiseSolution>> blocks_;
};

/// Solves the system on the subintervals between partition points.
/// Thread safe: fundamental matrices are cached per (subinterval, lambda) under a mutex.
class Propagator {
 public:
  Propagator(std::shared_ptr<const SystemSpec> sys, const SingularitySet& singularities,
             std::vector<double> anchors, PropagationOptions options = {});

  const SystemSpec& system() const { return *sys_; }
  const PropagationOptions& options() const { return options_; }
  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& anchors() const { return anchors_; }
  Eigen::Index subinterval_count() const { return static_cast<Eigen::Index>(anchors_.size()); }
  /// Atoms, segment edges and partition points inside (a, b).
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  /// Solution on the closure of subinterval j with u(x0) = u0 (one-sided data if x0 is an end).
  PiecewiseSolution solve(Eigen::Index j, Complex lambda, double x0, const CMatrix& u0,
                          const Forcing* forcing = nullptr) const;

  std::shared_ptr<const PiecewiseSolution> fundamental(Eigen::Index j, Complex lambda) const;
  FundamentalSet fundamental_set(Complex lambda) const;

  void clear_cache() const;

 private:
  std::shared_ptr<const SystemSpec> sys_;
  PropagationOptions options_;
  std::vector<double> edges_;
  std::vector<double> anchors_;
  std::vector<double> breakpoints_;
  CMatrix Jinv_;

  mutable std::mutex mutex_;
  mutable std::map<std::tuple<Eigen::Index, double, double>, std::shared_ptr<const PiecewiseSolution>> cache_;
};

/// Initial value problem on subinterval j (vector data).
PiecewiseSolution solve_ivp(const Propagator& p, Eigen::Index j, Complex lambda, double x0,
                            const CVector& u0, const Forcing* forcing = nullptr);

/// U_j(., lambda) normalised at the anchor of subinterval j.
std::shared_ptr<const PiecewiseSolution> fundamental_matrix(const Propagator& p, Eigen::Index j,
                                                            Complex lambda);

CMatrix script_u(const Propagator& p, Complex lambda, double x, Side side = Side::balanced);

/// (F f)(lambda) = integral of U(., conj(lambda))^* w f over the support of f.
CVector forward_transform_compact(const Propagator& p, const Forcing& f, Complex lambda);

/// Max over subintervals, grid points and one-sided limits at knots of
/// ||U(x, conj l)^* J U(x, l) - J|| and ||U(x, l) J^{-1} U(x, conj l)^* - J^{-1}||.
/// Restricted to subinterval j when j >= 0.
double wronskian_defect(const Propagator& p, Complex lambda, int grid_points = 50, Eigen::Index j = -1);

}  // namespace mspec
