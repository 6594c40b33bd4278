#include "mspec/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "mspec/errors.hpp"
#include "mspec/linalg.hpp"

namespace mspec {

namespace {

constexpr std::size_t kNpos = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kCacheLimit = 20000;

double nudge_inside(double t, double lo, double hi) {
  const double eps = 8.0 * std::numeric_limits<double>::epsilon() *
                     std::max({1.0, std::abs(lo), std::abs(hi)});
  if (std::isfinite(lo)) t = std::max(t, lo + eps);
  if (std::isfinite(hi)) t = std::min(t, hi - eps);
  return t;
}

}  // namespace

Forcing Forcing::constant(const CVector& v, double lower, double upper) {
  Forcing f;
  f.value = [v, lower, upper](double x) -> CVector {
    if (x < lower || x > upper) return CVector::Zero(v.size());
    return v;
  };
  f.support_lower = lower;
  f.support_upper = upper;
  return f;
}

CMatrix PiecewiseSolution::Piece::evaluate(double x) const {
  switch (kind) {
    case Kind::constant:
      return origin_value;
    case Kind::exponential: {
      const double dt = x - origin;
      if (diagonal) {
        CVector e = (D * dt).array().exp().matrix();
        return V * e.asDiagonal() * (Vinv * origin_value);
      }
      const CMatrix g = generator * Complex(dt);
      return g.exp() * origin_value;
    }
    case Kind::nodes: {
      auto it = std::lower_bound(t.begin(), t.end(), x);
      std::size_t i = static_cast<std::size_t>(std::distance(t.begin(), it));
      if (i == t.size()) i = t.size() - 1;
      if (i > 0 && std::abs(t[i - 1] - x) < std::abs(t[i] - x)) --i;
      if (t[i] == x) return y[i];
      return ode::step(rhs, t[i], y[i], x - t[i]);
    }
  }
  return origin_value;
}

std::size_t PiecewiseSolution::knot_index(double x) const {
  auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
  if (it != knots_.end() && *it == x) return static_cast<std::size_t>(std::distance(knots_.begin(), it));
  return kNpos;
}

CMatrix PiecewiseSolution::left_limit(double x) const { return value(x, Side::left); }
CMatrix PiecewiseSolution::right_limit(double x) const { return value(x, Side::right); }

CMatrix PiecewiseSolution::value(double x, Side side) const {
  if (x < lower() || x > upper()) return CMatrix::Zero(rows_, cols_);
  const std::size_t k = knot_index(x);
  if (k != kNpos) {
    const CMatrix zero = CMatrix::Zero(rows_, cols_);
    const CMatrix& l = k == 0 ? zero : left_[k];
    const CMatrix& r = k + 1 == knots_.size() ? zero : right_[k];
    switch (side) {
      case Side::left: return l;
      case Side::right: return r;
      case Side::balanced: return 0.5 * (l + r);
    }
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const auto p = static_cast<std::size_t>(std::distance(knots_.begin(), it) - 1);
  return pieces_[p].evaluate(x);
}

FundamentalSet::FundamentalSet(std::vector<std::shared_ptr<const PiecewiseSolution>> blocks)
    : blocks_(std::move(blocks)) {}

CMatrix FundamentalSet::script_u(double x, Side side) const {
  const Eigen::Index n = blocks_.front()->rows();
  CMatrix out(n, n * size());
  for (Eigen::Index j = 0; j < size(); ++j) out.middleCols(j * n, n) = block(j).value(x, side);
  return out;
}

Propagator::Propagator(std::shared_ptr<const SystemSpec> sys, const SingularitySet& singularities,
                       std::vector<double> anchors, PropagationOptions options)
    : sys_(std::move(sys)), options_(options), anchors_(std::move(anchors)) {
  edges_ = subinterval_edges(*sys_, singularities);
  if (anchors_.size() + 1 != edges_.size()) {
    throw StructuralError("anchor count does not match the number of subintervals");
  }
  std::vector<double> bp = sys_->q.breakpoints();
  const std::vector<double> bw = sys_->w.breakpoints();
  bp.insert(bp.end(), bw.begin(), bw.end());
  bp.insert(bp.end(), singularities.partition.begin(), singularities.partition.end());
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  for (double x : bp) {
    if (x > sys_->a && x < sys_->b) breakpoints_.push_back(x);
  }
  Jinv_ = sys_->J.inverse();
}

PiecewiseSolution Propagator::solve(Eigen::Index j, Complex lambda, double x0, const CMatrix& u0,
                                    const Forcing* forcing) const {
  const SystemSpec& sys = *sys_;
  if (j < 0 || j >= subinterval_count()) throw StructuralError("subinterval index out of range");
  const double lo = edges_[static_cast<std::size_t>(j)];
  const double hi = edges_[static_cast<std::size_t>(j) + 1];
  if (!(x0 >= lo && x0 <= hi) || !std::isfinite(x0)) {
    throw StructuralError("initial point lies outside the closed subinterval");
  }
  if (x0 > lo && x0 < hi && (sys.q.has_atom(x0) || sys.w.has_atom(x0))) {
    throw StructuralError("initial point must not be an interior atom");
  }
  if (u0.rows() != sys.n) throw StructuralError("initial data has wrong dimension");
  if (forcing && u0.cols() != 1) throw StructuralError("forcing requires a single solution column");

  PiecewiseSolution sol;
  sol.lambda_ = lambda;
  sol.j_ = j;
  sol.rows_ = sys.n;
  sol.cols_ = u0.cols();
  sol.origin_ = x0;

  std::vector<double> knots{lo, hi, x0};
  for (double x : breakpoints_) {
    if (x > lo && x < hi) knots.push_back(x);
  }
  if (forcing) {
    for (double x : forcing->breakpoints) {
      if (x > lo && x < hi) knots.push_back(x);
    }
    for (double x : {forcing->support_lower, forcing->support_upper}) {
      if (x > lo && x < hi) knots.push_back(x);
    }
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  sol.knots_ = knots;
  const std::size_t K = knots.size();
  sol.left_.assign(K, CMatrix());
  sol.right_.assign(K, CMatrix());
  sol.pieces_.resize(K - 1);

  // Owned copies: node pieces keep the right-hand side alive for dense evaluation.
  std::shared_ptr<const Forcing> owned = forcing ? std::make_shared<const Forcing>(*forcing) : nullptr;
  std::shared_ptr<const SystemSpec> sys_ptr = sys_;
  auto forcing_at = [owned, n = sys.n](double x) -> CMatrix {
    if (!owned || x < owned->support_lower || x > owned->support_upper) return CVector::Zero(n);
    return owned->value(x);
  };

  auto build_piece = [&](std::size_t i, double origin, const CMatrix& start) {
    PiecewiseSolution::Piece piece;
    piece.lo = knots[i];
    piece.hi = knots[i + 1];
    piece.origin = origin;
    piece.origin_value = start;
    const double plo = piece.lo;
    const double phi = piece.hi;
    const bool forced = forcing && forcing->support_upper > plo && forcing->support_lower < phi;
    const bool dens_free = sys.q.density_free_on(plo, phi) && sys.w.density_free_on(plo, phi);
    const double probe = std::isfinite(plo) && std::isfinite(phi) ? 0.5 * (plo + phi)
                         : std::isfinite(plo)                     ? plo + 1.0
                                                                  : phi - 1.0;
    if (dens_free || !std::isfinite(plo) || !std::isfinite(phi)) {
      if (!dens_free) throw ConfigError("", "density segment extends to an infinite endpoint");
      piece.kind = PiecewiseSolution::Piece::Kind::constant;
      return piece;
    }
    if (options_.exact_constant_pieces && !forced && sys.q.constant_on(plo, phi) &&
        sys.w.constant_on(plo, phi)) {
      piece.kind = PiecewiseSolution::Piece::Kind::exponential;
      piece.generator = Jinv_ * (lambda * sys.w.density_at(probe) - sys.q.density_at(probe));
      Eigen::ComplexEigenSolver<CMatrix> es(piece.generator);
      if (es.info() == Eigen::Success) {
        const CMatrix V = es.eigenvectors();
        if (linalg::condition_number(V) < 1e3) {
          piece.diagonal = true;
          piece.V = V;
          piece.Vinv = V.inverse();
          piece.D = es.eigenvalues();
        }
      }
      return piece;
    }
    piece.kind = PiecewiseSolution::Piece::Kind::nodes;
    const CMatrix Jinv = Jinv_;
    piece.rhs = [sys_ptr, Jinv, lambda, probe, plo, phi, forced, forcing_at](
                    double t, const CMatrix& y) -> CMatrix {
      const double tt = nudge_inside(t, plo, phi);
      const CMatrix W = sys_ptr->w.density_at(tt, probe);
      CMatrix out = Jinv * ((lambda * W - sys_ptr->q.density_at(tt, probe)) * y);
      if (forced) out += Jinv * (W * forcing_at(tt));
      return out;
    };
    const double target = origin == plo ? phi : plo;
    std::vector<ode::Node> nodes = ode::integrate(piece.rhs, origin, target, start, options_.ode);
    if (origin != plo) std::reverse(nodes.begin(), nodes.end());
    piece.t.reserve(nodes.size());
    piece.y.reserve(nodes.size());
    for (auto& nd : nodes) {
      piece.t.push_back(nd.t);
      piece.y.push_back(std::move(nd.y));
    }
    return piece;
  };

  auto end_value = [](const PiecewiseSolution::Piece& piece, double x) -> CMatrix {
    if (piece.kind == PiecewiseSolution::Piece::Kind::nodes) {
      return x == piece.t.front() ? piece.y.front() : piece.y.back();
    }
    return piece.evaluate(x);
  };

  auto check_cond = [&](const CMatrix& B, double x, const char* which) {
    const double c = linalg::condition_number(B);
    if (!(c <= options_.condition_cap)) {
      std::ostringstream msg;
      msg << "transfer across atom at x=" << x << " is singular for lambda=" << lambda << " (cond "
          << which << " = " << c << ")";
      throw SingularTransferError(msg.str(), x, lambda);
    }
  };

  const auto i0 = static_cast<std::size_t>(
      std::distance(knots.begin(), std::find(knots.begin(), knots.end(), x0)));
  sol.left_[i0] = u0;
  sol.right_[i0] = u0;

  for (std::size_t i = i0; i + 1 < K; ++i) {
    sol.pieces_[i] = build_piece(i, knots[i], sol.right_[i]);
    const double x = knots[i + 1];
    sol.left_[i + 1] = end_value(sol.pieces_[i], x);
    if (i + 2 < K && (sys.q.has_atom(x) || sys.w.has_atom(x))) {
      auto [Bm, Bp] = jump_matrices(sys, x, lambda);
      check_cond(Bp, x, "B+");
      CMatrix rhs = Bm * sol.left_[i + 1];
      if (forcing) rhs += sys.w.atom_at(x) * forcing_at(x);
      sol.right_[i + 1] = Bp.partialPivLu().solve(rhs);
    } else {
      sol.right_[i + 1] = sol.left_[i + 1];
    }
  }
  for (std::size_t i = i0; i > 0; --i) {
    sol.pieces_[i - 1] = build_piece(i - 1, knots[i], sol.left_[i]);
    const double x = knots[i - 1];
    sol.right_[i - 1] = end_value(sol.pieces_[i - 1], x);
    if (i - 1 > 0 && (sys.q.has_atom(x) || sys.w.has_atom(x))) {
      auto [Bm, Bp] = jump_matrices(sys, x, lambda);
      check_cond(Bm, x, "B-");
      CMatrix rhs = Bp * sol.right_[i - 1];
      if (forcing) rhs -= sys.w.atom_at(x) * forcing_at(x);
      sol.left_[i - 1] = Bm.partialPivLu().solve(rhs);
    } else {
      sol.left_[i - 1] = sol.right_[i - 1];
    }
  }

  for (std::size_t i = 1; i + 1 < K; ++i) {
    const double x = knots[i];
    if (!(sys.q.has_atom(x) || sys.w.has_atom(x))) continue;
    auto [Bm, Bp] = jump_matrices(sys, x, lambda);
    CMatrix r = Bp * sol.right_[i] - Bm * sol.left_[i];
    if (forcing) r -= sys.w.atom_at(x) * forcing_at(x);
    sol.jump_residual_ = std::max(sol.jump_residual_, r.norm());
  }
  return sol;
}

std::shared_ptr<const PiecewiseSolution> Propagator::fundamental(Eigen::Index j, Complex lambda) const {
  const auto key = std::make_tuple(j, lambda.real(), lambda.imag());
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto sol = std::make_shared<const PiecewiseSolution>(
      solve(j, lambda, anchors_[static_cast<std::size_t>(j)], CMatrix::Identity(sys_->n, sys_->n)));
  std::lock_guard<std::mutex> lock(mutex_);
  if (cache_.size() >= kCacheLimit) cache_.clear();
  cache_.emplace(key, sol);
  return sol;
}

FundamentalSet Propagator::fundamental_set(Complex lambda) const {
  std::vector<std::shared_ptr<const PiecewiseSolution>> blocks;
  for (Eigen::Index j = 0; j < subinterval_count(); ++j) blocks.push_back(fundamental(j, lambda));
  return FundamentalSet(std::move(blocks));
}

void Propagator::clear_cache() const {
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.clear();
}

PiecewiseSolution solve_ivp(const Propagator& p, Eigen::Index j, Complex lambda, double x0,
                            const CVector& u0, const Forcing* forcing) {
  return p.solve(j, lambda, x0, u0, forcing);
}

std::shared_ptr<const PiecewiseSolution> fundamental_matrix(const Propagator& p, Eigen::Index j,
                                                            Complex lambda) {
  return p.fundamental(j, lambda);
}

CMatrix script_u(const Propagator& p, Complex lambda, double x, Side side) {
  return p.fundamental_set(lambda).script_u(x, side);
}

CVector forward_transform_compact(const Propagator& p, const Forcing& f, Complex lambda) {
  const SystemSpec& sys = p.system();
  const Eigen::Index n = sys.n;
  const Eigen::Index dim = n * p.subinterval_count();
  const double lo = std::max(sys.a, f.support_lower);
  const double hi = std::min(sys.b, f.support_upper);
  if (lo > hi) return CVector::Zero(dim);
  const FundamentalSet U = p.fundamental_set(std::conj(lambda));
  auto kernel = [&U, &f](double x, const CMatrix& W) -> CMatrix {
    return U.script_u(x, Side::balanced).adjoint() * (W * f.value(x));
  };
  if (lo == hi) return kernel(lo, sys.w.atom_at(lo));
  std::vector<double> breaks = p.breakpoints();
  breaks.insert(breaks.end(), f.breakpoints.begin(), f.breakpoints.end());
  IntervalSpec iv{lo, hi, lo > sys.a, hi < sys.b};
  return integrate(sys.w, iv, kernel, breaks, p.options().quadrature);
}

double wronskian_defect(const Propagator& p, Complex lambda, int grid_points, Eigen::Index only) {
  const SystemSpec& sys = p.system();
  const CMatrix& J = sys.J;
  const CMatrix Jinv = J.inverse();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < p.subinterval_count(); ++j) {
    if (only >= 0 && j != only) continue;
    auto U = p.fundamental(j, lambda);
    auto Ub = p.fundamental(j, std::conj(lambda));
    auto check = [&](double x, Side side) {
      const CMatrix u = U->value(x, side);
      const CMatrix ub = Ub->value(x, side);
      worst = std::max(worst, (ub.adjoint() * J * u - J).norm());
      worst = std::max(worst, (u * Jinv * ub.adjoint() - Jinv).norm());
    };
    std::vector<double> finite;
    for (double k : U->knots()) {
      if (std::isfinite(k)) finite.push_back(k);
    }
    double lo = U->lower();
    double hi = U->upper();
    if (!std::isfinite(lo)) lo = finite.front() - 1.0;
    if (!std::isfinite(hi)) hi = finite.back() + 1.0;
    for (int g = 0; g < grid_points; ++g) {
      const double x = grid_points == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * g / (grid_points - 1);
      if (x != U->lower()) check(x, Side::left);
      if (x != U->upper()) check(x, Side::right);
    }
    for (double k : finite) {
      if (k != U->lower()) check(k, Side::left);
      if (k != U->upper()) check(k, Side::right);
    }
  }
  return worst;
}

}  // namespace mspec
