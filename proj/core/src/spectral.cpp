#include "mspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "mspec/errors.hpp"
#include "mspec/linalg.hpp"
#include "mspec/weyl.hpp"

namespace mspec {

// ---------------------------------------------------------------- resolvent

struct Resolvent::State {
  const SpectralProblem* problem = nullptr;
  Complex lambda;
  Forcing f;
  FundamentalSet U;     // at lambda
  FundamentalSet Ubar;  // at conj(lambda)
  CVector F;            // (F f)(lambda)
  CVector MF;
  double lo = 0.0;  // density integration range for the cumulative table
  double hi = 0.0;
  CumulativeIntegral density;
  std::vector<double> atom_x;
  std::vector<CVector> atom_term;  // U#(x, conj l)^* dw(x) f(x)
  CVector total;

  // Integral over (a, x) of U(., conj l)^* w f, atoms strictly below x.
  CVector below(double x) const {
    CVector acc = CVector::Zero(F.size());
    if (lo < hi) acc += density.up_to(std::clamp(x, lo, hi)).col(0);
    for (std::size_t i = 0; i < atom_x.size() && atom_x[i] < x; ++i) acc += atom_term[i];
    return acc;
  }
  CVector atom_term_at(double x) const {
    auto it = std::find(atom_x.begin(), atom_x.end(), x);
    if (it == atom_x.end()) return CVector::Zero(F.size());
    return atom_term[static_cast<std::size_t>(std::distance(atom_x.begin(), it))];
  }
};

Resolvent::Resolvent(const SpectralProblem& p, Complex lambda, Forcing f) {
  auto st = std::make_shared<State>();
  st->problem = &p;
  st->lambda = lambda;
  st->f = std::move(f);
  const SystemSpec& sys = p.system();
  const Propagator& prop = p.propagator();
  st->U = prop.fundamental_set(lambda);
  st->Ubar = prop.fundamental_set(std::conj(lambda));
  st->F = forward_transform_compact(prop, st->f, lambda);
  st->MF = m_function(p, lambda).M * st->F;

  const Eigen::Index dim = p.block_dim();
  st->lo = std::max(sys.a, st->f.support_lower);
  st->hi = std::min(sys.b, st->f.support_upper);
  if (st->lo < st->hi) {
    std::vector<double> breaks{st->lo, st->hi};
    for (double x : prop.breakpoints()) {
      if (x > st->lo && x < st->hi) breaks.push_back(x);
    }
    for (double x : st->f.breakpoints) {
      if (x > st->lo && x < st->hi) breaks.push_back(x);
    }
    const State* raw = st.get();
    MatrixIntegrand g = [raw, &sys](double x) -> CMatrix {
      return raw->Ubar.script_u(x, Side::balanced).adjoint() * (sys.w.density_at(x) * raw->f.value(x));
    };
    st->density = CumulativeIntegral(g, breaks, dim, 1, prop.options().quadrature);
  }
  for (const auto& atom : sys.w.atoms()) {
    if (atom.x < st->f.support_lower || atom.x > st->f.support_upper) continue;
    st->atom_x.push_back(atom.x);
    st->atom_term.push_back(st->Ubar.script_u(atom.x, Side::balanced).adjoint() *
                            (atom.weight * st->f.value(atom.x)));
  }
  st->total = st->below(std::numeric_limits<double>::infinity());
  state_ = std::move(st);
}

Complex Resolvent::lambda() const { return state_->lambda; }
const CVector& Resolvent::transform() const { return state_->F; }
const CVector& Resolvent::coefficient() const { return state_->MF; }

CVector Resolvent::operator()(double x, Side side) const {
  const State& s = *state_;
  const CMatrix& Jinv = s.problem->script_J_inv();
  const CVector below_open = s.below(x);  // (a, x)
  const CVector at = s.atom_term_at(x);
  const CVector above_open = s.total - below_open - at;  // (x, b)
  switch (side) {
    case Side::left: {
      const CVector c = s.MF + 0.5 * Jinv * (below_open - (above_open + at));
      return s.U.script_u(x, Side::left) * c;
    }
    case Side::right: {
      const CVector c = s.MF + 0.5 * Jinv * ((below_open + at) - above_open);
      return s.U.script_u(x, Side::right) * c;
    }
    case Side::balanced: {
      const CVector c = s.MF + 0.5 * Jinv * (below_open - above_open);
      CVector out = s.U.script_u(x, Side::balanced) * c;
      if (at.size() && at.norm() > 0.0) {
        const CMatrix jump = s.U.script_u(x, Side::right) - s.U.script_u(x, Side::left);
        out += 0.25 * jump * (Jinv * at);
      }
      return out;
    }
  }
  return {};
}

Forcing Resolvent::as_forcing() const {
  Forcing out;
  const Resolvent self = *this;
  out.value = [self](double x) -> CVector { return self(x, Side::balanced); };
  const State& s = *state_;
  const SystemSpec& sys = s.problem->system();
  out.breakpoints = s.problem->propagator().breakpoints();
  out.breakpoints.insert(out.breakpoints.end(), s.f.breakpoints.begin(), s.f.breakpoints.end());
  for (double x : {s.f.support_lower, s.f.support_upper}) {
    if (x > sys.a && x < sys.b) out.breakpoints.push_back(x);
  }
  std::sort(out.breakpoints.begin(), out.breakpoints.end());
  out.breakpoints.erase(std::unique(out.breakpoints.begin(), out.breakpoints.end()), out.breakpoints.end());
  out.support_lower = sys.a;
  out.support_upper = sys.b;
  return out;
}

CVector resolvent_apply(const SpectralProblem& p, Complex lambda, const Forcing& f, double x, Side side) {
  return Resolvent(p, lambda, f)(x, side);
}

double equation_defect(const SpectralProblem& p, Complex lambda, const std::function<CVector(double, Side)>& u,
                       const Forcing& f, int grid_points, double window) {
  const SystemSpec& sys = p.system();
  const double lo = std::isfinite(sys.a) ? sys.a : -window;
  const double hi = std::isfinite(sys.b) ? sys.b : window;
  std::vector<double> breaks = p.propagator().breakpoints();
  breaks.insert(breaks.end(), f.breakpoints.begin(), f.breakpoints.end());
  for (double x : {f.support_lower, f.support_upper}) {
    if (std::isfinite(x)) breaks.push_back(x);
  }
  auto off_atom = [&](double x) {
    const double h = (hi - lo) * 1e-7;
    while (sys.q.has_atom(x) || sys.w.has_atom(x)) x += h;
    return x;
  };
  std::vector<double> xs;
  for (int k = 0; k <= grid_points; ++k) {
    const double t = (k + 0.5) / (grid_points + 1.0);
    xs.push_back(off_atom(lo + (hi - lo) * t));
  }
  const QuadratureOptions& q = p.propagator().options().quadrature;
  auto measure_part = [&](const MatrixMeasure& m, const IntervalSpec& iv, auto&& vec) -> CVector {
    const CMatrix r = integrate(
        m, iv, [&vec](double x, const CMatrix& W) -> CMatrix { return W * vec(x); }, breaks, q);
    return r.col(0);
  };
  auto ub = [&u](double x) -> CVector { return u(x, Side::balanced); };
  auto fv = [&f](double x) -> CVector {
    if (x < f.support_lower || x > f.support_upper) return CVector::Zero(0);
    return f.value(x);
  };
  auto fz = [&fv, &sys](double x) -> CVector {
    CVector v = fv(x);
    return v.size() ? v : CVector(CVector::Zero(sys.n));
  };
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const IntervalSpec iv = IntervalSpec::open(xs[k], xs[k + 1]);
    CVector r = sys.J * (u(xs[k + 1], Side::balanced) - u(xs[k], Side::balanced));
    r += measure_part(sys.q, iv, ub);
    r -= lambda * measure_part(sys.w, iv, ub);
    r -= measure_part(sys.w, iv, fz);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

// ---------------------------------------------------------------- tau extraction

namespace {

struct Richardson {
  CMatrix value;
  double spread = 0.0;
  bool converged = false;
};

// T(eps) = T0 + c eps + O(eps^2); combine the two smallest eps, compare with the previous pair.
Richardson richardson(const std::vector<double>& eps, const std::vector<CMatrix>& T) {
  Richardson r;
  const std::size_t m = eps.size();
  if (m == 1) {
    r.value = T[0];
    r.spread = std::numeric_limits<double>::infinity();
    return r;
  }
  auto pair = [&](std::size_t i, std::size_t j) -> CMatrix {
    return (eps[i] * T[j] - eps[j] * T[i]) / (eps[i] - eps[j]);
  };
  r.value = pair(m - 2, m - 1);
  if (m >= 3) {
    r.spread = (r.value - pair(m - 3, m - 2)).norm();
    const double d1 = (T[m - 2] - T[m - 3]).norm();
    const double d2 = (T[m - 1] - T[m - 2]).norm();
    r.converged = d2 <= d1 + 1e-8 * std::max(1.0, T[m - 1].norm());
  } else {
    r.spread = (T[1] - T[0]).norm();
    r.converged = true;
  }
  return r;
}

std::vector<double> sorted_eps(const EpsilonSchedule& sched) {
  std::vector<double> eps = sched.eps;
  if (eps.empty()) throw ConfigError("eps_schedule", "epsilon schedule is empty");
  for (double e : eps) {
    if (!(e > 0.0)) throw ConfigError("eps_schedule", "epsilon values must be positive");
  }
  std::sort(eps.begin(), eps.end(), std::greater<>());
  return eps;
}

}  // namespace

AtomWeightEstimate atom_weight(const SpectralProblem& p, double s, const EpsilonSchedule& sched) {
  const std::vector<double> eps = sorted_eps(sched);
  std::vector<CMatrix> T;
  for (double e : eps) T.push_back(Complex(0.0, -e) * m_function(p, Complex(s, e)).M);
  const Richardson r = richardson(eps, T);
  AtomWeightEstimate out;
  out.s = s;
  out.raw = r.value;
  out.spread = r.spread;
  out.converged = r.converged;
  // Negativity within the extrapolation error bar is bias, not a theory violation.
  out.weight = linalg::psd_projection(r.value, std::max(1e-8, r.spread));
  return out;
}

StieltjesEstimate stieltjes_inversion(const SpectralProblem& p, double c, double d,
                                      const EpsilonSchedule& sched, std::vector<double> peaks,
                                      const QuadratureOptions& quad) {
  if (!(c < d)) throw ConfigError("range", "Stieltjes inversion needs c < d");
  const std::vector<double> eps = sorted_eps(sched);
  if (peaks.empty() && p.regular()) {
    for (const auto& e : eigen_scan(p, c, d)) peaks.push_back(e.lambda);
  }
  std::vector<double> pts{c};
  for (double x : peaks) {
    if (x > c && x < d) pts.push_back(x);
  }
  pts.push_back(d);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  StieltjesEstimate out;
  out.c = c;
  out.d = d;
  for (double e : eps) {
    MatrixIntegrand g = [&p, e](double s) -> CMatrix {
      return linalg::imaginary_part(m_function(p, Complex(s, e)).M) / kPi;
    };
    QuadratureResult r = integrate_adaptive(g, pts, quad);
    if (!r.converged) throw AccuracyError("Stieltjes quadrature did not converge", r.error);
    out.per_eps.push_back(r.value);
  }
  const Richardson r = richardson(eps, out.per_eps);
  out.value = r.value;
  out.spread = r.spread;
  out.converged = r.converged;
  return out;
}

// ---------------------------------------------------------------- eigenvalue scan

namespace {

struct Characteristic {
  const SpectralProblem& p;
  bool square = false;

  CMatrix matrix(double l) const {
    const BlockAssembly a = assemble_F_H(p, l, false);
    const CMatrix& V0 = p.null_data().basis;
    const Eigen::Index rows = a.B.rows() + a.A_minus_block.rows() + V0.cols();
    CMatrix D(rows, p.block_dim());
    D << a.B, a.A_plus_block + a.A_minus_block, V0.adjoint();
    return D;
  }
  Complex det(double l) const { return matrix(l).determinant(); }
  double sigma_ratio(double l) const {
    const RVector s = linalg::singular_values(assemble_F_H(p, l, false).scaled_F());
    return s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
  }
};

EigenPair finish_root(const SpectralProblem& p, double l, const EigenScanOptions& o) {
  const BlockAssembly a = assemble_F_H(p, l, false);
  Eigen::BDCSVD<CMatrix> svd(a.scaled_F(), Eigen::ComputeFullV);
  const RVector s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > o.null_tol * s(0)) ++r;
  }
  const Eigen::Index dim = p.block_dim();
  EigenPair e;
  e.lambda = l;
  e.residual = s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
  CMatrix K = svd.matrixV().rightCols(dim - r);
  if (K.cols() == 0) {
    // Accepted by the determinant but above the kernel threshold: keep the weakest direction.
    K = svd.matrixV().rightCols(1);
  }
  const CMatrix G = gram_matrix(p, l);
  const CMatrix S = K.adjoint() * G * K;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (S + S.adjoint()));
  const RVector ev = es.eigenvalues();
  const double emax = ev.maxCoeff();
  std::vector<CVector> cols;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i) {
    if (ev(i) > 1e-12 * std::max(emax, 1e-300)) cols.push_back(K * es.eigenvectors().col(i) / std::sqrt(ev(i)));
  }
  e.multiplicity = static_cast<Eigen::Index>(cols.size());
  e.eta = CMatrix(dim, e.multiplicity);
  for (std::size_t i = 0; i < cols.size(); ++i) e.eta.col(static_cast<Eigen::Index>(i)) = cols[i];
  if (e.multiplicity == 1) {
    Eigen::Index imax = 0;
    e.eta.col(0).cwiseAbs().maxCoeff(&imax);
    const Complex ph = e.eta(imax, 0) / std::abs(e.eta(imax, 0));
    e.eta.col(0) *= std::conj(ph);
  }
  return e;
}

}  // namespace

std::vector<EigenPair> eigen_scan(const SpectralProblem& p, double lo, double hi,
                                  const EigenScanOptions& o) {
  if (!p.regular()) throw ConfigError("endpoints", "eigen_scan requires regular endpoints");
  if (!(lo < hi)) throw ConfigError("range", "eigen_scan needs lo < hi");
  Characteristic ch{p};
  {
    const CMatrix D = ch.matrix(lo);
    ch.square = D.rows() == D.cols();
  }
  const auto count = static_cast<int>(std::ceil((hi - lo) / o.step));
  const double h = (hi - lo) / count;
  std::vector<double> xs(static_cast<std::size_t>(count) + 1);
  for (int i = 0; i <= count; ++i) xs[static_cast<std::size_t>(i)] = i == count ? hi : lo + i * h;

  std::vector<double> candidates;
  using boost::math::tools::brent_find_minima;
  auto refine_min = [&](double a, double b) {
    auto f = [&ch](double l) { return ch.sigma_ratio(l); };
    const auto r = brent_find_minima(f, a, b, 50);
    if (r.second <= o.accept_tol) candidates.push_back(r.first);
  };

  bool real_mode = false;
  std::vector<double> g;
  std::vector<double> mag;
  if (ch.square) {
    std::vector<Complex> d(xs.size());
    double dmax = 0.0;
    std::size_t imax = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      d[i] = ch.det(xs[i]);
      if (std::abs(d[i]) > dmax) {
        dmax = std::abs(d[i]);
        imax = i;
      }
    }
    if (dmax > 0.0) {
      const Complex phase = std::conj(d[imax]) / dmax;
      double worst_imag = 0.0;
      g.resize(xs.size());
      mag.resize(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const Complex z = phase * d[i];
        g[i] = z.real();
        mag[i] = std::abs(d[i]);
        worst_imag = std::max(worst_imag, std::abs(z.imag()));
      }
      real_mode = worst_imag <= 1e-6 * dmax;
      if (real_mode) {
        auto fr = [&ch, phase](double l) { return (phase * ch.det(l)).real(); };
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
          if (g[i] == 0.0) {
            candidates.push_back(xs[i]);
            continue;
          }
          if (g[i] * g[i + 1] < 0.0) {
            boost::uintmax_t iters = 200;
            const auto r = boost::math::tools::toms748_solve(
                fr, xs[i], xs[i + 1], g[i], g[i + 1], boost::math::tools::eps_tolerance<double>(50), iters);
            candidates.push_back(0.5 * (r.first + r.second));
          }
        }
        if (g.back() == 0.0) candidates.push_back(xs.back());
      }
    }
  }
  if (!real_mode) {
    mag.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) mag[i] = ch.sigma_ratio(xs[i]);
  }
  // Touching roots (even multiplicity) and the non-real-phase fallback: interior minima of |.|.
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
    if (mag[i] <= mag[i - 1] && mag[i] <= mag[i + 1]) {
      if (real_mode && (g[i] == 0.0 || g[i - 1] * g[i] < 0.0 || g[i] * g[i + 1] < 0.0)) continue;
      refine_min(xs[i - 1], xs[i + 1]);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<EigenPair> out;
  for (double l : candidates) {
    if (l < lo || l > hi) continue;
    EigenPair e = finish_root(p, l, o);
    if (e.residual > std::max(o.accept_tol, 1e-6)) continue;
    if (e.multiplicity == 0) continue;
    // Nearby candidates are the same root found twice; keep the sharper one.
    if (!out.empty() && std::abs(l - out.back().lambda) <= 1e-6 * std::max(1.0, std::abs(l))) {
      if (e.residual < out.back().residual) out.back() = std::move(e);
      continue;
    }
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------- model

const TauAtom* SpectralMeasureModel::atom(double s) const {
  for (const auto& a : atoms) {
    if (a.s == s) return &a;
  }
  return nullptr;
}

std::pair<CMatrix, CMatrix> fit_nevanlinna_constants(const SpectralProblem& p) {
  const CMatrix Mi = m_function(p, Complex(0.0, 1.0)).M;
  const CMatrix A = linalg::hermitian_part(Mi);
  auto f = [&p](double y) { return linalg::imaginary_part(m_function(p, Complex(0.0, y)).M) / y; };
  const CMatrix B = linalg::hermitian_part(2.0 * f(50.0) - f(25.0));
  // The fit is an estimate; clip any negative part rather than failing.
  Eigen::SelfAdjointEigenSolver<CMatrix> es(B);
  const RVector ev = es.eigenvalues().cwiseMax(0.0);
  return {A, es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint()};
}

SpectralMeasureModel spectral_measure_model(const SpectralProblem& p, double lo, double hi,
                                            const ModelOptions& o) {
  SpectralMeasureModel m;
  m.lo = lo;
  m.hi = hi;
  if (!(lo < hi)) return m;
  if (p.regular()) {
    m.oracle_path = true;
    for (const auto& e : eigen_scan(p, lo, hi, o.scan)) {
      TauAtom a;
      a.s = e.lambda;
      a.multiplicity = e.multiplicity;
      a.eta = e.eta;
      a.weight = e.eta * e.eta.adjoint();
      if (o.cross_validate) {
        const AtomWeightEstimate est = atom_weight(p, e.lambda, o.eps);
        a.cross_check = (est.weight - a.weight).norm();
        if (!(a.cross_check <= o.cross_tol)) {
          std::ostringstream msg;
          msg << "spectral measure cross-validation failed at s=" << e.lambda << ": |oracle - limit| = "
              << a.cross_check;
          throw TheoryViolation(msg.str());
        }
      }
      m.atoms.push_back(std::move(a));
    }
  } else {
    m.notes.push_back("singular endpoint: inversion-only model, density samples of Im M / pi");
    const double e = sorted_eps(o.eps).back();
    const auto count = static_cast<int>(std::ceil((hi - lo) / o.density_step));
    for (int i = 0; i <= count; ++i) {
      const double s = lo + (hi - lo) * i / count;
      m.density_grid.push_back(s);
      m.density_samples.push_back(linalg::imaginary_part(m_function(p, Complex(s, e)).M) / kPi);
    }
  }
  if (o.fit_constants) {
    std::tie(m.A, m.B) = fit_nevanlinna_constants(p);
    m.fitted = true;
  }
  return m;
}

}  // namespace mspec
