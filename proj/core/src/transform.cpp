#include "mspec/transform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mspec/errors.hpp"

namespace mspec {

namespace {

// Columns eta with eta eta^* = weight.
CMatrix factor_weight(const TauAtom& a) {
  if (a.eta.size() > 0) return a.eta;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a.weight + a.weight.adjoint()));
  const RVector ev = es.eigenvalues();
  std::vector<CVector> cols;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i) {
    if (ev(i) > 1e-14 * std::max(1.0, ev.maxCoeff())) cols.push_back(es.eigenvectors().col(i) * std::sqrt(ev(i)));
  }
  CMatrix out(a.weight.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = cols[i];
  return out;
}

TauVector transform_on_atoms(const SpectralProblem& p, const SpectralMeasureModel& model, const Forcing& f) {
  TauVector v;
  for (const auto& a : model.atoms) {
    v.support.push_back(a.s);
    v.values.push_back(forward_transform_compact(p.propagator(), f, a.s));
  }
  return v;
}

}  // namespace

double tau_seminorm_at(const TauAtom& atom, const CVector& d) {
  return std::sqrt(std::max(0.0, (d.adjoint() * atom.weight * d)(0, 0).real()));
}

Complex tau_inner(const SpectralMeasureModel& model, const TauVector& v, const TauVector& u) {
  Complex acc = 0.0;
  for (std::size_t i = 0; i < v.support.size(); ++i) {
    const TauAtom* a = model.atom(v.support[i]);
    if (!a) throw StructuralError("tau vector support point is not an atom of the model");
    acc += (v.values[i].adjoint() * a->weight * u.values[i])(0, 0);
  }
  return acc;
}

double tau_norm(const SpectralMeasureModel& model, const TauVector& v) {
  return std::sqrt(std::max(0.0, tau_inner(model, v, v).real()));
}

TauVector extend_forward(const SpectralProblem& p, const SpectralMeasureModel& model, const Forcing& f,
                         double tol) {
  const SystemSpec& sys = p.system();
  const bool compact = std::isfinite(std::max(sys.a, f.support_lower)) &&
                       std::isfinite(std::min(sys.b, f.support_upper));
  if (compact) return transform_on_atoms(p, model, f);

  // Exhaust by truncations centred at a finite point of the support.
  double centre = 0.0;
  if (std::isfinite(f.support_lower)) centre = f.support_lower;
  if (std::isfinite(f.support_upper)) centre = f.support_upper;
  TauVector prev;
  double prev_inc = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int k = 0; k < 40; ++k) {
    const double L = std::ldexp(1.0, k);
    Forcing t = f;
    t.support_lower = std::max(f.support_lower, centre - L);
    t.support_upper = std::min(f.support_upper, centre + L);
    TauVector cur = transform_on_atoms(p, model, t);
    if (k > 0) {
      TauVector diff = cur;
      for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= prev.values[i];
      const double inc = tau_norm(model, diff);
      if (inc <= tol) return cur;
      growth = inc > prev_inc ? growth + 1 : 0;
      if (growth >= 3) {
        std::ostringstream msg;
        msg << "truncation increments of the forward transform are not decreasing (last " << inc << ")";
        throw AccuracyError(msg.str(), inc);
      }
      prev_inc = inc;
    }
    prev = std::move(cur);
  }
  throw AccuracyError("forward transform truncation did not settle", prev_inc);
}

InverseTransform::InverseTransform(const SpectralProblem& p, const SpectralMeasureModel& model, TauVector g)
    : p_(&p) {
  for (std::size_t i = 0; i < g.support.size(); ++i) {
    const TauAtom* a = model.atom(g.support[i]);
    if (!a) throw StructuralError("tau vector support point is not an atom of the model");
    U_.push_back(p.propagator().fundamental_set(a->s));
    coef_.push_back(a->weight * g.values[i]);
  }
}

CVector InverseTransform::operator()(double x, Side side) const {
  CVector out = CVector::Zero(p_->n());
  for (std::size_t i = 0; i < U_.size(); ++i) out += U_[i].script_u(x, side) * coef_[i];
  return out;
}

Forcing InverseTransform::as_forcing() const {
  Forcing f;
  const InverseTransform self = *this;
  f.value = [self](double x) -> CVector { return self(x, Side::balanced); };
  f.breakpoints = p_->propagator().breakpoints();
  f.support_lower = p_->system().a;
  f.support_upper = p_->system().b;
  return f;
}

InverseTransform inverse_transform(const SpectralProblem& p, const SpectralMeasureModel& model,
                                   const TauVector& g) {
  return InverseTransform(p, model, g);
}

double w_norm(const SpectralProblem& p, const std::function<CVector(double)>& g,
              const std::vector<double>& breaks) {
  const SystemSpec& sys = p.system();
  std::vector<double> all = p.propagator().breakpoints();
  all.insert(all.end(), breaks.begin(), breaks.end());
  auto kernel = [&g](double x, const CMatrix& W) -> CMatrix {
    const CVector v = g(x);
    return v.adjoint() * W * v;
  };
  QuadratureOptions q = p.propagator().options().quadrature;
  q.max_panels = std::max(q.max_panels, 20000);
  const CMatrix r = integrate(sys.w, IntervalSpec::open(sys.a, sys.b), kernel, all, q);
  return std::sqrt(std::max(0.0, r(0, 0).real()));
}

ParsevalResult parseval_check(const SpectralProblem& p, const SpectralMeasureModel& model, const Forcing& f,
                              double K) {
  SpectralMeasureModel sub = model;
  sub.atoms.clear();
  for (const auto& a : model.atoms) {
    if (std::abs(a.s) <= K) sub.atoms.push_back(a);
  }
  const TauVector Ff = extend_forward(p, sub, f);
  ParsevalResult r;
  r.K = K;
  double half = 0.0;
  for (std::size_t i = 0; i < sub.atoms.size(); ++i) {
    const double term = std::pow(tau_seminorm_at(sub.atoms[i], Ff.values[i]), 2);
    r.tau_norm_sq += term;
    if (std::abs(sub.atoms[i].s) <= 0.5 * K) half += term;
  }
  r.tail_estimate = r.tau_norm_sq - half;

  // Projection onto the eigenfunctions: sum_k <u_k, f>_w u_k with u_k = U(., s) eta_k.
  std::vector<FundamentalSet> U;
  std::vector<CVector> coef;
  for (std::size_t i = 0; i < sub.atoms.size(); ++i) {
    const CMatrix eta = factor_weight(sub.atoms[i]);
    U.push_back(p.propagator().fundamental_set(sub.atoms[i].s));
    coef.push_back(eta * (eta.adjoint() * Ff.values[i]));
  }
  auto g = [&U, &coef, &p](double x) -> CVector {
    CVector out = CVector::Zero(p.n());
    for (std::size_t i = 0; i < U.size(); ++i) out += U[i].script_u(x, Side::balanced) * coef[i];
    return out;
  };
  const double nrm = w_norm(p, g, f.breakpoints);
  r.projection_norm_sq = nrm * nrm;
  return r;
}

double multiplication_check(const SpectralProblem& p, const SpectralMeasureModel& model, const Forcing& u,
                            const Forcing& f) {
  const TauVector Fu = extend_forward(p, model, u);
  const TauVector Ff = extend_forward(p, model, f);
  double worst = 0.0;
  for (std::size_t i = 0; i < model.atoms.size(); ++i) {
    const CVector d = Ff.values[i] - model.atoms[i].s * Fu.values[i];
    worst = std::max(worst, tau_seminorm_at(model.atoms[i], d));
  }
  return worst;
}

}  // namespace mspec
