#include "mspec/system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mspec/errors.hpp"
#include "mspec/linalg.hpp"

namespace mspec {

ValidationReport validate_system(const SystemSpec& sys, double tol) {
  ValidationReport report;
  const Eigen::Index n = sys.n;
  if (sys.J.rows() != n || sys.J.cols() != n) {
    report.issues.push_back({"J has wrong shape", 0.0, static_cast<double>(sys.J.rows())});
    return report;
  }
  const double skew = (sys.J + sys.J.adjoint()).norm();
  if (skew > tol) report.issues.push_back({"J is not skew-hermitian", 0.0, skew});
  const double det = std::abs(sys.J.determinant());
  if (det <= tol) report.issues.push_back({"J is not invertible", 0.0, det});
  if (!(sys.a < sys.b)) report.issues.push_back({"interval must satisfy a < b", sys.a, sys.b - sys.a});

  const MatrixMeasure* measures[2] = {&sys.q, &sys.w};
  const char* names[2] = {"q", "w"};
  for (int k = 0; k < 2; ++k) {
    const auto& m = *measures[k];
    if (m.dim() != n) {
      report.issues.push_back({std::string(names[k]) + " has wrong dimension", 0.0,
                               static_cast<double>(m.dim())});
      continue;
    }
    if (m.lower() != sys.a || m.upper() != sys.b) {
      report.issues.push_back({std::string(names[k]) + " domain differs from (a, b)", m.lower(), m.upper()});
    }
    for (const auto& s : m.segments()) {
      if (!std::isfinite(s.lower) || !std::isfinite(s.upper)) {
        report.issues.push_back(
            {std::string(names[k]) + " has an unbounded density segment", s.lower, s.upper});
      }
    }
    report.merge(validate_measure(m, k == 0 ? MeasureKind::hermitian : MeasureKind::nonnegative, tol),
                 names[k]);
  }
  if (sys.left.kind == EndpointKind::singular && !sys.left.l2_span) {
    report.issues.push_back({"singular endpoint a needs a square-integrable span", sys.a, 0.0});
  }
  if (sys.right.kind == EndpointKind::singular && !sys.right.l2_span) {
    report.issues.push_back({"singular endpoint b needs a square-integrable span", sys.b, 0.0});
  }
  return report;
}

double self_adjointness_residual(const SystemSpec& sys, const BoundaryConditions& bc) {
  const CMatrix Jinv = sys.J.inverse();
  return (bc.G_b * Jinv * bc.G_b.adjoint() - bc.G_a * Jinv * bc.G_a.adjoint()).norm();
}

ValidationReport validate_boundary(const SystemSpec& sys, const BoundaryConditions& bc, double tol) {
  ValidationReport report;
  if (bc.G_a.cols() != sys.n || bc.G_b.cols() != sys.n || bc.G_a.rows() != bc.G_b.rows()) {
    report.issues.push_back({"boundary matrices must both be (count x n)", 0.0,
                             static_cast<double>(bc.G_a.cols())});
    return report;
  }
  if (sys.left.kind == EndpointKind::singular && !bc.limit_a) {
    report.issues.push_back({"singular endpoint a needs a boundary limit evaluator", sys.a, 0.0});
  }
  if (sys.right.kind == EndpointKind::singular && !bc.limit_b) {
    report.issues.push_back({"singular endpoint b needs a boundary limit evaluator", sys.b, 0.0});
  }
  const double r = self_adjointness_residual(sys, bc);
  if (r > tol * std::max(1.0, bc.G_a.squaredNorm() + bc.G_b.squaredNorm())) {
    report.issues.push_back({"boundary conditions are not self-adjoint", 0.0, r});
  }
  return report;
}

bool SingularLambdas::meets_real(double tol) const {
  if (kind == Kind::all) return true;
  return std::any_of(roots.begin(), roots.end(), [tol](Complex z) {
    return std::abs(z.imag()) <= tol * std::max(1.0, std::abs(z));
  });
}

std::vector<double> atom_locations(const SystemSpec& sys) {
  std::vector<double> xs;
  for (const auto& a : sys.q.atoms()) xs.push_back(a.x);
  for (const auto& a : sys.w.atoms()) xs.push_back(a.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

std::pair<CMatrix, CMatrix> jump_matrices(const SystemSpec& sys, double x, Complex lambda) {
  const CMatrix d = 0.5 * (sys.q.atom_at(x) - lambda * sys.w.atom_at(x));
  return {sys.J - d, sys.J + d};
}

SingularLambdas singular_lambdas_at(const SystemSpec& sys, double x, double tol) {
  const Eigen::Index n = sys.n;
  const CMatrix dq = sys.q.atom_at(x);
  const CMatrix dw = sys.w.atom_at(x);
  // det B_+ has degree <= n in lambda; recover the coefficients from n+1 samples on the unit circle.
  const auto m = static_cast<std::size_t>(n + 1);
  std::vector<Complex> samples(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Complex z = std::polar(1.0, 2.0 * kPi * static_cast<double>(k) / static_cast<double>(m));
    samples[k] = (sys.J + 0.5 * (dq - z * dw)).determinant();
  }
  SingularLambdas out;
  out.det_coefficients.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    Complex c = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      c += samples[k] * std::polar(1.0, -2.0 * kPi * static_cast<double>(j * k) / static_cast<double>(m));
    }
    out.det_coefficients[j] = c / static_cast<double>(m);
  }
  const double jnorm = sys.J.operatorNorm();
  const double scale = std::pow(jnorm, static_cast<double>(n));
  double cmax = 0.0;
  for (const auto& c : out.det_coefficients) cmax = std::max(cmax, std::abs(c));
  if (cmax <= tol * scale) {
    out.kind = SingularLambdas::Kind::all;
    return out;
  }
  std::vector<Complex> trimmed = out.det_coefficients;
  for (auto& c : trimmed) {
    if (std::abs(c) <= tol * cmax) c = 0.0;
  }
  while (trimmed.size() > 1 && trimmed.back() == Complex(0.0)) trimmed.pop_back();
  if (trimmed.size() <= 1) {
    out.kind = SingularLambdas::Kind::empty;
    return out;
  }
  std::vector<Complex> roots = linalg::polynomial_roots(trimmed);

  // Enforce closure under conjugation: pair each root with its nearest conjugate partner.
  std::vector<Complex> closed;
  std::vector<bool> used(roots.size(), false);
  constexpr double kRootTol = 1e-8;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const Complex r = roots[i];
    if (std::abs(r.imag()) <= kRootTol * std::max(1.0, std::abs(r))) {
      closed.emplace_back(r.real(), 0.0);
      continue;
    }
    std::size_t best = roots.size();
    double best_d = kRootTol * std::max(1.0, std::abs(r)) * 1e3;
    for (std::size_t k = 0; k < roots.size(); ++k) {
      if (used[k]) continue;
      const double d = std::abs(roots[k] - std::conj(r));
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    Complex sym = r;
    if (best < roots.size()) {
      used[best] = true;
      sym = 0.5 * (r + std::conj(roots[best]));
    }
    closed.push_back(sym);
    closed.push_back(std::conj(sym));
  }
  std::sort(closed.begin(), closed.end(), [](Complex l, Complex r) {
    return l.real() < r.real() || (l.real() == r.real() && l.imag() < r.imag());
  });
  out.kind = SingularLambdas::Kind::finite;
  out.roots = std::move(closed);
  return out;
}

SingularitySet partition_points(const SystemSpec& sys, double tol) {
  SingularitySet s;
  for (double x : atom_locations(sys)) {
    AtomRecord rec;
    rec.x = x;
    rec.lambdas = singular_lambdas_at(sys, x, tol);
    rec.partition = rec.lambdas.meets_real();
    if (rec.partition) {
      s.partition.push_back(x);
    } else {
      s.tilde_lambda.insert(s.tilde_lambda.end(), rec.lambdas.roots.begin(), rec.lambdas.roots.end());
    }
    s.atoms.push_back(std::move(rec));
  }
  return s;
}

std::vector<double> subinterval_edges(const SystemSpec& sys, const SingularitySet& s) {
  std::vector<double> edges{sys.a};
  edges.insert(edges.end(), s.partition.begin(), s.partition.end());
  edges.push_back(sys.b);
  return edges;
}

std::vector<double> choose_anchors(const SystemSpec& sys, const SingularitySet& s) {
  const std::vector<double> edges = subinterval_edges(sys, s);
  const std::vector<double> atoms = atom_locations(sys);
  auto is_atom = [&atoms](double x) { return std::binary_search(atoms.begin(), atoms.end(), x); };
  const std::size_t count = edges.size() - 1;

  for (std::size_t j = 0; j < count; ++j) {
    if (!(edges[j] < edges[j + 1])) {
      std::ostringstream msg;
      msg << "subinterval " << j << " between " << edges[j] << " and " << edges[j + 1] << " is empty";
      throw StructuralError(msg.str());
    }
  }

  if (sys.anchors) {
    const auto& given = *sys.anchors;
    if (given.size() != count) {
      std::ostringstream msg;
      msg << "expected " << count << " anchors (one per subinterval), got " << given.size();
      throw StructuralError(msg.str());
    }
    for (std::size_t j = 0; j < count; ++j) {
      const double xi = given[j];
      const bool at_a = j == 0 && xi == sys.a && std::isfinite(xi) && sys.left.kind == EndpointKind::regular;
      const bool at_b = j + 1 == count && xi == sys.b && std::isfinite(xi) &&
                        sys.right.kind == EndpointKind::regular;
      const bool inside = xi > edges[j] && xi < edges[j + 1];
      if (!(inside || at_a || at_b) || is_atom(xi)) {
        std::ostringstream msg;
        msg << "anchor " << xi << " is not a non-atom point of subinterval " << j;
        throw StructuralError(msg.str());
      }
    }
    return given;
  }

  std::vector<double> anchors;
  for (std::size_t j = 0; j < count; ++j) {
    const double lo = edges[j];
    const double hi = edges[j + 1];
    double xi;
    double length;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      xi = 0.5 * (lo + hi);
      length = hi - lo;
    } else if (std::isfinite(lo)) {
      xi = lo + 1.0;
      length = 1.0;
    } else if (std::isfinite(hi)) {
      xi = hi - 1.0;
      length = 1.0;
    } else {
      xi = 0.0;
      length = 1.0;
    }
    if (is_atom(xi)) {
      // Walk outward on the dyadic grid of spacing length / 2^10.
      const double step = length / 1024.0;
      bool found = false;
      for (int k = 1; k < 512 && !found; ++k) {
        for (double sign : {1.0, -1.0}) {
          const double cand = xi + sign * k * step;
          if (cand > lo && cand < hi && !is_atom(cand)) {
            xi = cand;
            found = true;
            break;
          }
        }
      }
      if (!found) throw StructuralError("could not place an anchor away from atoms");
    }
    anchors.push_back(xi);
  }
  return anchors;
}

}  // namespace mspec
