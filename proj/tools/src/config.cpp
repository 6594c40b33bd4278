#include "mspec_app/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

#include "mspec/errors.hpp"

namespace mspec::app {

namespace {

std::string idx(const std::string& field, std::size_t i) { return field + "[" + std::to_string(i) + "]"; }

const json& require(const json& j, const std::string& key, const std::string& field) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(field.empty() ? key : field + "." + key, "missing");
  return j.at(key);
}

std::string sub(const std::string& field, const std::string& key) { return field.empty() ? key : field + "." + key; }

std::vector<CMatrix> parse_coefficients(const json& v, const std::string& field, Eigen::Index rows,
                                        Eigen::Index cols) {
  if (!v.is_array() || v.empty()) throw ConfigError(field, "expected a nonempty array of coefficients");
  std::vector<CMatrix> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(parse_matrix(v[k], idx(field, k), rows, cols));
  return out;
}

std::pair<double, double> parse_interval(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(field, "expected [lower, upper]");
  const double lo = parse_real(v[0], idx(field, 0));
  const double hi = parse_real(v[1], idx(field, 1));
  if (!(lo < hi)) throw ConfigError(field, "lower must be below upper");
  return {lo, hi};
}

MatrixMeasure parse_measure(const json& v, const std::string& field, Eigen::Index n, double a, double b) {
  std::vector<DensitySegment> segs;
  std::vector<Atom> atoms;
  if (v.contains("segments")) {
    const json& s = v.at("segments");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string f = idx(sub(field, "segments"), i);
      const auto [lo, hi] = parse_interval(require(s[i], "interval", f), sub(f, "interval"));
      auto coeffs = parse_coefficients(require(s[i], "coefficients", f), sub(f, "coefficients"), n, n);
      int degree = static_cast<int>(coeffs.size()) - 1;
      while (degree > 0 && coeffs[static_cast<std::size_t>(degree)].norm() == 0.0) --degree;
      segs.push_back({lo, hi, polynomial_density(std::move(coeffs)), degree});
    }
  }
  if (v.contains("atoms")) {
    const json& s = v.at("atoms");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string f = idx(sub(field, "atoms"), i);
      atoms.push_back({parse_real(require(s[i], "x", f), sub(f, "x")),
                       parse_matrix(require(s[i], "matrix", f), sub(f, "matrix"), n, n)});
    }
  }
  try {
    return MatrixMeasure(n, a, b, std::move(segs), std::move(atoms));
  } catch (const StructuralError& e) {
    throw ConfigError(field, e.what());
  }
}

EndpointData parse_endpoint(const json& v, const std::string& field, Eigen::Index n) {
  EndpointData d;
  if (v.is_string()) {
    if (v.get<std::string>() == "regular") return d;
    throw ConfigError(field, "expected \"regular\" or an object with kind \"singular\"");
  }
  const std::string kind = require(v, "kind", field).get<std::string>();
  if (kind == "regular") return d;
  if (kind != "singular") throw ConfigError(sub(field, "kind"), "unknown endpoint kind '" + kind + "'");
  d.kind = EndpointKind::singular;
  const json& span = require(v, "l2_span", field);
  const CMatrix m = span.empty() ? CMatrix(n, 0) : parse_matrix(span, sub(field, "l2_span"), n, -1);
  d.l2_span = [m](Complex) { return m; };
  return d;
}

Forcing parse_forcing(const json& v, const std::string& field, Eigen::Index n) {
  struct Seg {
    double lo, hi;
    std::vector<CMatrix> c;
  };
  std::vector<Seg> segs;
  const json& s = require(v, "segments", field);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::string f = idx(sub(field, "segments"), i);
    const auto [lo, hi] = parse_interval(require(s[i], "interval", f), sub(f, "interval"));
    segs.push_back({lo, hi, parse_coefficients(require(s[i], "coefficients", f), sub(f, "coefficients"), n, 1)});
  }
  if (segs.empty()) throw ConfigError(sub(field, "segments"), "at least one segment is required");
  Forcing out;
  out.support_lower = std::numeric_limits<double>::infinity();
  out.support_upper = -std::numeric_limits<double>::infinity();
  for (const auto& g : segs) {
    out.support_lower = std::min(out.support_lower, g.lo);
    out.support_upper = std::max(out.support_upper, g.hi);
    out.breakpoints.push_back(g.lo);
    out.breakpoints.push_back(g.hi);
  }
  out.value = [segs, n](double x) -> CVector {
    CVector acc = CVector::Zero(n);
    for (const auto& g : segs) {
      if (x < g.lo || x > g.hi) continue;
      CVector v = CVector::Zero(n);
      Complex p = 1.0;
      for (const auto& c : g.c) {
        v += p * c.col(0);
        p *= x;
      }
      // Balanced value at a segment edge.
      acc += (x == g.lo || x == g.hi) ? CVector(0.5 * v) : v;
    }
    return acc;
  };
  return out;
}

double poly_eval(const std::vector<double>& c, double x) {
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
  return r;
}

std::vector<double> parse_real_list(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_real(v[i], idx(field, i)));
  return out;
}

FatouSpec parse_fatou(const json& v, const std::string& field) {
  FatouSpec spec;
  const json& m = require(v, "measure", field);
  const std::string mf = sub(field, "measure");
  if (m.contains("segments")) {
    const json& s = m.at("segments");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string f = idx(sub(mf, "segments"), i);
      const auto [lo, hi] = parse_interval(require(s[i], "interval", f), sub(f, "interval"));
      const auto c = parse_real_list(require(s[i], "density", f), sub(f, "density"));
      if (c.size() > 1 && (!std::isfinite(lo) || !std::isfinite(hi))) {
        throw ConfigError(sub(f, "density"), "unbounded pieces must have constant density");
      }
      spec.mu.pieces.push_back({lo, hi, [c](double t) { return poly_eval(c, t); }});
    }
  }
  if (m.contains("atoms")) {
    const json& s = m.at("atoms");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string f = idx(sub(mf, "atoms"), i);
      spec.mu.atoms.push_back({parse_real(require(s[i], "s", f), sub(f, "s")),
                               parse_real(require(s[i], "mass", f), sub(f, "mass"))});
    }
  }
  try {
    spec.mu.validate();
  } catch (const Error& e) {
    throw ConfigError(mf, e.what());
  }

  // f: piecewise polynomial on half-open pieces [lo, hi) plus point values.
  struct Piece {
    double lo, hi;
    std::vector<double> c;
  };
  std::vector<Piece> pieces;
  std::vector<std::pair<double, double>> points;
  const json& fj = require(v, "f", field);
  const std::string ff = sub(field, "f");
  const json& ps = require(fj, "pieces", ff);
  double sup = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const std::string f = idx(sub(ff, "pieces"), i);
    const auto [lo, hi] = parse_interval(require(ps[i], "interval", f), sub(f, "interval"));
    const auto c = parse_real_list(require(ps[i], "coefficients", f), sub(f, "coefficients"));
    if (c.size() > 1 && (!std::isfinite(lo) || !std::isfinite(hi))) {
      throw ConfigError(sub(f, "coefficients"), "f must be bounded: unbounded pieces must be constant");
    }
    for (int k = 0; k <= 64; ++k) {
      const double t = std::isfinite(lo) && std::isfinite(hi) ? lo + (hi - lo) * k / 64.0 : 0.0;
      sup = std::max(sup, std::abs(poly_eval(c, t)));
    }
    pieces.push_back({lo, hi, c});
  }
  if (fj.contains("values")) {
    const json& pv = fj.at("values");
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const std::string f = idx(sub(ff, "values"), i);
      const double x = parse_real(require(pv[i], "x", f), sub(f, "x"));
      const double y = parse_real(require(pv[i], "value", f), sub(f, "value"));
      sup = std::max(sup, std::abs(y));
      points.emplace_back(x, y);
    }
  }
  spec.f.sup_norm = fj.contains("sup_norm") ? parse_real(fj.at("sup_norm"), sub(ff, "sup_norm")) : sup;
  for (const auto& p : pieces) {
    if (std::isfinite(p.lo)) spec.f.breakpoints.push_back(p.lo);
    if (std::isfinite(p.hi)) spec.f.breakpoints.push_back(p.hi);
  }
  spec.f.f = [pieces, points](double t) {
    for (const auto& [x, y] : points) {
      if (x == t) return y;
    }
    for (const auto& p : pieces) {
      if (t >= p.lo && t < p.hi) return poly_eval(p.c, t);
    }
    return 0.0;
  };
  spec.points = parse_real_list(require(v, "points", field), sub(field, "points"));
  spec.radii = parse_real_list(require(v, "radii", field), sub(field, "radii"));
  if (v.contains("delta")) spec.delta = parse_real(v.at("delta"), sub(field, "delta"));
  return spec;
}

void set_tolerance(ProblemOptions& o, const std::string& key, double value, const std::string& field) {
  if (!(value > 0.0)) throw ConfigError(field, "tolerances must be positive");
  if (key == "quadrature_rel") {
    o.propagation.quadrature.rel_tol = value;
  } else if (key == "quadrature_abs") {
    o.propagation.quadrature.abs_tol = value;
  } else if (key == "ode_rel") {
    o.propagation.ode.rel_tol = value;
  } else if (key == "ode_abs") {
    o.propagation.ode.abs_tol = value;
  } else if (key == "condition_cap") {
    o.propagation.condition_cap = value;
  } else if (key == "kernel") {
    o.kernel_tol = value;
  } else if (key == "pinv") {
    o.pinv_tol = value;
  } else if (key == "rank") {
    o.rank_tol = value;
  } else if (key == "validation") {
    o.validation_tol = value;
  } else {
    throw ConfigError(field, "unknown tolerance '" + key + "'");
  }
}

}  // namespace

double parse_real(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw ConfigError(field, "expected a number");
  const std::string s = v.get<std::string>();
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  static const std::regex re(R"(^\s*([+-]?)\s*([0-9]*\.?[0-9]*(?:[eE][+-]?[0-9]+)?)\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*$)");
  std::smatch m;
  if (std::regex_match(s, m, re)) {
    double r = kPi;
    if (m[2].length() > 0) r *= std::stod(m[2].str());
    if (m[3].length() > 0) r /= std::stod(m[3].str());
    return m[1].str() == "-" ? -r : r;
  }
  throw ConfigError(field, "cannot parse '" + s + "' as a real number");
}

Complex parse_complex(const json& v, const std::string& field) {
  if (v.is_array()) {
    if (v.size() != 2) throw ConfigError(field, "complex numbers are [re, im] pairs");
    return {parse_real(v[0], idx(field, 0)), parse_real(v[1], idx(field, 1))};
  }
  return {parse_real(v, field), 0.0};
}

CMatrix parse_matrix(const json& v, const std::string& field, Eigen::Index rows, Eigen::Index cols) {
  if (!v.is_array()) throw ConfigError(field, "expected a row-major matrix");
  const auto r = static_cast<Eigen::Index>(v.size());
  if (rows >= 0 && r != rows) throw ConfigError(field, "expected " + std::to_string(rows) + " rows");
  if (r == 0) return CMatrix(0, cols < 0 ? 0 : cols);
  const auto c = v[0].is_array() ? static_cast<Eigen::Index>(v[0].size()) : 0;
  if (cols >= 0 && c != cols) throw ConfigError(field, "expected " + std::to_string(cols) + " columns");
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    const std::string rf = idx(field, static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) throw ConfigError(rf, "ragged matrix row");
    for (Eigen::Index k = 0; k < c; ++k) {
      m(i, k) = parse_complex(row[static_cast<std::size_t>(k)], idx(rf, static_cast<std::size_t>(k)));
    }
  }
  return m;
}

ProblemConfig parse_config(const json& j) {
  ProblemConfig cfg;
  cfg.raw = j;
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  cfg.schema_version = require(j, "schema_version", "").get<int>();
  if (cfg.schema_version != 1) throw ConfigError("schema_version", "only version 1 is supported");
  if (j.contains("name")) cfg.name = j.at("name").get<std::string>();

  if (j.contains("tolerances")) {
    for (const auto& [k, val] : j.at("tolerances").items()) {
      set_tolerance(cfg.options, k, parse_real(val, "tolerances." + k), "tolerances." + k);
    }
  }

  if (!j.contains("J")) {
    for (const char* key : {"interval", "q", "w", "boundary", "endpoints", "anchors"}) {
      if (j.contains(key)) throw ConfigError("J", std::string("missing (required when '") + key + "' is given)");
    }
  }
  if (j.contains("J")) {
    cfg.has_system = true;
    SystemSpec& s = cfg.system;
    s.J = parse_matrix(j.at("J"), "J");
    s.n = s.J.rows();
    if (s.n == 0 || s.J.cols() != s.n) throw ConfigError("J", "J must be a nonempty square matrix");
    std::tie(s.a, s.b) = parse_interval(require(j, "interval", ""), "interval");
    s.q = j.contains("q") ? parse_measure(j.at("q"), "q", s.n, s.a, s.b) : MatrixMeasure::zero(s.n, s.a, s.b);
    s.w = j.contains("w") ? parse_measure(j.at("w"), "w", s.n, s.a, s.b) : MatrixMeasure::zero(s.n, s.a, s.b);
    if (j.contains("endpoints")) {
      const json& e = j.at("endpoints");
      if (e.contains("left")) s.left = parse_endpoint(e.at("left"), "endpoints.left", s.n);
      if (e.contains("right")) s.right = parse_endpoint(e.at("right"), "endpoints.right", s.n);
    }
    if (j.contains("anchors")) s.anchors = parse_real_list(j.at("anchors"), "anchors");

    const json& bc = require(j, "boundary", "");
    cfg.boundary.G_a = parse_matrix(require(bc, "G_a", "boundary"), "boundary.G_a", -1, s.n);
    cfg.boundary.G_b = parse_matrix(require(bc, "G_b", "boundary"), "boundary.G_b", cfg.boundary.G_a.rows(), s.n);
    if (bc.contains("limit_a")) {
      const CMatrix m = parse_matrix(bc.at("limit_a"), "boundary.limit_a", cfg.boundary.G_a.rows(), s.n);
      cfg.boundary.limit_a = [m](Complex) { return m; };
    }
    if (bc.contains("limit_b")) {
      const CMatrix m = parse_matrix(bc.at("limit_b"), "boundary.limit_b", cfg.boundary.G_a.rows(), s.n);
      cfg.boundary.limit_b = [m](Complex) { return m; };
    }
  }

  if (j.contains("lambda_grid")) {
    const json& g = j.at("lambda_grid");
    if (g.is_array()) {
      for (std::size_t i = 0; i < g.size(); ++i) cfg.lambda_grid.push_back(parse_complex(g[i], idx("lambda_grid", i)));
    } else {
      const auto re = parse_real_list(require(g, "re", "lambda_grid"), "lambda_grid.re");
      const auto im = parse_real_list(require(g, "im", "lambda_grid"), "lambda_grid.im");
      if (re.size() != 3 || !(re[2] > 0.0)) throw ConfigError("lambda_grid.re", "expected [lo, hi, step]");
      const int count = static_cast<int>(std::floor((re[1] - re[0]) / re[2] + 1e-9));
      for (int k = 0; k <= count; ++k) {
        for (double e : im) cfg.lambda_grid.emplace_back(re[0] + k * re[2], e);
      }
    }
  }
  if (j.contains("eps_schedule")) cfg.eps.eps = parse_real_list(j.at("eps_schedule"), "eps_schedule");
  if (j.contains("range")) cfg.range = parse_interval(j.at("range"), "range");
  if (j.contains("expand")) {
    if (!cfg.has_system) throw ConfigError("expand", "requires a system");
    ExpandSpec e;
    e.f = parse_forcing(require(j.at("expand"), "f", "expand"), "expand.f", cfg.system.n);
    if (j.at("expand").contains("K")) e.K = parse_real(j.at("expand").at("K"), "expand.K");
    cfg.expand = std::move(e);
  }
  if (j.contains("fatou")) cfg.fatou = parse_fatou(j.at("fatou"), "fatou");
  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("JSON parse error: ") + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
}

std::vector<double> parse_list(const std::string& spec, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(parse_real(json(item), field));
    } catch (const ConfigError&) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError(field, "cannot parse '" + item + "'");
      }
    }
  }
  return out;
}

std::pair<double, double> parse_range(const std::string& spec) {
  const auto colon = spec.find(':');
  const auto comma = spec.find(',');
  const auto cut = colon != std::string::npos ? colon : comma;
  if (cut == std::string::npos) throw ConfigError("--range", "expected lo:hi");
  const auto lo = parse_list(spec.substr(0, cut), "--range");
  const auto hi = parse_list(spec.substr(cut + 1), "--range");
  if (lo.size() != 1 || hi.size() != 1 || !(lo[0] < hi[0])) throw ConfigError("--range", "expected lo:hi with lo < hi");
  return {lo[0], hi[0]};
}

std::vector<Complex> parse_lambda_grid(const std::string& spec) {
  std::vector<Complex> out;
  const auto semi = spec.find(';');
  if (semi != std::string::npos) {
    std::vector<double> re;
    std::stringstream ss(spec.substr(0, semi));
    std::string item;
    while (std::getline(ss, item, ':')) re.push_back(parse_list(item, "--lambda-grid").at(0));
    const auto im = parse_list(spec.substr(semi + 1), "--lambda-grid");
    if (re.size() != 3 || !(re[2] > 0.0) || im.empty()) throw ConfigError("--lambda-grid", "expected lo:hi:step;im1,im2");
    const int count = static_cast<int>(std::floor((re[1] - re[0]) / re[2] + 1e-9));
    for (int k = 0; k <= count; ++k) {
      for (double e : im) out.emplace_back(re[0] + k * re[2], e);
    }
    return out;
  }
  // Explicit points "re+imi" or "re,im" pairs separated by spaces.
  static const std::regex pt(R"(([+-]?[0-9.eE+-]*?)([+-][0-9.eE]+)i)");
  std::stringstream ss(spec);
  std::string item;
  while (ss >> item) {
    std::smatch m;
    if (std::regex_match(item, m, pt)) {
      out.emplace_back(m[1].length() ? std::stod(m[1].str()) : 0.0, std::stod(m[2].str()));
    } else {
      const auto v = parse_list(item, "--lambda-grid");
      if (v.size() != 2) throw ConfigError("--lambda-grid", "cannot parse point '" + item + "'");
      out.emplace_back(v[0], v[1]);
    }
  }
  if (out.empty()) throw ConfigError("--lambda-grid", "empty grid");
  return out;
}

void apply_overrides(ProblemConfig& cfg, const Overrides& o) {
  if (!o.tol.empty()) {
    std::stringstream ss(o.tol);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("--tol-override", "expected key=value");
      const std::string key = item.substr(0, eq);
      set_tolerance(cfg.options, key, parse_list(item.substr(eq + 1), "--tol-override").at(0), "--tol-override." + key);
    }
  }
  if (!o.lambda_grid.empty()) cfg.lambda_grid = parse_lambda_grid(o.lambda_grid);
  if (!o.eps.empty()) cfg.eps.eps = parse_list(o.eps, "--eps-schedule");
  if (!o.range.empty()) cfg.range = parse_range(o.range);
}

std::string locate_issue(const ProblemConfig& cfg, const std::string& name, double x) {
  const json& m = cfg.raw.contains(name) ? cfg.raw.at(name) : json::object();
  if (m.contains("atoms")) {
    const json& a = m.at("atoms");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].contains("x") && parse_real(a[i].at("x"), name) == x) return idx(name + ".atoms", i) + ".matrix";
    }
  }
  if (m.contains("segments")) {
    const json& s = m.at("segments");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto [lo, hi] = parse_interval(s[i].at("interval"), name);
      if (x >= lo && x <= hi) return idx(name + ".segments", i) + ".coefficients";
    }
  }
  return name;
}

}  // namespace mspec::app
