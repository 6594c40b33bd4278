#include "mspec_app/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mspec/errors.hpp"
#include "mspec/linalg.hpp"
#include "mspec/weyl.hpp"

namespace mspec::app {

namespace {

constexpr std::uint32_t kSeed = 20240521u;

std::vector<Complex> default_grid() {
  std::vector<Complex> g;
  for (int k = 0; k <= 24; ++k) {
    for (double e : {0.1, 1.0}) g.emplace_back(-3.0 + 0.25 * k, e);
  }
  return g;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("--out", "cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

json check(const std::string& name, double value, double tol, bool pass, bool informational = false) {
  json c;
  c["name"] = name;
  c["value"] = value;
  c["tolerance"] = tol;
  c["pass"] = pass;
  if (informational) c["informational"] = true;
  return c;
}

json at_most(const std::string& name, double value, double tol) {
  return check(name, value, tol, std::isfinite(value) && value <= tol);
}

/// Random constant vector on the middle half of a finite window of (a, b).
Forcing test_forcing(const SystemSpec& sys, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  CVector c(sys.n);
  for (Eigen::Index i = 0; i < sys.n; ++i) c(i) = Complex(nd(rng), nd(rng));
  const double lo = std::isfinite(sys.a) ? sys.a : std::min(-1.0, sys.b - 2.0);
  const double hi = std::isfinite(sys.b) ? sys.b : std::max(1.0, sys.a + 2.0);
  const double q = 0.25 * (hi - lo);
  return Forcing::constant(c, lo + q, hi - q);
}

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"validate", "analyze", "mfun", "tau", "eigen", "expand", "verify", "fatou-demo"};
  return c;
}

json matrix_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_json(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

CMatrix matrix_from_json(const json& j) { return parse_matrix(j, "matrix"); }

json validate_report(const ProblemConfig& cfg) {
  json issues = json::array();
  auto add = [&issues](const std::string& field, const ValidationIssue& i) {
    issues.push_back({{"field", field}, {"what", i.what}, {"location", i.location}, {"magnitude", i.magnitude}});
  };
  if (!cfg.has_system) throw ConfigError("J", "no system in config");
  const SystemSpec& s = cfg.system;
  const double tol = cfg.options.validation_tol;
  for (const auto& i : validate_measure(s.q, MeasureKind::hermitian, tol).issues) add(locate_issue(cfg, "q", i.location), i);
  for (const auto& i : validate_measure(s.w, MeasureKind::nonnegative, tol).issues) add(locate_issue(cfg, "w", i.location), i);
  // Remaining structural checks (J, domains, endpoints) minus the measure checks repeated above.
  for (const auto& i : validate_system(s, tol).issues) {
    if (i.what.rfind("q:", 0) == 0 || i.what.rfind("w:", 0) == 0) continue;
    std::string field = "system";
    if (i.what.rfind("J ", 0) == 0) field = "J";
    if (i.what.rfind("q ", 0) == 0) field = "q";
    if (i.what.rfind("w ", 0) == 0) field = "w";
    if (i.what.rfind("interval", 0) == 0) field = "interval";
    if (i.what.rfind("singular endpoint a", 0) == 0) field = "endpoints.left";
    if (i.what.rfind("singular endpoint b", 0) == 0) field = "endpoints.right";
    add(field, i);
  }
  for (const auto& i : validate_boundary(s, cfg.boundary, tol).issues) {
    std::string field = "boundary";
    if (i.what.rfind("singular endpoint a", 0) == 0) field = "boundary.limit_a";
    if (i.what.rfind("singular endpoint b", 0) == 0) field = "boundary.limit_b";
    add(field, i);
  }
  json r;
  r["ok"] = issues.empty();
  r["issues"] = issues;
  r["self_adjointness_residual"] = self_adjointness_residual(s, cfg.boundary);
  return r;
}

SpectralProblem make_problem(const ProblemConfig& cfg) {
  if (!cfg.has_system) throw ConfigError("J", "no system in config");
  return SpectralProblem(cfg.system, cfg.boundary, cfg.options);
}

json analyze_report(const SpectralProblem& p) {
  const SingularitySet& s = p.singularities();
  json atoms = json::array();
  for (const auto& a : s.atoms) {
    json roots = json::array();
    for (Complex z : a.lambdas.roots) roots.push_back(complex_json(z));
    const char* kind = a.lambdas.kind == SingularLambdas::Kind::empty    ? "empty"
                       : a.lambdas.kind == SingularLambdas::Kind::finite ? "finite"
                                                                         : "all";
    atoms.push_back({{"x", a.x}, {"lambda_set", kind}, {"roots", roots}, {"partition", a.partition}});
  }
  json tilde = json::array();
  for (Complex z : s.tilde_lambda) tilde.push_back(complex_json(z));
  const RangeDim rd = transform_range_dim(p);
  json r;
  r["n"] = p.n();
  r["N"] = p.N();
  r["partition"] = s.partition;
  r["anchors"] = p.anchors();
  r["atoms"] = atoms;
  r["tilde_lambda"] = tilde;
  r["isolated_closed"] = s.isolated_closed;
  r["dim_N0"] = p.null_data().basis.cols();
  r["dim_B"] = rd.dim_B;
  r["dim_ranP"] = rd.dim_ran_P;
  r["dim_B_equals_ranP"] = rd.equal_to_ran_P;
  return r;
}

std::string mfun_csv(const SpectralProblem& p, const std::vector<Complex>& grid) {
  const Eigen::Index d = p.block_dim();
  std::ostringstream out;
  out << "re_lambda,im_lambda";
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) out << ",M" << i << k << "_re,M" << i << k << "_im";
  }
  out << ",symmetry,min_im_eig,omega\n";
  for (Complex l : grid) {
    const WeylSample w = m_function(p, l);
    const WeylSample c = m_function(p, std::conj(l));
    out << fmt(l.real()) << "," << fmt(l.imag());
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) out << "," << fmt(w.M(i, k).real()) << "," << fmt(w.M(i, k).imag());
    }
    const double sym = (w.M - c.M.adjoint()).norm();
    const double mine = linalg::min_hermitian_eigenvalue(linalg::imaginary_part(w.M));
    out << "," << fmt(sym) << "," << fmt(l.imag() > 0 ? mine : -linalg::min_hermitian_eigenvalue(-linalg::imaginary_part(w.M)))
        << "," << fmt(omega(p, l).norm) << "\n";
  }
  return out.str();
}

std::string eigen_csv(const std::vector<EigenPair>& pairs) {
  std::ostringstream out;
  out << "k,lambda,multiplicity,residual\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out << k << "," << fmt(pairs[k].lambda) << "," << pairs[k].multiplicity << "," << fmt(pairs[k].residual) << "\n";
  }
  return out.str();
}

json tau_report(const SpectralMeasureModel& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms) {
    atoms.push_back({{"s", a.s},
                     {"weight", matrix_json(a.weight)},
                     {"trace", a.weight.trace().real()},
                     {"multiplicity", a.multiplicity},
                     {"cross_check", a.cross_check}});
  }
  json r;
  r["range"] = {m.lo, m.hi};
  r["oracle_path"] = m.oracle_path;
  r["atoms"] = atoms;
  r["fitted"] = m.fitted;
  if (m.fitted) {
    r["A"] = matrix_json(m.A);
    r["B"] = matrix_json(m.B);
  }
  if (!m.density_grid.empty()) {
    json d = json::array();
    for (std::size_t i = 0; i < m.density_grid.size(); ++i) {
      d.push_back({{"s", m.density_grid[i]}, {"value", matrix_json(m.density_samples[i])}});
    }
    r["density"] = d;
  }
  r["notes"] = m.notes;
  return r;
}

SpectralMeasureModel tau_from_json(const json& j) {
  SpectralMeasureModel m;
  m.lo = j.at("range").at(0).get<double>();
  m.hi = j.at("range").at(1).get<double>();
  m.oracle_path = j.at("oracle_path").get<bool>();
  for (const auto& a : j.at("atoms")) {
    TauAtom t;
    t.s = a.at("s").get<double>();
    t.weight = matrix_from_json(a.at("weight"));
    t.multiplicity = a.at("multiplicity").get<Eigen::Index>();
    t.cross_check = a.at("cross_check").get<double>();
    m.atoms.push_back(std::move(t));
  }
  m.fitted = j.at("fitted").get<bool>();
  if (m.fitted) {
    m.A = matrix_from_json(j.at("A"));
    m.B = matrix_from_json(j.at("B"));
  }
  if (j.contains("density")) {
    for (const auto& d : j.at("density")) {
      m.density_grid.push_back(d.at("s").get<double>());
      m.density_samples.push_back(matrix_from_json(d.at("value")));
    }
  }
  m.notes = j.at("notes").get<std::vector<std::string>>();
  return m;
}

ExpandReport expand_report(const SpectralProblem& p, const ExpandSpec& spec, const EpsilonSchedule& eps) {
  ModelOptions mo;
  mo.eps = eps;
  mo.fit_constants = false;
  const double pad = 0.5 * mo.scan.step;
  const SpectralMeasureModel model = spectral_measure_model(p, -spec.K - pad, spec.K + pad, mo);
  const TauVector Ff = extend_forward(p, model, spec.f);
  const ParsevalResult pr = parseval_check(p, model, spec.f, spec.K);

  std::ostringstream csv;
  csv << "s,multiplicity,tau_trace,coefficient_sq,cumulative\n";
  double cum = 0.0;
  for (std::size_t i = 0; i < model.atoms.size(); ++i) {
    const auto& a = model.atoms[i];
    if (std::abs(a.s) > spec.K) continue;
    const double c = std::pow(tau_seminorm_at(a, Ff.values[i]), 2);
    cum += c;
    csv << fmt(a.s) << "," << a.multiplicity << "," << fmt(a.weight.trace().real()) << "," << fmt(c) << ","
        << fmt(cum) << "\n";
  }
  const Forcing& f = spec.f;
  auto fval = [&f](double x) -> CVector {
    return (x >= f.support_lower && x <= f.support_upper) ? f.value(x) : CVector(CVector::Zero(0));
  };
  const Eigen::Index n = p.n();
  auto fz = [&fval, n](double x) -> CVector {
    CVector v = fval(x);
    return v.size() ? v : CVector(CVector::Zero(n));
  };
  TauVector within;
  SpectralMeasureModel sub = model;
  sub.atoms.clear();
  for (std::size_t i = 0; i < model.atoms.size(); ++i) {
    if (std::abs(model.atoms[i].s) > spec.K) continue;
    sub.atoms.push_back(model.atoms[i]);
    within.support.push_back(model.atoms[i].s);
    within.values.push_back(Ff.values[i]);
  }
  const InverseTransform G(p, sub, within);
  const double f_norm = w_norm(p, fz, f.breakpoints);
  const double recon = w_norm(p, [&](double x) -> CVector { return fz(x) - G(x); }, f.breakpoints);

  json s;
  s["K"] = spec.K;
  s["atoms"] = sub.atoms.size();
  s["tau_norm_sq"] = pr.tau_norm_sq;
  s["projection_norm_sq"] = pr.projection_norm_sq;
  s["f_norm_sq"] = f_norm * f_norm;
  s["tail_estimate"] = pr.tail_estimate;
  s["parseval_gap"] = f_norm * f_norm - pr.tau_norm_sq;
  s["reconstruction_error"] = recon;
  return {csv.str(), s};
}

json verify_report(const ProblemConfig& cfg) {
  json checks = json::array();
  const json v = validate_report(cfg);
  checks.push_back(check("validation_issues", static_cast<double>(v.at("issues").size()), 0.0, v.at("ok").get<bool>()));
  checks.push_back(at_most("boundary_self_adjointness", v.at("self_adjointness_residual").get<double>(), 1e-10));
  if (!v.at("ok").get<bool>()) {
    return {{"ok", false}, {"checks", checks}};
  }
  const SpectralProblem p = make_problem(cfg);
  const Eigen::Index dim = p.block_dim();
  const CMatrix I = CMatrix::Identity(dim, dim);
  const CMatrix& P = p.null_data().P;

  double wr = 0.0;
  for (Complex l : {Complex(0, 0), Complex(1, 0), Complex(0, 1), Complex(2, 1)}) {
    wr = std::max(wr, wronskian_defect(p.propagator(), l));
  }
  checks.push_back(at_most("wronskian", wr, 1e-9));
  checks.push_back(at_most("P_projector", (P * P - P).norm() + (P - P.adjoint()).norm(), 1e-12));

  double l31 = 0.0, structure = 0.0;
  Eigen::Index rank_gap = 0;
  for (Complex l : {Complex(0, 1), Complex(0, 2), Complex(1, 1)}) {
    const BlockAssembly a = assemble_F_H(p, l, false);
    l31 = std::max({l31, (a.B * (I - P)).norm(), (a.Q_minus * (I - P)).norm(), (a.Q_plus * (I - P)).norm(),
                    ((a.A_plus_block + a.A_minus_block) * (I - P)).norm()});
    CMatrix s = a.H_left - a.H_right + a.F;
    s.middleRows(a.rows.P, dim) -= I - P;
    structure = std::max(structure, s.norm());
    rank_gap = std::max(rank_gap, dim - a.F_rank);
  }
  checks.push_back(at_most("null_identities", l31, 1e-9));
  checks.push_back(at_most("H_F_structure", structure, 1e-12));
  checks.push_back(check("F_rank_deficit", static_cast<double>(rank_gap), 0.0, rank_gap == 0));

  const std::vector<Complex> grid = cfg.lambda_grid.empty() ? default_grid() : cfg.lambda_grid;
  const NevanlinnaReport nr = nevanlinna_diagnostics(p, grid);
  checks.push_back(at_most("nevanlinna_symmetry", nr.max_symmetry, 1e-8));
  checks.push_back(check("nevanlinna_min_im_eig", nr.min_imag_eigenvalue, -1e-8, nr.min_imag_eigenvalue >= -1e-8));
  const auto [Pm, Pp] = deficiency_projectors(p, Complex(0, 1));
  const bool trivial_deficiency = (Pm - CMatrix::Identity(p.n(), p.n())).norm() == 0.0 &&
                                  (Pp - CMatrix::Identity(p.n(), p.n())).norm() == 0.0;
  // Omega vanishes by theory only when both deficiency projectors are the identity.
  checks.push_back(check("omega", nr.max_omega, 1e-9, nr.max_omega <= 1e-9, !trivial_deficiency));

  const WeylSample w = m_function(p, Complex(0, 1));
  checks.push_back(at_most("P_absorption", (P * w.M - w.M).norm() + (w.M * P - w.M).norm(), 1e-10));
  {
    const BlockAssembly a = assemble_F_H(p, Complex(0, 1));
    const CMatrix Fp = a.left_inverse(p.options().pinv_tol);
    const CMatrix X = a.H * p.script_J_inv() * P;
    const double ri = (X - a.F * (Fp * X)).norm() / std::max(1.0, X.norm());
    checks.push_back(at_most("range_inclusion", ri, 1e-8));
  }

  std::mt19937 rng(kSeed);
  const Forcing f = test_forcing(p.system(), rng);
  {
    const Complex l(0.3, 1.0), m(-0.2, 2.0);
    const Resolvent Rl(p, l, f), Rm(p, m, f);
    const Resolvent Rlm(p, l, Rm.as_forcing());
    std::vector<double> br = p.propagator().breakpoints();
    br.push_back(f.support_lower);
    br.push_back(f.support_upper);
    const double res = w_norm(p, [&](double x) -> CVector { return Rl(x) - Rm(x) - (l - m) * Rlm(x); }, br);
    checks.push_back(at_most("resolvent_identity", res, 1e-6));
    checks.push_back(at_most("resolvent_equation_defect",
                             equation_defect(p, l, [&Rl](double x, Side s) { return Rl(x, s); }, f), 1e-7));
  }

  if (p.regular()) {
    const auto range = cfg.range.value_or(std::make_pair(-5.0, 5.0));
    ModelOptions mo;
    mo.eps = cfg.eps;
    mo.cross_validate = false;
    const SpectralMeasureModel model = spectral_measure_model(p, range.first, range.second, mo);
    double cross = 0.0, bt_B = 0.0, bt_P = 0.0, l67 = 0.0;
    const Complex l(0.0, 1.0);
    const Resolvent R(p, l, f);
    const TauVector Fg = extend_forward(p, model, f);
    const TauVector FRg = extend_forward(p, model, R.as_forcing());
    for (std::size_t i = 0; i < model.atoms.size(); ++i) {
      const auto& a = model.atoms[i];
      cross = std::max(cross, (a.weight - atom_weight(p, a.s, cfg.eps).weight).norm());
      const double wn = std::max(a.weight.norm(), 1e-300);
      bt_B = std::max(bt_B, (block_B(p, a.s).B * a.weight).norm() / wn);
      bt_P = std::max(bt_P, ((I - P) * a.weight).norm());
      l67 = std::max(l67, tau_seminorm_at(a, FRg.values[i] - Fg.values[i] / (a.s - l)));
    }
    checks.push_back(check("tau_atoms", static_cast<double>(model.atoms.size()), 0.0, true, true));
    checks.push_back(at_most("tau_cross_validation", cross, 1e-4));
    checks.push_back(at_most("atom_B_annihilation", bt_B, 1e-6));
    checks.push_back(at_most("atom_P_absorption", bt_P, 1e-8));
    checks.push_back(at_most("transform_of_resolvent", l67, 1e-6));
  }

  bool ok = true;
  for (const auto& c : checks) {
    if (!c.value("informational", false) && !c.at("pass").get<bool>()) ok = false;
  }
  json r;
  r["name"] = cfg.name;
  r["seed"] = kSeed;
  r["ok"] = ok;
  r["checks"] = checks;
  return r;
}

FatouReport fatou_report(const FatouSpec& spec) {
  std::ostringstream csv;
  csv << "s,r,quotient,tail_bound\n";
  json points = json::array();
  for (double s : spec.points) {
    const fatou::FatouScan scan = fatou::fatou_convergence_scan(spec.mu, spec.f, s, spec.radii, spec.delta);
    for (const auto& row : scan.rows) {
      csv << fmt(s) << "," << fmt(row.r) << "," << fmt(row.quotient) << "," << fmt(row.tail_bound) << "\n";
    }
    points.push_back({{"s", s},
                      {"f_at_s", spec.f.f(s)},
                      {"limit", scan.limit},
                      {"monotone", scan.monotone},
                      {"caveats", scan.caveats}});
  }
  json summary;
  summary["growth"] = spec.mu.growth();
  summary["sup_norm"] = spec.f.sup_norm;
  summary["delta"] = spec.delta;
  summary["points"] = points;
  return {csv.str(), summary};
}

int run(const std::string& command, const RunOptions& o, std::ostream& log) {
  try {
    if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
      throw ConfigError("command", "unknown command '" + command + "'");
    }
    ProblemConfig cfg = load_config(o.config);
    apply_overrides(cfg, o.overrides);
    const std::filesystem::path out(o.out);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw ConfigError("--out", "cannot create '" + o.out + "': " + ec.message());

    if (command == "fatou-demo") {
      if (!cfg.fatou) throw ConfigError("fatou", "missing");
      const FatouReport r = fatou_report(*cfg.fatou);
      write_file(out / "fatou.csv", r.csv);
      write_json(out / "fatou_summary.json", r.summary);
      return 0;
    }
    if (command == "validate") {
      const json r = validate_report(cfg);
      write_json(out / "validate.json", r);
      for (const auto& i : r.at("issues")) {
        log << i.at("field").get<std::string>() << ": " << i.at("what").get<std::string>() << " (magnitude "
            << i.at("magnitude").get<double>() << ")\n";
      }
      return r.at("ok").get<bool>() ? 0 : 1;
    }
    if (command == "verify") {
      const json r = verify_report(cfg);
      write_json(out / "verify.json", r);
      for (const auto& c : r.at("checks")) {
        if (!c.at("pass").get<bool>()) log << "FAIL " << c.at("name").get<std::string>() << "\n";
      }
      if (r.at("ok").get<bool>()) return 0;
      return r.at("checks").at(0).at("pass").get<bool>() ? 3 : 1;
    }
    if (!validate_report(cfg).at("ok").get<bool>()) {
      throw StructuralError("config does not validate; run 'validate' for details");
    }
    const SpectralProblem p = make_problem(cfg);
    if (command == "analyze") {
      write_json(out / "analyze.json", analyze_report(p));
    } else if (command == "mfun") {
      write_file(out / "mfun.csv", mfun_csv(p, cfg.lambda_grid.empty() ? default_grid() : cfg.lambda_grid));
    } else if (command == "eigen") {
      const auto r = cfg.range.value_or(std::make_pair(-5.5, 5.5));
      write_file(out / "eigen.csv", eigen_csv(eigen_scan(p, r.first, r.second)));
    } else if (command == "tau") {
      const auto r = cfg.range.value_or(std::make_pair(-5.5, 5.5));
      ModelOptions mo;
      mo.eps = cfg.eps;
      write_json(out / "tau.json", tau_report(spectral_measure_model(p, r.first, r.second, mo)));
    } else if (command == "expand") {
      if (!cfg.expand) throw ConfigError("expand", "missing");
      const ExpandReport r = expand_report(p, *cfg.expand, cfg.eps);
      write_file(out / "expand.csv", r.csv);
      write_json(out / "expand_summary.json", r.summary);
    }
    return 0;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const json::exception& e) {
    log << "error: malformed config: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::config);
  }
}

}  // namespace mspec::app
