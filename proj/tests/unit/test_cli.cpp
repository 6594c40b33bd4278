#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "mspec/errors.hpp"
#include "mspec_app/app.hpp"

using namespace mspec;
using namespace mspec::app;
namespace fs = std::filesystem;

namespace {

std::string config(const std::string& name) { return std::string(MSPEC_CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mspec_unit_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code(const std::string& args) {
  const std::string cmd = std::string(MSPEC_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("real number spellings") {
    CHECK(parse_real("pi", "x") == doctest::Approx(kPi));
    CHECK(parse_real("-pi/2", "x") == doctest::Approx(-kPi / 2));
    CHECK(parse_real("2pi", "x") == doctest::Approx(2 * kPi));
    CHECK(parse_real(1.5, "x") == 1.5);
    CHECK(std::isinf(parse_real("-inf", "x")));
    CHECK_THROWS_AS(parse_real("tau", "x"), ConfigError);
  }

  TEST_CASE("config errors name the field") {
    json j = load_config(config("p4_degenerate_atom.json")).raw;
    j["q"]["atoms"][0]["matrix"] = json::array({json::array({1, 0})});
    try {
      parse_config(j);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "q.atoms[0].matrix");
    }
    json k = load_config(config("p4_degenerate_atom.json")).raw;
    k.erase("J");
    CHECK_THROWS_AS(parse_config(k), ConfigError);
  }

  TEST_CASE("validation issues carry field paths") {
    const json r = validate_report(load_config(config("bad_nonhermitian_q.json")));
    CHECK_FALSE(r.at("ok").get<bool>());
    REQUIRE(r.at("issues").size() >= 1);
    CHECK(r.at("issues")[0].at("field") == "q.atoms[0].matrix");
    CHECK(r.at("issues")[0].at("magnitude").get<double>() == doctest::Approx(1.0));
  }

  TEST_CASE("overrides") {
    ProblemConfig cfg = load_config(config("p1_free_dirichlet.json"));
    apply_overrides(cfg, {"pinv=1e-11,ode_rel=1e-9", "-1:1:0.5;0.1,1", "1e-2,1e-3", "-2:2"});
    CHECK(cfg.options.pinv_tol == 1e-11);
    CHECK(cfg.options.propagation.ode.rel_tol == 1e-9);
    CHECK(cfg.lambda_grid.size() == 10);
    CHECK(cfg.eps.eps == std::vector<double>{1e-2, 1e-3});
    CHECK(cfg.range->first == -2.0);
    CHECK_THROWS_AS(apply_overrides(cfg, {"bogus=1", "", "", ""}), ConfigError);
    CHECK(parse_lambda_grid("0.5+1i -1-2i").at(1) == Complex(-1, -2));
  }

  TEST_CASE("analyze reports partition and dimensions") {
    const json a = analyze_report(make_problem(load_config(config("p4_degenerate_atom.json"))));
    CHECK(a.at("N") == 1);
    CHECK(a.at("dim_B") == 1);
    CHECK(a.at("dim_ranP") == 3);
  }

  TEST_CASE("tau report round trip") {
    const SpectralProblem p = make_problem(load_config(config("p1_free_dirichlet.json")));
    const SpectralMeasureModel m = spectral_measure_model(p, -2.5, 2.5);
    const json j = tau_report(m);
    const SpectralMeasureModel back = tau_from_json(json::parse(j.dump()));
    REQUIRE(back.atoms.size() == m.atoms.size());
    for (std::size_t i = 0; i < m.atoms.size(); ++i) {
      CHECK(back.atoms[i].s == m.atoms[i].s);
      CHECK((back.atoms[i].weight - m.atoms[i].weight).norm() == 0.0);
    }
    CHECK((back.A - m.A).norm() == 0.0);
    CHECK((back.B - m.B).norm() == 0.0);
  }

  TEST_CASE("exit codes") {
    const fs::path out = scratch("exit");
    const std::string o = " --out " + out.string();
    CHECK(exit_code("validate --config " + config("p1_free_dirichlet.json") + o) == 0);
    CHECK(exit_code("validate --config " + config("bad_nonhermitian_q.json") + o) == 1);
    CHECK(exit_code("analyze --config " + config("bad_nonhermitian_q.json") + o) == 1);
    CHECK(exit_code("verify --config " + config("bad_nonhermitian_q.json") + o) == 1);
    CHECK(exit_code("analyze --config " + (out / "missing.json").string() + o) == 4);
    CHECK(exit_code("analyze --config " + config("p1_free_dirichlet.json") + " --range nonsense" + o) == 4);
    CHECK(exit_code("frobnicate --config " + config("p1_free_dirichlet.json") + o) == 4);
    CHECK(exit_code("fatou-demo --config " + config("fatou_demo.json") + o) == 0);
    CHECK(fs::exists(out / "fatou.csv"));
  }

  TEST_CASE("numerical failures map to exit code 2") {
    const fs::path out = scratch("numerical");
    std::ostringstream log;
    RunOptions o{config("p3_krein_string.json"), out.string(), {}};
    o.overrides.tol = "quadrature_rel=1e-300,quadrature_abs=1e-300";
    CHECK(run("analyze", o, log) == 2);
  }

  TEST_CASE("eigen output is deterministic") {
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    std::ostringstream log;
    REQUIRE(run("eigen", {config("p1_free_dirichlet.json"), a.string(), {}}, log) == 0);
    REQUIRE(run("eigen", {config("p1_free_dirichlet.json"), b.string(), {}}, log) == 0);
    const std::string s = slurp(a / "eigen.csv");
    CHECK(s == slurp(b / "eigen.csv"));
    CHECK(std::count(s.begin(), s.end(), '\n') == 12);
  }
}
