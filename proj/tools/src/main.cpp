#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "mspec_app/app.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Spectral analysis of first-order systems with measure coefficients"};
  cli.require_subcommand(1, 1);
  mspec::app::RunOptions opts;

  const std::map<std::string, std::string> help{
      {"validate", "Check the problem data; writes validate.json"},
      {"analyze", "Partition points, anchors, N_0 and range dimensions; writes analyze.json"},
      {"mfun", "M(lambda) on a grid with Nevanlinna diagnostics; writes mfun.csv"},
      {"tau", "Spectral measure model on --range; writes tau.json"},
      {"eigen", "Eigenvalues on --range; writes eigen.csv"},
      {"expand", "Eigenfunction expansion of the configured f; writes expand.csv and expand_summary.json"},
      {"verify", "Invariant suite with pass/fail per check; writes verify.json"},
      {"fatou-demo", "Poisson quotient scans; writes fatou.csv and fatou_summary.json"},
  };
  for (const auto& name : mspec::app::commands()) {
    CLI::App* sub = cli.add_subcommand(name, help.at(name));
    sub->add_option("--config", opts.config, "Problem definition (JSON)")->required();
    sub->add_option("--out", opts.out, "Output directory");
    sub->add_option("--tol-override", opts.overrides.tol, "Tolerance overrides, key=value[,key=value]");
    sub->add_option("--lambda-grid", opts.overrides.lambda_grid, "lo:hi:step;im1,im2 or explicit points");
    sub->add_option("--eps-schedule", opts.overrides.eps, "Comma separated epsilons, e.g. 1e-2,1e-3,1e-4");
    sub->add_option("--range", opts.overrides.range, "Spectral window lo:hi");
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    // Usage errors are configuration errors; --help stays 0.
    return rc == 0 ? 0 : 4;
  }
  const std::string command = cli.get_subcommands().front()->get_name();
  return mspec::app::run(command, opts, std::cerr);
}
