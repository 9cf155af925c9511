#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_triangle_options(CLI::App* sub, std::string& path, bool& cumulative) {
  sub->add_option("triangle", path, "Triangle CSV, one accident year per line")->required()->check(CLI::ExistingFile);
  sub->add_flag("--cumulative", cumulative, "Input rows hold cumulative amounts");
}

void add_bootstrap_options(CLI::App* sub, cli::BootstrapArgs& a) {
  add_triangle_options(sub, a.triangle, a.cumulative);
  sub->add_option("--method", a.method, "Bootstrap engine")
      ->check(CLI::IsMember({"tcl", "cb", "wb", "ifb", "frb"}))
      ->capture_default_str();
  sub->add_option("--residuals", a.residuals, "Residual variant")
      ->check(CLI::IsMember({"raw", "england", "pinheiro", "cordeiro"}))
      ->capture_default_str();
  sub->add_option("--replicates,-B", a.replicates, "Number of bootstrap replicates")->capture_default_str();
  sub->add_option("--seed", a.seed, "Master seed")->capture_default_str();
  sub->add_option("--levels", a.levels, "Quantile levels")->delimiter(',')->capture_default_str();
  sub->add_option("--huber-c", a.huber_c, "Huber tuning constant")->capture_default_str();
  sub->add_option("--ifb-d", a.ifb_d, "IFB weight scale d")->capture_default_str();
  sub->add_option("--ifb-gamma", a.ifb_gamma, "IFB weight tail gamma")->capture_default_str();
  sub->add_option("--ifb-quantile", a.ifb_quantile, "IFB cutoff quantile level")->capture_default_str();
  sub->add_option("--winsor-fraction", a.winsor_fraction, "WB winsorized fraction per tail")->capture_default_str();
  sub->add_option("--threads", a.threads, "Worker threads, 0 for all cores")->capture_default_str();
  sub->add_option("--bins", a.bins, "Histogram bins")->capture_default_str();
  sub->add_option("--reference", a.reference, "replicates.csv of another run, for QQ pairs")
      ->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chain-ladder reserving with robust fits and bootstraps"};
  app.set_version_flag("--version", std::string(CHAINLADDER_VERSION));
  app.require_subcommand(1);
  std::string out_dir = "out";
  app.add_option("--output,-o", out_dir, "Output directory")->capture_default_str();

  cli::ReserveArgs reserve;
  auto* s_reserve = app.add_subcommand("reserve", "Classical and robust point reserves");
  add_triangle_options(s_reserve, reserve.triangle, reserve.cumulative);
  s_reserve->add_option("--huber-c", reserve.huber_c, "Huber tuning constant")->capture_default_str();
  s_reserve->add_option("--flag-threshold", reserve.flag_threshold, "Flag cells with weight below this")
      ->capture_default_str();

  cli::BootstrapArgs boot;
  auto* s_boot = app.add_subcommand("bootstrap", "Bootstrap predictive distribution of the reserve");
  add_bootstrap_options(s_boot, boot);

  cli::BootstrapArgs cdr;
  auto* s_cdr = app.add_subcommand("cdr", "One-year claims development result bootstrap");
  add_bootstrap_options(s_cdr, cdr);

  cli::ConfigFileArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate a full square from a model config");
  s_sim->add_option("config", sim.config, "JSON simulation config")->required()->check(CLI::ExistingFile);

  cli::ConfigFileArgs cov;
  auto* s_cov = app.add_subcommand("coverage", "Coverage study over simulated datasets");
  s_cov->add_option("config", cov.config, "JSON simulation and coverage config")->required()->check(CLI::ExistingFile);
  s_cov->add_option("--threads", cov.threads, "Dataset workers, 0 to take the config value")->capture_default_str();

  cli::DiagnoseArgs diag;
  auto* s_diag = app.add_subcommand("diagnose", "Pearson residuals and robustness weights");
  add_triangle_options(s_diag, diag.triangle, diag.cumulative);
  s_diag->add_option("--huber-c", diag.huber_c, "Huber tuning constant")->capture_default_str();

  std::string manifest;
  auto* s_replay = app.add_subcommand("replay", "Re-run a manifest and compare output digests");
  s_replay->add_option("manifest", manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*s_reserve) cli::cmd_reserve(reserve, out_dir, std::cout);
    if (*s_boot) cli::cmd_bootstrap(boot, out_dir, std::cout);
    if (*s_cdr) cli::cmd_cdr(cdr, out_dir, std::cout);
    if (*s_sim) cli::cmd_simulate(sim, out_dir, std::cout);
    if (*s_cov) cli::cmd_coverage(cov, out_dir, std::cout);
    if (*s_diag) cli::cmd_diagnose(diag, out_dir, std::cout);
    if (*s_replay) {
      const int bad = cli::cmd_replay(manifest, out_dir, std::cout);
      if (bad > 0) {
        std::cerr << bad << " output(s) differ from the manifest\n";
        return cli::kExitReplayMismatch;
      }
    }
  } catch (...) {
    return cli::report_error(std::cerr);
  }
  return cli::kExitOk;
}
