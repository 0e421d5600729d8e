#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ioncount/pipeline.hpp"

namespace pipeline = ioncount::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Counted ion implantation simulator and analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::string in_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("-c,--config", config_path, "INI configuration file")
      ->required();
  app.add_option("-o,--out", out_dir, "output directory");
  app.add_option("-i,--in", in_dir, "input directory (defaults to --out)");
  app.add_option("-s,--seed", seed, "override [run] master_seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* sim = app.add_subcommand("simulate", "generate raw data");
  sim->require_subcommand(1);
  auto* sim_implant = sim->add_subcommand("implant", "pulse trains and SCA counts");
  auto* sim_pl = sim->add_subcommand("pl", "emitter activation and confocal map");
  auto* sim_hbt = sim->add_subcommand("hbt", "photon timestamps for candidate sites");

  auto* ana = app.add_subcommand("analyze", "analyze persisted artifacts");
  ana->require_subcommand(1);
  auto* ana_pulses = ana->add_subcommand("pulses", "mixture fit, error budgets, site counts");
  auto* ana_pl = ana->add_subcommand("pl", "spot fits and activation yield");
  auto* ana_hbt = ana->add_subcommand("hbt", "correlate, fit g2, classify emitters");

  pipeline::HbtAnalysisOptions hbt_opts;
  ana_hbt->add_option("--bin-ns", hbt_opts.bin_ns, "correlator bin width");
  ana_hbt->add_option("--window-ns", hbt_opts.window_ns, "correlator window half width");
  ana_hbt->add_option("--rho", hbt_opts.rho, "signal fraction override for background correction");

  auto* report = app.add_subcommand("report", "aggregate analysis outputs");
  auto* run = app.add_subcommand("run", "full pipeline plus manifest");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = ioncount::config::load_config(config_path);
    const std::uint64_t master = seed_set ? seed : cfg.master_seed;
    const std::string in = in_dir.empty() ? out_dir : in_dir;

    try {
      if (sim_implant->parsed()) {
        pipeline::simulate_implant(cfg, master, out_dir);
      } else if (sim_pl->parsed()) {
        pipeline::simulate_pl(cfg, master, in, out_dir);
      } else if (sim_hbt->parsed()) {
        pipeline::simulate_hbt(cfg, master, in, out_dir);
      } else if (ana_pulses->parsed()) {
        const auto res = pipeline::analyze_pulses(cfg, in, out_dir);
        std::printf("lambda_hat %.5f  site mean %.2f  FWHM %.2f\n",
                    res.lambda_hat, res.recon.mean, res.recon.fwhm);
      } else if (ana_pl->parsed()) {
        const auto res = pipeline::analyze_pl(cfg, in, out_dir);
        std::printf("emitters/site %.3f +%.3f/-%.3f  yield %.2f%%\n",
                    res.yield.lambda_hat, res.yield.lambda_sigma_plus,
                    res.yield.lambda_sigma_minus, 100.0 * res.yield.yield);
      } else if (ana_hbt->parsed()) {
        const auto res = pipeline::analyze_hbt(cfg, in, out_dir, hbt_opts);
        for (const auto& s : res)
          std::printf("site %d  g2(0) %.3f  N %.2f\n", s.site, s.g2_zero, s.n_fit);
      } else if (report->parsed()) {
        pipeline::write_report(cfg, in, out_dir);
        std::fputs(pipeline::read_file(
                       std::filesystem::path(out_dir) / "report.txt").c_str(),
                   stdout);
      } else if (run->parsed()) {
        pipeline::run_pipeline(cfg, master, out_dir);
        std::fputs(pipeline::read_file(
                       std::filesystem::path(out_dir) / "report.txt").c_str(),
                   stdout);
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  } catch (const ioncount::config::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
