#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>

#include "ioncount/pipeline.hpp"

using namespace ioncount;
namespace fs = std::filesystem;

namespace {

// Reduced geometry so the whole pipeline runs in a couple of seconds.
config::RunConfig small_config() {
  return config::config_from_text(
      "[plan]\n"
      "rows = 4\n"
      "cols = 30\n"
      "arrays = 1\n"
      "[hbt]\n"
      "duration_ns = 5e5\n"
      "max_candidates = 3\n");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("full pipeline produces every artifact and a manifest") {
  const auto cfg = small_config();
  TempDir dir("ioncount_pipe_a");
  const auto sum = pipeline::run_pipeline(cfg, 5, dir.path);

  for (const char* name :
       {"pulses.csv", "site_summary.csv", "calibration.csv", "ibic.csv",
        "histogram.csv", "mixture.csv", "budget.csv", "sites.csv",
        "site_fit.csv", "pulse_analysis.json", "emitters_true.csv",
        "plmap.csv", "emitters.csv", "emitter_hist.csv", "yield.csv",
        "hbt_sites.csv", "hbt_summary.csv", "table1.csv", "table1.txt",
        "nv_separation.csv", "report.txt", "report.json", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(dir.path / name), name);
  }

  CHECK(sum.pulses.lambda_hat > 0.05);
  CHECK(sum.pulses.lambda_hat < 0.2);
  CHECK(sum.pulses.recon.mean > 31.0);
  CHECK(sum.pulses.recon.mean < 37.0);
  CHECK(static_cast<int>(sum.pl.emitter_counts.size()) ==
        cfg.plan.total_sites());
  CHECK(sum.hbt.size() <= 3);

  // The manifest names every artifact except itself.
  const std::string man = pipeline::read_file(dir.path / "manifest.json");
  CHECK(man.find("pulses.csv") != std::string::npos);
  CHECK(man.find("report.json") != std::string::npos);
  CHECK(man.find("\"seed\": 5") != std::string::npos);
}

TEST_CASE("same seed, byte-identical artifacts; different seed differs") {
  const auto cfg = small_config();
  TempDir a("ioncount_pipe_b1"), b("ioncount_pipe_b2"), c("ioncount_pipe_b3");
  pipeline::run_pipeline(cfg, 11, a.path);
  pipeline::run_pipeline(cfg, 11, b.path);
  pipeline::run_pipeline(cfg, 12, c.path);

  int compared = 0;
  for (const auto& e : fs::directory_iterator(a.path)) {
    const auto name = e.path().filename();
    CHECK(pipeline::read_file(a.path / name) == pipeline::read_file(b.path / name));
    ++compared;
  }
  CHECK(compared > 20);
  CHECK(pipeline::read_file(a.path / "pulses.csv") !=
        pipeline::read_file(c.path / "pulses.csv"));
}

TEST_CASE("analysis of persisted artifacts is idempotent") {
  const auto cfg = small_config();
  TempDir dir("ioncount_pipe_c");
  pipeline::simulate_implant(cfg, 13, dir.path);
  const auto r1 = pipeline::analyze_pulses(cfg, dir.path, dir.path);
  const auto r2 = pipeline::analyze_pulses(cfg, dir.path, dir.path);
  CHECK(r1.lambda_hat == doctest::Approx(r2.lambda_hat).epsilon(1e-12));
  CHECK(r1.recon.mean == doctest::Approx(r2.recon.mean).epsilon(1e-12));
}

TEST_CASE("stages demand their inputs") {
  const auto cfg = small_config();
  TempDir dir("ioncount_pipe_d");
  CHECK_THROWS_AS(pipeline::analyze_pulses(cfg, dir.path, dir.path),
                  pipeline::StageError);
  CHECK_THROWS_AS(pipeline::simulate_pl(cfg, 1, dir.path, dir.path),
                  pipeline::StageError);
  CHECK_THROWS_AS(pipeline::analyze_hbt(cfg, dir.path, dir.path),
                  pipeline::StageError);
}

TEST_CASE("atomic_write leaves no temp file behind") {
  TempDir dir("ioncount_pipe_e");
  pipeline::atomic_write(dir.path / "x.txt", "hello");
  CHECK(pipeline::read_file(dir.path / "x.txt") == "hello");
  int n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) ++n;
  CHECK(n == 1);
}

TEST_CASE("hash_file is content addressed") {
  TempDir dir("ioncount_pipe_f");
  pipeline::atomic_write(dir.path / "a", "same");
  pipeline::atomic_write(dir.path / "b", "same");
  pipeline::atomic_write(dir.path / "c", "other");
  CHECK(pipeline::hash_file(dir.path / "a") == pipeline::hash_file(dir.path / "b"));
  CHECK(pipeline::hash_file(dir.path / "a") != pipeline::hash_file(dir.path / "c"));
}
