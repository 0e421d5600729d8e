#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ioncount/config.hpp"

namespace ioncount::pipeline {

namespace fs = std::filesystem;

// Thrown when a stage is asked to run before its inputs exist.
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- artifact read/write -------------------------------------------------

// write-then-rename; partial files never land under their final name.
void atomic_write(const fs::path& path, const std::string& content);

std::string read_file(const fs::path& path);

std::uint64_t hash_file(const fs::path& path);

// ---- stages ----------------------------------------------------------------

// Implant simulation. Writes pulses.csv, site_summary.csv, calibration.csv
// and ibic.csv into out.
void simulate_implant(const config::RunConfig& cfg, std::uint64_t seed,
                      const fs::path& out);

struct PulseAnalysis {
  pulsefit::MixtureFit fit;
  double lambda_hat = 0.0;
  pulsefit::ErrorBudget in_situ;
  pulsefit::ErrorBudget post;
  pulsefit::SiteReconstruction recon;
  bool fp_exceeds_ppb = false;  // fitted 0-peak tail above 1 ppb at the SCA threshold
};

// Ex-situ pulse analysis. Reads pulses.csv from in; writes histogram.csv,
// mixture.csv, budget.csv, sites.csv, site_fit.csv into out.
PulseAnalysis analyze_pulses(const config::RunConfig& cfg, const fs::path& in,
                             const fs::path& out);

// Emitter activation + confocal map synthesis. Reads site_summary.csv;
// writes emitters_true.csv and plmap.csv.
void simulate_pl(const config::RunConfig& cfg, std::uint64_t seed,
                 const fs::path& in, const fs::path& out);

struct PlAnalysis {
  activation::YieldEstimate yield;
  std::vector<int> emitter_counts;  // per site, estimated
};

// Spot fitting, count-rate binning, Poisson yield fit. Reads plmap.csv,
// emitters_true.csv and sites.csv; writes emitters.csv, emitter_hist.csv,
// yield.csv.
PlAnalysis analyze_pl(const config::RunConfig& cfg, const fs::path& in,
                      const fs::path& out);

// Photon-stream simulation for HBT candidate sites (estimated >= 1 emitter,
// amplitude below the candidate cutoff). Reads emitters.csv; writes
// hbt_sites.csv and per-site timestamp files (integer picoseconds).
void simulate_hbt(const config::RunConfig& cfg, std::uint64_t seed,
                  const fs::path& in, const fs::path& out);

struct HbtAnalysisOptions {
  double bin_ns = 0.0;     // 0: take from config
  double window_ns = 0.0;  // 0: take from config
  double rho = 0.0;        // 0: per-site value from hbt_sites.csv
};

struct HbtSiteResult {
  int site = 0;
  int n_sim = 0;  // simulated emitter count (ground truth)
  double g2_zero = 0.0;
  double n_fit = 0.0;
  double a = 0.0;
  double t1_ns = 0.0;
  double t2_ns = 0.0;
  double rho = 1.0;
  correlation::SpeClass cls = correlation::SpeClass::none;
};

// Correlates and fits each candidate site. Writes g2_site_<id>.csv per site
// and hbt_summary.csv.
std::vector<HbtSiteResult> analyze_hbt(const config::RunConfig& cfg,
                                       const fs::path& in, const fs::path& out,
                                       const HbtAnalysisOptions& opts = {});

// Three-column error table (timed / in-situ / post-analysis), CSV and text.
std::string emit_table1_csv(int preset, const pulsefit::ErrorBudget& in_situ,
                            const pulsefit::ErrorBudget& post);
std::string emit_table1_text(int preset, const pulsefit::ErrorBudget& in_situ,
                             const pulsefit::ErrorBudget& post);

// Aggregates persisted stage outputs into report.txt, report.json,
// table1.csv, table1.txt and nv_separation.csv.
void write_report(const config::RunConfig& cfg, const fs::path& in,
                  const fs::path& out);

struct RunSummary {
  PulseAnalysis pulses;
  PlAnalysis pl;
  std::vector<HbtSiteResult> hbt;
};

// Full pipeline: implant -> pulse analysis -> activation -> PL analysis ->
// HBT -> report, all into out, followed by manifest.json.
RunSummary run_pipeline(const config::RunConfig& cfg, std::uint64_t seed,
                        const fs::path& out);

}  // namespace ioncount::pipeline
