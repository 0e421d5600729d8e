#pragma once

#include <vector>

#include "ioncount/rng.hpp"
#include "ioncount/stats.hpp"

namespace ioncount::activation {

struct ActivationConfig {
  double yield_p = 0.0298;        // P(implanted ion -> optically active SiV)
  double kcps_per_siv = 10.7;     // confocal count rate per emitter
  double kcps_sigma = 0.2;        // emitter-to-emitter brightness spread
  double background_kcps = 0.0;
  double psf_sigma_um = 0.15;
  double jitter_sigma_um = 0.1;   // sub-pitch emitter placement jitter
  double pitch_um = 2.0;
  double pixel_um = 0.1;          // synthesized map resolution

  void validate() const;
};

struct SiteEmitters {
  int site_index = 0;
  int n_ions = 0;
  int n_siv = 0;             // 0 <= n_siv <= n_ions
  double x_um = 0.0;         // nominal site center
  double y_um = 0.0;
  double pl_amplitude = 0.0; // kcps, filled by analysis
};

struct PlMap {
  std::vector<double> x_um;   // pixel centers
  std::vector<double> y_um;
  std::vector<double> kcps;   // row-major [iy * nx + ix]
  int nx = 0;
  int ny = 0;

  double at(int ix, int iy) const { return kcps[static_cast<std::size_t>(iy) * nx + ix]; }
};

// Binomial activation of n_ions implanted ions.
int sample_activation(int n_ions, const ActivationConfig& cfg, RandomStream& rng);

// Confocal PL map: each activated emitter contributes a 2-D Gaussian spot of
// peak amplitude ~ Normal(kcps_per_siv, kcps_sigma), positioned at its site
// center plus placement jitter; flat background added everywhere.
PlMap synthesize_pl_map(const std::vector<SiteEmitters>& sites,
                        const ActivationConfig& cfg, RandomStream& rng);

struct SpotFit {
  double amplitude = 0.0;  // peak kcps above offset
  double x_um = 0.0;
  double y_um = 0.0;
  double sigma_um = 0.0;
  double offset = 0.0;
  bool degraded = false;   // fit did not converge; windowed max reported
};

// 2-D Gaussian least-squares fit over a circular window.
SpotFit fit_spot(const PlMap& map, double center_x_um, double center_y_um,
                 double diameter_um, const ActivationConfig& cfg);

// Count-rate binning into emitter numbers: bins k*10 +- 5 kcps.
int classify_site_rate(double amplitude_kcps, const ActivationConfig& cfg);

struct YieldEstimate {
  double lambda_hat = 0.0;     // mean emitters per site (Poisson MLE)
  double lambda_sigma_minus = 0.0;
  double lambda_sigma_plus = 0.0;
  double mean_ions = 0.0;
  double yield = 0.0;          // lambda_hat / mean_ions
  double yield_minus = 0.0;
  double yield_plus = 0.0;
  bool upper_bound_only = false;
};

// Poisson maximum-likelihood fit to the per-site emitter counts, asymmetric
// errors from the profile likelihood (delta logL = 1/2), yield from the mean
// implanted ion count.
YieldEstimate fit_poisson_yield(const std::vector<int>& counts,
                                double mean_ions);

}  // namespace ioncount::activation
