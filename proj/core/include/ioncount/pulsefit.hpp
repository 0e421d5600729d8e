#pragma once

#include <optional>
#include <vector>

#include "ioncount/controller.hpp"

namespace ioncount::pulsefit {

struct AmplitudeHistogram {
  std::vector<double> bin_edges;  // strictly increasing, size = counts + 1
  std::vector<long long> counts;

  long long total() const;
  double center(std::size_t i) const {
    return 0.5 * (bin_edges[i] + bin_edges[i + 1]);
  }
  double bin_width() const { return bin_edges[1] - bin_edges[0]; }
};

struct GaussianPeak {
  double area = 0.0;   // events
  double mean = 0.0;   // V
  double sigma = 0.0;  // V
};

struct MixtureFit {
  std::vector<GaussianPeak> peaks;  // sorted by mean
  double residual_rms = 0.0;        // weighted residual RMS per bin
  bool converged = false;
};

// Classification thresholds. in_situ is the live SCA threshold; post_low and
// post_high bound the 1-ion bin in the ex-situ analysis.
struct Thresholds {
  double in_situ = 0.78;
  double post_low = 0.6;
  double post_high = 1.96;

  void validate() const;
};

// Signed per-channel error rates, all relative to the 1-ion peak area.
struct ErrorBudget {
  double fn_rate = 0.0;
  double fp_rate = 0.0;
  double mult_rate = 0.0;
  double single_as_double_rate = 0.0;
  double total_plus() const { return fn_rate + mult_rate; }
  double total_minus() const { return fp_rate + single_as_double_rate; }
};

AmplitudeHistogram build_histogram(const std::vector<controller::PulseRecord>& records,
                                   double bin_width);

// Weighted nonlinear least-squares fit of n_peaks Gaussians to the binned
// histogram. Peaks are initialized from smoothed local maxima; throws if the
// histogram has fewer maxima than requested or the fit fails to converge.
MixtureFit fit_mixture(const AmplitudeHistogram& hist, int n_peaks = 3);

// Poisson identity P(1)/P(0) = lambda, from the fitted peak areas.
double estimate_lambda(const MixtureFit& fit);

// P(>=2 | >=1 counted as one) = P(>=2)/P(1) for a Poisson beam.
double multiples_rate(double lambda);

// In-situ budget: tails of the fitted peaks across the live SCA threshold
// plus the Poisson multiples term. No upper threshold, so no
// single-as-double channel.
ErrorBudget in_situ_budget(const MixtureFit& fit, const Thresholds& th);

// Post-implantation budget: tails across the two ex-situ bin edges.
ErrorBudget post_budget(const MixtureFit& fit, const Thresholds& th);

// Poisson shot-noise fraction for a timed implant of n ions: 1/sqrt(n).
double timed_error(int n_ions);

enum class RoundingMode { clamp_at_two, nearest_multiple };

// Ex-situ per-pulse classification into 0, 1 or >=2 ions. In
// nearest_multiple mode amplitudes above post_high round to amplitude/mu1.
int classify_pulse(double amplitude, const Thresholds& th,
                   RoundingMode mode = RoundingMode::clamp_at_two,
                   double mu1 = 0.0);

struct SiteReconstruction {
  std::vector<int> per_site;   // ex-situ ion count per site
  double mean = 0.0;           // fitted Gaussian mean
  double sigma = 0.0;          // fitted Gaussian sigma
  double fwhm = 0.0;           // 2.355 * sigma
  double timed_sigma = 0.0;    // preset * timed_error(preset)
  double timed_fwhm = 0.0;
};

// Per-site ion counts from ex-situ classification of every pulse, plus a
// single-Gaussian fit to their histogram and the timed-implantation overlay.
SiteReconstruction reconstruct_sites(const std::vector<controller::SiteLog>& logs,
                                     const Thresholds& th, int preset,
                                     RoundingMode mode = RoundingMode::clamp_at_two,
                                     double mu1 = 0.0);

}  // namespace ioncount::pulsefit
