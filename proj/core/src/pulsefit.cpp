#include "ioncount/pulsefit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ioncount/levmar.hpp"
#include "ioncount/stats.hpp"

namespace ioncount::pulsefit {

namespace {

constexpr double kFwhmPerSigma = 2.355;
constexpr double kSqrt2Pi = 2.50662827463100050;

double peak_density(const GaussianPeak& p, double x) {
  const double z = (x - p.mean) / p.sigma;
  return p.area / (p.sigma * kSqrt2Pi) * std::exp(-0.5 * z * z);
}

// Area of a fitted peak over [lo, hi], by quadrature. The closed-form
// normal_cdf route is reserved for the oracle side of the tests.
double peak_area_between(const GaussianPeak& p, double lo, double hi) {
  return gaussian_area_between(p.area, p.mean, p.sigma, lo, hi);
}

struct PeakSeed {
  double position;
  double height;
};

std::vector<PeakSeed> find_peak_seeds(const AmplitudeHistogram& hist,
                                      int n_peaks) {
  const std::size_t n = hist.counts.size();
  // Moving-average smoothing, window ~0.15 V.
  int half = std::max(1, static_cast<int>(0.075 / hist.bin_width()));
  std::vector<double> smooth(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    int m = 0;
    for (int j = -half; j <= half; ++j) {
      const long long k = static_cast<long long>(i) + j;
      if (k < 0 || k >= static_cast<long long>(n)) continue;
      s += static_cast<double>(hist.counts[k]);
      ++m;
    }
    smooth[i] = s / m;
  }

  // Local maxima with a minimum separation of 0.4 V.
  std::vector<PeakSeed> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1] &&
        smooth[i] > 0.0)
      maxima.push_back({hist.center(i), smooth[i]});
  }
  std::sort(maxima.begin(), maxima.end(),
            [](const PeakSeed& a, const PeakSeed& b) { return a.height > b.height; });
  std::vector<PeakSeed> seeds;
  for (const auto& m : maxima) {
    bool tooClose = false;
    for (const auto& s : seeds)
      if (std::abs(s.position - m.position) < 0.4) tooClose = true;
    if (!tooClose) seeds.push_back(m);
    if (static_cast<int>(seeds.size()) == n_peaks) break;
  }
  std::sort(seeds.begin(), seeds.end(),
            [](const PeakSeed& a, const PeakSeed& b) { return a.position < b.position; });
  return seeds;
}

MixtureFit fit_gaussians(const AmplitudeHistogram& hist,
                         std::vector<GaussianPeak> init) {
  const int n_peaks = static_cast<int>(init.size());
  const int n_bins = static_cast<int>(hist.counts.size());
  const double bw = hist.bin_width();

  auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    for (int i = 0; i < n_bins; ++i) {
      const double x = hist.center(i);
      double model = 0.0;
      for (int k = 0; k < n_peaks; ++k) {
        GaussianPeak g{std::abs(p[3 * k]), p[3 * k + 1], std::abs(p[3 * k + 2])};
        // A component narrower than a bin can only chase noise spikes.
        if (g.sigma < bw) g.sigma = bw;
        model += peak_density(g, x) * bw;
      }
      const double w = std::sqrt(std::max<double>(hist.counts[i], 1.0));
      r[i] = (model - static_cast<double>(hist.counts[i])) / w;
    }
  };

  std::vector<double> p0;
  for (const auto& g : init) {
    p0.push_back(g.area);
    p0.push_back(g.mean);
    p0.push_back(g.sigma);
  }
  // Counting noise floors the cost decrease far above the generic defaults.
  LevMarOptions opts;
  opts.max_iterations = 600;
  opts.ftol = 1e-9;
  opts.xtol = 1e-9;
  auto res = levmar_fit(residuals, p0, n_bins, opts);

  MixtureFit fit;
  for (int k = 0; k < n_peaks; ++k) {
    fit.peaks.push_back({std::abs(res.params[3 * k]), res.params[3 * k + 1],
                         std::max(std::abs(res.params[3 * k + 2]), bw)});
  }
  std::sort(fit.peaks.begin(), fit.peaks.end(),
            [](const GaussianPeak& a, const GaussianPeak& b) { return a.mean < b.mean; });
  fit.residual_rms = std::sqrt(2.0 * res.cost / n_bins);
  fit.converged = res.converged;
  if (!fit.converged)
    throw std::runtime_error("fit_mixture: no convergence after max iterations");
  // Two components landing on the same feature means the peak assignment
  // degenerated; report that instead of returning a misleading mixture.
  for (std::size_t k = 1; k < fit.peaks.size(); ++k) {
    if (fit.peaks[k].mean - fit.peaks[k - 1].mean < 0.4)
      throw std::runtime_error("fit_mixture: peaks collapsed onto one feature");
  }
  return fit;
}

}  // namespace

long long AmplitudeHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0LL);
}

void Thresholds::validate() const {
  if (!(0.0 < post_low && post_low < in_situ && in_situ < post_high))
    throw std::invalid_argument(
        "Thresholds: need 0 < post_low < in_situ < post_high");
}

AmplitudeHistogram build_histogram(const std::vector<controller::PulseRecord>& records,
                                   double bin_width) {
  if (bin_width <= 0.0)
    throw std::invalid_argument("build_histogram: bin width must be positive");
  if (records.empty())
    throw std::invalid_argument("build_histogram: empty record set");
  double lo = records.front().amplitude;
  double hi = lo;
  for (const auto& r : records) {
    lo = std::min(lo, r.amplitude);
    hi = std::max(hi, r.amplitude);
  }
  const long long first = static_cast<long long>(std::floor(lo / bin_width)) - 1;
  const long long last = static_cast<long long>(std::ceil(hi / bin_width)) + 1;
  const std::size_t n = static_cast<std::size_t>(last - first);

  AmplitudeHistogram hist;
  hist.bin_edges.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    hist.bin_edges[i] = (first + static_cast<long long>(i)) * bin_width;
  hist.counts.assign(n, 0);
  for (const auto& r : records) {
    auto idx = static_cast<std::size_t>(
        std::floor(r.amplitude / bin_width) - first);
    if (idx >= n) idx = n - 1;
    ++hist.counts[idx];
  }
  return hist;
}

MixtureFit fit_mixture(const AmplitudeHistogram& hist, int n_peaks) {
  if (n_peaks < 1) throw std::invalid_argument("fit_mixture: n_peaks >= 1");
  auto seeds = find_peak_seeds(hist, n_peaks);
  if (static_cast<int>(seeds.size()) < n_peaks)
    throw std::runtime_error("fit_mixture: fewer local maxima than peaks");

  std::vector<GaussianPeak> init;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    double sep;
    if (seeds.size() == 1) {
      sep = 0.5;
    } else if (k == 0) {
      sep = seeds[1].position - seeds[0].position;
    } else {
      sep = seeds[k].position - seeds[k - 1].position;
    }
    // Moment estimates over the half-separation window around the maximum.
    const double lo = seeds[k].position - 0.5 * sep;
    const double hi = seeds[k].position + 0.5 * sep;
    double n = 0.0, sx = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      const double x = hist.center(i);
      if (x < lo || x > hi) continue;
      const double w = static_cast<double>(hist.counts[i]);
      n += w;
      sx += w * x;
      sxx += w * x * x;
    }
    GaussianPeak g;
    if (n > 0.0) {
      g.mean = sx / n;
      const double var = sxx / n - g.mean * g.mean;
      g.sigma = std::clamp(std::sqrt(std::max(var, 0.0)), 0.05 * sep, 0.5 * sep);
      g.area = n;
    } else {
      g.mean = seeds[k].position;
      g.sigma = 0.25 * sep;
      g.area = seeds[k].height * g.sigma * kSqrt2Pi / hist.bin_width();
    }
    init.push_back(g);
  }
  return fit_gaussians(hist, init);
}

double estimate_lambda(const MixtureFit& fit) {
  if (fit.peaks.size() < 2)
    throw std::invalid_argument("estimate_lambda: need at least 2 peaks");
  const double a0 = fit.peaks[0].area;
  if (a0 <= 0.0) throw std::runtime_error("estimate_lambda: zero-ion area is 0");
  return fit.peaks[1].area / a0;
}

double multiples_rate(double lambda) {
  if (lambda <= 0.0) return 0.0;  // limit lambda/2 -> 0
  const double e = std::exp(-lambda);
  return (1.0 - e * (1.0 + lambda)) / (lambda * e);
}

ErrorBudget in_situ_budget(const MixtureFit& fit, const Thresholds& th) {
  th.validate();
  if (fit.peaks.size() < 2)
    throw std::invalid_argument("in_situ_budget: need >= 2 fitted peaks");
  const auto& p0 = fit.peaks[0];
  const auto& p1 = fit.peaks[1];
  ErrorBudget b;
  b.fn_rate = peak_area_between(p1, -1e9, th.in_situ) / p1.area;
  b.fp_rate = peak_area_between(p0, th.in_situ, 1e9) / p1.area;
  b.mult_rate = multiples_rate(estimate_lambda(fit));
  b.single_as_double_rate = 0.0;  // upper threshold disabled in situ
  return b;
}

ErrorBudget post_budget(const MixtureFit& fit, const Thresholds& th) {
  th.validate();
  if (fit.peaks.size() < 2)
    throw std::invalid_argument("post_budget: need >= 2 fitted peaks");
  const auto& p0 = fit.peaks[0];
  const auto& p1 = fit.peaks[1];
  ErrorBudget b;
  b.fn_rate = peak_area_between(p1, -1e9, th.post_low) / p1.area;
  b.fp_rate = peak_area_between(p0, th.post_low, 1e9) / p1.area;
  if (fit.peaks.size() >= 3) {
    const auto& p2 = fit.peaks[2];
    b.mult_rate = peak_area_between(p2, -1e9, th.post_high) / p1.area;
  }
  b.single_as_double_rate = peak_area_between(p1, th.post_high, 1e9) / p1.area;
  return b;
}

double timed_error(int n_ions) {
  if (n_ions < 1) throw std::invalid_argument("timed_error: n >= 1");
  return 1.0 / std::sqrt(static_cast<double>(n_ions));
}

int classify_pulse(double amplitude, const Thresholds& th, RoundingMode mode,
                   double mu1) {
  th.validate();
  if (amplitude <= th.post_low) return 0;
  if (amplitude <= th.post_high) return 1;
  if (mode == RoundingMode::nearest_multiple && mu1 > 0.0)
    return std::max(2, static_cast<int>(std::lround(amplitude / mu1)));
  return 2;
}

SiteReconstruction reconstruct_sites(const std::vector<controller::SiteLog>& logs,
                                     const Thresholds& th, int preset,
                                     RoundingMode mode, double mu1) {
  if (logs.size() < 30)
    throw std::invalid_argument("reconstruct_sites: need >= 30 sites");
  SiteReconstruction rec;
  rec.per_site.reserve(logs.size());
  for (const auto& log : logs) {
    int total = 0;
    for (const auto& p : log.pulses)
      total += classify_pulse(p.amplitude, th, mode, mu1);
    rec.per_site.push_back(total);
  }

  const auto [mn, mx] = std::minmax_element(rec.per_site.begin(), rec.per_site.end());
  rec.timed_sigma = preset * timed_error(preset);
  rec.timed_fwhm = kFwhmPerSigma * rec.timed_sigma;

  if (*mn == *mx) {
    // Every site identical: fit is bin-limited.
    rec.mean = *mn;
    rec.fwhm = 1.0;
    rec.sigma = rec.fwhm / kFwhmPerSigma;
    return rec;
  }

  // Unit-width histogram of the per-site counts, single-Gaussian fit.
  AmplitudeHistogram hist;
  const int lo = *mn - 1;
  const int hi = *mx + 1;
  for (int v = lo; v <= hi + 1; ++v) hist.bin_edges.push_back(v - 0.5);
  hist.counts.assign(hi - lo + 1, 0);
  for (int v : rec.per_site) ++hist.counts[v - lo];

  std::vector<double> vals(rec.per_site.begin(), rec.per_site.end());
  GaussianPeak init{static_cast<double>(rec.per_site.size()), mean(vals),
                    std::max(0.5, sample_stddev(vals))};
  auto fit = fit_gaussians(hist, {init});
  rec.mean = fit.peaks[0].mean;
  rec.sigma = fit.peaks[0].sigma;
  rec.fwhm = kFwhmPerSigma * rec.sigma;
  return rec;
}

}  // namespace ioncount::pulsefit
