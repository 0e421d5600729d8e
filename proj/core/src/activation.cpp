#include "ioncount/activation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ioncount/levmar.hpp"

namespace ioncount::activation {

void ActivationConfig::validate() const {
  if (yield_p < 0.0 || yield_p > 1.0)
    throw std::invalid_argument("ActivationConfig: yield_p in [0,1]");
  if (kcps_per_siv <= 0.0)
    throw std::invalid_argument("ActivationConfig: kcps_per_siv > 0");
  if (psf_sigma_um <= 0.0 || pixel_um <= 0.0 || pitch_um <= 0.0)
    throw std::invalid_argument("ActivationConfig: geometry must be positive");
}

int sample_activation(int n_ions, const ActivationConfig& cfg,
                      RandomStream& rng) {
  if (n_ions < 0) throw std::invalid_argument("sample_activation: n_ions >= 0");
  cfg.validate();
  return rng.binomial(n_ions, cfg.yield_p);
}

PlMap synthesize_pl_map(const std::vector<SiteEmitters>& sites,
                        const ActivationConfig& cfg, RandomStream& rng) {
  cfg.validate();
  double max_x = cfg.pitch_um, max_y = cfg.pitch_um;
  for (const auto& s : sites) {
    max_x = std::max(max_x, s.x_um);
    max_y = std::max(max_y, s.y_um);
  }
  const double margin = cfg.pitch_um;  // room for spot tails at the borders
  PlMap map;
  map.nx = static_cast<int>(std::ceil((max_x + 2.0 * margin) / cfg.pixel_um));
  map.ny = static_cast<int>(std::ceil((max_y + 2.0 * margin) / cfg.pixel_um));
  map.x_um.resize(map.nx);
  map.y_um.resize(map.ny);
  for (int i = 0; i < map.nx; ++i) map.x_um[i] = (i + 0.5) * cfg.pixel_um - margin;
  for (int i = 0; i < map.ny; ++i) map.y_um[i] = (i + 0.5) * cfg.pixel_um - margin;
  map.kcps.assign(static_cast<std::size_t>(map.nx) * map.ny,
                  cfg.background_kcps);

  const double s2 = 2.0 * cfg.psf_sigma_um * cfg.psf_sigma_um;
  const double reach = 5.0 * cfg.psf_sigma_um;
  for (const auto& site : sites) {
    for (int e = 0; e < site.n_siv; ++e) {
      const double ex = site.x_um + rng.normal(0.0, cfg.jitter_sigma_um);
      const double ey = site.y_um + rng.normal(0.0, cfg.jitter_sigma_um);
      const double amp = rng.normal(cfg.kcps_per_siv, cfg.kcps_sigma);
      const int ix0 = std::max(0, static_cast<int>((ex - reach + margin) / cfg.pixel_um));
      const int ix1 = std::min(map.nx - 1, static_cast<int>((ex + reach + margin) / cfg.pixel_um));
      const int iy0 = std::max(0, static_cast<int>((ey - reach + margin) / cfg.pixel_um));
      const int iy1 = std::min(map.ny - 1, static_cast<int>((ey + reach + margin) / cfg.pixel_um));
      for (int iy = iy0; iy <= iy1; ++iy) {
        for (int ix = ix0; ix <= ix1; ++ix) {
          const double dx = map.x_um[ix] - ex;
          const double dy = map.y_um[iy] - ey;
          map.kcps[static_cast<std::size_t>(iy) * map.nx + ix] +=
              amp * std::exp(-(dx * dx + dy * dy) / s2);
        }
      }
    }
  }
  return map;
}

SpotFit fit_spot(const PlMap& map, double center_x_um, double center_y_um,
                 double diameter_um, const ActivationConfig& cfg) {
  const double radius = 0.5 * diameter_um;
  std::vector<int> px, py;
  double vmax = 0.0, vmin = 1e300;
  for (int iy = 0; iy < map.ny; ++iy) {
    for (int ix = 0; ix < map.nx; ++ix) {
      const double dx = map.x_um[ix] - center_x_um;
      const double dy = map.y_um[iy] - center_y_um;
      if (dx * dx + dy * dy > radius * radius) continue;
      px.push_back(ix);
      py.push_back(iy);
      vmax = std::max(vmax, map.at(ix, iy));
      vmin = std::min(vmin, map.at(ix, iy));
    }
  }
  if (px.size() < 6)
    throw std::invalid_argument("fit_spot: window outside map or too small");

  SpotFit out;
  if (vmax - vmin < 1e-12) {
    // Flat window; nothing to fit.
    out.amplitude = 0.0;
    out.offset = vmin;
    out.x_um = center_x_um;
    out.y_um = center_y_um;
    out.sigma_um = cfg.psf_sigma_um;
    return out;
  }

  auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    const double amp = p[0];
    const double x0 = p[1];
    const double y0 = p[2];
    const double sig = std::max(1e-3, std::abs(p[3]));
    const double off = p[4];
    const double s2 = 2.0 * sig * sig;
    for (std::size_t i = 0; i < px.size(); ++i) {
      const double dx = map.x_um[px[i]] - x0;
      const double dy = map.y_um[py[i]] - y0;
      r[i] = off + amp * std::exp(-(dx * dx + dy * dy) / s2) -
             map.at(px[i], py[i]);
    }
  };

  std::vector<double> p0{vmax - vmin, center_x_um, center_y_um,
                         cfg.psf_sigma_um, vmin};
  auto fit = levmar_fit(residuals, p0, static_cast<int>(px.size()));
  if (!fit.converged) {
    out.amplitude = vmax - vmin;
    out.offset = vmin;
    out.x_um = center_x_um;
    out.y_um = center_y_um;
    out.sigma_um = cfg.psf_sigma_um;
    out.degraded = true;
    return out;
  }
  out.amplitude = std::abs(fit.params[0]);
  out.x_um = fit.params[1];
  out.y_um = fit.params[2];
  out.sigma_um = std::abs(fit.params[3]);
  out.offset = fit.params[4];
  return out;
}

int classify_site_rate(double amplitude_kcps, const ActivationConfig& cfg) {
  if (amplitude_kcps < 0.0)
    throw std::invalid_argument("classify_site_rate: amplitude >= 0");
  cfg.validate();
  // Bin centers at multiples of 10 kcps, half-width 5.
  const double spacing = 10.0 * std::round(cfg.kcps_per_siv / 10.0);
  return static_cast<int>(std::lround(amplitude_kcps / spacing));
}

YieldEstimate fit_poisson_yield(const std::vector<int>& counts,
                                double mean_ions) {
  if (counts.size() < 100)
    throw std::invalid_argument("fit_poisson_yield: need >= 100 sites");
  if (mean_ions <= 0.0)
    throw std::invalid_argument("fit_poisson_yield: mean_ions > 0");
  const auto prof = poisson_mle_profile(counts);
  YieldEstimate y;
  y.lambda_hat = prof.estimate;
  y.lambda_sigma_minus = prof.sigma_minus;
  y.lambda_sigma_plus = prof.sigma_plus;
  y.upper_bound_only = prof.upper_bound_only;
  y.mean_ions = mean_ions;
  y.yield = y.lambda_hat / mean_ions;
  y.yield_minus = prof.sigma_minus / mean_ions;
  y.yield_plus = prof.sigma_plus / mean_ions;
  return y;
}

}  // namespace ioncount::activation
