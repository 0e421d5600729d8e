#include "ioncount/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ioncount/levmar.hpp"

namespace ioncount::correlation {

void G2ModelParams::validate() const {
  if (n_emitters < 1.0)
    throw std::invalid_argument("G2ModelParams: N >= 1");
  if (a < 0.0) throw std::invalid_argument("G2ModelParams: a >= 0");
  if (t1_ns <= 0.0 || t2_ns <= 0.0)
    throw std::invalid_argument("G2ModelParams: lifetimes must be positive");
}

double g2_model(double t_ns, const G2ModelParams& p) {
  p.validate();
  const double at = std::abs(t_ns);
  return 1.0 - 1.0 / p.n_emitters +
         (1.0 - (1.0 + p.a) * std::exp(-at / p.t1_ns) +
          p.a * std::exp(-at / p.t2_ns)) /
             p.n_emitters;
}

void BackgroundRatio::validate() const {
  if (!(0.0 <= background_kcps && background_kcps <= emitter_kcps))
    throw std::invalid_argument("BackgroundRatio: need 0 <= B <= E");
}

double background_correct(double g_exp, double rho) {
  if (rho <= 0.0 || rho > 1.0)
    throw std::invalid_argument("background_correct: rho in (0, 1]");
  const double r2 = rho * rho;
  return (g_exp - 1.0 + r2) / r2;
}

void EmitterDynamics::validate() const {
  if (k_ex < 0.0 || k_r < 0.0 || k_isc < 0.0 || k_d < 0.0)
    throw std::invalid_argument("EmitterDynamics: rates >= 0");
  if (collection < 0.0 || collection > 1.0)
    throw std::invalid_argument("EmitterDynamics: collection in [0,1]");
}

double EmitterDynamics::excited_state_occupation() const {
  const double s2 = k_d * (k_ex + k_r + k_isc) + k_ex * k_isc;
  if (s2 <= 0.0) return 0.0;
  return k_ex * k_d / s2;
}

double EmitterDynamics::detected_rate_per_ns() const {
  return excited_state_occupation() * k_r * collection;
}

PhotonStreams simulate_photon_streams(int n_emitters,
                                      const EmitterDynamics& dyn,
                                      double background_kcps,
                                      double duration_ns, RandomStream& rng) {
  dyn.validate();
  if (duration_ns <= 0.0)
    throw std::invalid_argument("simulate_photon_streams: duration > 0");
  if (n_emitters < 0)
    throw std::invalid_argument("simulate_photon_streams: n_emitters >= 0");

  PhotonStreams out;
  out.duration_ns = duration_ns;

  enum State { ground, excited, shelf };
  for (int e = 0; e < n_emitters; ++e) {
    RandomStream er = rng.child("emitter", e);
    State st = ground;
    double t = 0.0;
    while (true) {
      double total;
      switch (st) {
        case ground: total = dyn.k_ex; break;
        case excited: total = dyn.k_r + dyn.k_isc; break;
        case shelf: total = dyn.k_d; break;
      }
      if (total <= 0.0) break;
      t += er.exponential(total);
      if (t >= duration_ns) break;
      switch (st) {
        case ground:
          st = excited;
          break;
        case excited:
          if (er.uniform() <= dyn.k_r / total) {
            st = ground;  // radiative decay: photon
            if (er.bernoulli(dyn.collection)) {
              (er.bernoulli(0.5) ? out.det_a_ns : out.det_b_ns).push_back(t);
            }
          } else {
            st = shelf;
          }
          break;
        case shelf:
          st = ground;
          break;
      }
    }
  }

  if (background_kcps > 0.0) {
    RandomStream br = rng.child("background");
    const double rate_per_ns = background_kcps * 1e3 / 1e9;
    double t = br.exponential(rate_per_ns);
    while (t < duration_ns) {
      (br.bernoulli(0.5) ? out.det_a_ns : out.det_b_ns).push_back(t);
      t += br.exponential(rate_per_ns);
    }
  }

  std::sort(out.det_a_ns.begin(), out.det_a_ns.end());
  std::sort(out.det_b_ns.begin(), out.det_b_ns.end());
  return out;
}

CoincidenceHistogram coincidence_histogram(const std::vector<double>& ts_a_ns,
                                           const std::vector<double>& ts_b_ns,
                                           double duration_ns, double bin_ns,
                                           double window_ns) {
  if (bin_ns <= 0.0 || window_ns < bin_ns)
    throw std::invalid_argument("coincidence_histogram: bad bin/window");
  if (ts_a_ns.empty() || ts_b_ns.empty())
    throw std::invalid_argument("coincidence_histogram: empty photon stream");
  if (duration_ns <= 0.0)
    throw std::invalid_argument("coincidence_histogram: duration > 0");

  // Odd number of bins so one bin is centered on zero lag.
  const int half_bins = static_cast<int>(std::floor(window_ns / bin_ns));
  const int n_bins = 2 * half_bins + 1;
  const double lo = -(half_bins + 0.5) * bin_ns;

  CoincidenceHistogram h;
  h.bin_ns = bin_ns;
  h.window_ns = window_ns;
  h.lag_ns.resize(n_bins);
  h.raw_counts.assign(n_bins, 0);
  for (int i = 0; i < n_bins; ++i) h.lag_ns[i] = (i - half_bins) * bin_ns;

  // Two-pointer sweep over sorted streams.
  std::size_t jlo = 0;
  const double span = (half_bins + 0.5) * bin_ns;
  for (double ta : ts_a_ns) {
    while (jlo < ts_b_ns.size() && ts_b_ns[jlo] < ta - span) ++jlo;
    for (std::size_t j = jlo; j < ts_b_ns.size(); ++j) {
      const double lag = ts_b_ns[j] - ta;
      if (lag >= span) break;
      const int idx = static_cast<int>(std::floor((lag - lo) / bin_ns));
      if (idx >= 0 && idx < n_bins) ++h.raw_counts[idx];
    }
  }

  const double rate_a = ts_a_ns.size() / duration_ns;
  const double rate_b = ts_b_ns.size() / duration_ns;
  const double norm = rate_a * rate_b * bin_ns * duration_ns;
  h.g2.resize(n_bins);
  for (int i = 0; i < n_bins; ++i)
    h.g2[i] = static_cast<double>(h.raw_counts[i]) / norm;
  return h;
}

G2Fit fit_g2(const CoincidenceHistogram& hist, double rho) {
  if (hist.g2.empty()) throw std::invalid_argument("fit_g2: empty histogram");
  const int n = static_cast<int>(hist.g2.size());
  std::vector<double> corrected(n);
  for (int i = 0; i < n; ++i)
    corrected[i] = background_correct(hist.g2[i], rho);

  // Parameterize the dip depth p = 1/N in (0, 1]; p -> 0 is the flat limit.
  auto residuals = [&](const std::vector<double>& q, std::vector<double>& r) {
    const double p = q[0];
    const double a = std::abs(q[1]);
    const double t1 = std::max(1e-3, std::abs(q[2]));
    const double t2 = std::max(1e-3, std::abs(q[3]));
    for (int i = 0; i < n; ++i) {
      const double at = std::abs(hist.lag_ns[i]);
      const double model =
          1.0 - p * ((1.0 + a) * std::exp(-at / t1) - a * std::exp(-at / t2));
      r[i] = model - corrected[i];
    }
  };

  // Initialize from the central dip.
  double gmin = corrected[0];
  for (double v : corrected) gmin = std::min(gmin, v);
  const double p0 = std::clamp(1.0 - gmin, 0.01, 1.0);
  std::vector<double> init{p0, 0.2, 2.0, 6.0};
  // Shot noise on the histogram floors the attainable cost decrease well
  // above the generic defaults.
  LevMarOptions opts;
  opts.max_iterations = 400;
  opts.ftol = 1e-8;
  opts.xtol = 1e-8;
  auto res = levmar_fit(residuals, init, n, opts);
  if (!res.converged)
    throw std::runtime_error("fit_g2: no convergence after max iterations");

  const double p = res.params[0];
  G2Fit fit;
  if (p < 1e-3) {
    fit.no_antibunching = true;
    fit.params.n_emitters = 1e6;  // effectively flat
    fit.params.a = std::abs(res.params[1]);
    fit.params.t1_ns = std::abs(res.params[2]);
    fit.params.t2_ns = std::abs(res.params[3]);
    return fit;
  }
  fit.params.n_emitters = 1.0 / std::min(1.0, p);
  fit.params.a = std::abs(res.params[1]);
  fit.params.t1_ns = std::abs(res.params[2]);
  fit.params.t2_ns = std::abs(res.params[3]);
  fit.g2_zero_sigma = res.std_errors[0];
  fit.n_sigma = res.std_errors[0] / (p * p);  // delta method on N = 1/p
  fit.a_sigma = res.std_errors[1];
  fit.t1_sigma = res.std_errors[2];
  fit.t2_sigma = res.std_errors[3];
  return fit;
}

SpeClass classify_spe(const G2Fit& fit) {
  if (fit.no_antibunching) return SpeClass::none;
  const double g0 = fit.params.g2_zero();
  if (g0 < 0.5) return SpeClass::single;
  if (g0 <= 0.7) return SpeClass::multi;
  if (g0 < 1.0) return SpeClass::non_classical_only;
  return SpeClass::none;
}

double nv_separation_nm(double n_ppb, double conv_yield,
                        double carbon_density_cm3) {
  if (n_ppb <= 0.0 || conv_yield <= 0.0 || carbon_density_cm3 <= 0.0)
    throw std::invalid_argument("nv_separation_nm: inputs must be positive");
  const double density = n_ppb * 1e-9 * carbon_density_cm3 * conv_yield;
  return std::pow(density, -1.0 / 3.0) * 1e7;  // cm -> nm
}

}  // namespace ioncount::correlation
