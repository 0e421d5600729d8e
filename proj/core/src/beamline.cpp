#include "ioncount/beamline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ioncount/levmar.hpp"

namespace ioncount::beamline {

double BeamConfig::lambda_at(long long pulse_index) const {
  const double lam = lambda0 * (1.0 + drift_rate * static_cast<double>(pulse_index));
  return std::max(0.0, lam);
}

double DetectorConfig::amplitude_sigma(int ions) const {
  return std::sqrt(noise_sigma0 * noise_sigma0 +
                   ions * noise_sigma_ion * noise_sigma_ion);
}

int sample_pulse(const BeamConfig& beam, long long pulse_index,
                 RandomStream& rng) {
  if (pulse_index < 0)
    throw std::invalid_argument("sample_pulse: negative pulse index");
  return rng.poisson(beam.lambda_at(pulse_index));
}

double run_mean_lambda(const BeamConfig& beam, long long n_pulses) {
  if (n_pulses < 1)
    throw std::invalid_argument("run_mean_lambda: need n_pulses >= 1");
  // Closed form only holds while lambda stays unclamped; sum directly so a
  // ramp through zero is still handled.
  if (beam.lambda_at(0) > 0.0 && beam.lambda_at(n_pulses - 1) > 0.0) {
    return beam.lambda0 *
           (1.0 + beam.drift_rate * 0.5 * static_cast<double>(n_pulses - 1));
  }
  double sum = 0.0;
  for (long long t = 0; t < n_pulses; ++t) sum += beam.lambda_at(t);
  return sum / static_cast<double>(n_pulses);
}

double amplitude_for_ions(int ions, const DetectorConfig& det,
                          RandomStream& rng) {
  if (ions < 0) throw std::invalid_argument("amplitude_for_ions: k < 0");
  return rng.normal(ions * det.amplitude_per_ion(), det.amplitude_sigma(ions));
}

IbicMap simulate_ibic(const DetectorConfig& det, double width_um,
                      double height_um, double mean_ions_per_pulse,
                      RandomStream& rng, const IbicOptions& opts) {
  if (width_um <= 0.0 || height_um <= 0.0)
    throw std::invalid_argument("simulate_ibic: area must be positive");
  IbicMap map;
  map.nx = std::max(1, static_cast<int>(std::round(width_um / opts.cell_um)));
  map.ny = std::max(1, static_cast<int>(std::round(height_um / opts.cell_um)));
  map.x_um.resize(map.nx);
  map.y_um.resize(map.ny);
  for (int i = 0; i < map.nx; ++i) map.x_um[i] = (i + 0.5) * opts.cell_um;
  for (int i = 0; i < map.ny; ++i) map.y_um[i] = (i + 0.5) * opts.cell_um;
  map.cce.resize(static_cast<std::size_t>(map.nx) * map.ny);

  // Active region: rectangle inset by edge_margin_um; logistic roll-off with
  // scale edge_length_um on each side.
  auto edge = [&](double pos, double extent) {
    const double lo = opts.edge_margin_um;
    const double hi = extent - opts.edge_margin_um;
    const double l = opts.edge_length_um / 4.0;  // logistic scale
    return 1.0 / (1.0 + std::exp(-(pos - lo) / l)) *
           1.0 / (1.0 + std::exp((pos - hi) / l));
  };

  const double total_ions =
      std::max(1.0, mean_ions_per_pulse * opts.pulses_per_cell);
  for (int iy = 0; iy < map.ny; ++iy) {
    for (int ix = 0; ix < map.nx; ++ix) {
      const double truth =
          det.cce * edge(map.x_um[ix], width_um) * edge(map.y_um[iy], height_um);
      // Counting noise: per-cell estimate from a finite number of ions.
      const double sigma = truth > 0.0 ? truth * 0.05 / std::sqrt(total_ions) : 0.0;
      const double measured = rng.normal(truth, sigma);
      map.cce[static_cast<std::size_t>(iy) * map.nx + ix] =
          std::clamp(measured, 0.0, 1.0);
    }
  }
  return map;
}

std::vector<TracePoint> preamp_trace(int ions, const DetectorConfig& det,
                                     RandomStream& rng,
                                     const TraceOptions& opts) {
  if (ions < 0) throw std::invalid_argument("preamp_trace: k < 0");
  const double step = ions * det.preamp_step_per_ion();
  // Noise referred to the preamp output (shaper gain removed).
  const double noise = opts.noise_free ? 0.0 : det.noise_sigma0 / det.shaper_gain;
  const int n = static_cast<int>(opts.duration_us / opts.dt_us) + 1;
  std::vector<TracePoint> trace(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * opts.dt_us;
    double v = 0.0;
    if (t >= opts.step_at_us)
      v = step * std::exp(-(t - opts.step_at_us) / opts.decay_tau_us);
    if (noise > 0.0) v += rng.normal(0.0, noise);
    trace[i] = {t, v};
  }
  return trace;
}

double fit_trace_step_height(const std::vector<TracePoint>& trace,
                             double step_at_us) {
  if (trace.size() < 8)
    throw std::invalid_argument("fit_trace_step_height: trace too short");
  double vmax = 0.0;
  for (const auto& p : trace) vmax = std::max(vmax, p.volts);
  auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    const double height = p[0];
    const double tau = std::abs(p[1]);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const double t = trace[i].t_us;
      const double model =
          t >= step_at_us ? height * std::exp(-(t - step_at_us) / tau) : 0.0;
      r[i] = model - trace[i].volts;
    }
  };
  auto fit = levmar_fit(residuals, {vmax, 50.0},
                        static_cast<int>(trace.size()));
  return fit.params[0];
}

}  // namespace ioncount::beamline
