#pragma once

#include <vector>

#include "ioncount/rng.hpp"

namespace ioncount::beamline {

// Pulsed ion source. lambda(t) = lambda0 * (1 + drift_rate * t), clamped at 0.
struct BeamConfig {
  double lambda0 = 0.112;      // mean ions per pulse
  double drift_rate = 0.0;     // fractional change in lambda per pulse
  double pulse_length_ns = 225.0;  // metadata only

  double lambda_at(long long pulse_index) const;
};

// Detector and amplifier chain constants. The per-ion mean amplitude is
// (pairs_direct + pairs_recoil) * cce * volts_per_pair * shaper_gain.
struct DetectorConfig {
  double pairs_direct = 6.8e3;
  double pairs_recoil = 4.9e3;
  double cce = 0.83;               // charge-collection efficiency
  double volts_per_pair = 0.64e-6; // preamp volts per e-h pair
  double shaper_gain = 200.0;
  double noise_sigma0 = 0.193;     // V, width of the 0-ion peak
  double noise_sigma_ion = 0.242;  // V, added in quadrature per ion

  double pairs_per_ion() const { return pairs_direct + pairs_recoil; }
  double preamp_step_per_ion() const {
    return pairs_per_ion() * cce * volts_per_pair;
  }
  double amplitude_per_ion() const {
    return preamp_step_per_ion() * shaper_gain;
  }
  double amplitude_sigma(int ions) const;
};

// Poisson draw of the ion count in one pulse.
int sample_pulse(const BeamConfig& beam, long long pulse_index,
                 RandomStream& rng);

// Arithmetic mean of lambda(t) for t in [0, n_pulses).
double run_mean_lambda(const BeamConfig& beam, long long n_pulses);

// Spectroscopy-amplifier amplitude for a pulse carrying k ions.
double amplitude_for_ions(int ions, const DetectorConfig& det,
                          RandomStream& rng);

struct IbicMap {
  std::vector<double> x_um;    // cell centers
  std::vector<double> y_um;
  std::vector<double> cce;     // row-major [iy * nx + ix], values in [0, 1]
  int nx = 0;
  int ny = 0;

  double at(int ix, int iy) const { return cce[static_cast<std::size_t>(iy) * nx + ix]; }
};

struct IbicOptions {
  double cell_um = 1.0;
  double edge_margin_um = 5.0;     // plateau ends this far inside the scan
  double edge_length_um = 2.0;     // logistic roll-off scale
  int pulses_per_cell = 50;
};

// Simulated charge-collection map: plateau equal to the configured CCE inside
// the active region, logistic roll-off outside, counting noise on top.
IbicMap simulate_ibic(const DetectorConfig& det, double width_um,
                      double height_um, double mean_ions_per_pulse,
                      RandomStream& rng, const IbicOptions& opts = {});

struct TracePoint {
  double t_us = 0.0;
  double volts = 0.0;
};

struct TraceOptions {
  double duration_us = 20.0;
  double dt_us = 0.02;
  double step_at_us = 2.0;
  double decay_tau_us = 50.0;
  bool noise_free = false;
};

// Charge-sensitive preamplifier output: step of height
// k * pairs * cce * volts_per_pair at ion arrival, exponential decay after.
std::vector<TracePoint> preamp_trace(int ions, const DetectorConfig& det,
                                     RandomStream& rng,
                                     const TraceOptions& opts = {});

// Least-squares (height, tau) fit of a step-plus-decay trace with known step
// time. Used to check that the trace model is recoverable.
double fit_trace_step_height(const std::vector<TracePoint>& trace,
                             double step_at_us);

}  // namespace ioncount::beamline
