#pragma once

#include <vector>

#include "ioncount/rng.hpp"

namespace ioncount::correlation {

// Three-level autocorrelation model:
//   g2(t) = 1 - 1/N + [1 - (1+a) exp(-|t|/t1) + a exp(-|t|/t2)] / N
struct G2ModelParams {
  double n_emitters = 1.0;  // N >= 1
  double a = 0.0;           // shelving-to-excited emission ratio
  double t1_ns = 2.33;      // excited-state lifetime
  double t2_ns = 6.23;      // shelving-state lifetime

  double g2_zero() const { return 1.0 - 1.0 / n_emitters; }
  void validate() const;
};

double g2_model(double t_ns, const G2ModelParams& p);

struct BackgroundRatio {
  double emitter_kcps = 0.0;     // E: total rate at the emitter
  double background_kcps = 0.0;  // B: rate at a background location

  double rho() const { return (emitter_kcps - background_kcps) / emitter_kcps; }
  void validate() const;
};

// (g_exp - 1 + rho^2) / rho^2. rho = 1 is the identity; rho = 0 is an error.
double background_correct(double g_exp, double rho);

// Continuous-time three-state jump process per emitter:
//   ground -> excited at k_ex, excited -> ground (photon) at k_r,
//   excited -> shelf at k_isc, shelf -> ground at k_d. Rates in 1/ns.
struct EmitterDynamics {
  double k_ex = 0.0587049;
  double k_r = 0.3309933;
  double k_isc = 0.05;
  double k_d = 0.15;
  double collection = 0.5;  // detection probability per emitted photon

  void validate() const;
  double excited_state_occupation() const;  // steady state
  // Steady-state detected rate, photons/ns, both detectors combined.
  double detected_rate_per_ns() const;
};

struct PhotonStreams {
  std::vector<double> det_a_ns;  // sorted
  std::vector<double> det_b_ns;  // sorted
  double duration_ns = 0.0;
};

// Independent emitters plus a homogeneous Poisson background stream, each
// photon detected with the collection efficiency and routed 50/50.
PhotonStreams simulate_photon_streams(int n_emitters,
                                      const EmitterDynamics& dyn,
                                      double background_kcps,
                                      double duration_ns, RandomStream& rng);

struct CoincidenceHistogram {
  std::vector<double> lag_ns;          // bin centers, symmetric about 0
  std::vector<long long> raw_counts;
  std::vector<double> g2;              // normalized by rateA*rateB*bin*T
  double bin_ns = 0.0;
  double window_ns = 0.0;
};

CoincidenceHistogram coincidence_histogram(const std::vector<double>& ts_a_ns,
                                           const std::vector<double>& ts_b_ns,
                                           double duration_ns, double bin_ns,
                                           double window_ns);

struct G2Fit {
  G2ModelParams params;
  double n_sigma = 0.0;
  double a_sigma = 0.0;
  double t1_sigma = 0.0;
  double t2_sigma = 0.0;
  double g2_zero_sigma = 0.0;
  bool no_antibunching = false;  // flat histogram, N unbounded
};

// Background-corrects the histogram bin-wise, then fits the three-level
// model by nonlinear least squares.
G2Fit fit_g2(const CoincidenceHistogram& hist, double rho);

enum class SpeClass {
  single,              // g2(0) < 0.5
  multi,               // g2(0) in [0.5, 0.7]: two-emitter reading
  non_classical_only,  // g2(0) in (0.7, 1): non-classical, count unresolved
  none,                // no antibunching
};

SpeClass classify_spe(const G2Fit& fit);

// Mean spacing of background NV centers: n = ppb * 1e-9 * carbon_density *
// conversion_yield, separation = n^(-1/3).
double nv_separation_nm(double n_ppb, double conv_yield,
                        double carbon_density_cm3 = 1.76e23);

}  // namespace ioncount::correlation
