#pragma once

#include <cstdint>
#include <vector>

#include "ioncount/beamline.hpp"
#include "ioncount/rng.hpp"

namespace ioncount::controller {

struct ImplantPlan {
  int rows = 4;
  int cols = 40;
  int arrays = 2;            // identical arrays pooled into one site list
  double pitch_um = 2.0;
  int preset = 30;           // counted ions per site before stopping
  double sca_threshold = 0.78;  // V, lower threshold; upper disabled
  long long pulse_budget = 1000000;  // abort guard per site

  int total_sites() const { return rows * cols * arrays; }
  void validate() const;
};

struct PulseRecord {
  int site_index = 0;
  long long pulse_index = 0;  // global, monotone across the run
  int true_ions = 0;
  double amplitude = 0.0;     // V
  bool sca_fired = false;
};

struct SiteLog {
  int site_index = 0;
  int counted = 0;          // SCA events; equals preset at termination
  int implanted_true = 0;   // sum of true_ions over all pulses
  std::vector<PulseRecord> pulses;
};

// Fires pulses at one site until the SCA count reaches the preset. The SCA
// counts at most one event per pulse. start_pulse_index feeds the beam-drift
// clock and is advanced by the number of pulses fired.
SiteLog implant_site(const ImplantPlan& plan,
                     const beamline::BeamConfig& beam,
                     const beamline::DetectorConfig& det, RandomStream& rng,
                     int site_index = 0, long long start_pulse_index = 0);

// Row-major raster over all sites. Each site draws from a child stream of
// master_seed, so the per-site sequences do not depend on execution order.
std::vector<SiteLog> implant_array(const ImplantPlan& plan,
                                   const beamline::BeamConfig& beam,
                                   const beamline::DetectorConfig& det,
                                   std::uint64_t master_seed);

// First-order expected fractional over-implantation from the two all-positive
// in-situ error channels.
double expected_overimplant(double fn_rate, double mult_rate);

}  // namespace ioncount::controller
