#include "ioncount/controller.hpp"

#include <stdexcept>
#include <string>

namespace ioncount::controller {

void ImplantPlan::validate() const {
  if (rows < 1 || cols < 1 || arrays < 1)
    throw std::invalid_argument("ImplantPlan: array shape must be positive");
  if (pitch_um <= 0.0)
    throw std::invalid_argument("ImplantPlan: pitch must be positive");
  if (preset < 1) throw std::invalid_argument("ImplantPlan: preset >= 1");
  if (sca_threshold <= 0.0)
    throw std::invalid_argument("ImplantPlan: threshold must be positive");
  if (pulse_budget < 1)
    throw std::invalid_argument("ImplantPlan: pulse budget must be positive");
}

SiteLog implant_site(const ImplantPlan& plan,
                     const beamline::BeamConfig& beam,
                     const beamline::DetectorConfig& det, RandomStream& rng,
                     int site_index, long long start_pulse_index) {
  plan.validate();
  SiteLog log;
  log.site_index = site_index;
  long long pulse = start_pulse_index;
  long long fired = 0;
  while (log.counted < plan.preset) {
    if (fired >= plan.pulse_budget) {
      throw std::runtime_error(
          "implant_site: pulse budget exhausted at site " +
          std::to_string(site_index) + " (counted " +
          std::to_string(log.counted) + "/" + std::to_string(plan.preset) +
          "); beam off or threshold above all peaks?");
    }
    PulseRecord rec;
    rec.site_index = site_index;
    rec.pulse_index = pulse;
    rec.true_ions = beamline::sample_pulse(beam, pulse, rng);
    rec.amplitude = beamline::amplitude_for_ions(rec.true_ions, det, rng);
    rec.sca_fired = rec.amplitude > plan.sca_threshold;
    if (rec.sca_fired) ++log.counted;  // one count per pulse, always
    log.implanted_true += rec.true_ions;
    log.pulses.push_back(rec);
    ++pulse;
    ++fired;
  }
  return log;
}

std::vector<SiteLog> implant_array(const ImplantPlan& plan,
                                   const beamline::BeamConfig& beam,
                                   const beamline::DetectorConfig& det,
                                   std::uint64_t master_seed) {
  plan.validate();
  RandomStream master(master_seed);
  std::vector<SiteLog> logs;
  logs.reserve(plan.total_sites());
  long long pulse = 0;
  for (int site = 0; site < plan.total_sites(); ++site) {
    RandomStream site_rng = master.child("implant", site);
    logs.push_back(implant_site(plan, beam, det, site_rng, site, pulse));
    pulse = logs.back().pulses.back().pulse_index + 1;
  }
  return logs;
}

double expected_overimplant(double fn_rate, double mult_rate) {
  if (fn_rate < 0.0 || fn_rate >= 1.0 || mult_rate < 0.0 || mult_rate >= 1.0)
    throw std::invalid_argument("expected_overimplant: rates must be in [0,1)");
  return fn_rate + mult_rate;
}

}  // namespace ioncount::controller
