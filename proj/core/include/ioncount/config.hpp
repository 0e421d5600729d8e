#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "ioncount/activation.hpp"
#include "ioncount/beamline.hpp"
#include "ioncount/controller.hpp"
#include "ioncount/correlation.hpp"
#include "ioncount/pulsefit.hpp"

namespace ioncount::config {

// Thrown for malformed files and unknown sections/keys; the CLI maps it to
// exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// INI-style sections of key = value pairs. '#' and ';' start comments.
using Sections = std::map<std::string, std::map<std::string, std::string>>;

Sections parse_ini(const std::string& text);

struct HbtConfig {
  correlation::EmitterDynamics dynamics;
  double background_kcps = 0.0;
  double duration_ns = 5e6;
  double bin_ns = 0.5;
  double window_ns = 50.0;
  double candidate_cutoff_kcps = 25.0;
  double second_emitter_prob = 0.18;
  int max_candidates = 12;
};

struct RunConfig {
  beamline::BeamConfig beam;
  beamline::DetectorConfig detector;
  controller::ImplantPlan plan;
  pulsefit::Thresholds thresholds;
  double hist_bin_width = 0.02;  // V
  activation::ActivationConfig activation;
  HbtConfig hbt;
  std::uint64_t master_seed = 1;

  void validate() const;
};

// Parse and validate; unknown sections or keys are rejected.
RunConfig load_config(const std::string& path);
RunConfig config_from_text(const std::string& text);

}  // namespace ioncount::config
