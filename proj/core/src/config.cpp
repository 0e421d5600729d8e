#include "ioncount/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ioncount::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& section, const std::string& key,
                 const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": not a number: '" +
                      value + "'");
  }
}

long long to_int(const std::string& section, const std::string& key,
                 const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": not an integer: '" +
                      value + "'");
  }
}

// Applies one section, rejecting unknown keys.
class SectionReader {
 public:
  SectionReader(std::string name, const std::map<std::string, std::string>& kv)
      : name_(std::move(name)), kv_(kv) {}

  void number(const std::string& key, double& target) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return;
    target = to_double(name_, key, it->second);
    seen_.insert(key);
  }
  void integer(const std::string& key, int& target) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return;
    target = static_cast<int>(to_int(name_, key, it->second));
    seen_.insert(key);
  }
  void integer(const std::string& key, long long& target) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return;
    target = to_int(name_, key, it->second);
    seen_.insert(key);
  }
  void integer(const std::string& key, std::uint64_t& target) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return;
    target = static_cast<std::uint64_t>(to_int(name_, key, it->second));
    seen_.insert(key);
  }

  void finish() const {
    for (const auto& [key, value] : kv_) {
      if (!seen_.count(key))
        throw ConfigError("[" + name_ + "] unknown key: " + key);
    }
  }

 private:
  std::string name_;
  const std::map<std::string, std::string>& kv_;
  std::set<std::string> seen_;
};

}  // namespace

Sections parse_ini(const std::string& text) {
  Sections out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty section");
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    out[section][key] = value;
  }
  return out;
}

void RunConfig::validate() const {
  if (beam.lambda0 < 0.0) throw ConfigError("[beam] lambda0 must be >= 0");
  if (detector.cce < 0.0 || detector.cce > 1.0)
    throw ConfigError("[detector] cce must be in [0,1]");
  if (detector.pairs_direct < 0.0 || detector.pairs_recoil < 0.0 ||
      detector.volts_per_pair < 0.0 || detector.shaper_gain < 0.0 ||
      detector.noise_sigma0 < 0.0 || detector.noise_sigma_ion < 0.0)
    throw ConfigError("[detector] all fields must be nonnegative");
  if (hist_bin_width <= 0.0)
    throw ConfigError("[thresholds] bin_width must be positive");
  try {
    plan.validate();
    thresholds.validate();
    activation.validate();
    hbt.dynamics.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (hbt.duration_ns <= 0.0 || hbt.bin_ns <= 0.0 ||
      hbt.window_ns < hbt.bin_ns)
    throw ConfigError("[hbt] bad duration/bin/window");
  if (hbt.second_emitter_prob < 0.0 || hbt.second_emitter_prob > 1.0)
    throw ConfigError("[hbt] second_emitter_prob in [0,1]");
}

RunConfig config_from_text(const std::string& text) {
  const Sections sections = parse_ini(text);
  RunConfig cfg;

  static const std::set<std::string> known = {
      "beam", "detector", "plan", "thresholds", "activation", "hbt", "run"};
  for (const auto& [name, kv] : sections) {
    if (!known.count(name)) throw ConfigError("unknown section: [" + name + "]");
  }

  if (auto it = sections.find("beam"); it != sections.end()) {
    SectionReader r("beam", it->second);
    r.number("lambda0", cfg.beam.lambda0);
    r.number("drift_rate", cfg.beam.drift_rate);
    r.number("pulse_length_ns", cfg.beam.pulse_length_ns);
    r.finish();
  }
  if (auto it = sections.find("detector"); it != sections.end()) {
    SectionReader r("detector", it->second);
    r.number("pairs_direct", cfg.detector.pairs_direct);
    r.number("pairs_recoil", cfg.detector.pairs_recoil);
    r.number("cce", cfg.detector.cce);
    r.number("volts_per_pair", cfg.detector.volts_per_pair);
    r.number("shaper_gain", cfg.detector.shaper_gain);
    r.number("noise_sigma0", cfg.detector.noise_sigma0);
    r.number("noise_sigma_ion", cfg.detector.noise_sigma_ion);
    r.finish();
  }
  if (auto it = sections.find("plan"); it != sections.end()) {
    SectionReader r("plan", it->second);
    r.integer("rows", cfg.plan.rows);
    r.integer("cols", cfg.plan.cols);
    r.integer("arrays", cfg.plan.arrays);
    r.number("pitch_um", cfg.plan.pitch_um);
    r.integer("preset", cfg.plan.preset);
    r.number("sca_threshold", cfg.plan.sca_threshold);
    r.integer("pulse_budget", cfg.plan.pulse_budget);
    r.finish();
  }
  if (auto it = sections.find("thresholds"); it != sections.end()) {
    SectionReader r("thresholds", it->second);
    r.number("in_situ", cfg.thresholds.in_situ);
    r.number("post_low", cfg.thresholds.post_low);
    r.number("post_high", cfg.thresholds.post_high);
    r.number("bin_width", cfg.hist_bin_width);
    r.finish();
  }
  if (auto it = sections.find("activation"); it != sections.end()) {
    SectionReader r("activation", it->second);
    r.number("yield_p", cfg.activation.yield_p);
    r.number("kcps_per_siv", cfg.activation.kcps_per_siv);
    r.number("kcps_sigma", cfg.activation.kcps_sigma);
    r.number("background_kcps", cfg.activation.background_kcps);
    r.number("psf_sigma_um", cfg.activation.psf_sigma_um);
    r.number("jitter_sigma_um", cfg.activation.jitter_sigma_um);
    r.number("pitch_um", cfg.activation.pitch_um);
    r.number("pixel_um", cfg.activation.pixel_um);
    r.finish();
  }
  if (auto it = sections.find("hbt"); it != sections.end()) {
    SectionReader r("hbt", it->second);
    r.number("k_ex", cfg.hbt.dynamics.k_ex);
    r.number("k_r", cfg.hbt.dynamics.k_r);
    r.number("k_isc", cfg.hbt.dynamics.k_isc);
    r.number("k_d", cfg.hbt.dynamics.k_d);
    r.number("collection", cfg.hbt.dynamics.collection);
    r.number("background_kcps", cfg.hbt.background_kcps);
    r.number("duration_ns", cfg.hbt.duration_ns);
    r.number("bin_ns", cfg.hbt.bin_ns);
    r.number("window_ns", cfg.hbt.window_ns);
    r.number("candidate_cutoff_kcps", cfg.hbt.candidate_cutoff_kcps);
    r.number("second_emitter_prob", cfg.hbt.second_emitter_prob);
    r.integer("max_candidates", cfg.hbt.max_candidates);
    r.finish();
  }
  if (auto it = sections.find("run"); it != sections.end()) {
    SectionReader r("run", it->second);
    r.integer("master_seed", cfg.master_seed);
    r.finish();
  }

  // Keep the activation pitch in lockstep with the implant plan unless the
  // config overrides it explicitly.
  if (sections.count("activation") == 0 ||
      sections.at("activation").count("pitch_um") == 0) {
    cfg.activation.pitch_um = cfg.plan.pitch_um;
  }

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

}  // namespace ioncount::config
