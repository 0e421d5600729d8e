#include "ioncount/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ioncount/rng.hpp"
#include "ioncount/stats.hpp"

namespace ioncount::pipeline {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw StageError("missing input file: " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {  // header
      first = false;
      continue;
    }
    rows.push_back(split_csv(line));
  }
  return rows;
}

const char* spe_class_name(correlation::SpeClass c) {
  switch (c) {
    case correlation::SpeClass::single: return "single";
    case correlation::SpeClass::multi: return "multi";
    case correlation::SpeClass::non_classical_only: return "non_classical_only";
    default: return "none";
  }
}

// Site index -> nominal position; arrays are stacked along y.
void site_position(const controller::ImplantPlan& plan, int site, double& x_um,
                   double& y_um) {
  const int per_array = plan.rows * plan.cols;
  const int array = site / per_array;
  const int rem = site % per_array;
  const int row = rem / plan.cols;
  const int col = rem % plan.cols;
  x_um = col * plan.pitch_um;
  y_um = (array * plan.rows + row) * plan.pitch_um;
}

std::vector<controller::SiteLog> read_pulse_logs(const fs::path& in) {
  const auto rows = read_csv(in / "pulses.csv");
  std::map<int, controller::SiteLog> by_site;
  for (const auto& r : rows) {
    if (r.size() != 5) throw StageError("pulses.csv: malformed row");
    controller::PulseRecord rec;
    rec.site_index = std::stoi(r[0]);
    rec.pulse_index = std::stoll(r[1]);
    rec.true_ions = std::stoi(r[2]);
    rec.amplitude = std::stod(r[3]);
    rec.sca_fired = r[4] == "1";
    auto& log = by_site[rec.site_index];
    log.site_index = rec.site_index;
    log.implanted_true += rec.true_ions;
    if (rec.sca_fired) ++log.counted;
    log.pulses.push_back(rec);
  }
  std::vector<controller::SiteLog> logs;
  logs.reserve(by_site.size());
  for (auto& [site, log] : by_site) logs.push_back(std::move(log));
  return logs;
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StageError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageError("missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t hash_file(const fs::path& path) {
  return fnv1a64(read_file(path));
}

void simulate_implant(const config::RunConfig& cfg, std::uint64_t seed,
                      const fs::path& out) {
  const auto logs = controller::implant_array(cfg.plan, cfg.beam, cfg.detector, seed);
  RandomStream master(seed);

  std::ostringstream pulses;
  pulses << "site,pulse,true_ions,amplitude_V,sca_fired\n";
  std::ostringstream summary;
  summary << "site,counted,implanted_true,n_pulses\n";
  for (const auto& log : logs) {
    for (const auto& p : log.pulses) {
      pulses << p.site_index << ',' << p.pulse_index << ',' << p.true_ions
             << ',' << fmt(p.amplitude) << ',' << (p.sca_fired ? 1 : 0) << '\n';
    }
    summary << log.site_index << ',' << log.counted << ','
            << log.implanted_true << ',' << log.pulses.size() << '\n';
  }
  atomic_write(out / "pulses.csv", pulses.str());
  atomic_write(out / "site_summary.csv", summary.str());

  // Detector calibration curve: mean amplitude vs ion count, 10000 pulses
  // per point.
  {
    RandomStream cal = master.child("calibration");
    std::ostringstream cs;
    cs << "ions,mean_amplitude_V,std_V\n";
    for (int k = 0; k <= 9; ++k) {
      std::vector<double> amps(10000);
      for (auto& a : amps) a = beamline::amplitude_for_ions(k, cfg.detector, cal);
      cs << k << ',' << fmt(mean(amps)) << ',' << fmt(sample_stddev(amps)) << '\n';
    }
    atomic_write(out / "calibration.csv", cs.str());
  }

  // Charge-collection map over the standard scan area.
  {
    RandomStream ir = master.child("ibic");
    const auto map = beamline::simulate_ibic(cfg.detector, 80.0, 40.0, 2.0, ir);
    std::ostringstream ms;
    ms << "x_um,y_um,cce\n";
    for (int iy = 0; iy < map.ny; ++iy)
      for (int ix = 0; ix < map.nx; ++ix)
        ms << fmt(map.x_um[ix], 2) << ',' << fmt(map.y_um[iy], 2) << ','
           << fmt(map.at(ix, iy), 4) << '\n';
    atomic_write(out / "ibic.csv", ms.str());
  }
}

PulseAnalysis analyze_pulses(const config::RunConfig& cfg, const fs::path& in,
                             const fs::path& out) {
  const auto logs = read_pulse_logs(in);
  std::vector<controller::PulseRecord> records;
  for (const auto& log : logs)
    records.insert(records.end(), log.pulses.begin(), log.pulses.end());

  PulseAnalysis res;
  const auto hist = pulsefit::build_histogram(records, cfg.hist_bin_width);
  res.fit = pulsefit::fit_mixture(hist, 3);
  res.lambda_hat = pulsefit::estimate_lambda(res.fit);
  res.in_situ = pulsefit::in_situ_budget(res.fit, cfg.thresholds);
  res.post = pulsefit::post_budget(res.fit, cfg.thresholds);
  res.recon = pulsefit::reconstruct_sites(logs, cfg.thresholds, cfg.plan.preset);
  res.fp_exceeds_ppb = res.in_situ.fp_rate > 1e-9;

  std::ostringstream hs;
  hs << "bin_lo_V,bin_hi_V,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    hs << fmt(hist.bin_edges[i]) << ',' << fmt(hist.bin_edges[i + 1]) << ','
       << hist.counts[i] << '\n';
  atomic_write(out / "histogram.csv", hs.str());

  std::ostringstream mx;
  mx << "peak,area,mean_V,sigma_V\n";
  for (std::size_t k = 0; k < res.fit.peaks.size(); ++k)
    mx << k << ',' << fmt(res.fit.peaks[k].area, 3) << ','
       << fmt(res.fit.peaks[k].mean) << ',' << fmt(res.fit.peaks[k].sigma) << '\n';
  atomic_write(out / "mixture.csv", mx.str());

  atomic_write(out / "budget.csv",
               emit_table1_csv(cfg.plan.preset, res.in_situ, res.post));

  std::ostringstream ss;
  ss << "site,count\n";
  for (std::size_t i = 0; i < res.recon.per_site.size(); ++i)
    ss << logs[i].site_index << ',' << res.recon.per_site[i] << '\n';
  atomic_write(out / "sites.csv", ss.str());

  std::ostringstream sf;
  sf << "mean,sigma,fwhm,timed_sigma,timed_fwhm\n"
     << fmt(res.recon.mean, 4) << ',' << fmt(res.recon.sigma, 4) << ','
     << fmt(res.recon.fwhm, 4) << ',' << fmt(res.recon.timed_sigma, 4) << ','
     << fmt(res.recon.timed_fwhm, 4) << '\n';
  atomic_write(out / "site_fit.csv", sf.str());

  json j;
  j["lambda_hat"] = res.lambda_hat;
  j["residual_rms"] = res.fit.residual_rms;
  j["in_situ"] = {{"fn", res.in_situ.fn_rate},
                  {"fp", res.in_situ.fp_rate},
                  {"mult", res.in_situ.mult_rate},
                  {"single_as_double", res.in_situ.single_as_double_rate},
                  {"total_plus", res.in_situ.total_plus()},
                  {"total_minus", res.in_situ.total_minus()}};
  j["post"] = {{"fn", res.post.fn_rate},
               {"fp", res.post.fp_rate},
               {"mult", res.post.mult_rate},
               {"single_as_double", res.post.single_as_double_rate},
               {"total_plus", res.post.total_plus()},
               {"total_minus", res.post.total_minus()}};
  j["site_mean"] = res.recon.mean;
  j["site_fwhm"] = res.recon.fwhm;
  // The fitted 0-ion peak rarely supports the sub-ppb in-situ false-positive
  // level implied by a threshold chosen for zero background counts; report
  // the discrepancy instead of forcing it.
  j["in_situ_fp_exceeds_1ppb"] = res.fp_exceeds_ppb;
  atomic_write(out / "pulse_analysis.json", j.dump(2) + "\n");
  return res;
}

void simulate_pl(const config::RunConfig& cfg, std::uint64_t seed,
                 const fs::path& in, const fs::path& out) {
  const auto rows = read_csv(in / "site_summary.csv");
  RandomStream master(seed);

  std::vector<activation::SiteEmitters> sites;
  for (const auto& r : rows) {
    if (r.size() != 4) throw StageError("site_summary.csv: malformed row");
    activation::SiteEmitters s;
    s.site_index = std::stoi(r[0]);
    s.n_ions = std::stoi(r[2]);
    site_position(cfg.plan, s.site_index, s.x_um, s.y_um);
    RandomStream ar = master.child("activation", s.site_index);
    s.n_siv = activation::sample_activation(s.n_ions, cfg.activation, ar);
    sites.push_back(s);
  }

  std::ostringstream es;
  es << "site,n_ions_true,n_siv_true,x_um,y_um\n";
  for (const auto& s : sites)
    es << s.site_index << ',' << s.n_ions << ',' << s.n_siv << ','
       << fmt(s.x_um, 3) << ',' << fmt(s.y_um, 3) << '\n';
  atomic_write(out / "emitters_true.csv", es.str());

  RandomStream mr = master.child("plmap");
  const auto map = activation::synthesize_pl_map(sites, cfg.activation, mr);
  std::ostringstream ms;
  ms << "x_um,y_um,kcps\n";
  for (int iy = 0; iy < map.ny; ++iy)
    for (int ix = 0; ix < map.nx; ++ix)
      ms << fmt(map.x_um[ix], 3) << ',' << fmt(map.y_um[iy], 3) << ','
         << fmt(map.at(ix, iy), 4) << '\n';
  atomic_write(out / "plmap.csv", ms.str());
}

PlAnalysis analyze_pl(const config::RunConfig& cfg, const fs::path& in,
                      const fs::path& out) {
  // Rebuild the map grid from the triplet file (written iy-major).
  const auto mrows = read_csv(in / "plmap.csv");
  activation::PlMap map;
  {
    std::vector<double> xs, ys, vs;
    xs.reserve(mrows.size());
    for (const auto& r : mrows) {
      if (r.size() != 3) throw StageError("plmap.csv: malformed row");
      xs.push_back(std::stod(r[0]));
      ys.push_back(std::stod(r[1]));
      vs.push_back(std::stod(r[2]));
    }
    std::size_t nx = 1;
    while (nx < ys.size() && ys[nx] == ys[0]) ++nx;
    map.nx = static_cast<int>(nx);
    map.ny = static_cast<int>(vs.size() / nx);
    map.x_um.assign(xs.begin(), xs.begin() + map.nx);
    map.y_um.resize(map.ny);
    for (int iy = 0; iy < map.ny; ++iy) map.y_um[iy] = ys[static_cast<std::size_t>(iy) * map.nx];
    map.kcps = std::move(vs);
  }

  const auto erows = read_csv(in / "emitters_true.csv");
  const auto srows = read_csv(in / "sites.csv");
  if (erows.size() != srows.size())
    throw StageError("analyze_pl: emitters_true.csv and sites.csv disagree");

  PlAnalysis res;
  std::ostringstream es;
  es << "site,n_ions,n_siv_true,amplitude_kcps,n_siv_est\n";
  std::vector<double> recon_ions;
  for (std::size_t i = 0; i < erows.size(); ++i) {
    const int site = std::stoi(erows[i][0]);
    const int n_ions = std::stoi(srows[i][1]);  // ex-situ reconstructed count
    const int n_siv_true = std::stoi(erows[i][2]);
    const double x = std::stod(erows[i][3]);
    const double y = std::stod(erows[i][4]);
    const auto spot = activation::fit_spot(map, x, y, 2.0, cfg.activation);
    const int est = activation::classify_site_rate(spot.amplitude, cfg.activation);
    es << site << ',' << n_ions << ',' << n_siv_true << ','
       << fmt(spot.amplitude, 4) << ',' << est << '\n';
    res.emitter_counts.push_back(est);
    recon_ions.push_back(n_ions);
  }
  atomic_write(out / "emitters.csv", es.str());

  int max_est = 0;
  for (int c : res.emitter_counts) max_est = std::max(max_est, c);
  std::ostringstream hs;
  hs << "n_emitters,sites\n";
  for (int k = 0; k <= max_est; ++k) {
    const long long n = std::count(res.emitter_counts.begin(),
                                   res.emitter_counts.end(), k);
    hs << k << ',' << n << '\n';
  }
  atomic_write(out / "emitter_hist.csv", hs.str());

  res.yield = activation::fit_poisson_yield(res.emitter_counts, mean(recon_ions));
  std::ostringstream ys;
  ys << "lambda_hat,sigma_minus,sigma_plus,mean_ions,yield,yield_plus,yield_minus\n"
     << fmt(res.yield.lambda_hat, 5) << ',' << fmt(res.yield.lambda_sigma_minus, 5)
     << ',' << fmt(res.yield.lambda_sigma_plus, 5) << ','
     << fmt(res.yield.mean_ions, 4) << ',' << fmt(res.yield.yield, 6) << ','
     << fmt(res.yield.yield_plus, 6) << ',' << fmt(res.yield.yield_minus, 6) << '\n';
  atomic_write(out / "yield.csv", ys.str());
  return res;
}

void simulate_hbt(const config::RunConfig& cfg, std::uint64_t seed,
                  const fs::path& in, const fs::path& out) {
  const auto erows = read_csv(in / "emitters.csv");
  RandomStream master(seed);

  const double per_emitter_kcps = cfg.hbt.dynamics.detected_rate_per_ns() * 1e6;
  std::ostringstream hs;
  hs << "site,n_sim,rho\n";
  int taken = 0;
  for (const auto& r : erows) {
    if (taken >= cfg.hbt.max_candidates) break;
    const int site = std::stoi(r[0]);
    const int n_siv_true = std::stoi(r[2]);
    const double amplitude = std::stod(r[3]);
    const int n_est = std::stoi(r[4]);
    if (n_est < 1 || amplitude >= cfg.hbt.candidate_cutoff_kcps) continue;

    RandomStream sr = master.child("hbt", site);
    int n_sim = std::max(1, n_siv_true);
    // Spectrally overlapping background emitter in the same confocal spot.
    if (sr.bernoulli(cfg.hbt.second_emitter_prob)) ++n_sim;

    const double signal_kcps = n_sim * per_emitter_kcps;
    const double total_kcps = signal_kcps + cfg.hbt.background_kcps;
    const double rho = signal_kcps / total_kcps;

    RandomStream stream_rng = sr.child("streams");
    const auto streams = correlation::simulate_photon_streams(
        n_sim, cfg.hbt.dynamics, cfg.hbt.background_kcps, cfg.hbt.duration_ns,
        stream_rng);

    auto dump = [&](const std::vector<double>& ts, const std::string& name) {
      std::ostringstream os;
      for (double t : ts)
        os << static_cast<long long>(std::llround(t * 1e3)) << '\n';  // ps
      atomic_write(out / name, os.str());
    };
    dump(streams.det_a_ns, "hbt_site_" + std::to_string(site) + "_a.txt");
    dump(streams.det_b_ns, "hbt_site_" + std::to_string(site) + "_b.txt");

    hs << site << ',' << n_sim << ',' << fmt(rho, 6) << '\n';
    ++taken;
  }
  atomic_write(out / "hbt_sites.csv", hs.str());
}

std::vector<HbtSiteResult> analyze_hbt(const config::RunConfig& cfg,
                                       const fs::path& in, const fs::path& out,
                                       const HbtAnalysisOptions& opts) {
  const auto sites = read_csv(in / "hbt_sites.csv");
  const double bin_ns = opts.bin_ns > 0.0 ? opts.bin_ns : cfg.hbt.bin_ns;
  const double window_ns = opts.window_ns > 0.0 ? opts.window_ns : cfg.hbt.window_ns;

  auto read_ts = [&](const std::string& name) {
    std::ifstream ts(in / name);
    if (!ts) throw StageError("missing timestamp file: " + name);
    std::vector<double> v;
    long long ps;
    while (ts >> ps) v.push_back(ps * 1e-3);
    return v;
  };

  std::vector<HbtSiteResult> results;
  std::ostringstream ss;
  ss << "site,n_sim,g2_zero,n_fit,a,t1_ns,t2_ns,rho,class\n";
  for (const auto& r : sites) {
    HbtSiteResult sr;
    sr.site = std::stoi(r[0]);
    sr.n_sim = std::stoi(r[1]);
    sr.rho = opts.rho > 0.0 ? opts.rho : std::stod(r[2]);

    const auto ta = read_ts("hbt_site_" + std::to_string(sr.site) + "_a.txt");
    const auto tb = read_ts("hbt_site_" + std::to_string(sr.site) + "_b.txt");
    const auto hist = correlation::coincidence_histogram(
        ta, tb, cfg.hbt.duration_ns, bin_ns, window_ns);
    const auto fit = correlation::fit_g2(hist, sr.rho);
    sr.g2_zero = fit.no_antibunching ? 1.0 : fit.params.g2_zero();
    sr.n_fit = fit.params.n_emitters;
    sr.a = fit.params.a;
    sr.t1_ns = fit.params.t1_ns;
    sr.t2_ns = fit.params.t2_ns;
    sr.cls = correlation::classify_spe(fit);

    std::ostringstream gs;
    gs << "lag_ns,g2_raw,g2_corrected,g2_fit\n";
    for (std::size_t i = 0; i < hist.lag_ns.size(); ++i) {
      const double corr = correlation::background_correct(hist.g2[i], sr.rho);
      const double model =
          fit.no_antibunching ? 1.0 : correlation::g2_model(hist.lag_ns[i], fit.params);
      gs << fmt(hist.lag_ns[i], 3) << ',' << fmt(hist.g2[i], 5) << ','
         << fmt(corr, 5) << ',' << fmt(model, 5) << '\n';
    }
    atomic_write(out / ("g2_site_" + std::to_string(sr.site) + ".csv"), gs.str());

    ss << sr.site << ',' << sr.n_sim << ',' << fmt(sr.g2_zero, 4) << ','
       << fmt(sr.n_fit, 4) << ',' << fmt(sr.a, 4) << ',' << fmt(sr.t1_ns, 4)
       << ',' << fmt(sr.t2_ns, 4) << ',' << fmt(sr.rho, 6) << ','
       << spe_class_name(sr.cls) << '\n';
    results.push_back(sr);
  }
  atomic_write(out / "hbt_summary.csv", ss.str());
  return results;
}

std::string emit_table1_csv(int preset, const pulsefit::ErrorBudget& in_situ,
                            const pulsefit::ErrorBudget& post) {
  const double timed = pulsefit::timed_error(preset);
  std::ostringstream os;
  os << "error,timed,in_situ,post\n";
  os << "false_negative,," << fmt_g(in_situ.fn_rate) << ',' << fmt_g(post.fn_rate) << '\n';
  os << "false_positive,,-" << fmt_g(in_situ.fp_rate) << ",-" << fmt_g(post.fp_rate) << '\n';
  os << "multiples,," << fmt_g(in_situ.mult_rate) << ',' << fmt_g(post.mult_rate) << '\n';
  os << "single_as_double,,,-" << fmt_g(post.single_as_double_rate) << '\n';
  os << "total_plus," << fmt_g(timed) << ',' << fmt_g(in_situ.total_plus())
     << ',' << fmt_g(post.total_plus()) << '\n';
  os << "total_minus,-" << fmt_g(timed) << ",-" << fmt_g(in_situ.total_minus())
     << ",-" << fmt_g(post.total_minus()) << '\n';
  return os.str();
}

std::string emit_table1_text(int preset, const pulsefit::ErrorBudget& in_situ,
                             const pulsefit::ErrorBudget& post) {
  const double timed = pulsefit::timed_error(preset);
  auto pct = [](double v) { return fmt(100.0 * v, 2) + " %"; };
  std::ostringstream os;
  os << "Implant " << preset << " ions | Timed      | In-Situ    | Post-analysis\n";
  os << "-----------------+------------+------------+--------------\n";
  os << "False Negative   | -          | " << pct(in_situ.fn_rate) << "     | "
     << pct(post.fn_rate) << '\n';
  os << "False Positive   | -          | -" << pct(in_situ.fp_rate) << "    | -"
     << pct(post.fp_rate) << '\n';
  os << "Multiples        | -          | " << pct(in_situ.mult_rate) << "     | "
     << pct(post.mult_rate) << '\n';
  os << "Single as Double | -          | -          | -" << pct(post.single_as_double_rate) << '\n';
  os << "Total            | +" << pct(timed) << " / -" << pct(timed) << " | +"
     << pct(in_situ.total_plus()) << " / -" << pct(in_situ.total_minus())
     << " | +" << pct(post.total_plus()) << " / -" << pct(post.total_minus()) << '\n';
  return os.str();
}

void write_report(const config::RunConfig& cfg, const fs::path& in,
                  const fs::path& out) {
  const json analysis = json::parse(read_file(in / "pulse_analysis.json"));
  const auto yrow = read_csv(in / "yield.csv").at(0);
  const auto frow = read_csv(in / "site_fit.csv").at(0);
  const auto hbt = read_csv(in / "hbt_summary.csv");

  auto read_budget = [&](const char* key) {
    pulsefit::ErrorBudget b;
    b.fn_rate = analysis[key]["fn"].get<double>();
    b.fp_rate = analysis[key]["fp"].get<double>();
    b.mult_rate = analysis[key]["mult"].get<double>();
    b.single_as_double_rate = analysis[key]["single_as_double"].get<double>();
    return b;
  };
  const pulsefit::ErrorBudget insitu = read_budget("in_situ");
  const pulsefit::ErrorBudget post = read_budget("post");

  atomic_write(out / "table1.csv", emit_table1_csv(cfg.plan.preset, insitu, post));
  atomic_write(out / "table1.txt", emit_table1_text(cfg.plan.preset, insitu, post));

  std::ostringstream nv;
  nv << "n_ppb,conv_yield,separation_nm\n";
  for (double ppb : {1.0, 0.1})
    for (double cy : {0.45, 0.10})
      nv << fmt(ppb, 1) << ',' << fmt(cy, 2) << ','
         << fmt(correlation::nv_separation_nm(ppb, cy), 1) << '\n';
  atomic_write(out / "nv_separation.csv", nv.str());

  int n_single = 0, n_multi = 0, n_other = 0;
  for (const auto& r : hbt) {
    const std::string& cls = r.back();
    if (cls == "single") ++n_single;
    else if (cls == "multi") ++n_multi;
    else ++n_other;
  }
  const int n_hbt = static_cast<int>(hbt.size());

  json rep;
  rep["error_budget"] = analysis;
  rep["sites"] = {{"mean_ions", std::stod(frow[0])},
                  {"fwhm", std::stod(frow[2])},
                  {"timed_sigma", std::stod(frow[3])},
                  {"timed_fwhm", std::stod(frow[4])}};
  rep["yield"] = {{"lambda_hat", std::stod(yrow[0])},
                  {"lambda_sigma_minus", std::stod(yrow[1])},
                  {"lambda_sigma_plus", std::stod(yrow[2])},
                  {"mean_ions", std::stod(yrow[3])},
                  {"yield", std::stod(yrow[4])},
                  {"yield_plus", std::stod(yrow[5])},
                  {"yield_minus", std::stod(yrow[6])}};
  rep["hbt"] = {{"sites", n_hbt},
                {"single", n_single},
                {"multi", n_multi},
                {"other", n_other},
                {"single_fraction", n_hbt ? static_cast<double>(n_single) / n_hbt : 0.0}};
  atomic_write(out / "report.json", rep.dump(2) + "\n");

  std::ostringstream rs;
  rs << "Counted ion implantation run summary\n";
  rs << "====================================\n\n";
  rs << emit_table1_text(cfg.plan.preset, insitu, post) << '\n';
  rs << "Per-site ions: mean " << fmt(std::stod(frow[0]), 2) << ", FWHM "
     << fmt(std::stod(frow[2]), 2) << " (timed overlay sigma "
     << fmt(std::stod(frow[3]), 2) << ", FWHM " << fmt(std::stod(frow[4]), 2)
     << ")\n";
  rs << "Emitters/site: " << fmt(std::stod(yrow[0]), 3) << " +"
     << fmt(std::stod(yrow[2]), 3) << " / -" << fmt(std::stod(yrow[1]), 3) << '\n';
  rs << "Conversion yield: " << fmt(100.0 * std::stod(yrow[4]), 2) << " % +"
     << fmt(100.0 * std::stod(yrow[5]), 2) << " / -"
     << fmt(100.0 * std::stod(yrow[6]), 2) << " %\n";
  rs << "HBT: " << n_single << "/" << n_hbt << " single photon emitters, "
     << n_multi << " two-emitter sites\n";
  if (analysis["in_situ_fp_exceeds_1ppb"].get<bool>())
    rs << "Note: fitted 0-ion peak tail above the SCA threshold exceeds 1 ppb\n";
  atomic_write(out / "report.txt", rs.str());
}

RunSummary run_pipeline(const config::RunConfig& cfg, std::uint64_t seed,
                        const fs::path& out) {
  RunSummary sum;
  simulate_implant(cfg, seed, out);
  sum.pulses = analyze_pulses(cfg, out, out);
  simulate_pl(cfg, seed, out, out);
  sum.pl = analyze_pl(cfg, out, out);
  simulate_hbt(cfg, seed, out, out);
  sum.hbt = analyze_hbt(cfg, out, out);
  write_report(cfg, out, out);

  // Manifest last: seed, config hash and a hash of every artifact.
  json man;
  man["seed"] = seed;
  {
    // Hash the effective configuration, not the file it came from.
    std::ostringstream cs;
    cs << cfg.beam.lambda0 << ' ' << cfg.beam.drift_rate << ' '
       << cfg.detector.amplitude_per_ion() << ' ' << cfg.detector.noise_sigma0
       << ' ' << cfg.detector.noise_sigma_ion << ' ' << cfg.plan.preset << ' '
       << cfg.plan.total_sites() << ' ' << cfg.thresholds.in_situ << ' '
       << cfg.thresholds.post_low << ' ' << cfg.thresholds.post_high << ' '
       << cfg.activation.yield_p << ' ' << cfg.hbt.duration_ns;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(cs.str()));
    man["config_hash"] = buf;
  }
  json arts;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(out))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash_file(f));
    arts[f.filename().string()] = buf;
  }
  man["artifacts"] = arts;
  atomic_write(out / "manifest.json", man.dump(2) + "\n");
  return sum;
}

}  // namespace ioncount::pipeline
