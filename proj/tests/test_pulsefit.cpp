#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ioncount/controller.hpp"
#include "ioncount/pulsefit.hpp"

using namespace ioncount;
using namespace ioncount::pulsefit;

namespace {

// Mixture with the nominal peak geometry: means at multiples of 1.27 V,
// areas in the Poisson ratios of lambda = 0.112.
MixtureFit nominal_fixture() {
  const double A0 = 1e5;
  const double A1 = 0.112 * A0;
  const double A2 = 0.058150541473617555 * A1;
  MixtureFit fit;
  fit.peaks = {{A0, 0.0, 0.1934}, {A1, 1.27, 0.356}, {A2, 2.54, 0.8566}};
  fit.converged = true;
  return fit;
}

}  // namespace

TEST_CASE("multiples_rate, frozen values") {
  // (1 - exp(-l)(1+l)) / (l exp(-l)) at l = 0.112, computed independently.
  CHECK(multiples_rate(0.112) ==
        doctest::Approx(0.058150541473617555).epsilon(1e-12));
  CHECK(multiples_rate(0.0) == 0.0);
  // Small-lambda limit is lambda / 2.
  CHECK(multiples_rate(1e-6) == doctest::Approx(5e-7).epsilon(1e-3));
}

TEST_CASE("timed_error") {
  CHECK(timed_error(30) == doctest::Approx(0.18257418583505536).epsilon(1e-12));
  CHECK(timed_error(1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(timed_error(0), std::invalid_argument);
}

TEST_CASE("lambda estimate from peak areas") {
  CHECK(estimate_lambda(nominal_fixture()) == doctest::Approx(0.112).epsilon(1e-12));
}

TEST_CASE("in-situ budget on the nominal mixture, erfc oracle") {
  const auto fit = nominal_fixture();
  const auto b = in_situ_budget(fit, Thresholds{});
  // Oracles are Gaussian tail integrals via erfc, frozen; the implementation
  // integrates by quadrature.
  CHECK(b.fn_rate == doctest::Approx(0.08434821865386594).epsilon(1e-6));
  CHECK(b.fp_rate == doctest::Approx(0.0002457486920319044).epsilon(1e-6));
  CHECK(b.mult_rate == doctest::Approx(0.058150541473617555).epsilon(1e-12));
  CHECK(b.single_as_double_rate == 0.0);
  CHECK(b.total_plus() == doctest::Approx(0.1424987601274835).epsilon(1e-6));
}

TEST_CASE("post budget on the nominal mixture, erfc oracle") {
  const auto fit = nominal_fixture();
  const auto b = post_budget(fit, Thresholds{});
  CHECK(b.fn_rate == doctest::Approx(0.029916482284737114).epsilon(1e-6));
  CHECK(b.fp_rate == doctest::Approx(0.008570193740195966).epsilon(1e-6));
  CHECK(b.mult_rate == doctest::Approx(0.01448952648906983).epsilon(1e-6));
  CHECK(b.single_as_double_rate ==
        doctest::Approx(0.026299276352521307).epsilon(1e-6));
}

TEST_CASE("zero-noise mixture leaves only the Poisson multiples term") {
  pulsefit::MixtureFit fit;
  fit.peaks = {{1e5, 0.0, 1e-4}, {0.112e5, 1.27, 1e-4}, {65.0, 2.54, 1e-4}};
  fit.converged = true;
  const auto is = in_situ_budget(fit, Thresholds{});
  const auto po = post_budget(fit, Thresholds{});
  CHECK(is.fn_rate == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(is.fp_rate == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(is.mult_rate == doctest::Approx(multiples_rate(0.112)).epsilon(1e-9));
  CHECK(po.fn_rate == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(po.fp_rate == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(po.single_as_double_rate == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("budget totals are column sums") {
  ErrorBudget b{0.086, 0.0002, 0.058, 0.0};
  CHECK(b.total_plus() == doctest::Approx(0.144).epsilon(1e-12));
  CHECK(b.total_minus() == doctest::Approx(0.0002).epsilon(1e-12));
}

TEST_CASE("thresholds must be ordered") {
  Thresholds th;
  th.post_low = 1.0;
  th.in_situ = 0.78;
  CHECK_THROWS_AS(th.validate(), std::invalid_argument);
}

TEST_CASE("pulse classification") {
  Thresholds th;
  CHECK(classify_pulse(0.1, th) == 0);
  CHECK(classify_pulse(0.6, th) == 0);   // boundary belongs below
  CHECK(classify_pulse(1.27, th) == 1);
  CHECK(classify_pulse(2.5, th) == 2);
  CHECK(classify_pulse(7.0, th) == 2);   // clamped by default
  CHECK(classify_pulse(5.1, th, RoundingMode::nearest_multiple, 1.27) == 4);
}

TEST_CASE("histogram construction") {
  std::vector<controller::PulseRecord> recs;
  for (double a : {-0.1, 0.0, 0.05, 1.3, 2.6}) recs.push_back({0, 0, 0, a, false});
  const auto hist = build_histogram(recs, 0.02);
  CHECK(hist.total() == 5);
  CHECK(hist.bin_width() == doctest::Approx(0.02));
  // Edges are aligned to multiples of the bin width.
  const double frac = hist.bin_edges[0] / 0.02;
  CHECK(frac == doctest::Approx(std::round(frac)).epsilon(1e-9));
  CHECK_THROWS_AS(build_histogram(recs, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_histogram({}, 0.02), std::invalid_argument);
}

TEST_CASE("mixture fit round trip on synthetic pulses") {
  RandomStream rng(83);
  const double A[3] = {55000, 30000, 15000};
  const double mu[3] = {0.0, 1.27, 2.54};
  const double sg[3] = {0.193, 0.3095, 0.3976};
  const double total = A[0] + A[1] + A[2];
  std::vector<controller::PulseRecord> recs;
  long long realized[3] = {0, 0, 0};
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform() * total;
    const int k = u < A[0] ? 0 : (u < A[0] + A[1] ? 1 : 2);
    ++realized[k];
    recs.push_back({0, i, k, rng.normal(mu[k], sg[k]), false});
  }
  const auto hist = build_histogram(recs, 0.02);
  const auto fit = fit_mixture(hist, 3);
  REQUIRE(fit.peaks.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(fit.peaks[k].area ==
          doctest::Approx(static_cast<double>(realized[k])).epsilon(0.02));
    CHECK(fit.peaks[k].sigma == doctest::Approx(sg[k]).epsilon(0.03));
  }
  CHECK(fit.peaks[0].mean == doctest::Approx(0.0).scale(1.0).epsilon(0.01));
  CHECK(fit.peaks[1].mean == doctest::Approx(1.27).epsilon(0.005));
  CHECK(fit.peaks[2].mean == doctest::Approx(2.54).epsilon(0.005));
  CHECK(estimate_lambda(fit) == doctest::Approx(30.0 / 55.0).epsilon(0.03));
}

TEST_CASE("mixture fit on a realistic sparse beam spectrum") {
  // At lambda = 0.112 the 2-ion peak carries well under 1 % of the events,
  // so only the quantities the analysis actually consumes are pinned here.
  controller::ImplantPlan plan;
  beamline::BeamConfig beam;
  beamline::DetectorConfig det;
  const auto logs = controller::implant_array(plan, beam, det, 83);
  std::vector<controller::PulseRecord> recs;
  for (const auto& log : logs)
    recs.insert(recs.end(), log.pulses.begin(), log.pulses.end());
  const auto fit = fit_mixture(build_histogram(recs, 0.02), 3);
  REQUIRE(fit.peaks.size() == 3);
  CHECK(fit.peaks[0].mean == doctest::Approx(0.0).scale(1.0).epsilon(0.01));
  CHECK(fit.peaks[1].mean ==
        doctest::Approx(det.amplitude_per_ion()).epsilon(0.01));
  CHECK(fit.peaks[0].sigma == doctest::Approx(det.amplitude_sigma(0)).epsilon(0.05));
  CHECK(fit.peaks[1].sigma == doctest::Approx(det.amplitude_sigma(1)).epsilon(0.05));
  CHECK(estimate_lambda(fit) == doctest::Approx(0.112).epsilon(0.06));
}

TEST_CASE("fit_mixture rejects a featureless histogram") {
  std::vector<controller::PulseRecord> recs;
  RandomStream rng(89);
  for (int i = 0; i < 1000; ++i)
    recs.push_back({0, i, 0, rng.normal(0.0, 0.2), false});
  const auto hist = build_histogram(recs, 0.02);
  CHECK_THROWS(fit_mixture(hist, 3));
}

TEST_CASE("site reconstruction from a simulated array") {
  controller::ImplantPlan plan;
  beamline::BeamConfig beam;
  beamline::DetectorConfig det;
  const auto logs = controller::implant_array(plan, beam, det, 97);
  const auto rec = reconstruct_sites(logs, Thresholds{}, plan.preset);
  REQUIRE(rec.per_site.size() == logs.size());
  CHECK(rec.mean > 31.0);
  CHECK(rec.mean < 36.0);
  CHECK(rec.timed_sigma == doctest::Approx(30 * timed_error(30)).epsilon(1e-12));
  CHECK(rec.timed_fwhm == doctest::Approx(2.355 * rec.timed_sigma).epsilon(1e-12));
  // Counted implantation beats the shot-noise-limited timed dose.
  CHECK(rec.sigma < rec.timed_sigma);
  CHECK(rec.fwhm == doctest::Approx(2.355 * rec.sigma).epsilon(1e-12));
}

TEST_CASE("site reconstruction needs enough sites") {
  std::vector<controller::SiteLog> logs(10);
  CHECK_THROWS_AS(reconstruct_sites(logs, Thresholds{}, 30), std::invalid_argument);
}
