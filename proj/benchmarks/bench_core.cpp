#include <benchmark/benchmark.h>

#include "ioncount/beamline.hpp"
#include "ioncount/controller.hpp"
#include "ioncount/correlation.hpp"
#include "ioncount/pulsefit.hpp"

using namespace ioncount;

static void BM_PoissonSampling(benchmark::State& state) {
  RandomStream rng(42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.poisson(0.112));
  }
}
BENCHMARK(BM_PoissonSampling);

static void BM_ImplantSite(benchmark::State& state) {
  controller::ImplantPlan plan;
  beamline::BeamConfig beam;
  beamline::DetectorConfig det;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    RandomStream rng(++seed);
    benchmark::DoNotOptimize(controller::implant_site(plan, beam, det, rng));
  }
}
BENCHMARK(BM_ImplantSite);

static void BM_MixtureFit(benchmark::State& state) {
  controller::ImplantPlan plan;
  beamline::BeamConfig beam;
  beamline::DetectorConfig det;
  const auto logs = controller::implant_array(plan, beam, det, 7);
  std::vector<controller::PulseRecord> records;
  for (const auto& log : logs)
    records.insert(records.end(), log.pulses.begin(), log.pulses.end());
  const auto hist = pulsefit::build_histogram(records, 0.02);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pulsefit::fit_mixture(hist, 3));
  }
}
BENCHMARK(BM_MixtureFit);

static void BM_CoincidenceHistogram(benchmark::State& state) {
  correlation::EmitterDynamics dyn;
  RandomStream rng(9);
  const auto streams =
      correlation::simulate_photon_streams(1, dyn, 0.0, 1e6, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(correlation::coincidence_histogram(
        streams.det_a_ns, streams.det_b_ns, 1e6, 0.5, 50.0));
  }
}
BENCHMARK(BM_CoincidenceHistogram);

BENCHMARK_MAIN();
