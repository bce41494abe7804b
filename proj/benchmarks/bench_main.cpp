// Microbenchmarks for the hot paths: beamformer synthesis, objective and
// gradient evaluation, one full optimizer run, and one simulated block.

#include <benchmark/benchmark.h>

#include "mwrn/baselines.hpp"
#include "mwrn/channel.hpp"
#include "mwrn/linksim.hpp"
#include "mwrn/metrics.hpp"
#include "mwrn/pzf.hpp"

namespace {

using namespace mwrn;

NetworkConfig config3() {
  return NetworkConfig(3, 3, {1, 1, 1}, 1.0, ChannelModel::homogeneous(10.0),
                       Strategy::unicast(), DecodingOrder::Clockwise);
}

CMatrix channel3() {
  const auto cfg = config3();
  Rng rng(1);
  return generate_channel(cfg, rng);
}

void BM_ZfBeamformer(benchmark::State& state) {
  const auto cfg = config3();
  const CMatrix h = channel3();
  for (auto _ : state) {
    benchmark::DoNotOptimize(zf_beamformer(h, cfg, 1));
  }
}
BENCHMARK(BM_ZfBeamformer);

void BM_ObjectiveJoint(benchmark::State& state) {
  const auto cfg = config3();
  const CMatrix h = channel3();
  PzfProblem prob(h, cfg);
  const CVector x = prob.zf_start();
  for (auto _ : state) {
    benchmark::DoNotOptimize(prob.objective_joint(x));
  }
}
BENCHMARK(BM_ObjectiveJoint);

void BM_ModifiedGradientJoint(benchmark::State& state) {
  const auto cfg = config3();
  const CMatrix h = channel3();
  PzfProblem prob(h, cfg);
  const CVector x = prob.zf_start();
  for (auto _ : state) {
    benchmark::DoNotOptimize(prob.modified_gradient_joint(x));
  }
}
BENCHMARK(BM_ModifiedGradientJoint);

void BM_OptimizeSeparate(benchmark::State& state) {
  const auto cfg = config3();
  const CMatrix h = channel3();
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimize_separate(h, cfg));
  }
}
BENCHMARK(BM_OptimizeSeparate);

void BM_OptimizeJoint(benchmark::State& state) {
  const auto cfg = config3();
  const CMatrix h = channel3();
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimize_joint(h, cfg));
  }
}
BENCHMARK(BM_OptimizeJoint);

void BM_SimulateBlock(benchmark::State& state) {
  const auto cfg = config3();
  const CMatrix h = channel3();
  const BeamformerSet set = zf_beamformer_set(h, cfg);
  const QamConstellation qam(4);
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_block(h, set, cfg, rng, CancellationMode::Realistic, qam));
  }
}
BENCHMARK(BM_SimulateBlock);

void BM_RateReport(benchmark::State& state) {
  const auto cfg = config3();
  const CMatrix h = channel3();
  const BeamformerSet set = zf_beamformer_set(h, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rate_report(h, set, cfg));
  }
}
BENCHMARK(BM_RateReport);

}  // namespace

BENCHMARK_MAIN();
