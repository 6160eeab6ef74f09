#include <benchmark/benchmark.h>

#include "nmf/fixedpoint.hpp"
#include "nmf/simulate.hpp"

namespace {

const nmf::Penalty& spike_penalty() {
  static const nmf::Penalty pen(nmf::PriorSpec::spike_slab(0.5, 0.2), 1.0);
  return pen;
}

void BM_EtaSpikeSlab(benchmark::State& state) {
  const nmf::Penalty& pen = spike_penalty();
  double x = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nmf::eta(pen, x, 0.7));
    x = x > 3.0 ? 0.1 : x + 0.013;
  }
}
BENCHMARK(BM_EtaSpikeSlab);

void BM_InvertMeanSpikeSlab(benchmark::State& state) {
  const nmf::PriorSpec prior = nmf::PriorSpec::spike_slab(0.5, 0.2);
  double u = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nmf::invert_mean(prior, u, 1.0));
    u = u > 1.0 ? 0.01 : u + 0.007;
  }
}
BENCHMARK(BM_InvertMeanSpikeSlab);

void BM_FpStep(benchmark::State& state) {
  const bool spike = state.range(0) == 1;
  const nmf::PriorSpec prior = spike ? nmf::PriorSpec::spike_slab(0.5, 0.2) : nmf::PriorSpec::gaussian(1.0);
  const nmf::ScalarModel model(nmf::ProblemSpec(prior, prior, 1.0, 2.0));
  for (auto _ : state) benchmark::DoNotOptimize(nmf::fp_step(model, 0.9, 1.1));
}
BENCHMARK(BM_FpStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_NmfObjective(benchmark::State& state) {
  const nmf::PriorSpec prior = nmf::PriorSpec::spike_slab(0.5, 0.2);
  const nmf::ProblemSpec problem(prior, prior, 1.0, 2.0);
  nmf::SimConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  cfg.p = cfg.n / 2;
  const nmf::Dataset ds = nmf::gen_data(problem, cfg);
  const nmf::NmfObjective obj(problem, ds);
  const Eigen::VectorXd u = 0.5 * ds.beta_star;
  for (auto _ : state) benchmark::DoNotOptimize(obj(u).value);
}
BENCHMARK(BM_NmfObjective)->Arg(400)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
