#include "levybel/estimator.hpp"
#include "levybel/moments.hpp"

#include <benchmark/benchmark.h>

using namespace levybel;

namespace {

std::vector<LevyMeasure> stable(int d, double alpha) {
  return std::vector<LevyMeasure>(static_cast<std::size_t>(d), StableMeasure(alpha));
}

void BM_SimulatePath(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const JumpSimulator sim(stable(d, 1.5), 0.25, 0.01);
  std::uint64_t i = 0;
  std::int64_t events = 0;
  for (auto _ : state) {
    const JumpPath p = sim.simulate(RngSpec{1, i++});
    events += static_cast<std::int64_t>(p.events.size());
    benchmark::DoNotOptimize(p.events.data());
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulatePath)->Arg(1)->Arg(2)->Arg(4);

// Full flow (state, Jacobians, second variations, accumulators) per path.
void BM_EvolveFlow(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto method = static_cast<OdeMethod>(state.range(1));
  const auto ms = stable(d, 1.5);
  const JumpSimulator sim(ms, 0.25, 0.01);
  const auto drift = make_drift("tanh", d);
  const FieldParams fp = FieldParams::from(default_stable_params(1.5));
  OdeOptions opts;
  opts.method = method;
  opts.min_substeps = 1;
  const Vec x0 = Vec::Constant(d, 0.1);
  std::vector<JumpPath> paths;
  for (std::uint64_t i = 0; i < 64; ++i) paths.push_back(sim.simulate(RngSpec{2, i}));
  std::size_t k = 0;
  std::int64_t events = 0;
  for (auto _ : state) {
    const JumpPath& p = paths[k++ % paths.size()];
    const FlowState s = evolve_to(*drift, x0, p, 0.25, fp, ms, opts);
    events += static_cast<std::int64_t>(p.events.size());
    benchmark::DoNotOptimize(s.M.data());
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_EvolveFlow)
    ->Args({1, static_cast<int>(OdeMethod::rk4)})
    ->Args({2, static_cast<int>(OdeMethod::rk4)})
    ->Args({2, static_cast<int>(OdeMethod::heun)})
    ->Args({4, static_cast<int>(OdeMethod::rk4)});

void BM_TerminalState(benchmark::State& state) {
  const auto ms = stable(2, 1.5);
  const JumpSimulator sim(ms, 0.25, 0.01);
  const auto drift = make_drift("tanh", 2);
  OdeOptions opts;
  opts.min_substeps = 1;
  const JumpPath p = sim.simulate(RngSpec{3, 0});
  const Vec x0 = Vec::Constant(2, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(terminal_state(*drift, x0, p, 0.25, opts).data());
}
BENCHMARK(BM_TerminalState);

void BM_WeightAssembly(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto ms = stable(d, 1.5);
  const auto drift = make_drift("tanh", d);
  const FlowState s = evolve_to(*drift, Vec::Constant(d, 0.1), simulate_path(ms, 0.25, 0.01, RngSpec{4, 0}), 0.25,
                                FieldParams::from(default_stable_params(1.5)), ms, OdeOptions{});
  for (auto _ : state) benchmark::DoNotOptimize(y_general(s, 0.5).y_general.data());
}
BENCHMARK(BM_WeightAssembly)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

void BM_NegativeMomentOracle(benchmark::State& state) {
  MomentQuery q;
  q.measure = StableMeasure(1.5);
  q.field = FieldParams::from(default_stable_params(1.5));
  q.eps_trunc = 0.01;
  for (auto _ : state) benchmark::DoNotOptimize(negative_moment(q).value);
}
BENCHMARK(BM_NegativeMomentOracle)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
