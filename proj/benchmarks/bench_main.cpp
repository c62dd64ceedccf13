#include <benchmark/benchmark.h>

#include "fairmdp/count_mdp.hpp"
#include "fairmdp/cp_sampler.hpp"
#include "fairmdp/cpdrl.hpp"
#include "fairmdp/machine_replacement.hpp"
#include "fairmdp/occupancy.hpp"

using namespace fairmdp;

namespace {

WcmdpSpec machines(int n, double budget) {
  MachineReplacementConfig cfg;
  cfg.num_machines = n;
  cfg.budget = budget;
  return build_instance(cfg);
}

void BM_GgfLp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto joint = expand_joint(machines(n, 1.0));
  const auto w = make_exponential_weights(n, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_ggf_lp(joint, w).objective_value);
}
BENCHMARK(BM_GgfLp)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

void BM_CountDualLp(benchmark::State& state) {
  const auto count = build_count_model(machines(static_cast<int>(state.range(0)), 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_count_dual_lp(count).objective_value);
}
BENCHMARK(BM_CountDualLp)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_BuildCountModel(benchmark::State& state) {
  const auto spec = machines(static_cast<int>(state.range(0)), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(build_count_model(spec).num_states());
}
BENCHMARK(BM_BuildCountModel)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Sampler(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto spec = machines(n, 0.1 * n);
  Rng rng = make_stream(1, 0);
  CountState x{std::vector<int>(3, 0)};
  for (int i = 0; i < n; ++i) x.counts[i % 3] += 1;
  PolicyOutput out{3, 2, std::vector<double>(6), {0.8}};
  for (double& p : out.priorities) p = 0.1 + uniform01(rng);
  const std::vector<double> b{spec.budget(0)};
  const auto d = spec.shared_consumption();
  for (auto _ : state) benchmark::DoNotOptimize(sample_count_action(x, out, b, d, rng).logprob);
}
BENCHMARK(BM_Sampler)->Arg(10)->Arg(80)->Arg(640);

void BM_PolicyForward(benchmark::State& state) {
  PolicyNet net(3, 2, 1, 64);
  Rng rng = make_stream(2, 0);
  net.initialize(rng, 0.1);
  const auto spec = machines(10, 1.0);
  const auto input = policy_input(CountState{{4, 3, 3}}, spec);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(input).raw);
}
BENCHMARK(BM_PolicyForward);

void BM_TrainEpisode(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto spec = machines(n, 0.1 * n);
  TrainConfig cfg;
  cfg.episodes = 1;
  cfg.eval_every = 1000;
  cfg.eval_trajectories = 1;
  cfg.eval_horizon = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(spec, cfg).episode_seconds.back());
}
BENCHMARK(BM_TrainEpisode)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
