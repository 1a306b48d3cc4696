#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "cbfmarl/cbf.hpp"
#include "cbfmarl/env.hpp"
#include "cbfmarl/marl/ppo.hpp"
#include "cbfmarl/safety_filter.hpp"

using namespace cbfmarl;

namespace {

EnvConfig config_for(std::size_t agents, RewardMethod method) {
  EnvConfig c;
  c.num_agents = agents;
  c.reward.method = method;
  return c;
}

void BM_EnvStep(benchmark::State& state) {
  const auto method = static_cast<RewardMethod>(state.range(1));
  const IntersectionEnv env(config_for(static_cast<std::size_t>(state.range(0)), method));
  WorldState w = env.reset(1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ControlInput> a(w.num_agents());
  for (auto _ : state) {
    for (auto& x : a) x = {5 * u(rng), 1.5 * u(rng)};
    benchmark::DoNotOptimize(env.step(w, a));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EnvStep)->ArgsProduct({{2, 4, 8}, {0, 1, 2}});

void BM_AllEvaluations(benchmark::State& state) {
  const IntersectionEnv env(config_for(static_cast<std::size_t>(state.range(0)), RewardMethod::kCbf));
  const WorldState w = env.reset(3);
  for (auto _ : state) benchmark::DoNotOptimize(all_evaluations(w));
}
BENCHMARK(BM_AllEvaluations)->Arg(2)->Arg(4)->Arg(8);

void BM_FilterQp(benchmark::State& state) {
  const VehicleParams p;
  const InputBox box{{p.accel_min, p.steering_rate_min}, {p.accel_max, p.steering_rate_max}};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Feasible: every half-plane contains (1, 0.5).
  std::vector<HalfPlane> cs(static_cast<std::size_t>(state.range(0)));
  for (auto& c : cs) {
    c.a = {u(rng), u(rng)};
    c.b = c.a[0] + 0.5 * c.a[1] - 0.3 * std::abs(u(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_box_qp({4 * u(rng), 1.5 * u(rng)}, cs, box));
}
BENCHMARK(BM_FilterQp)->Arg(3)->Arg(5)->Arg(9);

void BM_PolicySample(benchmark::State& state) {
  const IntersectionEnv env(config_for(4, RewardMethod::kCbf));
  const auto params = marl::initial_policy(env, marl::PpoConfig{});
  const WorldState w = env.reset(5);
  const auto obs = env.observe(w, 0);
  std::mt19937_64 rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(marl::sample_action(params, obs, rng));
}
BENCHMARK(BM_PolicySample);

}  // namespace

BENCHMARK_MAIN();
