#include <benchmark/benchmark.h>

#include "deeptrade/agents.hpp"
#include "deeptrade/synthetic.hpp"

using namespace deeptrade;

namespace {

PriceSeries bench_series(int days) {
  SyntheticSpec spec;
  spec.days = days;
  spec.daily_drift = 0.001;
  spec.ripple_amplitude = 0.015;
  spec.noise_level = 0.02;
  spec.noise_seed = 7;
  return make_synthetic_series(spec);
}

}  // namespace

static void IndicatorTableBuild(benchmark::State& state) {
  const PriceSeries series = bench_series(static_cast<int>(state.range(0)));
  const IndicatorConfig cfg;
  for (auto _ : state) {
    IndicatorTable table(series, cfg);
    benchmark::DoNotOptimize(table);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(IndicatorTableBuild)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

static void EnvRandomEpisode(benchmark::State& state) {
  const TradingEnv env(bench_series(static_cast<int>(state.range(0))), IndicatorConfig{},
                       EnvConfig{});
  const EnvConfig& cfg = env.config();
  Rng rng(11);
  const Policy policy = [&cfg](const EnvState&, Rng& r) {
    return Action{r.uniform_int(cfg.num_actions()) - cfg.max_trade_shares};
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(env.run_episode(policy, rng));
  }
  state.SetItemsProcessed(state.iterations() * (state.range(0) - 28));
}
BENCHMARK(EnvRandomEpisode)->Arg(512)->Arg(2048);

static void MlpForwardBackward(benchmark::State& state) {
  Rng rng(3);
  Mlp net = Mlp::make({7, 64, 32, 11}, OutputHead::identity, rng);
  OptimizerState opt = OptimizerState::adam(1e-5, net);
  const std::vector<double> x{0.3, -0.7, 0.2, 1.1, -0.4, 0.8, 0.0};
  for (auto _ : state) {
    const ForwardTrace trace = forward_trace(net, x);
    std::vector<double> up(11, 0.0);
    up[4] = huber_derivative(trace.output[4], 1.0);
    GradientBundle grads = backward(net, trace, up);
    apply_update(net, grads, opt);
    benchmark::DoNotOptimize(net);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(MlpForwardBackward);

static void ValueAgentEpisode(benchmark::State& state) {
  const TradingEnv env(bench_series(160), IndicatorConfig{}, EnvConfig{});
  const FeatureScaler scaler = FeatureScaler::fit(env);
  Hyperparams hp;
  hp.episodes = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train_value_agent(AlgoKind::qlearn, env, env, scaler, hp,
                          static_cast<std::uint64_t>(state.iterations())));
  }
}
BENCHMARK(ValueAgentEpisode);

BENCHMARK_MAIN();
