#include "deeptrade/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace deeptrade {

namespace {

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  return best;
}

/// Normalized inputs for every state visited in the episode, plus the final
/// next_state: entry t feeds the update for step t, entry T the bootstrap.
std::vector<std::array<double, kStateFeatures>> episode_inputs(const Trajectory& traj,
                                                               const FeatureScaler& scaler) {
  std::vector<std::array<double, kStateFeatures>> xs;
  xs.reserve(traj.size() + 1);
  for (const Transition& tr : traj.steps) xs.push_back(scaler.normalize(tr.state));
  xs.push_back(scaler.normalize(traj.steps.back().next_state));
  return xs;
}

}  // namespace

std::string algo_name(AlgoKind kind) {
  switch (kind) {
    case AlgoKind::qlearn: return "qlearn";
    case AlgoKind::sarsa: return "sarsa";
    case AlgoKind::pg: return "pg";
  }
  return "?";
}

std::string algo_display_name(AlgoKind kind) {
  switch (kind) {
    case AlgoKind::qlearn: return "Deep Q-Learning";
    case AlgoKind::sarsa: return "Deep SARSA";
    case AlgoKind::pg: return "Policy Gradient";
  }
  return "?";
}

AlgoKind parse_algo(const std::string& name) {
  if (name == "qlearn") return AlgoKind::qlearn;
  if (name == "sarsa") return AlgoKind::sarsa;
  if (name == "pg") return AlgoKind::pg;
  throw DataError("unknown algorithm '" + name + "', expected qlearn|sarsa|pg");
}

void Hyperparams::validate() const {
  if (episodes < 1) throw DataError("episodes must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DataError("gamma must lie in [0, 1]");
  if (!(td_step > 0.0)) throw DataError("td_step must be positive");
  if (!(epsilon_init >= 0.0 && epsilon_init <= 1.0) ||
      !(epsilon_min >= 0.0 && epsilon_min <= 1.0))
    throw DataError("epsilon values must lie in [0, 1]");
  if (epsilon_min > epsilon_init) throw DataError("epsilon_min must not exceed epsilon_init");
  if (!(epsilon_decay_factor > 0.0 && epsilon_decay_factor <= 1.0))
    throw DataError("epsilon_decay_factor must lie in (0, 1]");
  if (nn_epochs < 1) throw DataError("nn_epochs must be >= 1");
  if (!(nn_learning_rate > 0.0)) throw DataError("nn_learning_rate must be positive");
  if (hidden1 < 1 || hidden2 < 1) throw DataError("hidden layer widths must be >= 1");
}

FeatureScaler FeatureScaler::fit(const TradingEnv& env) {
  FeatureScaler sc;
  const EnvConfig& cfg = env.config();
  const int lo = env.start_index(), hi = env.last_index();
  const int n = hi - lo + 1;

  // Price and indicator moments over the tradable rows of the slice.
  std::array<double, 5> sum{}, sumsq{};
  for (int t = lo; t <= hi; ++t) {
    const IndicatorSet row = env.indicators().row(t);
    const std::array<double, 5> v{env.bar(t).close, row.macd, row.rsi, row.cci, row.adx};
    for (int i = 0; i < 5; ++i) {
      sum[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)];
      sumsq[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    }
  }
  std::array<double, 5> mean{}, sd{};
  for (int i = 0; i < 5; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    mean[iu] = sum[iu] / n;
    const double var = std::max(sumsq[iu] / n - mean[iu] * mean[iu], 0.0);
    sd[iu] = std::sqrt(var);
  }

  // Balance and holdings have no data column; scale them from the account
  // configuration. Balance spans roughly [tolerance, initial]; holdings
  // reach about the share count affordable at the mean price.
  const double balance_span = cfg.initial_balance - cfg.balance_tolerance;
  const double affordable =
      mean[0] > 0.0 ? balance_span / mean[0] : static_cast<double>(cfg.max_trade_shares);

  sc.mean = {mean[0], cfg.initial_balance, 0.0, mean[1], mean[2], mean[3], mean[4]};
  sc.std = {sd[0], balance_span, affordable, sd[1], sd[2], sd[3], sd[4]};
  for (double& s : sc.std) s = std::max(s, 1e-8);
  return sc;
}

std::array<double, kStateFeatures> FeatureScaler::normalize(const EnvState& s) const {
  const auto raw = state_features(s);
  std::array<double, kStateFeatures> out{};
  for (int i = 0; i < kStateFeatures; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    out[iu] = (raw[iu] - mean[iu]) / std[iu];
  }
  return out;
}

std::array<double, kStateFeatures> normalize_state(const EnvState& s,
                                                   const FeatureScaler& scaler) {
  return scaler.normalize(s);
}

double epsilon_greedy_probability(bool is_argmax, double epsilon, int num_actions) {
  const double base = epsilon / num_actions;
  return is_argmax ? 1.0 - epsilon + base : base;
}

Action epsilon_greedy(std::span<const double> q_values, double epsilon, int max_trade_shares,
                      Rng& rng) {
  const int best = argmax_lowest(q_values);
  // P(best) = (1 - eps) + eps/|A|: explore uniformly over all actions with
  // probability eps, otherwise exploit.
  int index = best;
  if (rng.uniform() < epsilon) index = rng.uniform_int(static_cast<int>(q_values.size()));
  return action_from_index(index, max_trade_shares);
}

double decay_epsilon(double epsilon, const Hyperparams& hp) {
  const double next = hp.epsilon_decay_mode == EpsilonDecayMode::multiplicative
                          ? epsilon * hp.epsilon_decay_factor
                          : epsilon - (1.0 - hp.epsilon_decay_factor) * hp.epsilon_init;
  return std::max(hp.epsilon_min, next);
}

double td_target_qlearn(double q_sa, double reward, double max_q_next, bool done,
                        const Hyperparams& hp) {
  const double bootstrap = done ? 0.0 : hp.gamma * max_q_next;
  return q_sa + hp.td_step * (reward + bootstrap - q_sa);
}

double td_target_sarsa(double q_sa, double reward, double q_next_a, bool done,
                       const Hyperparams& hp) {
  const double bootstrap = done ? 0.0 : hp.gamma * q_next_a;
  return q_sa + hp.td_step * (reward + bootstrap - q_sa);
}

std::vector<double> compute_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

void reinforce_episode_update(Mlp& net,
                              std::span<const std::array<double, kStateFeatures>> inputs,
                              std::span<const int> action_indices,
                              std::span<const double> rewards, const Hyperparams& hp,
                              OptimizerState& opt) {
  const std::size_t T = rewards.size();
  const std::vector<double> returns = compute_returns(rewards, hp.gamma);
  const double inv_t = 1.0 / static_cast<double>(T);
  std::vector<double> upstream(static_cast<std::size_t>(net.output_size()), 0.0);

  ForwardTrace trace;
  BackwardScratch scratch;
  GradientBundle acc = GradientBundle::zeros_like(net);
  GradientBundle sample = GradientBundle::zeros_like(net);
  for (int epoch = 0; epoch < hp.nn_epochs; ++epoch) {
    acc.set_zero();
    for (std::size_t t = 0; t < T; ++t) {
      forward_trace_into(net, inputs[t], trace);
      const auto a = static_cast<std::size_t>(action_indices[t]);
      const double p = trace.output[a];
      if (p < kPolicyProbFloor) continue;  // log is floored here, gradient vanishes
      upstream[a] = -returns[t] * inv_t / p;
      backward_into(net, trace, upstream, scratch, sample);
      acc.accumulate(sample);
      upstream[a] = 0.0;
    }
    apply_update(net, acc, opt);
  }
}

Policy greedy_policy(const Mlp& net, const FeatureScaler& scaler) {
  const int k = (net.output_size() - 1) / 2;
  return [net, scaler, k](const EnvState& s, Rng&) {
    const auto out = forward(net, scaler.normalize(s));
    return action_from_index(argmax_lowest(out), k);
  };
}

double evaluate_profit(const Mlp& net, const FeatureScaler& scaler, const TradingEnv& env) {
  Rng unused(0);  // greedy evaluation draws nothing
  return env.run_episode(greedy_policy(net, scaler), unused).profit();
}

TrainResult train_value_agent(AlgoKind kind, const TradingEnv& train_env,
                              const TradingEnv& test_env, const FeatureScaler& scaler,
                              const Hyperparams& hp, std::uint64_t seed) {
  if (kind != AlgoKind::qlearn && kind != AlgoKind::sarsa)
    throw DataError("train_value_agent expects qlearn or sarsa");
  hp.validate();

  const int k = train_env.config().max_trade_shares;
  const int n_actions = train_env.config().num_actions();
  Rng rng(seed);
  Mlp net = Mlp::make({kStateFeatures, hp.hidden1, hp.hidden2, n_actions},
                      OutputHead::identity, rng);
  OptimizerState opt = OptimizerState::adam(hp.nn_learning_rate, net);

  TrainResult result;
  double epsilon = hp.epsilon_init;
  std::vector<double> upstream(static_cast<std::size_t>(n_actions), 0.0);
  ForwardTrace trace;
  BackwardScratch scratch;
  GradientBundle grads = GradientBundle::zeros_like(net);

  for (int episode = 1; episode <= hp.episodes; ++episode) {
    const Policy behavior = [&](const EnvState& s, Rng& r) {
      return epsilon_greedy(forward(net, scaler.normalize(s)), epsilon, k, r);
    };
    const Trajectory traj = train_env.run_episode(behavior, rng);
    const auto xs = episode_inputs(traj, scaler);
    const std::size_t T = traj.size();

    // Frozen copy for bootstrap targets; fixed until the next episode, so
    // the per-step bootstrap terms are constants of this episode.
    const Mlp target = net;
    std::vector<double> bootstrap(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      if (traj.steps[t].done) continue;
      forward_trace_into(target, xs[t + 1], trace);
      const auto& q_next = trace.output;
      bootstrap[t] = kind == AlgoKind::qlearn
                         ? *std::max_element(q_next.begin(), q_next.end())
                         : q_next[static_cast<std::size_t>(
                               action_index(traj.next_requested(t), k))];
    }

    for (int epoch = 0; epoch < hp.nn_epochs; ++epoch) {
      for (std::size_t t = 0; t < T; ++t) {
        forward_trace_into(net, xs[t], trace);
        const auto a = static_cast<std::size_t>(action_index(traj.steps[t].requested, k));
        const double q_sa = trace.output[a];
        const double target_q =
            q_sa + hp.td_step * (traj.steps[t].reward + hp.gamma * bootstrap[t] - q_sa);
        upstream[a] = huber_derivative(q_sa, target_q);
        backward_into(net, trace, upstream, scratch, grads);
        upstream[a] = 0.0;
        apply_update(net, grads, opt);
      }
    }

    result.curve.push_back({episode, epsilon, evaluate_profit(net, scaler, train_env),
                            evaluate_profit(net, scaler, test_env)});
    epsilon = decay_epsilon(epsilon, hp);
  }

  result.net = std::move(net);
  return result;
}

TrainResult train_policy_agent(const TradingEnv& train_env, const TradingEnv& test_env,
                               const FeatureScaler& scaler, const Hyperparams& hp,
                               std::uint64_t seed) {
  hp.validate();

  const int k = train_env.config().max_trade_shares;
  const int n_actions = train_env.config().num_actions();
  Rng rng(seed);
  Mlp net = Mlp::make({kStateFeatures, hp.hidden1, hp.hidden2, n_actions},
                      OutputHead::softmax, rng);
  OptimizerState opt = OptimizerState::sgd(hp.nn_learning_rate);

  TrainResult result;
  for (int episode = 1; episode <= hp.episodes; ++episode) {
    const Policy behavior = [&](const EnvState& s, Rng& r) {
      const auto probs = forward(net, scaler.normalize(s));
      double u = r.uniform();
      int index = n_actions - 1;
      for (int i = 0; i < n_actions; ++i) {
        u -= probs[static_cast<std::size_t>(i)];
        if (u < 0.0) {
          index = i;
          break;
        }
      }
      return action_from_index(index, k);
    };
    const Trajectory traj = train_env.run_episode(behavior, rng);
    const auto xs = episode_inputs(traj, scaler);
    const std::size_t T = traj.size();

    std::vector<int> actions(T);
    std::vector<double> rewards(T);
    for (std::size_t t = 0; t < T; ++t) {
      actions[t] = action_index(traj.steps[t].requested, k);
      rewards[t] = traj.steps[t].reward;
    }
    reinforce_episode_update(net, std::span(xs.data(), T), actions, rewards, hp, opt);

    result.curve.push_back({episode, 0.0, evaluate_profit(net, scaler, train_env),
                            evaluate_profit(net, scaler, test_env)});
  }

  result.net = std::move(net);
  return result;
}

TrainResult train_agent(AlgoKind kind, const TradingEnv& train_env, const TradingEnv& test_env,
                        const FeatureScaler& scaler, const Hyperparams& hp,
                        std::uint64_t seed) {
  return kind == AlgoKind::pg
             ? train_policy_agent(train_env, test_env, scaler, hp, seed)
             : train_value_agent(kind, train_env, test_env, scaler, hp, seed);
}

void write_curve_csv(std::span<const CurveSample> curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write curve file: " + path.string());
  out << "episode,epsilon,train_profit,test_profit\n";
  char buf[160];
  for (const CurveSample& s : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g", s.episode, s.epsilon,
                  s.train_profit, s.test_profit);
    out << buf << '\n';
  }
  if (!out) throw DataError("failed writing curve file: " + path.string());
}

}  // namespace deeptrade
