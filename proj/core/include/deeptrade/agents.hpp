#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "deeptrade/env.hpp"
#include "deeptrade/neural.hpp"

namespace deeptrade {

enum class AlgoKind { qlearn, sarsa, pg };

std::string algo_name(AlgoKind kind);          // "qlearn" | "sarsa" | "pg"
std::string algo_display_name(AlgoKind kind);  // "Deep Q-Learning" | ...
AlgoKind parse_algo(const std::string& name);  // throws DataError

enum class EpsilonDecayMode { multiplicative, linear };

struct Hyperparams {
  int episodes = 30;
  double gamma = 0.6;    // discount factor
  double td_step = 0.7;  // alpha in the temporal-difference target
  double epsilon_init = 0.8;
  double epsilon_min = 0.2;
  double epsilon_decay_factor = 0.9;
  EpsilonDecayMode epsilon_decay_mode = EpsilonDecayMode::multiplicative;
  int nn_epochs = 10;
  double nn_learning_rate = 1e-5;
  int hidden1 = 64;
  int hidden2 = 32;

  void validate() const;  // throws DataError
};

/// Per-feature affine normalization, fit on the training slice only.
/// Price and indicator statistics come from the post-warm-up rows; balance
/// and holdings are scaled from the account configuration (initial balance,
/// tolerance, typical affordable share count), which depends on no test data.
struct FeatureScaler {
  std::array<double, kStateFeatures> mean{};
  std::array<double, kStateFeatures> std{};  // floored at 1e-8

  static FeatureScaler fit(const TradingEnv& train_env);

  std::array<double, kStateFeatures> normalize(const EnvState& s) const;
};

std::array<double, kStateFeatures> normalize_state(const EnvState& s,
                                                   const FeatureScaler& scaler);

/// P(action) under the epsilon-greedy rule: 1 - eps + eps/|A| for the argmax,
/// eps/|A| for every other action.
double epsilon_greedy_probability(bool is_argmax, double epsilon, int num_actions);

/// Samples the epsilon-greedy distribution over q_values. Ties in the argmax
/// resolve to the lowest index.
Action epsilon_greedy(std::span<const double> q_values, double epsilon,
                      int max_trade_shares, Rng& rng);

/// One per-episode decay step, floored at epsilon_min. Multiplicative mode
/// scales by the factor; linear mode subtracts (1 - factor) of epsilon_init.
double decay_epsilon(double epsilon, const Hyperparams& hp);

/// q + alpha * (r + gamma * bootstrap - q), bootstrap forced to 0 when done.
double td_target_qlearn(double q_sa, double reward, double max_q_next, bool done,
                        const Hyperparams& hp);
double td_target_sarsa(double q_sa, double reward, double q_next_a, bool done,
                       const Hyperparams& hp);

/// Discounted suffix sums, G_t = r_t + gamma * G_{t+1}, computed backward.
std::vector<double> compute_returns(std::span<const double> rewards, double gamma);

/// One episode's worth of policy-gradient updates: nn_epochs sweeps, each
/// accumulating the gradient of -(1/T) sum_t G_t ln pi(a_t|s_t) over the whole
/// episode and taking a single SGD step. Steps whose action probability has
/// fallen below the log floor contribute nothing.
void reinforce_episode_update(Mlp& net, std::span<const std::array<double, kStateFeatures>> inputs,
                              std::span<const int> action_indices,
                              std::span<const double> rewards, const Hyperparams& hp,
                              OptimizerState& opt);

/// Deterministic evaluation policy: argmax over the net's outputs (value nets
/// and softmax policies alike), ties to the lowest index. Ignores the rng.
Policy greedy_policy(const Mlp& net, const FeatureScaler& scaler);

/// Profit of a single greedy rollout on `env`.
double evaluate_profit(const Mlp& net, const FeatureScaler& scaler, const TradingEnv& env);

struct CurveSample {
  int episode = 0;       // 1-based
  double epsilon = 0.0;  // exploration rate used for that episode; 0 for pg
  double train_profit = 0.0;
  double test_profit = 0.0;
};

struct TrainResult {
  Mlp net;
  std::vector<CurveSample> curve;
};

/// Q-learning / SARSA: per episode, roll a trajectory under epsilon-greedy,
/// freeze a target copy, sweep the episode nn_epochs times with one Huber /
/// Adam update per visited step, decay epsilon, then record greedy train and
/// test profits.
TrainResult train_value_agent(AlgoKind kind, const TradingEnv& train_env,
                              const TradingEnv& test_env, const FeatureScaler& scaler,
                              const Hyperparams& hp, std::uint64_t seed);

/// REINFORCE: per episode, sample a trajectory from the softmax policy and
/// apply reinforce_episode_update, then record greedy train and test profits.
TrainResult train_policy_agent(const TradingEnv& train_env, const TradingEnv& test_env,
                               const FeatureScaler& scaler, const Hyperparams& hp,
                               std::uint64_t seed);

TrainResult train_agent(AlgoKind kind, const TradingEnv& train_env,
                        const TradingEnv& test_env, const FeatureScaler& scaler,
                        const Hyperparams& hp, std::uint64_t seed);

void write_curve_csv(std::span<const CurveSample> curve, const std::filesystem::path& path);

}  // namespace deeptrade
