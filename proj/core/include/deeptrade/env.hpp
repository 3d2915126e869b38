#pragma once

#include <array>
#include <functional>
#include <iosfwd>

#include "deeptrade/indicators.hpp"
#include "deeptrade/market_data.hpp"
#include "deeptrade/random.hpp"

namespace deeptrade {

struct EnvConfig {
  int max_trade_shares = 5;          // k: per-step trade size bound
  double initial_balance = 1000.0;
  double balance_tolerance = -100.0; // balance may not drop below this
  double fee_rate = 0.001;           // fraction of traded notional, per trade

  int num_actions() const { return 2 * max_trade_shares + 1; }
  void validate() const;  // throws DataError
};

/// Trade of delta_shares in [-k, k]; negative sells, zero holds, positive buys.
struct Action {
  int delta_shares = 0;
  bool operator==(const Action&) const = default;
};

/// Output-unit index for an action: unit i <-> delta_shares i - k.
int action_index(Action a, int max_trade_shares);
Action action_from_index(int index, int max_trade_shares);

/// Full observable state: price, balance, holdings, indicator features and
/// the step index within the series.
struct EnvState {
  double price = 0.0;
  double balance = 0.0;
  int shares = 0;
  IndicatorSet indicators;
  int t = 0;

  double total_asset() const { return balance + price * shares; }
  bool operator==(const EnvState&) const = default;
};

/// Feature vector fed to function approximators: [p, b, h, macd, rsi, cci, adx].
inline constexpr int kStateFeatures = 7;
std::array<double, kStateFeatures> state_features(const EnvState& s);

struct Transition {
  EnvState state;
  Action requested;
  Action executed;
  double reward = 0.0;
  double fee_paid = 0.0;
  EnvState next_state;
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> steps;

  std::size_t size() const { return steps.size(); }
  double total_reward() const;
  double initial_asset() const { return steps.front().state.total_asset(); }
  double final_asset() const { return steps.back().next_state.total_asset(); }
  double profit() const { return final_asset() - initial_asset(); }

  /// Action requested by the behavior policy at steps[i].next_state.
  /// Only defined for non-terminal steps.
  Action next_requested(std::size_t i) const;
};

using Policy = std::function<Action(const EnvState&, Rng&)>;

/// Deterministic trading MDP over one price series. The instance itself is
/// immutable; all episode state lives in EnvState, so a single env can serve
/// concurrent rollouts.
class TradingEnv {
public:
  /// Throws DataError when the series cannot cover indicator warm-up plus
  /// at least two tradable days.
  TradingEnv(PriceSeries series, const IndicatorConfig& icfg, const EnvConfig& cfg);

  /// State at the first post-warm-up day: full balance, no shares.
  EnvState reset() const;

  /// Clamps a request to what balance and holdings allow: sells never exceed
  /// shares held, buys never push the post-fee balance below the tolerance.
  Action legal_action(const EnvState& state, Action requested) const;

  /// One day forward. Throws std::logic_error when called on a terminal state.
  Transition step(const EnvState& state, Action requested) const;

  /// Rolls a full episode from reset() until done.
  Trajectory run_episode(const Policy& policy, Rng& rng) const;

  bool is_terminal(const EnvState& s) const { return s.t >= last_index_; }
  int start_index() const { return start_index_; }
  int last_index() const { return last_index_; }
  const Bar& bar(int t) const { return series_.bars[static_cast<std::size_t>(t)]; }
  const PriceSeries& series() const { return series_; }
  const IndicatorTable& indicators() const { return table_; }
  const EnvConfig& config() const { return cfg_; }

private:
  PriceSeries series_;
  IndicatorTable table_;
  EnvConfig cfg_;
  int start_index_ = 0;
  int last_index_ = 0;
};

/// `t,date,price,action_requested,action_executed,fee,balance,shares,reward`
/// with balance/shares taken after the step's trade.
void write_trajectory_csv(const Trajectory& traj, const TradingEnv& env, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const TradingEnv& env,
                          const std::filesystem::path& path);

}  // namespace deeptrade
