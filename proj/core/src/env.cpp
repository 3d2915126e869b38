#include "deeptrade/env.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace deeptrade {

void EnvConfig::validate() const {
  if (max_trade_shares < 1) throw DataError("max_trade_shares must be >= 1");
  if (fee_rate < 0.0) throw DataError("fee_rate must be >= 0");
  if (!(balance_tolerance <= 0.0 && 0.0 <= initial_balance))
    throw DataError("need balance_tolerance <= 0 <= initial_balance");
}

int action_index(Action a, int max_trade_shares) { return a.delta_shares + max_trade_shares; }

Action action_from_index(int index, int max_trade_shares) {
  return Action{index - max_trade_shares};
}

std::array<double, kStateFeatures> state_features(const EnvState& s) {
  return {s.price,          s.balance,        static_cast<double>(s.shares),
          s.indicators.macd, s.indicators.rsi, s.indicators.cci,
          s.indicators.adx};
}

double Trajectory::total_reward() const {
  double sum = 0.0;
  for (const Transition& tr : steps) sum += tr.reward;
  return sum;
}

Action Trajectory::next_requested(std::size_t i) const {
  if (i + 1 >= steps.size())
    throw std::logic_error("no recorded action after the terminal step");
  return steps[i + 1].requested;
}

TradingEnv::TradingEnv(PriceSeries series, const IndicatorConfig& icfg, const EnvConfig& cfg)
    : series_(std::move(series)), table_(series_, icfg), cfg_(cfg) {
  cfg_.validate();
  start_index_ = table_.warmup_index();
  last_index_ = static_cast<int>(series_.size()) - 1;
  if (series_.empty() || start_index_ >= last_index_)
    throw DataError("series too short: " + series_.ticker + " has " +
                    std::to_string(series_.size()) + " bars, needs more than " +
                    std::to_string(start_index_ + 1) + " to trade past indicator warm-up");
}

EnvState TradingEnv::reset() const {
  EnvState s;
  s.t = start_index_;
  s.price = bar(start_index_).close;
  s.balance = cfg_.initial_balance;
  s.shares = 0;
  s.indicators = table_.row(start_index_);
  return s;
}

Action TradingEnv::legal_action(const EnvState& state, Action requested) const {
  const int k = cfg_.max_trade_shares;
  int delta = std::clamp(requested.delta_shares, -k, k);
  if (delta < 0) return Action{std::max(delta, -state.shares)};
  // Largest affordable buy <= delta: the post-trade, post-fee balance must
  // stay at or above the tolerance. Evaluated with the exact expression
  // step() uses, so the executed action can never breach it.
  for (; delta > 0; --delta) {
    const double cost = state.price * delta + cfg_.fee_rate * state.price * delta;
    if (state.balance - cost >= cfg_.balance_tolerance) break;
  }
  return Action{delta};
}

Transition TradingEnv::step(const EnvState& state, Action requested) const {
  if (is_terminal(state)) throw std::logic_error("step() called on a terminal state");

  // keep the recorded request inside the action space
  const int k = cfg_.max_trade_shares;
  requested.delta_shares = std::clamp(requested.delta_shares, -k, k);
  const Action executed = legal_action(state, requested);
  const double fee = cfg_.fee_rate * state.price * std::abs(executed.delta_shares);

  EnvState next;
  next.t = state.t + 1;
  next.price = bar(next.t).close;
  next.shares = state.shares + executed.delta_shares;
  next.balance = state.balance - state.price * executed.delta_shares - fee;
  next.indicators = table_.row(next.t);

  Transition tr;
  tr.state = state;
  tr.requested = requested;
  tr.executed = executed;
  tr.fee_paid = fee;
  tr.next_state = next;
  tr.reward = next.total_asset() - state.total_asset();
  tr.done = next.t >= last_index_;
  return tr;
}

Trajectory TradingEnv::run_episode(const Policy& policy, Rng& rng) const {
  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(last_index_ - start_index_));
  EnvState state = reset();
  while (!is_terminal(state)) {
    Transition tr = step(state, policy(state, rng));
    state = tr.next_state;
    traj.steps.push_back(std::move(tr));
  }
  return traj;
}

void write_trajectory_csv(const Trajectory& traj, const TradingEnv& env, std::ostream& out) {
  out << "t,date,price,action_requested,action_executed,fee,balance,shares,reward\n";
  char buf[256];
  for (const Transition& tr : traj.steps) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.10g,%d,%d,%.10g,%.10g,%d,%.10g", tr.state.t,
                  env.bar(tr.state.t).date.to_string().c_str(), tr.state.price,
                  tr.requested.delta_shares, tr.executed.delta_shares, tr.fee_paid,
                  tr.next_state.balance, tr.next_state.shares, tr.reward);
    out << buf << '\n';
  }
}

void write_trajectory_csv(const Trajectory& traj, const TradingEnv& env,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trajectory file: " + path.string());
  write_trajectory_csv(traj, env, out);
  if (!out) throw DataError("failed writing trajectory file: " + path.string());
}

}  // namespace deeptrade
