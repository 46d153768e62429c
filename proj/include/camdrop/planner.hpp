#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "camdrop/env.hpp"
#include "camdrop/metrics.hpp"
#include "camdrop/rng.hpp"

namespace camdrop {

class ApprovalTensor;

/// Per-step training signal for the planner: either the environment's own
/// (hackable) reward or a prebuilt approval tensor.
struct RewardSource {
  enum class Kind { BadReward, Approval };
  Kind kind = Kind::BadReward;
  const ApprovalTensor* tensor = nullptr;  // non-owning, Approval only

  static RewardSource bad_reward() { return {}; }
  static RewardSource approval(const ApprovalTensor& t) {
    RewardSource s;
    s.kind = Kind::Approval;
    s.tensor = &t;
    return s;
  }
};

struct PlannerConfig {
  /// Planning horizon. Absent means full remaining episode; h means the
  /// agent re-optimizes an h-step window at every timestep.
  std::optional<int> horizon;
  double gamma = 1.0;
  RewardSource reward_source = RewardSource::bad_reward();
};

/// Exact or learned state/action values, stratified by timestep.
/// v has (step_limit + 1) * size rows, q has step_limit * size * 4.
struct ValueTable {
  std::shared_ptr<const StateSpace> space;
  int step_limit = 0;
  std::vector<double> v;
  std::vector<double> q;

  double v_at(int t, int s) const {
    return v[static_cast<size_t>(t) * space->size() + s];
  }
  double q_at(int t, int s, int a) const {
    return q[(static_cast<size_t>(t) * space->size() + s) * kNumActions + a];
  }
  double q_at(int t, int s, Action a) const {
    return q_at(t, s, static_cast<int>(a));
  }
};

/// Maps (timestep, state index) to a distribution over the four actions.
struct Policy {
  std::shared_ptr<const StateSpace> space;
  std::function<std::array<double, 4>(int t, int state_index)> choose;
  uint64_t tie_seed = 0;

  Action sample(int t, int state_index, Rng& rng) const;
};

struct LearnerConfig {
  long budget = 0;
  double learning_rate = 0.1;
  double epsilon = 0.1;
  uint64_t seed = 0;
};

using RewardFn = std::function<double(int t, int state_index, Action a)>;

/// Reward callbacks over an enumerated space. The intended variant accepts
/// an override for the designated box so a systematically wrong overseer
/// can be constructed on the same dynamics.
RewardFn bad_reward_fn(std::shared_ptr<const StateSpace> space);
RewardFn intended_reward_fn(std::shared_ptr<const StateSpace> space,
                            std::optional<int> designated_box_override = {});

/// Exact finite-horizon dynamic programming by backward induction.
/// Without a horizon: q[t][s][a] = r(t,s,a) + gamma * v[t+1][s'] with
/// v[step_limit][.] = 0. With horizon h: q[t][s][a] is the optimal h-step
/// truncated return restarted at t (terminal states truncate the sum).
ValueTable value_iteration(std::shared_ptr<const StateSpace> space,
                           std::optional<int> horizon, double gamma,
                           const RewardFn& reward);

ValueTable value_iteration(const EnvConfig& env, const PlannerConfig& pc,
                           long capacity = StateSpace::kDefaultCapacity);

/// Uniform distribution over the exact argmax set at every (t, s). The
/// table must outlive the returned policy.
Policy greedy_policy(const ValueTable& vt, uint64_t tie_seed);

/// Tabular one-step Q-learning with epsilon-greedy behavior for exactly
/// lc.budget environment steps, episodes restarting at reset. When a
/// horizon h is set, updates bootstrap only within the current h-step
/// window of the episode. Exploration decays linearly from lc.epsilon to
/// min(lc.epsilon, 0.01) over the budget.
ValueTable q_learning(const EnvConfig& env, const PlannerConfig& pc,
                      const LearnerConfig& lc,
                      long capacity = StateSpace::kDefaultCapacity);

/// n episodes from reset to terminal under the policy. Deterministic given
/// seed (and the policy's tie seed).
std::vector<EpisodeTrace> rollout(const EnvConfig& env, const Policy& policy,
                                  int episodes, uint64_t seed);

/// Columnar debug dump: one "t state q_up q_down q_left q_right" row per
/// (timestep, state).
void dump_value_table(const ValueTable& vt, std::ostream& os);

}  // namespace camdrop
