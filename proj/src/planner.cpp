#include "camdrop/planner.hpp"

#include <algorithm>
#include <cmath>

#include "camdrop/approval.hpp"

namespace camdrop {

namespace {

// Transition structure is timestep-invariant, so next-state indices and the
// per-(s, a) rewards are precomputed once and reused across the whole
// backward induction.
struct TransitionCache {
  std::vector<int32_t> next_index;     // size * 4
  std::vector<double> bad_reward;     // size * 4
  std::vector<uint8_t> scores_terminal;  // size

  explicit TransitionCache(const StateSpace& space) {
    const EnvConfig& config = space.config();
    const int n = space.size();
    next_index.assign(static_cast<size_t>(n) * kNumActions, 0);
    bad_reward.assign(static_cast<size_t>(n) * kNumActions, 0.0);
    scores_terminal.assign(n, 0);
    for (int s = 0; s < n; ++s) {
      GridState state = space.state(s);
      if (state.scores_so_far >= config.max_scores) {
        scores_terminal[s] = 1;
        continue;
      }
      for (int a = 0; a < kNumActions; ++a) {
        const StepOutcome out = step(config, state, kAllActions[a]);
        next_index[static_cast<size_t>(s) * kNumActions + a] =
            space.index(out.next);
        bad_reward[static_cast<size_t>(s) * kNumActions + a] = out.bad_reward;
      }
    }
  }
};

void check_planner_args(const StateSpace& space, std::optional<int> horizon,
                        double gamma) {
  if (horizon && (*horizon < 1 || *horizon > space.config().step_limit)) {
    throw ConfigError("horizon must be in [1, step_limit]");
  }
  if (gamma < 0.0 || gamma > 1.0) {
    throw ConfigError("gamma must be in [0, 1]");
  }
}

}  // namespace

Action Policy::sample(int t, int state_index, Rng& rng) const {
  const std::array<double, 4> probs = choose(t, state_index);
  const double u = rng.uniform();
  double cum = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    cum += probs[a];
    if (u < cum) return kAllActions[a];
  }
  return kAllActions[kNumActions - 1];
}

RewardFn bad_reward_fn(std::shared_ptr<const StateSpace> space) {
  auto cache = std::make_shared<std::vector<double>>(
      static_cast<size_t>(space->size()) * kNumActions, 0.0);
  const EnvConfig& config = space->config();
  for (int s = 0; s < space->size(); ++s) {
    GridState state = space->state(s);
    if (state.scores_so_far >= config.max_scores) continue;
    for (int a = 0; a < kNumActions; ++a) {
      (*cache)[static_cast<size_t>(s) * kNumActions + a] =
          step(config, state, kAllActions[a]).bad_reward;
    }
  }
  return [cache](int /*t*/, int s, Action a) {
    return (*cache)[static_cast<size_t>(s) * kNumActions +
                    static_cast<int>(a)];
  };
}

RewardFn intended_reward_fn(std::shared_ptr<const StateSpace> space,
                            std::optional<int> designated_box_override) {
  EnvConfig reward_config = space->config();
  if (designated_box_override) {
    if (*designated_box_override < 0 ||
        *designated_box_override >=
            static_cast<int>(reward_config.box_cells.size())) {
      throw ConfigError("designated box override must index into box_cells");
    }
    reward_config.designated_box = *designated_box_override;
  }
  auto cache = std::make_shared<std::vector<double>>(
      static_cast<size_t>(space->size()) * kNumActions, 0.0);
  for (int s = 0; s < space->size(); ++s) {
    GridState state = space->state(s);
    if (state.scores_so_far >= reward_config.max_scores) continue;
    for (int a = 0; a < kNumActions; ++a) {
      (*cache)[static_cast<size_t>(s) * kNumActions + a] =
          intended_reward(reward_config, state, kAllActions[a]);
    }
  }
  return [cache](int /*t*/, int s, Action a) {
    return (*cache)[static_cast<size_t>(s) * kNumActions +
                    static_cast<int>(a)];
  };
}

ValueTable value_iteration(std::shared_ptr<const StateSpace> space,
                           std::optional<int> horizon, double gamma,
                           const RewardFn& reward) {
  check_planner_args(*space, horizon, gamma);
  const int n = space->size();
  const int limit = space->config().step_limit;
  const TransitionCache cache(*space);

  ValueTable vt;
  vt.space = space;
  vt.step_limit = limit;
  vt.v.assign(static_cast<size_t>(limit + 1) * n, 0.0);
  vt.q.assign(static_cast<size_t>(limit) * n * kNumActions, 0.0);

  // One Bellman backup: out[s] = max_a r(t,s,a) + gamma * in[next], with
  // terminal states pinned to zero. Optionally records the q row.
  auto backup = [&](int t, const double* in, double* out, double* q_row) {
    for (int s = 0; s < n; ++s) {
      if (cache.scores_terminal[s]) {
        out[s] = 0.0;
        continue;
      }
      double best = 0.0;
      for (int a = 0; a < kNumActions; ++a) {
        const size_t sa = static_cast<size_t>(s) * kNumActions + a;
        const double qv =
            reward(t, s, kAllActions[a]) + gamma * in[cache.next_index[sa]];
        if (q_row) q_row[sa] = qv;
        if (a == 0 || qv > best) best = qv;
      }
      out[s] = best;
    }
  };

  if (!horizon) {
    for (int t = limit - 1; t >= 0; --t) {
      backup(t, &vt.v[static_cast<size_t>(t + 1) * n],
             &vt.v[static_cast<size_t>(t) * n],
             &vt.q[static_cast<size_t>(t) * n * kNumActions]);
    }
    return vt;
  }

  const int h = *horizon;
  std::vector<double> u(n, 0.0), u_next(n, 0.0);
  for (int t = 0; t < limit; ++t) {
    // u := optimal (h-1)-step truncated return starting at time t+1.
    std::fill(u.begin(), u.end(), 0.0);
    for (int m = 1; m <= h - 1; ++m) {
      const int tau = t + h - m;
      if (tau >= limit) continue;  // beyond the clock: zero value
      backup(tau, u.data(), u_next.data(), nullptr);
      std::swap(u, u_next);
    }
    backup(t, u.data(), &vt.v[static_cast<size_t>(t) * n],
           &vt.q[static_cast<size_t>(t) * n * kNumActions]);
  }
  return vt;
}

ValueTable value_iteration(const EnvConfig& env, const PlannerConfig& pc,
                           long capacity) {
  if (pc.reward_source.kind == RewardSource::Kind::Approval) {
    const ApprovalTensor* tensor = pc.reward_source.tensor;
    if (!tensor || !tensor->space) {
      throw UsageError("approval reward source has no tensor");
    }
    if (tensor->space->config().step_limit != env.step_limit) {
      throw UsageError("approval tensor was built for a different env");
    }
    return value_iteration(
        tensor->space, pc.horizon, pc.gamma,
        [tensor](int t, int s, Action a) { return tensor->at(t, s, a); });
  }
  auto space = std::make_shared<const StateSpace>(env, capacity);
  return value_iteration(space, pc.horizon, pc.gamma, bad_reward_fn(space));
}

Policy greedy_policy(const ValueTable& vt, uint64_t tie_seed) {
  for (double x : vt.q) {
    if (!std::isfinite(x)) {
      throw UsageError("greedy_policy requires a finite value table");
    }
  }
  Policy p;
  p.space = vt.space;
  p.tie_seed = tie_seed;
  const ValueTable* table = &vt;
  p.choose = [table](int t, int s) {
    std::array<double, 4> probs = {0.0, 0.0, 0.0, 0.0};
    double best = table->q_at(t, s, 0);
    for (int a = 1; a < kNumActions; ++a) {
      best = std::max(best, table->q_at(t, s, a));
    }
    int ties = 0;
    for (int a = 0; a < kNumActions; ++a) {
      if (table->q_at(t, s, a) == best) ++ties;
    }
    for (int a = 0; a < kNumActions; ++a) {
      if (table->q_at(t, s, a) == best) probs[a] = 1.0 / ties;
    }
    return probs;
  };
  return p;
}

ValueTable q_learning(const EnvConfig& env, const PlannerConfig& pc,
                      const LearnerConfig& lc, long capacity) {
  if (lc.budget < 0) throw ConfigError("budget must be >= 0");
  if (lc.learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (lc.epsilon < 0.0 || lc.epsilon > 1.0) {
    throw ConfigError("epsilon must be in [0, 1]");
  }
  const bool uses_approval =
      pc.reward_source.kind == RewardSource::Kind::Approval;
  if (uses_approval && (!pc.reward_source.tensor ||
                        !pc.reward_source.tensor->space)) {
    throw UsageError("approval reward source has no tensor");
  }
  auto space = uses_approval
                   ? pc.reward_source.tensor->space
                   : std::make_shared<const StateSpace>(env, capacity);
  check_planner_args(*space, pc.horizon, pc.gamma);

  const int n = space->size();
  const int limit = env.step_limit;
  ValueTable vt;
  vt.space = space;
  vt.step_limit = limit;
  vt.v.assign(static_cast<size_t>(limit + 1) * n, 0.0);
  vt.q.assign(static_cast<size_t>(limit) * n * kNumActions, 0.0);

  Rng rng(mix_seed(lc.seed, 0x71eaf));
  const double eps_end = std::min(lc.epsilon, 0.01);

  GridState state = reset(env);
  int state_index = space->index(state);
  int window_pos = 0;

  for (long i = 0; i < lc.budget; ++i) {
    const double eps =
        lc.epsilon +
        (eps_end - lc.epsilon) * (static_cast<double>(i) / std::max<long>(lc.budget, 1));
    const size_t row =
        (static_cast<size_t>(state.t) * n + state_index) * kNumActions;

    int action;
    if (rng.uniform() < eps) {
      action = static_cast<int>(rng.below(kNumActions));
    } else {
      double best = vt.q[row];
      for (int a = 1; a < kNumActions; ++a) best = std::max(best, vt.q[row + a]);
      int ties = 0;
      std::array<int, 4> tied{};
      for (int a = 0; a < kNumActions; ++a) {
        if (vt.q[row + a] == best) tied[ties++] = a;
      }
      action = tied[rng.below(ties)];
    }

    const StepOutcome out = step(env, state, kAllActions[action]);
    const double r =
        pc.reward_source.kind == RewardSource::Kind::Approval
            ? pc.reward_source.tensor->at(state.t, state_index,
                                          kAllActions[action])
            : out.bad_reward;

    const bool next_terminal = is_terminal(env, out.next);
    const bool window_last = pc.horizon && window_pos == *pc.horizon - 1;
    double target = r;
    if (!next_terminal && !window_last) {
      const int next_index = space->index(out.next);
      const size_t next_row =
          (static_cast<size_t>(out.next.t) * n + next_index) * kNumActions;
      double best = vt.q[next_row];
      for (int a = 1; a < kNumActions; ++a) {
        best = std::max(best, vt.q[next_row + a]);
      }
      target += pc.gamma * best;
    }
    vt.q[row + action] += lc.learning_rate * (target - vt.q[row + action]);

    if (next_terminal) {
      state = reset(env);
      state_index = space->index(state);
      window_pos = 0;
    } else {
      state = out.next;
      state_index = space->index(state);
      window_pos = pc.horizon ? (window_pos + 1) % *pc.horizon : 0;
    }
  }

  for (int t = 0; t < limit; ++t) {
    for (int s = 0; s < n; ++s) {
      const size_t row = (static_cast<size_t>(t) * n + s) * kNumActions;
      double best = vt.q[row];
      for (int a = 1; a < kNumActions; ++a) best = std::max(best, vt.q[row + a]);
      vt.v[static_cast<size_t>(t) * n + s] = best;
    }
  }
  return vt;
}

std::vector<EpisodeTrace> rollout(const EnvConfig& env, const Policy& policy,
                                  int episodes, uint64_t seed) {
  if (episodes < 1) throw UsageError("rollout needs at least one episode");
  if (!policy.space || !policy.choose) {
    throw UsageError("rollout needs a policy bound to a state space");
  }
  const StateSpace& space = *policy.space;

  std::vector<EpisodeTrace> traces;
  traces.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    Rng rng(mix_seed(seed, policy.tie_seed, static_cast<uint64_t>(ep)));
    EpisodeTrace trace;
    GridState state = reset(env);
    while (!is_terminal(env, state)) {
      const int s_idx = space.index(state);
      const Action a = policy.sample(state.t, s_idx, rng);
      const StepOutcome out = step(env, state, a);
      trace.steps.push_back({state.t, s_idx, a, out.events, out.bad_reward,
                             intended_reward(env, state, a)});
      state = out.next;
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

void dump_value_table(const ValueTable& vt, std::ostream& os) {
  os.precision(17);
  for (int t = 0; t < vt.step_limit; ++t) {
    for (int s = 0; s < vt.space->size(); ++s) {
      os << t << ' ' << s;
      for (int a = 0; a < kNumActions; ++a) os << ' ' << vt.q_at(t, s, a);
      os << '\n';
    }
  }
}

}  // namespace camdrop
