#include "camdrop/approval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "camdrop/rng.hpp"

namespace camdrop {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void validate_dataset_config(const DatasetConfig& dc) {
  if (dc.size < 8) throw ConfigError("dataset size must be >= 8");
  if (dc.train_fraction <= 0.0 || dc.train_fraction >= 1.0) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (dc.behavior_mix < 0.0 || dc.behavior_mix > 1.0) {
    throw ConfigError("behavior_mix must lie in [0, 1]");
  }
  if (dc.random_action_rate < 0.0 || dc.random_action_rate > 1.0) {
    throw ConfigError("random_action_rate must lie in [0, 1]");
  }
}

ApprovalTensor tensor_from_table(ValueTable&& vt, std::string provenance) {
  ApprovalTensor tensor;
  tensor.space = vt.space;
  tensor.step_limit = vt.step_limit;
  tensor.scores = std::move(vt.q);
  tensor.provenance = std::move(provenance);
  return tensor;
}

// Logistic fit hyperparameters. Deterministic and dependency-free.
constexpr int kMaxIters = 2000;
constexpr double kLearningRate = 0.5;
constexpr double kL2Penalty = 1e-4;
constexpr double kGradTolerance = 1e-6;

}  // namespace

const char* calibration_name(CalibrationKind c) {
  switch (c) {
    case CalibrationKind::None:
      return "none";
    case CalibrationKind::Sigmoid:
      return "sigmoid";
    case CalibrationKind::Isotonic:
      return "isotonic";
  }
  return "?";
}

CalibrationKind calibration_from_name(const std::string& name) {
  if (name == "none") return CalibrationKind::None;
  if (name == "sigmoid") return CalibrationKind::Sigmoid;
  if (name == "isotonic") return CalibrationKind::Isotonic;
  throw ConfigError("unknown calibration \"" + name +
                    "\" (known: none, sigmoid, isotonic)");
}

const char* method_kind_name(ApprovalMethod::Kind k) {
  switch (k) {
    case ApprovalMethod::Kind::OrdinaryRL:
      return "ordinary_rl";
    case ApprovalMethod::Kind::OracleMona:
      return "oracle_mona";
    case ApprovalMethod::Kind::NoisyOracle:
      return "noisy_oracle";
    case ApprovalMethod::Kind::MisspecifiedOracle:
      return "misspecified_oracle";
    case ApprovalMethod::Kind::Learned:
      return "learned";
  }
  return "?";
}

ApprovalMethod::Kind method_kind_from_name(const std::string& name) {
  if (name == "ordinary_rl") return ApprovalMethod::Kind::OrdinaryRL;
  if (name == "oracle_mona") return ApprovalMethod::Kind::OracleMona;
  if (name == "noisy_oracle") return ApprovalMethod::Kind::NoisyOracle;
  if (name == "misspecified_oracle") {
    return ApprovalMethod::Kind::MisspecifiedOracle;
  }
  if (name == "learned") return ApprovalMethod::Kind::Learned;
  throw ConfigError("unknown approval method \"" + name + "\"");
}

ApprovalTensor build_oracle_approval(const EnvConfig& env, long capacity) {
  auto space = std::make_shared<const StateSpace>(env, capacity);
  ValueTable vt =
      value_iteration(space, std::nullopt, 1.0, intended_reward_fn(space));
  return tensor_from_table(std::move(vt), "oracle_mona");
}

ApprovalTensor build_noisy_approval(const EnvConfig& env, double sigma,
                                    uint64_t seed, long capacity) {
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");
  ApprovalTensor tensor = build_oracle_approval(env, capacity);
  if (sigma > 0.0) {
    Rng rng(mix_seed(seed, 0x4e015e));
    for (double& x : tensor.scores) x += sigma * rng.gaussian();
  }
  tensor.provenance = "noisy_oracle sigma=" + std::to_string(sigma) +
                      " seed=" + std::to_string(seed);
  return tensor;
}

ApprovalTensor build_misspecified_approval(const EnvConfig& env,
                                           long capacity) {
  if (env.box_cells.size() < 2) {
    throw ConfigError(
        "misspecified approval needs at least two boxes to swap between");
  }
  const int wrong_box =
      (env.designated_box + 1) % static_cast<int>(env.box_cells.size());
  auto space = std::make_shared<const StateSpace>(env, capacity);
  ValueTable vt = value_iteration(space, std::nullopt, 1.0,
                                  intended_reward_fn(space, wrong_box));
  return tensor_from_table(std::move(vt), "misspecified_oracle wrong_box=" +
                                              std::to_string(wrong_box));
}

int feature_dim(const EnvConfig& env) {
  const int cells = env.width * env.height;
  return 3 * cells + static_cast<int>(env.box_cells.size()) + 3 + kNumActions;
}

void featurize_into(const EnvConfig& env, int t, const GridState& s, Action a,
                    std::span<double> out) {
  const int cells = env.width * env.height;
  const int boxes = static_cast<int>(env.box_cells.size());
  std::fill(out.begin(), out.end(), 0.0);

  auto code = [&](Cell c) { return c.y * env.width + c.x; };
  out[code(s.agent)] = 1.0;
  const int ball_slot =
      s.ball.in_box() ? cells + s.ball.box() : code(s.ball.cell());
  out[cells + ball_slot] = 1.0;
  out[cells + cells + boxes + code(s.blocking_box)] = 1.0;

  const int base = 3 * cells + boxes;
  out[base] = camera_blocked(env, s) ? 1.0 : 0.0;
  out[base + 1] = static_cast<double>(s.scores_so_far) / env.max_scores;
  out[base + 2] = static_cast<double>(t) / env.step_limit;
  out[base + 3 + static_cast<int>(a)] = 1.0;
}

std::vector<double> featurize(const EnvConfig& env, int t, const GridState& s,
                              Action a) {
  std::vector<double> out(feature_dim(env));
  featurize_into(env, t, s, a, out);
  return out;
}

TrajectoryDataset build_trajectory_dataset(const EnvConfig& env,
                                           const DatasetConfig& dc,
                                           uint64_t seed, long capacity) {
  validate_dataset_config(dc);
  auto space = std::make_shared<const StateSpace>(env, capacity);

  ValueTable vi_bad =
      value_iteration(space, std::nullopt, 1.0, bad_reward_fn(space));
  ValueTable vi_intended =
      value_iteration(space, std::nullopt, 1.0, intended_reward_fn(space));
  const Policy hack_policy = greedy_policy(vi_bad, mix_seed(seed, 1));
  const Policy intended_policy = greedy_policy(vi_intended, mix_seed(seed, 2));

  TrajectoryDataset ds;
  ds.feature_dim = feature_dim(env);
  ds.features.reserve(static_cast<size_t>(dc.size) * ds.feature_dim);
  ds.intended_labels.reserve(dc.size);
  ds.hack_labels.reserve(dc.size);
  ds.origin.reserve(dc.size);
  ds.episode_ids.reserve(dc.size);

  Rng rng(mix_seed(seed, 3));
  std::vector<double> scratch(ds.feature_dim);
  int episode = 0;

  while (ds.size() < dc.size) {
    const Policy& policy =
        rng.uniform() < dc.behavior_mix ? hack_policy : intended_policy;

    EpisodeTrace trace;
    GridState state = reset(env);
    while (!is_terminal(env, state)) {
      const int s_idx = space->index(state);
      Action a;
      if (rng.uniform() < dc.random_action_rate) {
        a = kAllActions[rng.below(kNumActions)];
      } else {
        a = policy.sample(state.t, s_idx, rng);
      }
      const StepOutcome out = step(env, state, a);
      trace.steps.push_back({state.t, s_idx, a, out.events, out.bad_reward,
                             intended_reward(env, state, a)});
      state = out.next;
    }

    const BehaviorClass cls = classify_episode(trace);
    const uint8_t intended_label = cls == BehaviorClass::Intended ? 1 : 0;
    const uint8_t hack_label = cls == BehaviorClass::Hacking ? 1 : 0;

    for (const TraceStep& s : trace.steps) {
      if (ds.size() >= dc.size) break;
      featurize_into(env, s.t, space->state(s.state_index), s.action, scratch);
      ds.features.insert(ds.features.end(), scratch.begin(), scratch.end());
      ds.intended_labels.push_back(intended_label);
      ds.hack_labels.push_back(hack_label);
      ds.origin.push_back({s.t, s.state_index, s.action});
      ds.episode_ids.push_back(episode);
    }
    ++episode;
  }

  const bool any_intended =
      std::find(ds.intended_labels.begin(), ds.intended_labels.end(), 1) !=
      ds.intended_labels.end();
  const bool any_hack = std::find(ds.hack_labels.begin(), ds.hack_labels.end(),
                                  1) != ds.hack_labels.end();
  if (!any_intended && !any_hack) {
    throw DatasetError(
        "dataset contains no intended and no hacking tuples; adjust "
        "behavior_mix");
  }
  return ds;
}

namespace {

struct SplitRows {
  std::vector<int> train;
  std::vector<int> heldout;
};

// Shuffles split units (episodes when ids are present, tuples otherwise)
// and assigns the first train_fraction of them to the train side. Both
// sides end up nonempty whenever there are >= 2 units.
SplitRows split_rows(int rows, const std::vector<int>& episode_ids,
                     double train_fraction, uint64_t seed) {
  std::vector<int> units;
  std::vector<std::vector<int>> unit_rows;
  if (!episode_ids.empty()) {
    for (int r = 0; r < rows; ++r) {
      if (unit_rows.empty() ||
          episode_ids[r] != episode_ids[static_cast<size_t>(r) - 1]) {
        unit_rows.emplace_back();
      }
      unit_rows.back().push_back(r);
    }
  } else {
    for (int r = 0; r < rows; ++r) unit_rows.push_back({r});
  }
  units.resize(unit_rows.size());
  std::iota(units.begin(), units.end(), 0);

  Rng rng(mix_seed(seed, 0x5b117));
  for (size_t i = units.size(); i > 1; --i) {
    std::swap(units[i - 1], units[rng.below(static_cast<uint32_t>(i))]);
  }

  const int n = static_cast<int>(units.size());
  int train_units = static_cast<int>(train_fraction * n);
  train_units = std::clamp(train_units, 1, std::max(1, n - 1));

  SplitRows split;
  for (int i = 0; i < n; ++i) {
    auto& side = i < train_units ? split.train : split.heldout;
    for (int r : unit_rows[units[i]]) side.push_back(r);
  }
  return split;
}

bool fit_logistic(const std::vector<double>& features, int dim,
                  const std::vector<uint8_t>& labels,
                  const std::vector<int>& rows, std::vector<double>& weights) {
  weights.assign(dim + 1, 0.0);
  std::vector<double> grad(dim + 1);
  const double n = static_cast<double>(rows.size());

  for (int iter = 0; iter < kMaxIters; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int r : rows) {
      const double* x = features.data() + static_cast<size_t>(r) * dim;
      double z = weights[dim];
      for (int j = 0; j < dim; ++j) z += weights[j] * x[j];
      const double err = sigmoid(z) - labels[r];
      for (int j = 0; j < dim; ++j) grad[j] += err * x[j];
      grad[dim] += err;
    }
    double norm_sq = 0.0;
    for (int j = 0; j <= dim; ++j) {
      grad[j] /= n;
      if (j < dim) grad[j] += kL2Penalty * weights[j];  // bias unpenalized
      norm_sq += grad[j] * grad[j];
    }
    if (std::sqrt(norm_sq) < kGradTolerance) return true;
    for (int j = 0; j <= dim; ++j) weights[j] -= kLearningRate * grad[j];
  }
  return false;
}

// Platt scaling by projected Newton steps on the two-parameter logistic
// log-likelihood; a is kept >= 0 so the calibrator stays nondecreasing.
bool fit_platt(const std::vector<double>& scores,
               const std::vector<uint8_t>& labels, PlattParams& out) {
  double a = 1.0, b = 0.0;
  const double n = static_cast<double>(scores.size());
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    double ga = 0.0, gb = 0.0, haa = 1e-9, hab = 0.0, hbb = 1e-9;
    for (size_t i = 0; i < scores.size(); ++i) {
      const double z = scores[i];
      const double p = sigmoid(a * z + b);
      const double err = p - labels[i];
      const double w = std::max(p * (1.0 - p), 1e-12);
      ga += err * z;
      gb += err;
      haa += w * z * z;
      hab += w * z;
      hbb += w;
    }
    ga /= n;
    gb /= n;
    haa /= n;
    hab /= n;
    hbb /= n;
    if (std::sqrt(ga * ga + gb * gb) < 1e-9) {
      converged = true;
      break;
    }
    const double det = haa * hbb - hab * hab;
    double da = (hbb * ga - hab * gb) / det;
    double db = (haa * gb - hab * ga) / det;
    a -= da;
    b -= db;
    if (a < 0.0) a = 0.0;
  }
  out.a = a;
  out.b = b;
  return converged;
}

// Pool-adjacent-violators over (score, label) pairs. Ties in score are
// merged first so breakpoint inputs come out strictly increasing.
IsotonicParams fit_isotonic(std::vector<std::pair<double, double>> pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });

  struct Block {
    double input_lo, input_hi;
    double sum, weight;
    double mean() const { return sum / weight; }
  };
  std::vector<Block> blocks;
  size_t i = 0;
  while (i < pairs.size()) {
    size_t j = i;
    double sum = 0.0;
    while (j < pairs.size() && pairs[j].first == pairs[i].first) {
      sum += pairs[j].second;
      ++j;
    }
    Block blk{pairs[i].first, pairs[i].first, sum,
              static_cast<double>(j - i)};
    blocks.push_back(blk);
    while (blocks.size() >= 2 &&
           blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      Block top = blocks.back();
      blocks.pop_back();
      blocks.back().input_hi = top.input_hi;
      blocks.back().sum += top.sum;
      blocks.back().weight += top.weight;
    }
    i = j;
  }

  IsotonicParams out;
  for (const Block& blk : blocks) {
    out.inputs.push_back(blk.input_lo);
    out.outputs.push_back(blk.mean());
    if (blk.input_hi != blk.input_lo) {
      out.inputs.push_back(blk.input_hi);
      out.outputs.push_back(blk.mean());
    }
  }
  return out;
}

}  // namespace

ProbabilityModel train_probability_model(const std::vector<double>& features,
                                         int feature_dim,
                                         const std::vector<uint8_t>& labels,
                                         const std::vector<int>& episode_ids,
                                         const DatasetConfig& dc,
                                         CalibrationKind cal, uint64_t seed) {
  const int rows = static_cast<int>(labels.size());
  if (rows < 2) throw DatasetError("training needs at least two tuples");
  if (features.size() != static_cast<size_t>(rows) * feature_dim) {
    throw UsageError("feature matrix does not match labels x feature_dim");
  }

  const SplitRows split = split_rows(rows, episode_ids, dc.train_fraction, seed);

  bool has_pos = false, has_neg = false;
  for (int r : split.train) {
    (labels[r] ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw DatasetError("train split must contain both label classes");
  }

  ProbabilityModel m;
  m.calibration = cal;
  m.converged = fit_logistic(features, feature_dim, labels, split.train,
                             m.weights);

  if (cal == CalibrationKind::None) return m;

  std::vector<double> raw;
  std::vector<uint8_t> held_labels;
  raw.reserve(split.heldout.size());
  for (int r : split.heldout) {
    raw.push_back(linear_score(
        m, {features.data() + static_cast<size_t>(r) * feature_dim,
            static_cast<size_t>(feature_dim)}));
    held_labels.push_back(labels[r]);
  }
  if (raw.empty()) throw DatasetError("held-out split is empty");

  if (cal == CalibrationKind::Sigmoid) {
    m.converged = fit_platt(raw, held_labels, m.platt) && m.converged;
  } else {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
      pairs.emplace_back(raw[i], static_cast<double>(held_labels[i]));
    }
    m.isotonic = fit_isotonic(std::move(pairs));
  }
  return m;
}

double linear_score(const ProbabilityModel& m,
                    std::span<const double> features) {
  if (static_cast<int>(features.size()) != m.feature_dim()) {
    throw UsageError("feature vector has dimension " +
                     std::to_string(features.size()) + ", model expects " +
                     std::to_string(m.feature_dim()));
  }
  double z = m.weights.back();
  for (size_t j = 0; j < features.size(); ++j) z += m.weights[j] * features[j];
  return z;
}

double calibrate_score(const ProbabilityModel& m, double raw_score) {
  switch (m.calibration) {
    case CalibrationKind::None:
      return sigmoid(raw_score);
    case CalibrationKind::Sigmoid:
      return sigmoid(m.platt.a * raw_score + m.platt.b);
    case CalibrationKind::Isotonic: {
      const auto& in = m.isotonic.inputs;
      const auto& out = m.isotonic.outputs;
      if (in.empty()) return sigmoid(raw_score);
      if (raw_score <= in.front()) return out.front();
      if (raw_score >= in.back()) return out.back();
      const auto it = std::upper_bound(in.begin(), in.end(), raw_score);
      const size_t hi = static_cast<size_t>(it - in.begin());
      const size_t lo = hi - 1;
      const double span = in[hi] - in[lo];
      const double frac = span > 0.0 ? (raw_score - in[lo]) / span : 0.0;
      return out[lo] + frac * (out[hi] - out[lo]);
    }
  }
  return 0.5;
}

double predict_probability(const ProbabilityModel& m,
                           std::span<const double> features) {
  return calibrate_score(m, linear_score(m, features));
}

ApprovalTensor reshape_score_tensor(
    std::shared_ptr<const StateSpace> space,
    const std::function<double(int t, int s, Action a)>& intended_prob,
    const std::function<double(int t, int s, Action a)>& hack_prob,
    double score_scale) {
  const EnvConfig& env = space->config();
  ApprovalTensor tensor;
  tensor.space = space;
  tensor.step_limit = env.step_limit;
  tensor.scores.resize(static_cast<size_t>(env.step_limit) * space->size() *
                       kNumActions);
  size_t i = 0;
  for (int t = 0; t < env.step_limit; ++t) {
    for (int s = 0; s < space->size(); ++s) {
      for (Action a : kAllActions) {
        double predicted =
            score_scale * (intended_prob(t, s, a) - hack_prob(t, s, a));
        predicted -= env.per_step_penalty;
        tensor.scores[i++] = predicted;
      }
    }
  }
  return tensor;
}

ApprovalTensor build_learned_approval(const EnvConfig& env,
                                      const DatasetConfig& dc,
                                      CalibrationKind cal, double score_scale,
                                      uint64_t seed, long capacity) {
  const TrajectoryDataset ds = build_trajectory_dataset(env, dc, seed, capacity);
  const ProbabilityModel intended_model = train_probability_model(
      ds.features, ds.feature_dim, ds.intended_labels, ds.episode_ids, dc, cal,
      seed);
  const ProbabilityModel hack_model = train_probability_model(
      ds.features, ds.feature_dim, ds.hack_labels, ds.episode_ids, dc, cal,
      seed + 1);

  auto space = std::make_shared<const StateSpace>(env, capacity);
  std::vector<double> scratch(ds.feature_dim);
  auto predictor = [&](const ProbabilityModel& m) {
    return [&env, &m, &scratch, &space](int t, int s, Action a) {
      featurize_into(env, t, space->state(s), a, scratch);
      return predict_probability(m, scratch);
    };
  };

  ApprovalTensor tensor = reshape_score_tensor(
      space, predictor(intended_model), predictor(hack_model), score_scale);
  tensor.provenance = std::string("learned size=") + std::to_string(dc.size) +
                      " calibration=" + calibration_name(cal) +
                      " score_scale=" + std::to_string(score_scale) +
                      " seed=" + std::to_string(seed);
  return tensor;
}

void dump_approval_tensor(const ApprovalTensor& tensor, std::ostream& os) {
  os << "# approval " << tensor.provenance << '\n';
  os.precision(17);
  for (int t = 0; t < tensor.step_limit; ++t) {
    for (int s = 0; s < tensor.space->size(); ++s) {
      os << t << ' ' << s;
      for (Action a : kAllActions) os << ' ' << tensor.at(t, s, a);
      os << '\n';
    }
  }
}

}  // namespace camdrop
