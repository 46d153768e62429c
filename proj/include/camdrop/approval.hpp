#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "camdrop/env.hpp"
#include "camdrop/planner.hpp"

namespace camdrop {

enum class CalibrationKind { None, Sigmoid, Isotonic };

const char* calibration_name(CalibrationKind c);
CalibrationKind calibration_from_name(const std::string& name);

/// Dense map (timestep, state index, action) -> approval score, shaped
/// exactly like the enumerated state space of its EnvConfig.
class ApprovalTensor {
 public:
  std::shared_ptr<const StateSpace> space;
  int step_limit = 0;
  std::vector<double> scores;  // step_limit * size * 4
  std::string provenance;

  double at(int t, int s, Action a) const {
    return scores[(static_cast<size_t>(t) * space->size() + s) * kNumActions +
                  static_cast<int>(a)];
  }
  double& at(int t, int s, Action a) {
    return scores[(static_cast<size_t>(t) * space->size() + s) * kNumActions +
                  static_cast<int>(a)];
  }
};

struct DatasetConfig {
  int size = 512;
  double train_fraction = 0.8;
  /// Fraction of episodes sampled from the hack-optimal policy; the rest
  /// follow the intended-optimal policy.
  double behavior_mix = 0.5;
  /// Kept low: random camera blocks and ball re-scores relabel whole
  /// episodes, and past ~0.1 they wash out the intended class entirely.
  double random_action_rate = 0.05;
};

/// Featurized (t, s, a) tuples with per-episode outcome labels. A tuple may
/// have both labels 0 (failure episode) but never both 1.
struct TrajectoryDataset {
  struct Origin {
    int t = 0;
    int state_index = 0;
    Action action = Action::Up;
  };

  int feature_dim = 0;
  std::vector<double> features;  // row-major, size() rows
  std::vector<uint8_t> intended_labels;
  std::vector<uint8_t> hack_labels;
  std::vector<Origin> origin;
  std::vector<int> episode_ids;  // for leakage-free episode-wise splits

  int size() const { return static_cast<int>(intended_labels.size()); }
  std::span<const double> row(int i) const {
    return {features.data() + static_cast<size_t>(i) * feature_dim,
            static_cast<size_t>(feature_dim)};
  }
};

struct PlattParams {
  double a = 1.0;
  double b = 0.0;
};

struct IsotonicParams {
  std::vector<double> inputs;   // strictly increasing raw scores
  std::vector<double> outputs;  // nondecreasing calibrated values in [0,1]
};

/// Linear-logistic scorer plus an optional post-hoc calibrator.
struct ProbabilityModel {
  std::vector<double> weights;  // feature_dim + 1, bias last
  CalibrationKind calibration = CalibrationKind::None;
  PlattParams platt;
  IsotonicParams isotonic;
  bool converged = true;

  int feature_dim() const { return static_cast<int>(weights.size()) - 1; }
};

/// Which approval mechanism produced a tensor (OrdinaryRL produces none;
/// the planner consumes the environment reward directly).
struct ApprovalMethod {
  enum class Kind {
    OrdinaryRL,
    OracleMona,
    NoisyOracle,
    MisspecifiedOracle,
    Learned
  };
  Kind kind = Kind::OrdinaryRL;
  double sigma = 0.0;                  // NoisyOracle
  bool swap_designated_box = true;     // MisspecifiedOracle
  DatasetConfig dataset;               // Learned
  CalibrationKind calibration = CalibrationKind::None;  // Learned
  uint64_t seed = 0;                   // NoisyOracle / Learned
};

const char* method_kind_name(ApprovalMethod::Kind k);
ApprovalMethod::Kind method_kind_from_name(const std::string& name);

/// Oracle approval: the full-horizon optimal action values under the
/// intended reward (gamma = 1). Greedy one-step maximization of this tensor
/// reproduces intended-optimal behavior.
ApprovalTensor build_oracle_approval(
    const EnvConfig& env, long capacity = StateSpace::kDefaultCapacity);

/// Oracle plus i.i.d. zero-mean Gaussian noise of standard deviation sigma
/// per entry. sigma = 0 reproduces the oracle bit for bit.
ApprovalTensor build_noisy_approval(
    const EnvConfig& env, double sigma, uint64_t seed,
    long capacity = StateSpace::kDefaultCapacity);

/// The oracle construction computed for the wrong designated box: a
/// systematically wrong but internally coherent overseer. Requires at least
/// two boxes.
ApprovalTensor build_misspecified_approval(
    const EnvConfig& env, long capacity = StateSpace::kDefaultCapacity);

int feature_dim(const EnvConfig& env);

/// One-hot planes (agent cell, ball slot including in-box slots, blocking
/// box cell) + camera-blocked bit + scores_so_far/max_scores + t/step_limit
/// + one-hot action.
void featurize_into(const EnvConfig& env, int t, const GridState& s, Action a,
                    std::span<double> out);
std::vector<double> featurize(const EnvConfig& env, int t, const GridState& s,
                              Action a);

/// Samples episodes from the behavior mixture until `size` tuples are
/// collected; labels are broadcast from the episode classification. Throws
/// DatasetError only if no tuple of either class was collected.
TrajectoryDataset build_trajectory_dataset(
    const EnvConfig& env, const DatasetConfig& dc, uint64_t seed,
    long capacity = StateSpace::kDefaultCapacity);

/// Fits the logistic model by full-batch gradient descent on L2-penalized
/// log-loss, then fits the requested calibrator on the held-out split. The
/// split is by episode when episode ids are given, by tuple otherwise.
/// Throws DatasetError when the train split lacks a label class.
ProbabilityModel train_probability_model(
    const std::vector<double>& features, int feature_dim,
    const std::vector<uint8_t>& labels, const std::vector<int>& episode_ids,
    const DatasetConfig& dc, CalibrationKind cal, uint64_t seed);

/// Raw (uncalibrated) linear score w . x + bias.
double linear_score(const ProbabilityModel& m, std::span<const double> features);

/// Calibrated probability for a raw linear score; always in [0, 1].
double calibrate_score(const ProbabilityModel& m, double raw_score);

/// Calibrated probability for a feature vector. Throws UsageError on a
/// feature-dimension mismatch.
double predict_probability(const ProbabilityModel& m,
                           std::span<const double> features);

/// scale * (p_intended - p_hack) - per_step_penalty for every (t, s, a),
/// reshaped into a full tensor. The predictors are injectable so the
/// arithmetic can be verified against stubs.
ApprovalTensor reshape_score_tensor(
    std::shared_ptr<const StateSpace> space,
    const std::function<double(int t, int s, Action a)>& intended_prob,
    const std::function<double(int t, int s, Action a)>& hack_prob,
    double score_scale);

/// Full learned-overseer pipeline: build the dataset, train the intended
/// model with `seed` and the hack model with `seed + 1`, then reshape the
/// score difference into an approval tensor.
ApprovalTensor build_learned_approval(
    const EnvConfig& env, const DatasetConfig& dc, CalibrationKind cal,
    double score_scale, uint64_t seed,
    long capacity = StateSpace::kDefaultCapacity);

/// Columnar dump in the value-table format, preceded by a provenance line.
void dump_approval_tensor(const ApprovalTensor& tensor, std::ostream& os);

}  // namespace camdrop
