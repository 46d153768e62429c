#pragma once

#include <optional>
#include <string>
#include <vector>

#include "camdrop/approval.hpp"
#include "camdrop/metrics.hpp"

namespace camdrop {

inline constexpr const char* kArtifactVersion = "camdrop 0.1.0";

/// Evaluation protocol: behavior rates are measured over this many greedy
/// rollouts with seeded tie-breaking.
inline constexpr int kEvalEpisodes = 200;

enum class LearnerKind { ExactDP, QLearning };

const char* learner_name(LearnerKind k);
LearnerKind learner_from_name(const std::string& name);

/// A method axis entry: the approval mechanism plus its non-swept
/// parameters (noise level for the noisy oracle).
struct MethodSpec {
  ApprovalMethod::Kind kind = ApprovalMethod::Kind::OrdinaryRL;
  double sigma = 0.1;
};

struct SweepConfig {
  std::vector<MethodSpec> methods;
  std::vector<std::optional<int>> horizons;
  std::vector<std::string> envs;
  std::vector<int> dataset_sizes;
  std::vector<CalibrationKind> calibrations;
  std::vector<long> budgets;
  std::vector<uint64_t> seeds;
  LearnerKind learner = LearnerKind::ExactDP;

  /// The full standard experiment surface: all five methods, h in {1, 4}
  /// (plus full horizon for ordinary RL), both env presets, dataset sizes
  /// {512, 2048}, all three calibrations and budgets {768, 1536, 3072}.
  static SweepConfig standard_axes(LearnerKind learner,
                                   std::vector<uint64_t> seeds);
};

/// One fully resolved configuration cell. Axes that do not apply to the
/// method or learner are absent.
struct SweepCell {
  ApprovalMethod::Kind method = ApprovalMethod::Kind::OrdinaryRL;
  double sigma = 0.0;
  std::optional<int> horizon;
  std::string env;
  std::optional<int> dataset_size;
  std::optional<CalibrationKind> calibration;
  std::optional<long> budget;
  uint64_t seed = 0;
  LearnerKind learner = LearnerKind::ExactDP;

  std::string key() const;
  friend bool operator==(const SweepCell& a, const SweepCell& b) {
    return a.key() == b.key();
  }
};

/// Deduplicated cross-product with inapplicable axes collapsed: dataset
/// size and calibration apply only to the learned method, horizon "none"
/// only to ordinary RL (which in turn ignores the horizon axis), budgets
/// only to the Q-learning learner. Order is deterministic.
std::vector<SweepCell> enumerate_configs(const SweepConfig& sc);

/// SweepConfig that resolves to exactly the given cell.
SweepConfig singleton_config(const SweepCell& cell);

struct RunRecord {
  SweepCell cell;
  RunMetrics metrics;
  double wall_time = 0.0;
  std::string status = "ok";  // or the error category of a failed cell
  std::string provenance;
};

/// Builds the cell's approval tensor (if any), runs the configured planner
/// or learner, rolls out kEvalEpisodes evaluation episodes and aggregates
/// metrics. Module errors are captured in the record's status, not thrown.
RunRecord run_single(const SweepCell& cell);

/// Executes every cell of the sweep. Results are identical for any
/// parallelism level and ordered like enumerate_configs.
std::vector<RunRecord> run_suite(const SweepConfig& sc, int parallelism);

/// Published reference results carried verbatim as a comparison fixture;
/// absent entries are explicit nulls, never recomputed.
struct ReferenceFixture {
  struct Row {
    std::string name;
    std::optional<double> hacking_rate;
    std::optional<double> intended_rate;
    std::optional<double> failure_rate;
    std::optional<double> true_return;
  };
  Row ordinary_rl;
  Row oracle_mona;
  Row best_learned;

  static ReferenceFixture reference();
};

struct ComparisonRow {
  ReferenceFixture::Row fixture;
  std::string local_cell;  // key of the matched cell, empty if none
  std::optional<RunMetrics> local;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool pass = false;
};

/// Pairs each fixture row with the nearest matching local cell on the
/// public env and judges the qualitative contrast: PASS iff local ordinary
/// RL hacks at >= 0.9, oracle MONA hacks at exactly 0 and reaches intended
/// rate >= 0.99. Throws UsageError naming any required cell that is absent.
ComparisonReport compare_to_reference(const std::vector<RunRecord>& records,
                                      const ReferenceFixture& fixture);

std::string comparison_report_to_json(const ComparisonReport& report);
std::string comparison_report_to_text(const ComparisonReport& report);

SweepConfig sweep_config_from_json(const std::string& text);
std::string sweep_config_to_json(const SweepConfig& sc);

/// CSV with header method,horizon,env,dataset_size,calibration,budget,seed,
/// learner,hacking_rate,intended_rate,failure_rate,true_return,wall_time,
/// status. Inapplicable fields are empty.
std::string records_to_csv(const std::vector<RunRecord>& records);
std::vector<RunRecord> records_from_csv(const std::string& csv);

}  // namespace camdrop
