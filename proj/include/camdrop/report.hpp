#pragma once

#include <string>
#include <vector>

#include "camdrop/suite.hpp"

namespace camdrop {

struct PlotPoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

struct PlotSeries {
  std::string name;
  std::vector<PlotPoint> points;
};

/// Plot-ready data only; rendering is out of scope.
struct PlotData {
  enum class Kind { BehaviorBars, ParetoFrontier };
  Kind kind = Kind::BehaviorBars;
  std::vector<PlotSeries> series;
  std::string sweep_hash;
};

/// Grouped intended/hacking bars per condition. Fixture rows, when given,
/// are echoed as reference bars ahead of the local results.
PlotData behavior_bars(const std::vector<RunRecord>& records,
                       const ReferenceFixture* fixture = nullptr);

/// Scatters (hacking_rate, true_return) per successful cell; the
/// "nondominated" series holds the points no other record dominates
/// (lower-or-equal hacking and higher-or-equal return, strict somewhere).
PlotData pareto_frontier(const std::vector<RunRecord>& records);

std::string plot_data_to_json(const PlotData& data);

/// Writes behavior_bars.json and pareto_frontier.json under output_root.
void emit_plot_data(const std::vector<RunRecord>& records,
                    const std::string& output_root,
                    const ReferenceFixture* fixture = nullptr);

/// Runs the exact-DP ordinary-RL and oracle-MONA cells on the public
/// preset, writes records.csv, comparison.json and behavior_bars.json under
/// output_root and prints the comparison. Exit 0 iff the contrast verdict
/// is PASS; no partial files are left behind on I/O failure.
int cli_reproduce(const std::string& output_root, uint64_t seed);

/// Executes the sweep described by the JSON config, writing records.csv and
/// both plot files. Refuses to overwrite existing outputs unless force.
int cli_suite(const std::string& config_path, const std::string& output_root,
              uint64_t seed, bool force, int parallelism);

/// Rebuilds the comparison report and plot data from an existing records
/// CSV.
int cli_report(const std::string& records_path, const std::string& output_root,
               bool force);

}  // namespace camdrop
