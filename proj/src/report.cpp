#include "camdrop/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace camdrop {

namespace {

std::string sweep_hash(const std::vector<RunRecord>& records) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const RunRecord& r : records) feed(r.cell.key());
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

const char* plot_kind_name(PlotData::Kind k) {
  return k == PlotData::Kind::BehaviorBars ? "behavior_bars"
                                           : "pareto_frontier";
}

bool dominates(const RunMetrics& a, const RunMetrics& b) {
  const bool no_worse =
      a.hacking_rate <= b.hacking_rate && a.true_return >= b.true_return;
  const bool strictly_better =
      a.hacking_rate < b.hacking_rate || a.true_return > b.true_return;
  return no_worse && strictly_better;
}

}  // namespace

PlotData behavior_bars(const std::vector<RunRecord>& records,
                       const ReferenceFixture* fixture) {
  PlotData data;
  data.kind = PlotData::Kind::BehaviorBars;
  data.sweep_hash = sweep_hash(records);

  PlotSeries intended{"intended_rate", {}};
  PlotSeries hacking{"hacking_rate", {}};
  double x = 0.0;

  if (fixture) {
    for (const ReferenceFixture::Row* row :
         {&fixture->ordinary_rl, &fixture->oracle_mona,
          &fixture->best_learned}) {
      const std::string label = row->name + " (reference)";
      intended.points.push_back({label, x, row->intended_rate.value_or(0.0)});
      hacking.points.push_back({label, x, row->hacking_rate.value_or(0.0)});
      x += 1.0;
    }
  }
  for (const RunRecord& r : records) {
    if (r.status != "ok") continue;
    intended.points.push_back({r.cell.key(), x, r.metrics.intended_rate});
    hacking.points.push_back({r.cell.key(), x, r.metrics.hacking_rate});
    x += 1.0;
  }

  data.series.push_back(std::move(intended));
  data.series.push_back(std::move(hacking));
  return data;
}

PlotData pareto_frontier(const std::vector<RunRecord>& records) {
  PlotData data;
  data.kind = PlotData::Kind::ParetoFrontier;
  data.sweep_hash = sweep_hash(records);

  PlotSeries all{"all", {}};
  PlotSeries frontier{"nondominated", {}};
  for (const RunRecord& r : records) {
    if (r.status != "ok") continue;
    const PlotPoint point{r.cell.key(), r.metrics.hacking_rate,
                          r.metrics.true_return};
    all.points.push_back(point);
    bool dominated = false;
    for (const RunRecord& other : records) {
      if (other.status != "ok" || &other == &r) continue;
      if (dominates(other.metrics, r.metrics)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) frontier.points.push_back(point);
  }
  data.series.push_back(std::move(all));
  data.series.push_back(std::move(frontier));
  return data;
}

std::string plot_data_to_json(const PlotData& data) {
  nlohmann::json j;
  j["schema"] = 1;
  j["kind"] = plot_kind_name(data.kind);
  j["series"] = nlohmann::json::array();
  for (const PlotSeries& s : data.series) {
    nlohmann::json js;
    js["name"] = s.name;
    js["points"] = nlohmann::json::array();
    for (const PlotPoint& p : s.points) {
      js["points"].push_back({{"label", p.label}, {"x", p.x}, {"y", p.y}});
    }
    j["series"].push_back(js);
  }
  j["metadata"] = {{"sweep_hash", data.sweep_hash}};
  return j.dump(2);
}

namespace {

// Tracks written files so a failed run can remove its own partial output.
class OutputWriter {
 public:
  explicit OutputWriter(const std::string& root) : root_(root) {}

  void require_fresh(const std::vector<std::string>& names, bool force) const {
    if (force) return;
    for (const std::string& name : names) {
      const fs::path p = fs::path(root_) / name;
      if (fs::exists(p)) {
        throw IoError("refusing to overwrite " + p.string() +
                      " (pass --force to allow)");
      }
    }
  }

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    const fs::path p = fs::path(root_) / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing " + p.string());
    written_.push_back(p);
  }

  void remove_written() {
    for (const fs::path& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

 private:
  std::string root_;
  std::vector<fs::path> written_;
};

int error_exit(const std::exception& e) {
  std::cerr << "error: " << e.what() << '\n';
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const IoError*>(&e)) return 3;
  return 1;
}

}  // namespace

void emit_plot_data(const std::vector<RunRecord>& records,
                    const std::string& output_root,
                    const ReferenceFixture* fixture) {
  if (records.empty()) throw UsageError("emit_plot_data needs >= 1 record");
  OutputWriter writer(output_root);
  writer.write("behavior_bars.json",
               plot_data_to_json(behavior_bars(records, fixture)));
  writer.write("pareto_frontier.json",
               plot_data_to_json(pareto_frontier(records)));
}

int cli_reproduce(const std::string& output_root, uint64_t seed) {
  OutputWriter writer(output_root);
  try {
    SweepConfig sc;
    sc.methods = {{ApprovalMethod::Kind::OrdinaryRL, 0.0},
                  {ApprovalMethod::Kind::OracleMona, 0.0}};
    sc.horizons = {std::nullopt, 1};
    sc.envs = {"public"};
    sc.seeds = {seed};
    sc.learner = LearnerKind::ExactDP;

    const std::vector<RunRecord> records = run_suite(sc, 2);
    const ReferenceFixture fixture = ReferenceFixture::reference();
    const ComparisonReport report = compare_to_reference(records, fixture);

    writer.write("records.csv", records_to_csv(records));
    writer.write("comparison.json", comparison_report_to_json(report));
    writer.write("behavior_bars.json",
                 plot_data_to_json(behavior_bars(records, &fixture)));

    std::cout << comparison_report_to_text(report);
    return report.pass ? 0 : 1;
  } catch (const std::exception& e) {
    writer.remove_written();
    return error_exit(e);
  }
}

int cli_suite(const std::string& config_path, const std::string& output_root,
              uint64_t seed, bool force, int parallelism) {
  OutputWriter writer(output_root);
  try {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot read sweep config " + config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();

    SweepConfig sc = sweep_config_from_json(buffer.str());
    if (sc.seeds.empty()) sc.seeds = {seed};

    writer.require_fresh(
        {"records.csv", "behavior_bars.json", "pareto_frontier.json"}, force);

    const std::vector<RunRecord> records = run_suite(sc, parallelism);
    writer.write("records.csv", records_to_csv(records));
    writer.write("behavior_bars.json",
                 plot_data_to_json(behavior_bars(records)));
    writer.write("pareto_frontier.json",
                 plot_data_to_json(pareto_frontier(records)));

    std::cout << "ran " << records.size() << " cells -> " << output_root
              << '\n';
    return 0;
  } catch (const std::exception& e) {
    writer.remove_written();
    return error_exit(e);
  }
}

int cli_report(const std::string& records_path, const std::string& output_root,
               bool force) {
  OutputWriter writer(output_root);
  try {
    std::ifstream in(records_path);
    if (!in) throw IoError("cannot read records CSV " + records_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::vector<RunRecord> records = records_from_csv(buffer.str());

    writer.require_fresh(
        {"comparison.json", "behavior_bars.json", "pareto_frontier.json"},
        force);

    const ReferenceFixture fixture = ReferenceFixture::reference();
    writer.write("behavior_bars.json",
                 plot_data_to_json(behavior_bars(records, &fixture)));
    writer.write("pareto_frontier.json",
                 plot_data_to_json(pareto_frontier(records)));

    const ComparisonReport report = compare_to_reference(records, fixture);
    writer.write("comparison.json", comparison_report_to_json(report));
    std::cout << comparison_report_to_text(report);
    return 0;
  } catch (const std::exception& e) {
    writer.remove_written();
    return error_exit(e);
  }
}

}  // namespace camdrop
