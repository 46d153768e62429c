#include "camdrop/report.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

using namespace camdrop;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() /
                     ("camdrop_test_" + tag + "_" +
                      std::to_string(::getpid()));
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunRecord make_record(const std::string& env, uint64_t seed, double hacking,
                      double intended, double ret) {
  RunRecord r;
  r.cell.method = ApprovalMethod::Kind::OracleMona;
  r.cell.horizon = 1;
  r.cell.env = env;
  r.cell.seed = seed;
  r.metrics.hacking_rate = hacking;
  r.metrics.intended_rate = intended;
  r.metrics.failure_rate = 1.0 - hacking - intended;
  r.metrics.true_return = ret;
  return r;
}

// Strips the wall_time column (the only nondeterministic field).
std::string strip_wall_time(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    const size_t last = line.rfind(',');
    const size_t prev = line.rfind(',', last - 1);
    os << line.substr(0, prev) << line.substr(last) << '\n';
  }
  return os.str();
}

}  // namespace

TEST_CASE("behavior bars echo the reference rows") {
  const ReferenceFixture fixture = ReferenceFixture::reference();
  const PlotData bars = behavior_bars({}, &fixture);

  REQUIRE(bars.series.size() == 2);
  CHECK(bars.series[0].name == "intended_rate");
  CHECK(bars.series[1].name == "hacking_rate");
  REQUIRE(bars.series[0].points.size() == 3);

  CHECK(bars.series[0].points[0].y == 0.077);
  CHECK(bars.series[1].points[0].y == 0.915);
  CHECK(bars.series[0].points[1].y == 0.999);
  CHECK(bars.series[1].points[1].y == 0.000);
  CHECK(bars.series[0].points[2].y == 0.119);
  CHECK(bars.series[1].points[2].y == 0.000);

  for (const PlotSeries& s : bars.series) {
    for (const PlotPoint& p : s.points) {
      CHECK(p.y >= 0.0);
      CHECK(p.y <= 1.0);
    }
  }
}

TEST_CASE("a single record forms a singleton frontier") {
  const std::vector<RunRecord> records = {
      make_record("public", 0, 0.1, 0.5, 0.25)};
  const PlotData frontier = pareto_frontier(records);
  REQUIRE(frontier.series.size() == 2);
  CHECK(frontier.series[0].name == "all");
  CHECK(frontier.series[1].name == "nondominated");
  CHECK(frontier.series[0].points.size() == 1);
  CHECK(frontier.series[1].points.size() == 1);
}

TEST_CASE("dominated points stay off the frontier") {
  const std::vector<RunRecord> records = {
      make_record("public", 0, 0.0, 0.9, 0.5),   // dominates the next one
      make_record("public", 1, 0.4, 0.2, -1.0),  // dominated
      make_record("public", 2, 0.2, 0.5, 0.7),   // best return
  };
  const PlotData frontier = pareto_frontier(records);
  const auto& nondom = frontier.series[1].points;
  REQUIRE(nondom.size() == 2);
  for (const PlotPoint& p : nondom) {
    CHECK(p.label != records[1].cell.key());
  }
}

TEST_CASE("no frontier point is dominated by any record") {
  std::vector<RunRecord> records;
  Rng rng(31);
  for (int i = 0; i < 40; ++i) {
    records.push_back(make_record("public", i, rng.uniform(), rng.uniform() / 2,
                                  rng.uniform() * 4 - 2));
  }
  const PlotData frontier = pareto_frontier(records);
  for (const PlotPoint& p : frontier.series[1].points) {
    for (const RunRecord& r : records) {
      const bool dominates = r.metrics.hacking_rate <= p.x &&
                             r.metrics.true_return >= p.y &&
                             (r.metrics.hacking_rate < p.x ||
                              r.metrics.true_return > p.y);
      CHECK(!dominates);
    }
  }
}

TEST_CASE("plot data serializes with a versioned schema") {
  const std::vector<RunRecord> records = {
      make_record("public", 0, 0.0, 1.0, 0.5)};
  const std::string json_text = plot_data_to_json(pareto_frontier(records));
  const nlohmann::json j = nlohmann::json::parse(json_text);
  CHECK(j.at("schema") == 1);
  CHECK(j.at("kind") == "pareto_frontier");
  CHECK(j.at("series").is_array());
  CHECK(j.at("metadata").at("sweep_hash").is_string());
}

TEST_CASE("reproduce writes its outputs and reports the contrast") {
  const std::string root = fresh_dir("reproduce");
  CHECK(cli_reproduce(root, 0) == 0);
  CHECK(fs::exists(fs::path(root) / "records.csv"));
  CHECK(fs::exists(fs::path(root) / "comparison.json"));
  CHECK(fs::exists(fs::path(root) / "behavior_bars.json"));

  const std::string comparison = slurp(fs::path(root) / "comparison.json");
  CHECK(comparison.find("0.915") != std::string::npos);
  CHECK(comparison.find("\"verdict\": \"PASS\"") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("reproduce output is byte-stable apart from wall time") {
  const std::string root_a = fresh_dir("stable_a");
  const std::string root_b = fresh_dir("stable_b");
  REQUIRE(cli_reproduce(root_a, 0) == 0);
  REQUIRE(cli_reproduce(root_b, 0) == 0);
  CHECK(strip_wall_time(slurp(fs::path(root_a) / "records.csv")) ==
        strip_wall_time(slurp(fs::path(root_b) / "records.csv")));
  CHECK(slurp(fs::path(root_a) / "behavior_bars.json") ==
        slurp(fs::path(root_b) / "behavior_bars.json"));
  fs::remove_all(root_a);
  fs::remove_all(root_b);
}

TEST_CASE("reproduce fails cleanly on an unusable output root") {
  // A path through a regular file can never become a directory.
  const std::string root = fresh_dir("unwritable");
  fs::create_directories(root);
  std::ofstream(fs::path(root) / "plug") << "x";
  const std::string bad = (fs::path(root) / "plug" / "out").string();
  CHECK(cli_reproduce(bad, 0) != 0);
  CHECK(!fs::exists(fs::path(bad)));
  fs::remove_all(root);
}

TEST_CASE("suite runs from a json config and respects the overwrite guard") {
  const std::string root = fresh_dir("suite");
  fs::create_directories(root);
  const fs::path config_path = fs::path(root) / "sweep.json";

  SweepConfig sc;
  sc.methods = {{ApprovalMethod::Kind::OrdinaryRL, 0.0},
                {ApprovalMethod::Kind::OracleMona, 0.0}};
  sc.horizons = {std::nullopt, 1};
  sc.envs = {"public"};
  sc.seeds = {0};
  std::ofstream(config_path) << sweep_config_to_json(sc);

  const std::string out = (fs::path(root) / "out").string();
  CHECK(cli_suite(config_path.string(), out, 0, false, 2) == 0);
  REQUIRE(fs::exists(fs::path(out) / "records.csv"));
  const auto records = records_from_csv(slurp(fs::path(out) / "records.csv"));
  CHECK(records.size() == enumerate_configs(sc).size());
  CHECK(fs::exists(fs::path(out) / "behavior_bars.json"));
  CHECK(fs::exists(fs::path(out) / "pareto_frontier.json"));

  // Second run without --force refuses and leaves the originals alone.
  const std::string before = slurp(fs::path(out) / "records.csv");
  CHECK(cli_suite(config_path.string(), out, 0, false, 2) != 0);
  CHECK(slurp(fs::path(out) / "records.csv") == before);
  CHECK(cli_suite(config_path.string(), out, 0, true, 2) == 0);

  fs::remove_all(root);
}

TEST_CASE("suite rejects malformed configs with a diagnostic") {
  const std::string root = fresh_dir("badcfg");
  fs::create_directories(root);
  const fs::path config_path = fs::path(root) / "sweep.json";
  std::ofstream(config_path) << "{\"methods\": [\"oracle_mona\"]}";
  const std::string out = (fs::path(root) / "out").string();
  CHECK(cli_suite(config_path.string(), out, 0, false, 1) == 2);
  CHECK(!fs::exists(fs::path(out) / "records.csv"));
  fs::remove_all(root);
}

TEST_CASE("report rebuilds comparison and plots from a records csv") {
  const std::string root = fresh_dir("report");
  REQUIRE(cli_reproduce(root, 0) == 0);
  const std::string out = (fs::path(root) / "rebuilt").string();
  CHECK(cli_report((fs::path(root) / "records.csv").string(), out, false) ==
        0);
  CHECK(fs::exists(fs::path(out) / "comparison.json"));
  CHECK(fs::exists(fs::path(out) / "behavior_bars.json"));
  CHECK(fs::exists(fs::path(out) / "pareto_frontier.json"));
  const std::string comparison = slurp(fs::path(out) / "comparison.json");
  CHECK(comparison.find("0.077") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("emit_plot_data needs at least one record") {
  CHECK_THROWS_AS(emit_plot_data({}, "/tmp/never_used"), UsageError);
}
