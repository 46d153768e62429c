// Command-line entry points: reproduce the ordinary-RL vs oracle-MONA
// contrast, run approval-spectrum sweeps, and regenerate reports from a
// records CSV.

#include <cstdint>
#include <string>

#include "CLI11.hpp"

#include "camdrop/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Camera-dropbox reward-hacking experiment engine"};
  app.require_subcommand(1);

  std::string output_root = "out";
  std::string config_path;
  std::string records_path;
  uint64_t seed = 0;
  bool force = false;
  int parallelism = 2;

  CLI::App* reproduce = app.add_subcommand(
      "reproduce",
      "Run the ordinary-RL vs oracle-MONA contrast on the public preset");
  reproduce->add_option("--output-root", output_root, "Output directory");
  reproduce->add_option("--seed", seed, "Run seed");

  CLI::App* suite = app.add_subcommand(
      "suite", "Run a sweep described by a JSON config");
  suite->add_option("--config", config_path, "Sweep config JSON")->required();
  suite->add_option("--output-root", output_root, "Output directory");
  suite->add_option("--seed", seed, "Fallback seed when the config lists none");
  suite->add_option("--parallelism", parallelism, "Worker count");
  suite->add_flag("--force", force, "Overwrite existing outputs");

  CLI::App* report = app.add_subcommand(
      "report", "Regenerate comparison and plot data from a records CSV");
  report->add_option("--records", records_path, "records.csv path")
      ->required();
  report->add_option("--output-root", output_root, "Output directory");
  report->add_flag("--force", force, "Overwrite existing outputs");

  CLI11_PARSE(app, argc, argv);

  if (reproduce->parsed()) return camdrop::cli_reproduce(output_root, seed);
  if (suite->parsed()) {
    return camdrop::cli_suite(config_path, output_root, seed, force,
                              parallelism);
  }
  return camdrop::cli_report(records_path, output_root, force);
}
