// Command-line front end: config-driven design runs, LBG comparisons,
// genetic traces, plot-data exports and the region-count bound tables.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "clvq/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "experiment config JSON");
  if (config_required) c->required();
  cmd->add_option("--seed", opts.seed, "override the config seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--out", opts.out_dir, "override the output directory");
  cmd->add_option("--jobs", opts.jobs, "worker threads (0 = hardware)");
}

clvq::ExperimentConfig load(const CommonOpts& opts) {
  clvq::ExperimentConfig cfg = clvq::config_from_file(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.outputs = opts.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comparison-limited vector quantizer designer"};
  app.require_subcommand(1);

  CommonOpts design_opts, compare_opts, genetic_opts;
  auto* design_cmd = app.add_subcommand("design", "run design_multi for one k");
  add_common(design_cmd, design_opts);

  auto* compare_cmd =
      app.add_subcommand("compare", "proposed vs LBG sweep over a k list");
  add_common(compare_cmd, compare_opts);

  auto* genetic_cmd =
      app.add_subcommand("genetic-trace", "pool-evolution traces");
  add_common(genetic_cmd, genetic_opts);

  std::string report_path, export_dir = "plots";
  long long export_points = 20000;
  std::uint64_t export_seed = 1;
  auto* export_cmd =
      app.add_subcommand("export-plots", "points/boundaries/graph from a report");
  export_cmd->add_option("--report", report_path, "design report JSON")->required();
  export_cmd->add_option("--out", export_dir, "output directory");
  export_cmd->add_option("--points", export_points, "sample points to label");
  export_cmd->add_option("--seed", export_seed, "sampling seed");

  int bounds_dim = 6, bounds_count = 8, bounds_mult = 2;
  auto* bounds_cmd = app.add_subcommand("bounds", "region-count bound tables");
  bounds_cmd->add_option("--max-dim", bounds_dim, "largest dimension");
  bounds_cmd->add_option("--max-count", bounds_count, "largest hyperplane count");
  bounds_cmd->add_option("--multiplicity", bounds_mult, "parallel-class size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (design_cmd->parsed()) {
      const clvq::ExperimentConfig cfg = load(design_opts);
      const auto reports = clvq::run_design(cfg, design_opts.jobs);
      const clvq::DesignReport& best = clvq::best_report(reports);
      std::cout << "wrote " << reports.size() << " reports to " << cfg.outputs
                << "\nbest: mse=" << best.final_mse
                << " entropy=" << best.final_entropy
                << " regions=" << best.region_count << "\n";
    } else if (compare_cmd->parsed()) {
      const clvq::ExperimentConfig cfg = load(compare_opts);
      const auto rows = clvq::run_comparison(cfg, compare_opts.jobs);
      std::cout << "appended " << rows.size() << " rows to " << cfg.outputs
                << "/sweep.csv\n";
      for (const auto& r : rows)
        std::cout << "  " << r.method << " k_or_regions=" << r.k_or_regions
                  << " best=" << r.distortion_best << "\n";
    } else if (genetic_cmd->parsed()) {
      const clvq::ExperimentConfig cfg = load(genetic_opts);
      const auto traces = clvq::run_genetic_trace(cfg, genetic_opts.jobs);
      std::cout << "wrote " << traces.size() << " traces plus genetic_mean.csv to "
                << cfg.outputs << "\n";
    } else if (export_cmd->parsed()) {
      const clvq::json j = clvq::json::parse(clvq::read_text_file(report_path));
      const clvq::DesignReport report = clvq::design_report_from_json(j);
      clvq::export_plot_data(report, export_dir, export_points, export_seed);
      std::cout << "wrote plot data to " << export_dir << "\n";
    } else if (bounds_cmd->parsed()) {
      std::cout << clvq::bounds_table(bounds_dim, bounds_count, bounds_mult);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
