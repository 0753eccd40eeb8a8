#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clvq/serialize.hpp"

namespace clvq {

/// One experiment: source, comparator budget(s), objective, init strategy and
/// all solver knobs, plus a mandatory seed (no wall-clock seeding anywhere).
struct ExperimentConfig {
  SourceModel source;
  std::vector<int> k_values;
  Objective objective = Objective::mse_min;
  InitStrategy init = InitStrategy::random;
  GeneticParams genetic;
  OptimizerParams optimizer;
  int restarts = 10;
  std::uint64_t seed = 0;
  std::string outputs = "out";
  int lbg_t_max = 60;
  long long lbg_sample_n = 100000;

  void validate() const {
    source.validate();
    if (k_values.empty())
      throw std::invalid_argument("config field \"k\" must list at least one value");
    for (int k : k_values)
      if (k < 1) throw std::invalid_argument("config field \"k\" entries must be >= 1");
    genetic.validate();
    optimizer.validate();
    if (restarts < 1)
      throw std::invalid_argument("config field \"restarts\" must be >= 1");
  }
};

namespace config_detail {

inline const json& require(const json& j, const char* field) {
  if (!j.contains(field))
    throw std::invalid_argument(std::string("config: missing required field \"") +
                                field + "\"");
  return j.at(field);
}

template <typename T>
T get_field(const json& j, const char* field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config: field \"") + field +
                                "\" has the wrong type");
  }
}

}  // namespace config_detail

inline ExperimentConfig config_from_json(const json& j) {
  using config_detail::get_field;
  using config_detail::require;
  ExperimentConfig cfg;

  const json& source = require(j, "source");
  cfg.source.kind =
      source_kind_from_string(require(source, "kind").get<std::string>());
  cfg.source.dimension = require(source, "d").get<int>();

  const json& k = require(j, "k");
  if (k.is_array())
    for (const json& v : k) cfg.k_values.push_back(v.get<int>());
  else
    cfg.k_values.push_back(k.get<int>());

  cfg.seed = require(j, "seed").get<std::uint64_t>();

  cfg.objective =
      objective_from_string(get_field<std::string>(j, "objective", "mse_min"));
  cfg.optimizer.objective = cfg.objective;

  if (j.contains("init")) {
    const json& init = j.at("init");
    const std::string kind = require(init, "kind").get<std::string>();
    if (kind == "random") {
      cfg.init = InitStrategy::random;
    } else if (kind == "genetic") {
      cfg.init = InitStrategy::genetic;
    } else {
      throw std::invalid_argument("config: init.kind must be random or genetic");
    }
    cfg.genetic.pool_size = get_field(init, "pool_size", cfg.genetic.pool_size);
    cfg.genetic.generations =
        get_field(init, "generations", cfg.genetic.generations);
    cfg.genetic.keep_fraction =
        get_field(init, "keep_fraction", cfg.genetic.keep_fraction);
    cfg.genetic.mutation_sigma =
        get_field(init, "mutation_sigma", cfg.genetic.mutation_sigma);
    const std::string policy =
        get_field<std::string>(init, "crossover", "dissimilarity_pairing");
    if (policy == "random_pairing")
      cfg.genetic.crossover_policy = CrossoverPolicy::random_pairing;
    else if (policy == "dissimilarity_pairing")
      cfg.genetic.crossover_policy = CrossoverPolicy::dissimilarity_pairing;
    else
      throw std::invalid_argument(
          "config: init.crossover must be random_pairing or dissimilarity_pairing");
  }

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    cfg.optimizer.t_max = get_field(o, "t_max", cfg.optimizer.t_max);
    cfg.optimizer.s = get_field(o, "s", cfg.optimizer.s);
    cfg.optimizer.sigma0 = get_field(o, "sigma0", cfg.optimizer.sigma0);
    cfg.optimizer.sigma_decay =
        get_field(o, "sigma_decay", cfg.optimizer.sigma_decay);
    cfg.optimizer.grid_points =
        get_field(o, "grid_points", cfg.optimizer.grid_points);
    cfg.optimizer.search_halfwidth =
        get_field(o, "search_halfwidth", cfg.optimizer.search_halfwidth);
    cfg.optimizer.ls_points = get_field(o, "ls_points", cfg.optimizer.ls_points);
  }

  auto read_estimation = [&](const char* field, EstimationParams& p) {
    if (!j.contains(field)) return;
    const json& e = j.at(field);
    p.min_points_per_region =
        get_field(e, "min_points_per_region", p.min_points_per_region);
    p.max_total_points = get_field(e, "max_total_points", p.max_total_points);
    p.mse_points = get_field(e, "mse_points", p.mse_points);
  };
  read_estimation("estimation", cfg.optimizer.opt_estimation);
  read_estimation("final_estimation", cfg.optimizer.final_estimation);

  cfg.restarts = get_field(j, "restarts", cfg.restarts);
  cfg.outputs = get_field<std::string>(j, "outputs", cfg.outputs);
  cfg.lbg_t_max = get_field(j, "lbg_t_max", cfg.lbg_t_max);
  cfg.lbg_sample_n = get_field(j, "lbg_sample_n", cfg.lbg_sample_n);

  cfg.validate();
  return cfg;
}

inline ExperimentConfig config_from_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: invalid JSON in " + path + ": " +
                                e.what());
  }
  return config_from_json(j);
}

namespace detail {

inline void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

inline double mean_final_objective(const std::vector<DesignReport>& reports) {
  double sum = 0.0;
  for (const DesignReport& r : reports)
    sum += r.objective == Objective::mse_min ? r.final_mse : r.final_entropy;
  return sum / static_cast<double>(reports.size());
}

}  // namespace detail

/// Runs design_multi for a single-k config and writes one report JSON and one
/// trace CSV per restart plus a summary JSON. Returns the reports for
/// in-process callers.
inline std::vector<DesignReport> run_design(const ExperimentConfig& cfg,
                                            int jobs = 0) {
  cfg.validate();
  if (cfg.k_values.size() != 1)
    throw std::invalid_argument(
        "config field \"k\" must be a single value for a design run");
  const int k = cfg.k_values.front();

  std::vector<DesignReport> reports =
      design_multi(cfg.source, k, cfg.optimizer, cfg.init, cfg.restarts,
                   cfg.seed, cfg.genetic, jobs);

  detail::ensure_dir(cfg.outputs);
  json files = json::array();
  for (const DesignReport& r : reports) {
    const std::string base =
        cfg.outputs + "/report_r" + std::to_string(r.restart_index);
    write_text_file(base + ".json", to_json(r).dump(2) + "\n");
    write_text_file(base + "_trace.csv", design_trace_csv(r));
    files.push_back("report_r" + std::to_string(r.restart_index) + ".json");
  }

  const DesignReport& best = best_report(reports);
  double mean_mse = 0.0, mean_entropy = 0.0;
  for (const DesignReport& r : reports) {
    mean_mse += r.final_mse;
    mean_entropy += r.final_entropy;
  }
  mean_mse /= reports.size();
  mean_entropy /= reports.size();

  json summary{{"source", {{"kind", to_string(cfg.source.kind)},
                           {"d", cfg.source.dimension}}},
               {"k", k},
               {"objective", to_string(cfg.objective)},
               {"restarts", cfg.restarts},
               {"seed", cfg.seed},
               {"best", {{"restart_index", best.restart_index},
                         {"final_mse", best.final_mse},
                         {"final_entropy", best.final_entropy},
                         {"region_count", best.region_count}}},
               {"mean_mse", mean_mse},
               {"mean_entropy", mean_entropy},
               {"reports", std::move(files)}};
  write_text_file(cfg.outputs + "/summary.json", summary.dump(2) + "\n");
  return reports;
}

/// The three comparison curves for each k in the config: the proposed design,
/// LBG restricted to the same comparator budget, and LBG granted as many
/// points as the best proposed design has regions. Rows append to sweep.csv;
/// re-runs with new seeds add rows and never rewrite old ones.
inline std::vector<SweepRow> run_comparison(const ExperimentConfig& cfg,
                                            int jobs = 0) {
  cfg.validate();
  detail::ensure_dir(cfg.outputs);
  const std::string path = cfg.outputs + "/sweep.csv";
  std::vector<SweepRow> rows;

  for (std::size_t i = 0; i < cfg.k_values.size(); ++i) {
    const int k = cfg.k_values[i];
    const std::uint64_t cell_seed =
        cfg.seed + static_cast<std::uint64_t>(i) * (std::uint64_t{1} << 32);

    std::vector<DesignReport> reports =
        design_multi(cfg.source, k, cfg.optimizer, cfg.init, cfg.restarts,
                     cell_seed, cfg.genetic, jobs);
    const DesignReport& best = best_report(reports);
    double mean = 0.0;
    for (const DesignReport& r : reports) mean += r.final_mse;
    mean /= reports.size();
    rows.push_back({cfg.source.dimension, k, "proposed", best.final_mse, mean,
                    best.region_count, cfg.restarts, cfg.seed});

    SampleStream lbg_stream(cfg.source, cell_seed + (std::uint64_t{1} << 31));
    std::vector<LbgResult> matched_runs;
    const LbgResult matched =
        lbg_comparator_matched(cfg.source, k, cfg.lbg_t_max, lbg_stream,
                               cfg.lbg_sample_n, cfg.restarts, &matched_runs);
    double matched_mean = 0.0;
    for (const LbgResult& r : matched_runs) matched_mean += r.mse;
    matched_mean /= matched_runs.empty() ? 1.0 : matched_runs.size();
    rows.push_back({cfg.source.dimension, k, "lbg_comparator_matched",
                    matched.mse, matched_mean,
                    static_cast<int>(matched.codebook.points.size()),
                    cfg.restarts, cfg.seed});

    SampleStream region_stream(cfg.source,
                               cell_seed + (std::uint64_t{1} << 31) + 7);
    const auto region_runs = lbg_design_restarts(
        cfg.source, best.region_count, cfg.lbg_t_max, region_stream.seed(),
        cfg.lbg_sample_n, cfg.restarts);
    const LbgResult& region = best_of(region_runs);
    double region_mean = 0.0;
    for (const LbgResult& r : region_runs) region_mean += r.mse;
    region_mean /= region_runs.size();
    rows.push_back({cfg.source.dimension, best.region_count,
                    "lbg_region_matched", region.mse, region_mean,
                    best.region_count, cfg.restarts, cfg.seed});
  }

  std::string text;
  if (!file_exists(path)) text = kSweepHeader;
  for (const SweepRow& r : rows) text += sweep_row_csv(r);
  append_text_file(path, text);
  return rows;
}

/// Genetic traces: one CSV per run plus the cross-run average, the light and
/// dark curves of a pool-evolution plot. `restarts` sets the number of runs.
inline std::vector<GeneticTrace> run_genetic_trace(const ExperimentConfig& cfg,
                                                   int jobs = 0) {
  cfg.validate();
  if (cfg.init != InitStrategy::genetic)
    throw std::invalid_argument(
        "config field \"init\" must select genetic for a genetic trace");
  if (cfg.k_values.size() != 1)
    throw std::invalid_argument(
        "config field \"k\" must be a single value for a genetic trace");
  const int k = cfg.k_values.front();

  std::vector<GeneticTrace> traces(cfg.restarts);
  detail::parallel_for(cfg.restarts, jobs, [&](int r) {
    SampleStream stream(cfg.source,
                        cfg.seed + static_cast<std::uint64_t>(r) *
                                       detail::kRestartStride);
    traces[r] =
        genetic_init(cfg.source, k, cfg.genetic, make_mse_oracle(cfg.source),
                     stream)
            .second;
  });

  detail::ensure_dir(cfg.outputs);
  for (int r = 0; r < cfg.restarts; ++r)
    write_text_file(cfg.outputs + "/genetic_run" + std::to_string(r) + ".csv",
                    genetic_trace_csv(traces[r]));

  GeneticTrace mean;
  mean.generations.resize(cfg.genetic.generations);
  for (int g = 0; g < cfg.genetic.generations; ++g) {
    double best = 0.0, avg = 0.0;
    for (const GeneticTrace& t : traces) {
      best += t.generations[g].best_mse;
      avg += t.generations[g].mean_mse;
    }
    mean.generations[g].best_mse = best / cfg.restarts;
    mean.generations[g].mean_mse = avg / cfg.restarts;
  }
  write_text_file(cfg.outputs + "/genetic_mean.csv", genetic_trace_csv(mean));
  return traces;
}

/// Plot-data export from a report: labeled sample points, per-hyperplane
/// boundary coefficients (d = 2), and for d = 2 the region graph as JSON and
/// DOT. Points export works in any dimension through a chosen coordinate
/// pair.
inline void export_plot_data(const DesignReport& report,
                             const std::string& out_dir, long long n_points,
                             std::uint64_t seed, int coord_x = 0,
                             int coord_y = 1) {
  const int d = report.source.dimension;
  if (coord_x < 0 || coord_x >= d || coord_y < 0 || coord_y >= d)
    throw std::invalid_argument("coordinate pair out of range");
  detail::ensure_dir(out_dir);

  SampleStream stream(report.source, seed);
  std::string pts = "x,y,label\n";
  const Eigen::MatrixXd batch = stream.sample(n_points);
  const std::vector<RegionLabel> labels = label_block(report.arrangement, batch);
  for (long long i = 0; i < n_points; ++i)
    pts += csv_double(batch(coord_x, i)) + "," + csv_double(batch(coord_y, i)) +
           "," + labels[i].to_string() + "\n";
  write_text_file(out_dir + "/points.csv", pts);

  if (d == 2) {
    std::string lines = "hyperplane,v1,v2,t\n";
    const Arrangement& arr = report.arrangement;
    for (int j = 0; j < arr.resolution(); ++j)
      lines += std::to_string(j) + "," + csv_double(arr.weights(j, 0)) + "," +
               csv_double(arr.weights(j, 1)) + "," + csv_double(arr.offsets(j)) +
               "\n";
    write_text_file(out_dir + "/boundaries.csv", lines);

    if (arr.resolution() <= 8) {
      const RegionGraph g = build_region_graph(arr);
      write_text_file(out_dir + "/region_graph.json", to_json(g).dump(2) + "\n");
      write_text_file(out_dir + "/region_graph.dot", to_dot(g));
    }
  } else {
    // boundary export is only defined in the plane
  }
}

/// Region-count bound tables (plain text).
inline std::string bounds_table(int max_dim = 6, int max_count = 8,
                                int multiplicity = 2) {
  std::ostringstream out;
  out << "max regions r(m, n), m = dimension, n = hyperplanes\n";
  out << "m\\n";
  for (int n = 0; n <= max_count; ++n) out << "\t" << n;
  out << "\n";
  for (int m = 1; m <= max_dim; ++m) {
    out << m;
    for (int n = 0; n <= max_count; ++n) out << "\t" << max_regions(m, n);
    out << "\n";
  }
  out << "\ncentral arrangements r0(n, m), all hyperplanes through the origin\n";
  out << "m\\n";
  for (int n = 1; n <= max_count; ++n) out << "\t" << n;
  out << "\n";
  for (int m = 1; m <= max_dim; ++m) {
    out << m;
    for (int n = 1; n <= max_count; ++n)
      out << "\t" << max_regions_central(n, m);
    out << "\n";
  }
  out << "\nparallel classes rp(m, l, d), d = " << multiplicity
      << " hyperplanes per class\n";
  out << "m\\l";
  for (int l = 1; l <= max_count; ++l) out << "\t" << l;
  out << "\n";
  for (int m = 1; m <= max_dim; ++m) {
    out << m;
    for (int l = 1; l <= max_count; ++l)
      out << "\t" << max_regions_parallel(m, l, multiplicity);
    out << "\n";
  }
  return out.str();
}

}  // namespace clvq
