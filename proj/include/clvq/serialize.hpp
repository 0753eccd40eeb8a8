#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clvq/arrangement.hpp"
#include "clvq/estimation.hpp"
#include "clvq/genetic.hpp"
#include "clvq/lbg.hpp"
#include "clvq/optimizer.hpp"
#include "clvq/region_graph.hpp"

namespace clvq {

using nlohmann::json;

// Canonical on-disk form of an arrangement; every other artifact embeds it.
inline json to_json(const Arrangement& arr) {
  json v = json::array();
  for (int j = 0; j < arr.resolution(); ++j) {
    json row = json::array();
    for (int c = 0; c < arr.dimension(); ++c) row.push_back(arr.weights(j, c));
    v.push_back(std::move(row));
  }
  json t = json::array();
  for (int j = 0; j < arr.resolution(); ++j) t.push_back(arr.offsets(j));
  return json{{"d", arr.dimension()}, {"k", arr.resolution()},
              {"V", std::move(v)},   {"t", std::move(t)}};
}

inline Arrangement arrangement_from_json(const json& j) {
  const int d = j.at("d").get<int>();
  const int k = j.at("k").get<int>();
  Eigen::MatrixXd V(k, d);
  Eigen::VectorXd t(k);
  const json& rows = j.at("V");
  const json& offs = j.at("t");
  if (static_cast<int>(rows.size()) != k || static_cast<int>(offs.size()) != k)
    throw std::invalid_argument("arrangement JSON has inconsistent k");
  for (int r = 0; r < k; ++r) {
    if (static_cast<int>(rows[r].size()) != d)
      throw std::invalid_argument("arrangement JSON has inconsistent d");
    for (int c = 0; c < d; ++c) V(r, c) = rows[r][c].get<double>();
    t(r) = offs[r].get<double>();
  }
  Arrangement arr(std::move(V), std::move(t));
  return arr;
}

inline json to_json(const Codebook& cb) {
  json entries = json::array();
  for (const auto& [l, e] : cb.entries) {
    json centroid = json::array();
    for (int c = 0; c < e.centroid.size(); ++c) centroid.push_back(e.centroid(c));
    entries.push_back(json{{"label", l.to_string()},
                           {"centroid", std::move(centroid)},
                           {"mass", e.mass},
                           {"count", e.count}});
  }
  return entries;
}

inline Codebook codebook_from_json(const json& j) {
  Codebook cb;
  for (const json& e : j) {
    CodebookEntry entry;
    const json& centroid = e.at("centroid");
    entry.centroid.resize(centroid.size());
    for (std::size_t c = 0; c < centroid.size(); ++c)
      entry.centroid(c) = centroid[c].get<double>();
    entry.mass = e.at("mass").get<double>();
    entry.count = e.at("count").get<long long>();
    cb.entries.emplace(RegionLabel::from_string(e.at("label").get<std::string>()),
                       std::move(entry));
  }
  return cb;
}

inline json to_json(const DesignReport& r) {
  json trace = json::array();
  for (const TracePoint& p : r.trace)
    trace.push_back(json{{"iteration", p.iteration},
                         {"objective", p.objective},
                         {"move", move_name(p.move)}});
  return json{{"source", {{"kind", to_string(r.source.kind)},
                          {"d", r.source.dimension}}},
              {"arrangement", to_json(r.arrangement)},
              {"codebook", to_json(r.codebook)},
              {"final_mse", r.final_mse},
              {"final_entropy", r.final_entropy},
              {"region_count", r.region_count},
              {"seed", r.seed},
              {"restart_index", r.restart_index},
              {"objective", to_string(r.objective)},
              {"trace", std::move(trace)}};
}

inline DesignReport design_report_from_json(const json& j) {
  DesignReport r;
  r.source.kind = source_kind_from_string(j.at("source").at("kind").get<std::string>());
  r.source.dimension = j.at("source").at("d").get<int>();
  r.arrangement = arrangement_from_json(j.at("arrangement"));
  r.codebook = codebook_from_json(j.at("codebook"));
  r.final_mse = j.at("final_mse").get<double>();
  r.final_entropy = j.at("final_entropy").get<double>();
  r.region_count = j.at("region_count").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.restart_index = j.at("restart_index").get<int>();
  r.objective = objective_from_string(j.at("objective").get<std::string>());
  for (const json& p : j.at("trace"))
    r.trace.push_back({p.at("iteration").get<int>(),
                       p.at("objective").get<double>(),
                       p.at("move").get<std::string>() == "global" ? 'g' : 'l'});
  return r;
}

inline json to_json(const LbgResult& r) {
  json points = json::array();
  for (const auto& p : r.codebook.points) {
    json row = json::array();
    for (int c = 0; c < p.size(); ++c) row.push_back(p(c));
    points.push_back(std::move(row));
  }
  return json{{"M", r.codebook.points.size()},
              {"points", std::move(points)},
              {"mse", r.mse},
              {"training_mse", r.training_mse},
              {"iterations", r.iterations},
              {"facets", r.facet_count},
              {"restart_seed", r.restart_seed}};
}

inline LbgResult lbg_result_from_json(const json& j) {
  LbgResult r;
  for (const json& row : j.at("points")) {
    Eigen::VectorXd p(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) p(c) = row[c].get<double>();
    r.codebook.points.push_back(std::move(p));
  }
  r.mse = j.at("mse").get<double>();
  r.training_mse = j.at("training_mse").get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.facet_count = j.at("facets").get<int>();
  r.restart_seed = j.at("restart_seed").get<std::uint64_t>();
  return r;
}

inline json to_json(const RegionGraph& g) {
  json vertices = json::array();
  for (const RegionLabel& l : g.region_labels) vertices.push_back(l.to_string());
  vertices.push_back("INF");
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back(json::array({e.u, e.v, e.color}));
  return json{{"vertices", std::move(vertices)},
              {"edges", std::move(edges)},
              {"k", g.hyperplane_count}};
}

inline RegionGraph region_graph_from_json(const json& j) {
  RegionGraph g;
  g.hyperplane_count = j.at("k").get<int>();
  const json& vertices = j.at("vertices");
  if (vertices.empty() || vertices.back().get<std::string>() != "INF")
    throw std::invalid_argument("region graph JSON must end with the INF vertex");
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
    g.region_labels.push_back(
        RegionLabel::from_string(vertices[i].get<std::string>()));
  for (const json& e : j.at("edges"))
    g.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>()});
  return g;
}

/// Graphviz export; sphere edges are drawn dashed.
inline std::string to_dot(const RegionGraph& g) {
  std::ostringstream out;
  out << "graph regions {\n";
  for (int v = 0; v < g.region_count(); ++v)
    out << "  v" << v << " [label=\"" << g.region_labels[v].to_string()
        << "\"];\n";
  out << "  v" << g.infinity_vertex() << " [label=\"INF\", shape=doublecircle];\n";
  for (const auto& e : g.edges) {
    out << "  v" << e.u << " -- v" << e.v;
    if (e.color == RegionGraph::kSphereColor)
      out << " [style=dashed, label=\"S\"]";
    else
      out << " [label=\"" << e.color << "\"]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest round-trip decimal form, locale-independent.
inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string genetic_trace_csv(const GeneticTrace& trace) {
  std::string out = "generation,best_mse,mean_mse\n";
  for (std::size_t g = 0; g < trace.generations.size(); ++g) {
    const GenerationStats& s = trace.generations[g];
    out += std::to_string(g) + "," + csv_double(s.best_mse) + "," +
           csv_double(s.mean_mse) + "\n";
  }
  return out;
}

inline std::string design_trace_csv(const DesignReport& report) {
  std::string out = "iteration,objective,move_type\n";
  for (const TracePoint& p : report.trace)
    out += std::to_string(p.iteration) + "," + csv_double(p.objective) + "," +
           move_name(p.move) + "\n";
  return out;
}

struct SweepRow {
  int d = 0;
  int k_or_regions = 0;
  std::string method;  // proposed | lbg_comparator_matched | lbg_region_matched
  double distortion_best = 0.0;
  double distortion_mean = 0.0;
  int region_count = 0;
  int restarts = 0;
  std::uint64_t seed = 0;
};

inline const char* kSweepHeader =
    "d,k_or_regions,method,distortion_best,distortion_mean,region_count,"
    "restarts,seed\n";

inline std::string sweep_row_csv(const SweepRow& r) {
  return std::to_string(r.d) + "," + std::to_string(r.k_or_regions) + "," +
         r.method + "," + csv_double(r.distortion_best) + "," +
         csv_double(r.distortion_mean) + "," + std::to_string(r.region_count) +
         "," + std::to_string(r.restarts) + "," + std::to_string(r.seed) + "\n";
}

// ---------------------------------------------------------------------------
// Files

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void append_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open for appending: " + path);
  out << text;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool file_exists(const std::string& path) {
  std::ifstream in(path);
  return in.good();
}

}  // namespace clvq
