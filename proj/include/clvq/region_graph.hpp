#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clvq/arrangement.hpp"

namespace clvq {

/// Region-adjacency graph of a planar arrangement. One vertex per nonempty
/// open cell plus a single projectivized infinity vertex; region-region edges
/// carry the index of the hyperplane crossed between them, infinity edges
/// carry the sphere color.
struct RegionGraph {
  static constexpr int kSphereColor = -1;

  struct Edge {
    int u;
    int v;
    int color;
  };

  std::vector<RegionLabel> region_labels;  // vertex i < region count
  std::vector<Edge> edges;
  int hyperplane_count = 0;

  int region_count() const { return static_cast<int>(region_labels.size()); }
  int vertex_count() const { return region_count() + 1; }
  int infinity_vertex() const { return region_count(); }
};

/// Builds the adjacency graph for d = 2. Candidate neighbors are label pairs
/// differing in exactly one coordinate j; each is validated by solving for an
/// open segment of hyperplane j on which every other sign matches, then
/// probing the segment midpoint from both sides. Unbounded cells (detected by
/// the far-circle probes of the enumerator) link to the infinity vertex.
inline RegionGraph build_region_graph(const Arrangement& arr) {
  if (arr.dimension() != 2)
    throw std::invalid_argument("region graphs require d = 2");
  if (arr.resolution() < 1)
    throw std::invalid_argument("region graphs require k >= 1");
  if (arr.resolution() > 8)
    throw std::invalid_argument("region graphs are capped at k <= 8");
  for (int a = 0; a < arr.resolution(); ++a)
    for (int b = a + 1; b < arr.resolution(); ++b) {
      const Eigen::Vector2d na = arr.weights.row(a).transpose();
      const Eigen::Vector2d nb = arr.weights.row(b).transpose();
      const double cross = na.x() * nb.y() - na.y() * nb.x();
      const double align = na.dot(nb);
      // same line up to scale: parallel and same offset ratio
      if (std::abs(cross) <= 1e-12 * na.norm() * nb.norm() &&
          std::abs(arr.offsets(a) * (align > 0 ? 1.0 : -1.0) * nb.norm() / na.norm() -
                   arr.offsets(b)) <= 1e-12 * (std::abs(arr.offsets(b)) + 1.0))
        throw std::invalid_argument("hyperplanes must be pairwise distinct");
    }

  const std::vector<Cell2d> cells = enumerate_cells_2d(arr);
  RegionGraph g;
  g.hyperplane_count = arr.resolution();
  g.region_labels.reserve(cells.size());
  for (const Cell2d& c : cells) g.region_labels.push_back(c.label);

  const double eps = 1e-6 * detail::arrangement_scale(arr);
  const int k = arr.resolution();

  auto shared_segment_midpoint = [&](int j, const RegionLabel& want,
                                     Eigen::Vector2d& out) {
    const Eigen::Vector2d n = arr.weights.row(j).transpose();
    const Eigen::Vector2d unit = n.normalized();
    const Eigen::Vector2d foot = -arr.offsets(j) / n.norm() * unit;
    const Eigen::Vector2d dir(-unit.y(), unit.x());
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
      if (i == j) continue;
      const Eigen::Vector2d ni = arr.weights.row(i).transpose();
      const double a = ni.dot(foot) + arr.offsets(i);
      const double b = ni.dot(dir);
      const double sgn = want.sign(i);
      if (std::abs(b) <= 1e-14 * ni.norm()) {
        if (a * sgn <= 0.0) return false;  // parallel line on the wrong side
        continue;
      }
      const double bound = -a / b;
      if (sgn * b > 0.0)
        lo = std::max(lo, bound);
      else
        hi = std::min(hi, bound);
    }
    if (!(lo < hi)) return false;
    double mid;
    if (std::isinf(lo) && std::isinf(hi))
      mid = 0.0;
    else if (std::isinf(lo))
      mid = hi - std::max(1.0, std::abs(hi));
    else if (std::isinf(hi))
      mid = lo + std::max(1.0, std::abs(lo));
    else
      mid = 0.5 * (lo + hi);
    out = foot + mid * dir;
    return true;
  };

  const int n = g.region_count();
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const std::uint64_t diff =
          g.region_labels[u].bits() ^ g.region_labels[v].bits();
      if (std::popcount(diff) != 1) continue;
      const int j = std::countr_zero(diff);
      Eigen::Vector2d mid;
      if (!shared_segment_midpoint(j, g.region_labels[u], mid)) continue;
      const Eigen::Vector2d unit =
          arr.weights.row(j).transpose().normalized();
      const RegionLabel lp = label(arr, mid + eps * unit);
      const RegionLabel lm = label(arr, mid - eps * unit);
      const bool hit = (lp == g.region_labels[u] && lm == g.region_labels[v]) ||
                       (lp == g.region_labels[v] && lm == g.region_labels[u]);
      if (hit) g.edges.push_back({u, v, j});
    }
  }

  for (int u = 0; u < n; ++u)
    if (cells[u].unbounded)
      g.edges.push_back({u, g.infinity_vertex(), RegionGraph::kSphereColor});
  return g;
}

/// Orientation-aware label strings: position j is '+' iff the region sits on
/// the positive side of hyperplane j after flipping by orientation[j].
inline std::map<RegionLabel, std::string> region_sign_labels(
    const Arrangement& arr, const std::vector<int>& orientation) {
  if (arr.dimension() != 2)
    throw std::invalid_argument("region labeling requires d = 2");
  if (static_cast<int>(orientation.size()) != arr.resolution())
    throw std::invalid_argument("orientation size must equal k");
  std::map<RegionLabel, std::string> out;
  for (const RegionLabel& l : enumerate_regions_exact_2d(arr)) {
    std::string s(l.size(), '-');
    for (int j = 0; j < l.size(); ++j)
      if (l.sign(j) * orientation[j] > 0) s[j] = '+';
    out.emplace(l, std::move(s));
  }
  return out;
}

inline std::map<RegionLabel, std::string> region_sign_labels(
    const Arrangement& arr) {
  return region_sign_labels(arr, std::vector<int>(arr.resolution(), +1));
}

namespace detail {

struct ColoredAdjacency {
  // per vertex: sorted (color, neighbor) pairs, colors already permuted
  std::vector<std::vector<std::pair<int, int>>> adj;
};

inline std::string encode_ordered(const ColoredAdjacency& g,
                                  const std::vector<int>& pos) {
  std::vector<std::array<int, 3>> edges;
  for (int u = 0; u < static_cast<int>(g.adj.size()); ++u)
    for (const auto& [color, v] : g.adj[u])
      if (pos[u] < pos[v]) edges.push_back({pos[u], pos[v], color});
  std::sort(edges.begin(), edges.end());
  std::string s = "n" + std::to_string(g.adj.size()) + ";";
  for (const auto& e : edges)
    s += std::to_string(e[0]) + "-" + std::to_string(e[1]) + ":" +
         std::to_string(e[2]) + ";";
  return s;
}

inline void refine_classes(const ColoredAdjacency& g, std::vector<int>& cls) {
  const int n = static_cast<int>(g.adj.size());
  while (true) {
    std::vector<std::pair<std::vector<int>, int>> sigs(n);
    for (int v = 0; v < n; ++v) {
      std::vector<int> sig;
      sig.push_back(cls[v]);
      std::vector<std::pair<int, int>> nb;
      nb.reserve(g.adj[v].size());
      for (const auto& [color, u] : g.adj[v]) nb.emplace_back(color, cls[u]);
      std::sort(nb.begin(), nb.end());
      for (const auto& [c, cc] : nb) {
        sig.push_back(c);
        sig.push_back(cc);
      }
      sigs[v] = {std::move(sig), v};
    }
    std::vector<std::pair<std::vector<int>, int>> sorted = sigs;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> next(n);
    int classes = 0;
    for (int i = 0; i < n; ++i) {
      if (i > 0 && sorted[i].first != sorted[i - 1].first) ++classes;
      next[sorted[i].second] = classes;
    }
    if (next == cls) return;
    cls = std::move(next);
  }
}

inline std::string canon_search(const ColoredAdjacency& g,
                                std::vector<int> cls) {
  refine_classes(g, cls);
  const int n = static_cast<int>(g.adj.size());

  // locate the smallest non-singleton class
  std::map<int, std::vector<int>> groups;
  for (int v = 0; v < n; ++v) groups[cls[v]].push_back(v);
  const std::vector<int>* split = nullptr;
  for (const auto& [c, members] : groups)
    if (members.size() > 1) {
      split = &members;
      break;
    }

  if (!split) {
    std::vector<int> pos(n);
    for (int v = 0; v < n; ++v) pos[v] = cls[v];
    return encode_ordered(g, pos);
  }

  // individualize each member in turn and keep the least encoding
  std::string best;
  for (const int v : *split) {
    std::vector<int> branched(n);
    for (int u = 0; u < n; ++u) branched[u] = 2 * cls[u] + (u == v ? 0 : 1);
    std::string s = canon_search(g, std::move(branched));
    if (best.empty() || s < best) best = std::move(s);
  }
  return best;
}

}  // namespace detail

/// Canonical string of a region graph, invariant under vertex relabeling and
/// under permutations of the hyperplane colors (the infinity vertex and the
/// sphere color are fixed points). Color refinement plus individualization
/// canonicalizes the vertex order; hyperplane permutations are exhausted,
/// which the k <= 8 cap keeps cheap.
inline std::string canonical_form(const RegionGraph& g) {
  const int k = g.hyperplane_count;
  if (k > 8) throw std::invalid_argument("canonical_form is capped at k <= 8");
  const int n = g.vertex_count();

  std::vector<int> perm(k);
  for (int i = 0; i < k; ++i) perm[i] = i;

  std::string best;
  do {
    detail::ColoredAdjacency adj;
    adj.adj.resize(n);
    for (const auto& e : g.edges) {
      const int color =
          e.color == RegionGraph::kSphereColor ? k : perm[e.color];
      adj.adj[e.u].emplace_back(color, e.v);
      adj.adj[e.v].emplace_back(color, e.u);
    }
    std::vector<int> cls(n, 1);
    cls[g.infinity_vertex()] = 0;
    std::string s = detail::canon_search(adj, std::move(cls));
    if (best.empty() || s < best) best = std::move(s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline bool is_isomorphic(const RegionGraph& g1, const RegionGraph& g2) {
  return canonical_form(g1) == canonical_form(g2);
}

}  // namespace clvq
