#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "clvq/source.hpp"

namespace clvq {

/// Nearest-point codebook: M reconstruction points under Euclidean
/// assignment.
struct PointCodebook {
  std::vector<Eigen::VectorXd> points;

  int nearest(const Eigen::VectorXd& x) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < points.size(); ++m) {
      const double d = (x - points[m]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(m);
      }
    }
    return best;
  }

  std::pair<int, int> nearest_two(const Eigen::VectorXd& x) const {
    int b0 = -1, b1 = -1;
    double d0 = std::numeric_limits<double>::infinity(), d1 = d0;
    for (std::size_t m = 0; m < points.size(); ++m) {
      const double d = (x - points[m]).squaredNorm();
      if (d < d0) {
        d1 = d0;
        b1 = b0;
        d0 = d;
        b0 = static_cast<int>(m);
      } else if (d < d1) {
        d1 = d;
        b1 = static_cast<int>(m);
      }
    }
    return {b0, b1};
  }
};

struct LbgResult {
  PointCodebook codebook;
  double mse = 0.0;           // held-out estimate
  double training_mse = 0.0;  // final value of the training trace
  int iterations = 0;
  int facet_count = 0;
  int reseed_events = 0;
  std::vector<double> training_trace;  // one value per iteration, non-increasing
  std::uint64_t restart_seed = 0;
};

/// Number of adjacent Voronoi cell pairs, i.e. separating facets. Two cells
/// count as adjacent when some sample pair drawn from them has a midpoint
/// whose two nearest points are exactly those cells' points. Near-boundary
/// samples (smallest first-vs-second distance gap) are paired first, with a
/// bounded number of midpoint probes per candidate pair, so facets of tiny
/// measure can be missed.
inline int voronoi_facet_count(const PointCodebook& codebook,
                               const SourceModel& source, SampleStream& stream,
                               long long n = 100000) {
  const int M = static_cast<int>(codebook.points.size());
  if (M < 2) return 0;
  source.validate();

  struct Candidate {
    double gap;
    long long index;
  };
  // boundary[{i,j}] with i < j: near-boundary samples from cell i (first) and
  // cell j (second).
  std::map<std::pair<int, int>, std::pair<std::vector<Candidate>, std::vector<Candidate>>>
      boundary;

  const Eigen::MatrixXd pts = stream.sample(n);
  for (long long idx = 0; idx < n; ++idx) {
    const auto [a, b] = codebook.nearest_two(pts.col(idx));
    const double gap = (pts.col(idx) - codebook.points[b]).squaredNorm() -
                       (pts.col(idx) - codebook.points[a]).squaredNorm();
    const auto key = std::minmax(a, b);
    auto& sides = boundary[{key.first, key.second}];
    auto& side = a < b ? sides.first : sides.second;
    side.push_back({gap, idx});
  }

  constexpr std::size_t kProbes = 32;
  int facets = 0;
  for (auto& [pair, sides] : boundary) {
    auto& [from_i, from_j] = sides;
    if (from_i.empty() || from_j.empty()) continue;
    auto by_gap = [](const Candidate& x, const Candidate& y) {
      return x.gap < y.gap;
    };
    std::sort(from_i.begin(), from_i.end(), by_gap);
    std::sort(from_j.begin(), from_j.end(), by_gap);
    const std::size_t probes =
        std::min({kProbes, from_i.size(), from_j.size()});
    bool adjacent = false;
    for (std::size_t p = 0; p < probes && !adjacent; ++p) {
      const Eigen::VectorXd mid =
          0.5 * (pts.col(from_i[p].index) + pts.col(from_j[p].index));
      const auto [a, b] = codebook.nearest_two(mid);
      const auto mm = std::minmax(a, b);
      adjacent = mm.first == pair.first && mm.second == pair.second;
    }
    if (adjacent) ++facets;
  }
  return facets;
}

/// One LBG run: k-means on a fixed training set drawn from the stream.
/// Initial points are M fresh source draws. Dead points are re-seeded at the
/// training sample farthest from its assigned centroid. The recorded training
/// MSE is evaluated after each centroid update and is non-increasing by
/// construction; the reported mse comes from a held-out sample of the same
/// size.
inline LbgResult lbg_design(const SourceModel& source, int M, int T_max,
                            SampleStream& stream, long long sample_n = 100000) {
  source.validate();
  if (M < 1) throw std::invalid_argument("M must be >= 1");
  if (M > sample_n) throw std::invalid_argument("M exceeds the training sample size");
  if (T_max < 1) throw std::invalid_argument("T_max must be >= 1");

  const Eigen::MatrixXd train = stream.sample(sample_n);
  LbgResult res;
  res.restart_seed = stream.seed();
  res.codebook.points.resize(M);
  for (int m = 0; m < M; ++m) res.codebook.points[m] = stream.next();

  std::vector<int> assign(sample_n, -1), prev(sample_n, -1);
  const int d = source.dimension;

  for (int t = 1; t <= T_max; ++t) {
    for (long long i = 0; i < sample_n; ++i)
      assign[i] = res.codebook.nearest(train.col(i));

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, M);
    std::vector<long long> counts(M, 0);
    for (long long i = 0; i < sample_n; ++i) {
      sums.col(assign[i]) += train.col(i);
      ++counts[assign[i]];
    }
    bool reseeded = false;
    for (int m = 0; m < M; ++m) {
      if (counts[m] > 0) {
        res.codebook.points[m] = sums.col(m) / static_cast<double>(counts[m]);
      } else {
        // farthest sample from its current centroid
        long long far_idx = 0;
        double far_d = -1.0;
        for (long long i = 0; i < sample_n; ++i) {
          const double dist =
              (train.col(i) - res.codebook.points[assign[i]]).squaredNorm();
          if (dist > far_d) {
            far_d = dist;
            far_idx = i;
          }
        }
        res.codebook.points[m] = train.col(far_idx);
        assign[far_idx] = m;  // claim it so a second dead point picks another
        reseeded = true;
        ++res.reseed_events;
      }
    }

    double dist = 0.0;
    for (long long i = 0; i < sample_n; ++i)
      dist += (train.col(i) - res.codebook.points[assign[i]]).squaredNorm();
    res.training_trace.push_back(dist / static_cast<double>(sample_n));
    res.iterations = t;

    if (!reseeded && assign == prev) break;
    prev = assign;
  }
  res.training_mse = res.training_trace.back();

  SampleStream held_out(source, stream.seed() + 1);
  const Eigen::MatrixXd test = held_out.sample(sample_n);
  double dist = 0.0;
  for (long long i = 0; i < sample_n; ++i)
    dist += (test.col(i) - res.codebook.points[res.codebook.nearest(test.col(i))])
                .squaredNorm();
  res.mse = dist / static_cast<double>(sample_n);

  SampleStream facet_stream(source, stream.seed() + 2);
  res.facet_count = voronoi_facet_count(res.codebook, source, facet_stream);
  return res;
}

/// Best of `restarts` independent LBG runs (held-out MSE decides), with all
/// runs returned for mean-of-restarts reporting.
inline std::vector<LbgResult> lbg_design_restarts(const SourceModel& source,
                                                  int M, int T_max,
                                                  std::uint64_t base_seed,
                                                  long long sample_n = 100000,
                                                  int restarts = 10) {
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  std::vector<LbgResult> all;
  all.reserve(restarts);
  for (int r = 0; r < restarts; ++r) {
    // stride 16: each run consumes seeds {s, s+1, s+2} for train/held-out/facets
    SampleStream stream(source, base_seed + 16 * static_cast<std::uint64_t>(r));
    all.push_back(lbg_design(source, M, T_max, stream, sample_n));
  }
  return all;
}

inline const LbgResult& best_of(const std::vector<LbgResult>& runs) {
  return *std::min_element(runs.begin(), runs.end(),
                           [](const LbgResult& a, const LbgResult& b) {
                             return a.mse < b.mse;
                           });
}

/// LBG constrained to quantizers implementable with at most k comparators:
/// scans M upward, keeps runs whose Voronoi partition needs at most k facets,
/// and returns the lowest-MSE feasible design. The scan stops after two
/// consecutive infeasible values of M.
inline LbgResult lbg_comparator_matched(const SourceModel& source, int k,
                                        int T_max, SampleStream& stream,
                                        long long sample_n = 100000,
                                        int restarts = 10,
                                        std::vector<LbgResult>* winning_runs = nullptr) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  LbgResult best;
  bool have_best = false;
  int infeasible_streak = 0;
  const int M_cap = 3 * k + 8;
  for (int M = 1; M <= M_cap && infeasible_streak < 2; ++M) {
    const auto runs = lbg_design_restarts(
        source, M, T_max, stream.seed() + 1000 * static_cast<std::uint64_t>(M),
        sample_n, restarts);
    const LbgResult& cand = best_of(runs);
    if (cand.facet_count <= k) {
      infeasible_streak = 0;
      if (!have_best || cand.mse < best.mse ||
          (cand.mse == best.mse &&
           cand.codebook.points.size() > best.codebook.points.size())) {
        best = cand;
        have_best = true;
        if (winning_runs) *winning_runs = runs;
      }
    } else {
      ++infeasible_streak;
    }
  }
  return best;
}

/// LBG granted as many reconstruction points as a comparison-limited design
/// has regions.
inline LbgResult lbg_region_matched(const SourceModel& source, int region_count,
                                    int T_max, SampleStream& stream,
                                    long long sample_n = 100000,
                                    int restarts = 10) {
  if (region_count < 1) throw std::invalid_argument("region_count must be >= 1");
  const auto runs = lbg_design_restarts(source, region_count, T_max,
                                        stream.seed(), sample_n, restarts);
  return best_of(runs);
}

}  // namespace clvq
