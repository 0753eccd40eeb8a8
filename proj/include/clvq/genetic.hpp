#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "clvq/arrangement.hpp"
#include "clvq/estimation.hpp"
#include "clvq/source.hpp"

namespace clvq {

/// Hyperplane through d points: the unit null vector of the d x (d+1)
/// homogeneous point matrix [p_i | 1]. Throws if the points are affinely
/// dependent within tolerance.
inline Hyperplane fit_hyperplane(const Eigen::MatrixXd& points) {
  const int d = static_cast<int>(points.rows());
  if (points.cols() != d)
    throw std::invalid_argument("need exactly d points to fit a hyperplane");
  Eigen::MatrixXd homog(d, d + 1);
  homog.block(0, 0, d, d) = points.transpose();
  homog.col(d).setOnes();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(homog, Eigen::ComputeFullV);
  const Eigen::VectorXd coeffs = svd.matrixV().col(d);  // unit norm
  Hyperplane h{coeffs.head(d), coeffs(d)};
  if (h.normal.norm() < 1e-9)
    throw std::invalid_argument("points are affinely dependent");
  return h;
}

/// Random initialization: each comparator is the hyperplane through d fresh
/// source draws, so every initial hyperplane cuts dense regions of the
/// source. Degenerate draws are retried; exhausting the retry cap signals a
/// degenerate source.
inline Arrangement random_init(const SourceModel& source, int k,
                               SampleStream& stream) {
  source.validate();
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const int d = source.dimension;
  Eigen::MatrixXd V(k, d);
  Eigen::VectorXd t(k);
  constexpr int kRetryCap = 100;
  for (int j = 0; j < k; ++j) {
    int attempts = 0;
    while (true) {
      const Eigen::MatrixXd pts = stream.sample(d);
      try {
        const Hyperplane h = fit_hyperplane(pts);
        V.row(j) = h.normal.transpose();
        t(j) = h.offset;
        break;
      } catch (const std::invalid_argument&) {
        if (++attempts >= kRetryCap)
          throw std::runtime_error(
              "random_init: degenerate source, could not fit a hyperplane");
      }
    }
  }
  return Arrangement(std::move(V), std::move(t));
}

/// Dissimilarity of two hyperplanes relative to the source centroid:
/// (acute angle between normals) * (distance between the hyperplanes'
/// closest points to the centroid). Zero for identical hyperplanes, and
/// degenerate-zero for parallel hyperplanes or for distinct hyperplanes
/// through the centroid.
inline double dissimilarity(const Hyperplane& h1, const Hyperplane& h2,
                            const Eigen::VectorXd& center) {
  const double n1 = h1.normal.norm(), n2 = h2.normal.norm();
  if (n1 == 0.0 || n2 == 0.0)
    throw std::invalid_argument("hyperplane has zero normal");
  const double cosang =
      std::clamp(std::abs(h1.normal.dot(h2.normal)) / (n1 * n2), 0.0, 1.0);
  const double theta = std::acos(cosang);  // acute: [0, pi/2]
  const Eigen::VectorXd p1 =
      center - (h1.normal.dot(center) + h1.offset) / (n1 * n1) * h1.normal;
  const Eigen::VectorXd p2 =
      center - (h2.normal.dot(center) + h2.offset) / (n2 * n2) * h2.normal;
  return theta * (p1 - p2).norm();
}

enum class CrossoverPolicy { random_pairing, dissimilarity_pairing };

struct GeneticParams {
  int pool_size = 10;
  int generations = 30;
  double keep_fraction = 0.8;
  CrossoverPolicy crossover_policy = CrossoverPolicy::dissimilarity_pairing;
  double mutation_sigma = 0.2;  // mutation mean is fixed at 1.0

  void validate() const {
    if (pool_size < 2) throw std::invalid_argument("pool_size must be >= 2");
    if (generations < 1) throw std::invalid_argument("generations must be >= 1");
    if (keep_fraction <= 0.0 || keep_fraction > 1.0)
      throw std::invalid_argument("keep_fraction must be in (0, 1]");
    if (mutation_sigma < 0.0)
      throw std::invalid_argument("mutation_sigma must be >= 0");
  }
};

/// Crossover: pair the k hyperplanes of a1 with those of a2, then take one
/// hyperplane per pair uniformly at random. random_pairing matches rows by a
/// uniform random bijection; dissimilarity_pairing greedily matches the
/// lowest-dissimilarity pairs first (ties prefer matching equal row indices,
/// so crossing an arrangement with itself reproduces it).
inline Arrangement crossover(const Arrangement& a1, const Arrangement& a2,
                             CrossoverPolicy policy, rng::Engine& eng,
                             const Eigen::VectorXd& center) {
  const int k = a1.resolution();
  const int d = a1.dimension();
  if (a2.resolution() != k || a2.dimension() != d)
    throw std::invalid_argument("crossover parents must share (d, k)");

  std::vector<int> match(k, -1);  // match[i] = row of a2 paired with row i of a1
  if (policy == CrossoverPolicy::random_pairing) {
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = k - 1; i > 0; --i)
      std::swap(perm[i], perm[eng.next_below(i + 1)]);
    match = perm;
  } else {
    Eigen::MatrixXd dis(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        dis(i, j) = dissimilarity(a1.hyperplane(i), a2.hyperplane(j), center);
    std::vector<bool> used1(k, false), used2(k, false);
    for (int step = 0; step < k; ++step) {
      int bi = -1, bj = -1;
      double best = std::numeric_limits<double>::infinity();
      int best_skew = std::numeric_limits<int>::max();
      for (int i = 0; i < k; ++i) {
        if (used1[i]) continue;
        for (int j = 0; j < k; ++j) {
          if (used2[j]) continue;
          const int skew = std::abs(i - j);
          if (dis(i, j) < best || (dis(i, j) == best && skew < best_skew)) {
            best = dis(i, j);
            best_skew = skew;
            bi = i;
            bj = j;
          }
        }
      }
      used1[bi] = used2[bj] = true;
      match[bi] = bj;
    }
  }

  Eigen::MatrixXd V(k, d);
  Eigen::VectorXd t(k);
  for (int i = 0; i < k; ++i) {
    const bool take_first = eng.next_unit() < 0.5;
    const Hyperplane h =
        take_first ? a1.hyperplane(i) : a2.hyperplane(match[i]);
    V.row(i) = h.normal.transpose();
    t(i) = h.offset;
  }
  return Arrangement(std::move(V), std::move(t));
}

/// Mutation: every coefficient (weights and offsets) is scaled by an
/// independent Normal(1, sigma^2) draw.
inline Arrangement mutate(const Arrangement& arr, double sigma,
                          rng::Engine& eng) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  Arrangement out = arr;
  for (int j = 0; j < out.resolution(); ++j) {
    for (int c = 0; c < out.dimension(); ++c)
      out.weights(j, c) *= 1.0 + sigma * eng.next_normal();
    out.offsets(j) *= 1.0 + sigma * eng.next_normal();
  }
  return out;
}

/// Distortion oracle used as (negated) fitness; the seed decouples the
/// Monte Carlo noise of separate evaluations.
using FitnessOracle =
    std::function<double(const Arrangement&, std::uint64_t seed)>;

/// Reduced-budget MSE oracle for the genetic stage, which only needs a rough
/// distortion estimate per configuration.
inline FitnessOracle make_mse_oracle(const SourceModel& source,
                                     EstimationParams params = {
                                         .min_points_per_region = 50,
                                         .max_total_points = 200000,
                                         .mse_points = 50000}) {
  params.validate();
  return [source, params](const Arrangement& arr, std::uint64_t seed) {
    return estimate_codebook_and_mse(arr, source, params, seed).second;
  };
}

struct GenerationStats {
  double best_mse = 0.0;
  double mean_mse = 0.0;
  std::vector<std::uint64_t> pool_hashes;
};

struct GeneticTrace {
  std::vector<GenerationStats> generations;
};

namespace detail {

inline std::uint64_t arrangement_hash(const Arrangement& arr) {
  std::uint64_t h = rng::mix64(
      (static_cast<std::uint64_t>(arr.resolution()) << 32) ^
      static_cast<std::uint64_t>(arr.dimension()));
  auto absorb = [&h](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h = rng::mix64(h ^ bits);
  };
  for (int j = 0; j < arr.resolution(); ++j) {
    for (int c = 0; c < arr.dimension(); ++c) absorb(arr.weights(j, c));
    absorb(arr.offsets(j));
  }
  return h;
}

}  // namespace detail

/// Genetic pre-optimization (selection / crossover / mutation over a pool of
/// arrangements). Fitness is the negated oracle distortion. Each generation
/// keeps the top keep_fraction, refills by crossover of kept parents, ranks
/// again, and mutates only the lower-fitness half; the rank-0 member is
/// therefore never mutated, which makes the recorded best trace
/// non-increasing. Returns the best arrangement ever seen plus the trace.
inline std::pair<Arrangement, GeneticTrace> genetic_init(
    const SourceModel& source, int k, const GeneticParams& params,
    const FitnessOracle& oracle, SampleStream& stream) {
  params.validate();
  source.validate();
  const int M = params.pool_size;
  const Eigen::VectorXd center = Eigen::VectorXd::Zero(source.dimension);
  rng::Engine eng = rng::substream(stream.seed(), 0x47454E45ull);

  struct Member {
    Arrangement arr;
    double distortion;
  };
  std::uint64_t eval_counter = 0;
  auto evaluate = [&](const Arrangement& arr) {
    return oracle(arr, stream.seed() + 1 + 2 * eval_counter++);
  };

  std::vector<Member> pool;
  pool.reserve(M);
  for (int m = 0; m < M; ++m) {
    Arrangement arr = random_init(source, k, stream);
    const double dist = evaluate(arr);
    pool.push_back({std::move(arr), dist});
  }

  auto by_fitness = [](const Member& a, const Member& b) {
    return a.distortion < b.distortion;
  };

  Member best_ever = *std::min_element(pool.begin(), pool.end(), by_fitness);
  GeneticTrace trace;

  for (int g = 0; g < params.generations; ++g) {
    std::stable_sort(pool.begin(), pool.end(), by_fitness);
    const int keep = std::clamp(
        static_cast<int>(std::lround(params.keep_fraction * M)), 1, M);

    std::vector<Member> next(pool.begin(), pool.begin() + keep);
    while (static_cast<int>(next.size()) < M) {
      const int p1 = static_cast<int>(eng.next_below(keep));
      int p2 = static_cast<int>(eng.next_below(keep));
      if (keep > 1)
        while (p2 == p1) p2 = static_cast<int>(eng.next_below(keep));
      Arrangement child = crossover(pool[p1].arr, pool[p2].arr,
                                    params.crossover_policy, eng, center);
      const double dist = evaluate(child);
      next.push_back({std::move(child), dist});
    }

    std::stable_sort(next.begin(), next.end(), by_fitness);
    for (int m = M - M / 2; m < M; ++m) {
      if (params.mutation_sigma == 0.0) break;
      next[m].arr = mutate(next[m].arr, params.mutation_sigma, eng);
      next[m].distortion = evaluate(next[m].arr);
    }
    pool = std::move(next);

    const Member& gen_best =
        *std::min_element(pool.begin(), pool.end(), by_fitness);
    if (gen_best.distortion < best_ever.distortion) best_ever = gen_best;

    GenerationStats stats;
    stats.best_mse = best_ever.distortion;
    double sum = 0.0;
    for (const Member& m : pool) sum += m.distortion;
    stats.mean_mse = sum / M;
    stats.pool_hashes.reserve(M);
    for (const Member& m : pool)
      stats.pool_hashes.push_back(detail::arrangement_hash(m.arr));
    trace.generations.push_back(std::move(stats));
  }

  return {std::move(best_ever.arr), std::move(trace)};
}

}  // namespace clvq
