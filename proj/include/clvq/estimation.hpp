#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "clvq/arrangement.hpp"
#include "clvq/source.hpp"

namespace clvq {

struct CodebookEntry {
  Eigen::VectorXd centroid;
  double mass = 0.0;
  long long count = 0;
};

/// Reconstruction map: region label -> (centroid, empirical mass, count).
struct Codebook {
  std::map<RegionLabel, CodebookEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  const CodebookEntry* find(const RegionLabel& l) const {
    auto it = entries.find(l);
    return it == entries.end() ? nullptr : &it->second;
  }

  /// Centroid nearest to x; fallback reconstruction for labels that never
  /// received a sample.
  const Eigen::VectorXd& nearest_centroid(const Eigen::VectorXd& x) const {
    if (entries.empty()) throw std::logic_error("empty codebook");
    const Eigen::VectorXd* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [l, e] : entries) {
      const double d = (x - e.centroid).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = &e.centroid;
      }
    }
    return *best;
  }
};

struct EstimationParams {
  int min_points_per_region = 200;
  long long max_total_points = 500000;
  long long mse_points = 100000;

  void validate() const {
    if (min_points_per_region < 1)
      throw std::invalid_argument("min_points_per_region must be >= 1");
    if (max_total_points < min_points_per_region)
      throw std::invalid_argument("max_total_points must be >= min_points_per_region");
    if (mse_points < 1) throw std::invalid_argument("mse_points must be >= 1");
  }
};

/// Monte Carlo centroid estimation. Samples from the stream until every
/// region seen so far holds at least min_points_per_region points or the
/// total budget is exhausted; the budget cap is what resolves cells of
/// vanishing mass. Regions never hit by a sample are absent.
inline Codebook estimate_codebook(const Arrangement& arr,
                                  const EstimationParams& params,
                                  SampleStream& stream) {
  params.validate();
  if (arr.resolution() > 0 && stream.source().dimension != arr.dimension())
    throw std::invalid_argument("stream dimension does not match arrangement");
  const int d = stream.source().dimension;

  struct Acc {
    Eigen::VectorXd sum;
    long long count = 0;
  };
  std::unordered_map<RegionLabel, Acc, RegionLabelHash> acc;

  constexpr long long kBlock = 16384;
  long long total = 0;
  while (total < params.max_total_points) {
    const long long n = std::min(kBlock, params.max_total_points - total);
    const Eigen::MatrixXd pts = stream.sample(n);
    const std::vector<RegionLabel> labels = label_block(arr, pts);
    for (long long i = 0; i < n; ++i) {
      Acc& a = acc[labels[i]];
      if (a.count == 0) a.sum = Eigen::VectorXd::Zero(d);
      a.sum += pts.col(i);
      ++a.count;
    }
    total += n;
    long long weakest = std::numeric_limits<long long>::max();
    for (const auto& [l, a] : acc) weakest = std::min(weakest, a.count);
    if (weakest >= params.min_points_per_region) break;
  }

  Codebook cb;
  for (const auto& [l, a] : acc) {
    CodebookEntry e;
    e.centroid = a.sum / static_cast<double>(a.count);
    e.count = a.count;
    e.mass = static_cast<double>(a.count) / static_cast<double>(total);
    cb.entries.emplace(l, std::move(e));
  }
  return cb;
}

/// MSE of the quantizer (arr, codebook) over n fresh samples. The stream must
/// be seeded differently from the one that built the codebook.
inline double estimate_mse(const Arrangement& arr, const Codebook& codebook,
                           long long n, SampleStream& stream) {
  if (codebook.empty()) throw std::invalid_argument("codebook is empty");
  if (n < 1) throw std::invalid_argument("n must be >= 1");

  constexpr long long kBlock = 16384;
  double total = 0.0;
  long long remaining = n;
  while (remaining > 0) {
    const long long m = std::min(kBlock, remaining);
    const Eigen::MatrixXd pts = stream.sample(m);
    const std::vector<RegionLabel> labels = label_block(arr, pts);
    for (long long i = 0; i < m; ++i) {
      const CodebookEntry* e = codebook.find(labels[i]);
      const Eigen::VectorXd& c =
          e ? e->centroid : codebook.nearest_centroid(pts.col(i));
      total += (pts.col(i) - c).squaredNorm();
    }
    remaining -= m;
  }
  return total / static_cast<double>(n);
}

/// Plug-in output entropy in bits from the empirical label histogram of n
/// samples.
inline double estimate_entropy(const Arrangement& arr, long long n,
                               SampleStream& stream) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  std::map<RegionLabel, long long> counts;
  constexpr long long kBlock = 65536;
  long long remaining = n;
  while (remaining > 0) {
    const long long m = std::min(kBlock, remaining);
    const Eigen::MatrixXd pts = stream.sample(m);
    for (const RegionLabel& l : label_block(arr, pts)) ++counts[l];
    remaining -= m;
  }
  double h = 0.0;
  for (const auto& [l, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log2(p);
  }
  return h;
}

/// Codebook + MSE with the documented stream offsets: the codebook samples
/// from `seed`, the error estimate from `seed + 1`.
inline std::pair<Codebook, double> estimate_codebook_and_mse(
    const Arrangement& arr, const SourceModel& source,
    const EstimationParams& params, std::uint64_t seed) {
  SampleStream cb_stream(source, seed);
  SampleStream mse_stream(source, seed + 1);
  Codebook cb = estimate_codebook(arr, params, cb_stream);
  const double mse = estimate_mse(arr, cb, params.mse_points, mse_stream);
  return {std::move(cb), mse};
}

}  // namespace clvq
