#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "clvq/rng.hpp"

namespace clvq {

enum class SourceKind { gaussian_iid, uniform_iid };

inline std::string to_string(SourceKind kind) {
  return kind == SourceKind::gaussian_iid ? "gaussian_iid" : "uniform_iid";
}

inline SourceKind source_kind_from_string(const std::string& s) {
  if (s == "gaussian_iid") return SourceKind::gaussian_iid;
  if (s == "uniform_iid") return SourceKind::uniform_iid;
  throw std::invalid_argument("unknown source kind: " + s);
}

/// An i.i.d. source: standard normal per coordinate, or uniform on [-1, 1]
/// per coordinate ("unitary uniform").
struct SourceModel {
  SourceKind kind = SourceKind::gaussian_iid;
  int dimension = 1;

  void validate() const {
    if (dimension < 1) throw std::invalid_argument("source dimension must be >= 1");
  }
};

/// Distortion-rate function of the standard Gaussian under squared error.
inline double gaussian_rd(double rate) {
  if (rate < 0.0) throw std::invalid_argument("rate must be >= 0");
  return std::exp2(-2.0 * rate);
}

/// Trace of the source covariance: the distortion of the zero-comparator
/// quantizer that reconstructs everything as the source mean.
inline double source_variance_total(const SourceModel& source) {
  source.validate();
  const double per_coord =
      source.kind == SourceKind::gaussian_iid ? 1.0 : 1.0 / 3.0;
  return per_coord * source.dimension;
}

inline double source_coordinate_stddev(const SourceModel& source) {
  return std::sqrt(source_variance_total(source) / source.dimension);
}

/// Seeded stream of i.i.d. draws. Point i is a pure function of
/// (source, seed, i): every point gets its own splitmix64 substream, so a
/// stream can be resumed or split at any counter value.
class SampleStream {
 public:
  SampleStream(SourceModel source, std::uint64_t seed,
               std::uint64_t counter = 0)
      : source_(source), seed_(seed), counter_(counter) {
    source_.validate();
  }

  const SourceModel& source() const { return source_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  Eigen::VectorXd next() {
    Eigen::VectorXd x(source_.dimension);
    fill_point(counter_++, x.data());
    return x;
  }

  /// n draws as a d x n matrix (column = point). Advances the counter by n.
  Eigen::MatrixXd sample(long long n) {
    if (n < 1) throw std::invalid_argument("sample size must be >= 1");
    Eigen::MatrixXd pts(source_.dimension, n);
    for (long long i = 0; i < n; ++i) fill_point(counter_++, pts.col(i).data());
    return pts;
  }

 private:
  void fill_point(std::uint64_t index, double* out) const {
    rng::Engine eng = rng::substream(seed_, index);
    const int d = source_.dimension;
    if (source_.kind == SourceKind::gaussian_iid) {
      for (int c = 0; c < d; ++c) out[c] = eng.next_normal();
    } else {
      for (int c = 0; c < d; ++c) out[c] = eng.next_uniform(-1.0, 1.0);
    }
  }

  SourceModel source_;
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace clvq
