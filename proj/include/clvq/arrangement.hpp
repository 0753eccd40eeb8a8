#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "clvq/source.hpp"

namespace clvq {

/// Strict sign pattern of a point against the k comparators, packed into a
/// 64-bit word (bit j set = positive side of hyperplane j). Orderable and
/// hashable so it can key a codebook.
class RegionLabel {
 public:
  static constexpr int kMaxSize = 63;

  RegionLabel() = default;
  RegionLabel(std::uint64_t bits, int size) : bits_(bits), size_(size) {
    if (size < 0 || size > kMaxSize)
      throw std::invalid_argument("region label size out of range");
    if (size < 64) bits_ &= (std::uint64_t{1} << size) - 1;
  }

  int size() const { return size_; }
  std::uint64_t bits() const { return bits_; }

  int sign(int j) const { return (bits_ >> j) & 1 ? +1 : -1; }

  RegionLabel with_sign(int j, int s) const {
    std::uint64_t b = bits_;
    if (s >= 0)
      b |= std::uint64_t{1} << j;
    else
      b &= ~(std::uint64_t{1} << j);
    return RegionLabel(b, size_);
  }

  /// "+-+" style string, comparator 0 first.
  std::string to_string() const {
    std::string s(size_, '-');
    for (int j = 0; j < size_; ++j)
      if ((bits_ >> j) & 1) s[j] = '+';
    return s;
  }

  static RegionLabel from_string(const std::string& s) {
    std::uint64_t bits = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] == '+')
        bits |= std::uint64_t{1} << j;
      else if (s[j] != '-')
        throw std::invalid_argument("region label characters must be + or -");
    }
    return RegionLabel(bits, static_cast<int>(s.size()));
  }

  friend bool operator==(const RegionLabel&, const RegionLabel&) = default;
  friend auto operator<=>(const RegionLabel&, const RegionLabel&) = default;

 private:
  std::uint64_t bits_ = 0;
  int size_ = 0;
};

struct RegionLabelHash {
  std::size_t operator()(const RegionLabel& l) const {
    return static_cast<std::size_t>(
        rng::mix64(l.bits() ^ (static_cast<std::uint64_t>(l.size()) * rng::kGolden)));
  }
};

/// Sign pattern over {-1, 0, +1}; zeros mark points on a hyperplane within
/// tolerance.
using Covector = std::vector<int>;

struct Hyperplane {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

/// The comparator configuration [V, t]: k weight rows and k offsets in
/// dimension d. Comparator j computes sign(v_j . x + t_j). k = 0 is allowed
/// as the zero-comparator surrogate (a single all-space region).
struct Arrangement {
  Eigen::MatrixXd weights;  // k x d
  Eigen::VectorXd offsets;  // k

  Arrangement() = default;
  Arrangement(Eigen::MatrixXd V, Eigen::VectorXd t)
      : weights(std::move(V)), offsets(std::move(t)) {
    validate();
  }

  int dimension() const { return static_cast<int>(weights.cols()); }
  int resolution() const { return static_cast<int>(weights.rows()); }

  double margin(int j, const Eigen::VectorXd& x) const {
    return weights.row(j).dot(x) + offsets(j);
  }

  Hyperplane hyperplane(int j) const {
    return {weights.row(j).transpose(), offsets(j)};
  }

  void set_hyperplane(int j, const Hyperplane& h) {
    weights.row(j) = h.normal.transpose();
    offsets(j) = h.offset;
  }

  void validate() const {
    if (weights.rows() != offsets.size())
      throw std::invalid_argument("weights/offsets row count mismatch");
    if (weights.rows() > RegionLabel::kMaxSize)
      throw std::invalid_argument("arrangement resolution exceeds label capacity");
    if (weights.rows() > 0 && weights.cols() < 1)
      throw std::invalid_argument("arrangement dimension must be >= 1");
    for (int j = 0; j < weights.rows(); ++j)
      if (weights.row(j).norm() == 0.0)
        throw std::invalid_argument("comparator " + std::to_string(j) +
                                    " has a zero weight row");
  }
};

inline void check_dimension(const Arrangement& arr, const Eigen::VectorXd& x) {
  if (x.size() != arr.dimension() && arr.resolution() > 0)
    throw std::invalid_argument("point dimension does not match arrangement");
}

/// Covector of x: entry j is sign(v_j . x + t_j), with 0 when the margin is
/// within tol * ||v_j|| (tolerance relative to the row norm, so rescaling a
/// hyperplane's coefficients does not change the classification).
inline Covector covector(const Arrangement& arr, const Eigen::VectorXd& x,
                         double tol) {
  check_dimension(arr, x);
  if (tol < 0.0) throw std::invalid_argument("tol must be >= 0");
  Covector c(arr.resolution());
  for (int j = 0; j < arr.resolution(); ++j) {
    const double m = arr.margin(j, x);
    const double band = tol * arr.weights.row(j).norm();
    c[j] = std::abs(m) <= band ? 0 : (m > 0 ? +1 : -1);
  }
  return c;
}

/// Strict label of x. Exact zero margins map to +1; the tie-break is
/// arbitrary on a measure-zero set but fixed for determinism.
inline RegionLabel label(const Arrangement& arr, const Eigen::VectorXd& x) {
  check_dimension(arr, x);
  std::uint64_t bits = 0;
  for (int j = 0; j < arr.resolution(); ++j)
    if (arr.margin(j, x) >= 0.0) bits |= std::uint64_t{1} << j;
  return RegionLabel(bits, arr.resolution());
}

/// Labels for a d x n batch of points (column = point).
inline std::vector<RegionLabel> label_block(const Arrangement& arr,
                                            const Eigen::MatrixXd& pts) {
  const int k = arr.resolution();
  const long long n = pts.cols();
  std::vector<RegionLabel> out(n, RegionLabel(0, k));
  if (k == 0) return out;
  Eigen::MatrixXd margins = arr.weights * pts;
  margins.colwise() += arr.offsets;
  for (long long i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int j = 0; j < k; ++j)
      if (margins(j, i) >= 0.0) bits |= std::uint64_t{1} << j;
    out[i] = RegionLabel(bits, k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Region-count bounds

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // exact at every step: r * (n-k+i) is divisible by i
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

/// Maximum number of regions n affine hyperplanes can cut R^m into:
/// sum_{i=0}^{m} C(n, i). Saturates at 2^n when n <= m.
inline std::uint64_t max_regions(int m, int n) {
  if (m < 1) throw std::invalid_argument("dimension must be >= 1");
  if (n < 0) throw std::invalid_argument("hyperplane count must be >= 0");
  std::uint64_t total = 0;
  for (int i = 0; i <= std::min(m, n); ++i) total += binomial(n, i);
  return total;
}

/// Central case: all n hyperplanes through the origin gives at most
/// 2 * sum_{i=0}^{m-1} C(n-1, i) regions.
inline std::uint64_t max_regions_central(int n, int m) {
  if (n < 1 || m < 1) throw std::invalid_argument("counts must be >= 1");
  std::uint64_t half = 0;
  for (int i = 0; i <= std::min(m - 1, n - 1); ++i) half += binomial(n - 1, i);
  return 2 * half;
}

/// l parallel classes with dmult hyperplanes each:
/// sum_{i=0}^{m} C(l, i) * dmult^i, saturating at (1+dmult)^l when m >= l.
inline std::uint64_t max_regions_parallel(int m, int l, int dmult) {
  if (m < 1 || l < 1 || dmult < 1)
    throw std::invalid_argument("counts must be >= 1");
  std::uint64_t total = 0;
  for (int i = 0; i <= std::min(m, l); ++i) {
    std::uint64_t pw = 1;
    for (int p = 0; p < i; ++p) pw *= static_cast<std::uint64_t>(dmult);
    total += binomial(l, i) * pw;
  }
  return total;
}

// ---------------------------------------------------------------------------
// General position

namespace detail {

inline int rank_with_tol(const Eigen::MatrixXd& m, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double thresh = tol * sv(0);
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++r;
  return r;
}

template <typename Fn>
bool for_each_subset(int k, int p, Fn&& fn) {
  std::vector<int> idx(p);
  for (int i = 0; i < p; ++i) idx[i] = i;
  while (true) {
    if (!fn(idx)) return false;
    int i = p - 1;
    while (i >= 0 && idx[i] == k - p + i) --i;
    if (i < 0) return true;
    ++idx[i];
    for (int j = i + 1; j < p; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

/// True iff every p <= d of the hyperplanes meet in a (d-p)-flat and every
/// p > d of them have empty common intersection. Rank tests use a singular
/// value threshold of tol * (largest singular value).
inline bool is_general_position(const Arrangement& arr, double tol = 1e-9) {
  const int k = arr.resolution();
  const int d = arr.dimension();
  if (k < 1) throw std::invalid_argument("arrangement must have k >= 1");

  // Full-rank normals for every subset of size min(d, k); any smaller
  // dependent subset would make some such subset rank-deficient too.
  const int p = std::min(d, k);
  bool ok = detail::for_each_subset(k, p, [&](const std::vector<int>& idx) {
    Eigen::MatrixXd sub(p, d);
    for (int i = 0; i < p; ++i) sub.row(i) = arr.weights.row(idx[i]);
    return detail::rank_with_tol(sub, tol) == p;
  });
  if (!ok) return false;

  // Any d+1 hyperplanes must be jointly infeasible; supersets then follow.
  if (k > d) {
    ok = detail::for_each_subset(k, d + 1, [&](const std::vector<int>& idx) {
      Eigen::MatrixXd aug(d + 1, d + 1);
      for (int i = 0; i <= d; ++i) {
        aug.row(i).head(d) = arr.weights.row(idx[i]);
        aug(i, d) = arr.offsets(idx[i]);
      }
      return detail::rank_with_tol(aug, tol) == d + 1;
    });
  }
  return ok;
}

// ---------------------------------------------------------------------------
// Region enumeration

/// Monte Carlo enumeration: labels seen among `budget` samples with their
/// empirical masses. A subset of the true nonempty-cell label set.
inline std::map<RegionLabel, double> enumerate_regions(const Arrangement& arr,
                                                       SampleStream& stream,
                                                       long long budget) {
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  std::map<RegionLabel, long long> counts;
  constexpr long long kBlock = 65536;
  long long remaining = budget;
  while (remaining > 0) {
    const long long n = std::min(remaining, kBlock);
    const Eigen::MatrixXd pts = stream.sample(n);
    for (const RegionLabel& l : label_block(arr, pts)) ++counts[l];
    remaining -= n;
  }
  std::map<RegionLabel, double> masses;
  for (const auto& [l, c] : counts)
    masses[l] = static_cast<double>(c) / static_cast<double>(budget);
  return masses;
}

struct Cell2d {
  RegionLabel label;
  Eigen::Vector2d point;  // interior representative
  bool unbounded = false;
};

namespace detail {

inline double arrangement_scale(const Arrangement& arr) {
  double s = 1.0;
  for (int j = 0; j < arr.resolution(); ++j) {
    Eigen::VectorXd row(arr.dimension() + 1);
    row.head(arr.dimension()) = arr.weights.row(j).transpose();
    row(arr.dimension()) = arr.offsets(j);
    s = std::max(s, row.norm());
  }
  return s;
}

}  // namespace detail

/// Exact open-cell enumeration for d = 2 by point probes.
///
/// Every bounded cell of a line arrangement has a vertex on its boundary, and
/// every unbounded cell owns an arc of a circle drawn beyond all vertices, so
/// probing (a) angular bisectors around each pairwise intersection, (b) +/-
/// offsets from a reference point on each line and (c) gap midpoints on a
/// far circle reaches every cell. Each probe is a real point, so every label
/// returned is realized by a nonempty cell.
inline std::vector<Cell2d> enumerate_cells_2d(const Arrangement& arr) {
  if (arr.dimension() != 2)
    throw std::invalid_argument("exact enumeration requires d = 2");
  const int k = arr.resolution();
  const double eps = 1e-6 * detail::arrangement_scale(arr);

  std::vector<Eigen::Vector2d> normals(k);
  std::vector<double> offs(k), dists(k);
  for (int j = 0; j < k; ++j) {
    normals[j] = arr.weights.row(j).transpose();
    offs[j] = arr.offsets(j);
    dists[j] = std::abs(offs[j]) / normals[j].norm();
  }

  std::vector<Eigen::Vector2d> probes;

  // (a) pairwise intersections, probed on the bisectors between consecutive
  // incident line directions (handles concurrent lines too).
  std::vector<Eigen::Vector2d> vertices;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const double det = normals[a].x() * normals[b].y() -
                         normals[a].y() * normals[b].x();
      const double scale = normals[a].norm() * normals[b].norm();
      if (std::abs(det) <= 1e-12 * scale) continue;  // parallel
      Eigen::Vector2d v;
      v.x() = (-offs[a] * normals[b].y() + offs[b] * normals[a].y()) / det;
      v.y() = (-offs[b] * normals[a].x() + offs[a] * normals[b].x()) / det;
      vertices.push_back(v);

      std::vector<double> angles;
      for (int j = 0; j < k; ++j) {
        if (std::abs(normals[j].dot(v) + offs[j]) > eps * normals[j].norm())
          continue;  // line j does not pass through v
        const double theta = std::atan2(normals[j].x(), -normals[j].y());
        angles.push_back(theta);
        angles.push_back(theta > 0 ? theta - M_PI : theta + M_PI);
      }
      std::sort(angles.begin(), angles.end());
      for (std::size_t i = 0; i < angles.size(); ++i) {
        const double next =
            i + 1 < angles.size() ? angles[i + 1] : angles[0] + 2 * M_PI;
        const double mid = 0.5 * (angles[i] + next);
        probes.emplace_back(v.x() + eps * std::cos(mid),
                            v.y() + eps * std::sin(mid));
      }
    }
  }

  // (b) two offset probes per line from its closest point to the origin.
  for (int j = 0; j < k; ++j) {
    const Eigen::Vector2d unit = normals[j].normalized();
    const Eigen::Vector2d foot = -offs[j] / normals[j].norm() * unit;
    probes.push_back(foot + eps * unit);
    probes.push_back(foot - eps * unit);
  }

  // (c) far circle beyond every vertex and every line's foot point, probed at
  // the midpoint of each gap between consecutive line crossings.
  double reach = 1.0;
  for (const auto& v : vertices) reach = std::max(reach, v.norm());
  for (int j = 0; j < k; ++j) reach = std::max(reach, dists[j]);
  const double radius = 4.0 * reach + 1.0;
  std::vector<double> crossings;
  for (int j = 0; j < k; ++j) {
    const double alpha = std::atan2(normals[j].y(), normals[j].x());
    const double c = -offs[j] / (radius * normals[j].norm());
    const double delta = std::acos(std::clamp(c, -1.0, 1.0));
    crossings.push_back(alpha + delta);
    crossings.push_back(alpha - delta);
  }
  if (k > 0) {
    for (double& a : crossings) a = std::remainder(a, 2 * M_PI);
    std::sort(crossings.begin(), crossings.end());
    std::vector<Eigen::Vector2d> far;
    for (std::size_t i = 0; i < crossings.size(); ++i) {
      const double next =
          i + 1 < crossings.size() ? crossings[i + 1] : crossings[0] + 2 * M_PI;
      const double mid = 0.5 * (crossings[i] + next);
      far.emplace_back(radius * std::cos(mid), radius * std::sin(mid));
    }
    probes.insert(probes.end(), far.begin(), far.end());

    std::map<RegionLabel, Cell2d> cells;
    for (const auto& p : probes) {
      const RegionLabel l = label(arr, p);
      cells.emplace(l, Cell2d{l, p, false});
    }
    for (const auto& p : far) cells.at(label(arr, p)).unbounded = true;

    std::vector<Cell2d> out;
    out.reserve(cells.size());
    for (auto& [l, c] : cells) out.push_back(std::move(c));
    return out;
  }
  return {Cell2d{RegionLabel(0, 0), Eigen::Vector2d::Zero(), true}};
}

/// Exact label set of the nonempty open cells of a 2-D arrangement.
inline std::set<RegionLabel> enumerate_regions_exact_2d(const Arrangement& arr) {
  std::set<RegionLabel> labels;
  for (const Cell2d& c : enumerate_cells_2d(arr)) labels.insert(c.label);
  return labels;
}

}  // namespace clvq
