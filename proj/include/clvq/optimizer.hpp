#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "clvq/arrangement.hpp"
#include "clvq/estimation.hpp"
#include "clvq/genetic.hpp"
#include "clvq/source.hpp"

namespace clvq {

enum class Objective { mse_min, entropy_max };

inline std::string to_string(Objective o) {
  return o == Objective::mse_min ? "mse_min" : "entropy_max";
}

inline Objective objective_from_string(const std::string& s) {
  if (s == "mse_min") return Objective::mse_min;
  if (s == "entropy_max") return Objective::entropy_max;
  throw std::invalid_argument("unknown objective: " + s);
}

struct OptimizerParams {
  int t_max = 150;
  double s = 0.05;            // global/local mixing rate
  double sigma0 = 0.0;        // 0 = auto: 0.5 * per-coordinate source stddev
  double sigma_decay = 0.95;
  int grid_points = 40;       // objective evaluations per coefficient scan
  Objective objective = Objective::mse_min;
  double search_halfwidth = 1.0;
  long long ls_points = 20000;  // common-random-number batch size per side
  EstimationParams opt_estimation{200, 500000, 100000};
  EstimationParams final_estimation{200, 1000000, 1000000};

  void validate() const {
    if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
    if (!(s > 0.0)) throw std::invalid_argument("s must be > 0");
    if (sigma0 < 0.0) throw std::invalid_argument("sigma0 must be >= 0");
    if (!(sigma_decay > 0.0 && sigma_decay < 1.0))
      throw std::invalid_argument("sigma_decay must be in (0, 1)");
    if (grid_points < 5) throw std::invalid_argument("grid_points must be >= 5");
    if (!(search_halfwidth > 0.0))
      throw std::invalid_argument("search_halfwidth must be > 0");
    if (ls_points < 100) throw std::invalid_argument("ls_points must be >= 100");
    opt_estimation.validate();
    final_estimation.validate();
  }
};

/// Iteration schedule: the chance of a global move decays as exp(-s t) and
/// the perturbation scale as sigma0 * decay^t, so wide jumps dominate early
/// and coordinate refinement dominates late.
struct Schedule {
  double s;
  double sigma0;
  double sigma_decay;

  double p_global(int t) const { return std::exp(-s * t); }
  double sigma(int t) const { return sigma0 * std::pow(sigma_decay, t); }
};

struct TracePoint {
  int iteration;
  double objective;  // mse, or entropy in bits
  char move;         // 'g' global, 'l' local
};

inline std::string move_name(char m) { return m == 'g' ? "global" : "local"; }

struct DesignReport {
  SourceModel source;
  Arrangement arrangement;
  Codebook codebook;
  double final_mse = 0.0;
  double final_entropy = 0.0;
  int region_count = 0;
  std::vector<TracePoint> trace;
  std::uint64_t seed = 0;
  int restart_index = 0;
  Objective objective = Objective::mse_min;
};

/// Adds independent Normal(0, sigma_t^2) noise to every coefficient of every
/// hyperplane, weights and offsets alike.
inline Arrangement global_update(const Arrangement& arr, double sigma_t,
                                 rng::Engine& eng) {
  if (!(sigma_t > 0.0)) throw std::invalid_argument("sigma_t must be > 0");
  Arrangement out = arr;
  for (int j = 0; j < out.resolution(); ++j) {
    do {
      for (int c = 0; c < out.dimension(); ++c)
        out.weights(j, c) = arr.weights(j, c) + sigma_t * eng.next_normal();
    } while (out.weights.row(j).norm() == 0.0);
    out.offsets(j) = arr.offsets(j) + sigma_t * eng.next_normal();
  }
  return out;
}

/// Line-search objective: lower is always better (entropy is negated
/// internally by implementations). bind() freezes the arrangement whose rows
/// eval_row() then swaps one at a time.
class LineSearchObjective {
 public:
  virtual ~LineSearchObjective() = default;
  virtual void bind(const Arrangement& arr) = 0;
  virtual double eval_row(int j, const Eigen::VectorXd& v, double t) = 0;
};

/// Monte Carlo objective over frozen common-random-number batches. All grid
/// evaluations of one local pass see identical noise, so the interpolated
/// minimizer is stable; swapping a single row only relabels that row's signs.
class MonteCarloObjective : public LineSearchObjective {
 public:
  MonteCarloObjective(SourceModel source, Objective objective,
                      long long points)
      : source_(source), objective_(objective), points_(points) {
    source_.validate();
  }

  /// Draws fresh batches: centroids estimate from cb_seed, error from
  /// mse_seed.
  void reseed(std::uint64_t cb_seed, std::uint64_t mse_seed) {
    SampleStream cb(source_, cb_seed), ms(source_, mse_seed);
    batch_cb_ = cb.sample(points_);
    batch_mse_ = ms.sample(points_);
    bound_ = false;
  }

  void bind(const Arrangement& arr) override {
    if (batch_cb_.cols() == 0)
      throw std::logic_error("reseed() must run before bind()");
    k_ = arr.resolution();
    if (k_ > kMaxResolution)
      throw std::invalid_argument("line-search objective supports k <= 16");
    if (arr.dimension() != source_.dimension)
      throw std::invalid_argument("arrangement dimension mismatch");
    const std::size_t buckets = std::size_t{1} << k_;
    if (counts_.size() < buckets) {
      counts_.assign(buckets, 0);
      sums_.assign(buckets * source_.dimension, 0.0);
      stamps_.assign(buckets, 0);
      epoch_ = 0;
    }
    labels_cb_ = pack_labels(arr, batch_cb_);
    labels_mse_ = pack_labels(arr, batch_mse_);
    bound_ = true;
  }

  double eval_row(int j, const Eigen::VectorXd& v, double t) override {
    if (!bound_) throw std::logic_error("bind() must run before eval_row()");
    const std::uint32_t bit = std::uint32_t{1} << j;
    relabel_row(batch_cb_, labels_cb_, scratch_cb_, v, t, bit);
    relabel_row(batch_mse_, labels_mse_, scratch_mse_, v, t, bit);
    return objective_ == Objective::mse_min
               ? mse_value(scratch_cb_, scratch_mse_)
               : -entropy_value(scratch_mse_);
  }

 private:
  static constexpr int kMaxResolution = 16;

  std::vector<std::uint32_t> pack_labels(const Arrangement& arr,
                                         const Eigen::MatrixXd& pts) const {
    const long long n = pts.cols();
    std::vector<std::uint32_t> labels(n, 0);
    if (arr.resolution() == 0) return labels;
    Eigen::MatrixXd margins = arr.weights * pts;
    margins.colwise() += arr.offsets;
    for (long long i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int j = 0; j < arr.resolution(); ++j)
        if (margins(j, i) >= 0.0) bits |= std::uint32_t{1} << j;
      labels[i] = bits;
    }
    return labels;
  }

  void relabel_row(const Eigen::MatrixXd& pts,
                   const std::vector<std::uint32_t>& base,
                   std::vector<std::uint32_t>& out, const Eigen::VectorXd& v,
                   double t, std::uint32_t bit) const {
    const long long n = pts.cols();
    out.resize(n);
    Eigen::RowVectorXd m = v.transpose() * pts;
    for (long long i = 0; i < n; ++i) {
      const std::uint32_t b = base[i] & ~bit;
      out[i] = m(i) + t >= 0.0 ? (b | bit) : b;
    }
  }

  void touch(std::uint32_t bucket) {
    if (stamps_[bucket] != epoch_) {
      stamps_[bucket] = epoch_;
      counts_[bucket] = 0;
      double* s = &sums_[std::size_t{bucket} * source_.dimension];
      std::fill(s, s + source_.dimension, 0.0);
      touched_.push_back(bucket);
    }
  }

  double mse_value(const std::vector<std::uint32_t>& cb_labels,
                   const std::vector<std::uint32_t>& mse_labels) {
    const int d = source_.dimension;
    ++epoch_;
    touched_.clear();
    for (long long i = 0; i < batch_cb_.cols(); ++i) {
      const std::uint32_t b = cb_labels[i];
      touch(b);
      ++counts_[b];
      double* s = &sums_[std::size_t{b} * d];
      const double* x = batch_cb_.col(i).data();
      for (int c = 0; c < d; ++c) s[c] += x[c];
    }
    for (const std::uint32_t b : touched_) {
      double* s = &sums_[std::size_t{b} * d];
      const double inv = 1.0 / static_cast<double>(counts_[b]);
      for (int c = 0; c < d; ++c) s[c] *= inv;  // sums become centroids
    }

    double total = 0.0;
    for (long long i = 0; i < batch_mse_.cols(); ++i) {
      const std::uint32_t b = mse_labels[i];
      const double* x = batch_mse_.col(i).data();
      const double* c = nullptr;
      if (stamps_[b] == epoch_ && counts_[b] > 0) {
        c = &sums_[std::size_t{b} * d];
      } else {
        // label unseen in the centroid batch: nearest existing centroid
        double best = std::numeric_limits<double>::infinity();
        for (const std::uint32_t tb : touched_) {
          const double* tc = &sums_[std::size_t{tb} * d];
          double dist = 0.0;
          for (int cc = 0; cc < d; ++cc) {
            const double diff = x[cc] - tc[cc];
            dist += diff * diff;
          }
          if (dist < best) {
            best = dist;
            c = tc;
          }
        }
      }
      for (int cc = 0; cc < d; ++cc) {
        const double diff = x[cc] - c[cc];
        total += diff * diff;
      }
    }
    return total / static_cast<double>(batch_mse_.cols());
  }

  double entropy_value(const std::vector<std::uint32_t>& labels) {
    ++epoch_;
    touched_.clear();
    for (const std::uint32_t b : labels) {
      touch(b);
      ++counts_[b];
    }
    const double n = static_cast<double>(labels.size());
    double h = 0.0;
    for (const std::uint32_t b : touched_) {
      const double p = counts_[b] / n;
      h -= p * std::log2(p);
    }
    return h;
  }

  SourceModel source_;
  Objective objective_;
  long long points_;
  Eigen::MatrixXd batch_cb_, batch_mse_;
  std::vector<std::uint32_t> labels_cb_, labels_mse_;
  std::vector<std::uint32_t> scratch_cb_, scratch_mse_;
  std::vector<long long> counts_;
  std::vector<double> sums_;
  std::vector<std::uint32_t> stamps_, touched_;
  std::uint32_t epoch_ = 0;
  int k_ = 0;
  bool bound_ = false;
};

/// Coordinate line search over the d+1 coefficients of one hyperplane.
/// Each coefficient gets exactly grid_points objective evaluations: the
/// cached current value, a uniform scan of [p - w, p + w], and one probe at
/// the clamped quadratic-interpolation minimizer of the best scan triple.
/// A coefficient only moves when some evaluated candidate is at least as
/// good as the current value under the same frozen noise.
inline Arrangement local_update(const Arrangement& arr, int index,
                                LineSearchObjective& obj,
                                const OptimizerParams& params) {
  const int k = arr.resolution();
  const int d = arr.dimension();
  if (index < 0 || index >= k)
    throw std::invalid_argument("hyperplane index out of range");

  obj.bind(arr);
  Eigen::VectorXd v = arr.weights.row(index).transpose();
  double t = arr.offsets(index);

  auto eval_at = [&](int c, double x) {
    double saved;
    double* coeff = c < d ? &v(c) : &t;
    saved = *coeff;
    *coeff = x;
    const double f = obj.eval_row(index, v, t);
    *coeff = saved;
    return f;
  };

  bool have_current = false;
  double f_cur = 0.0;
  for (int c = 0; c <= d; ++c) {
    double* coeff = c < d ? &v(c) : &t;
    const double x0 = *coeff;
    Eigen::VectorXd full(d + 1);
    full.head(d) = v;
    full(d) = t;
    const double w =
        params.search_halfwidth * std::max(std::abs(x0), 0.5 * full.norm());

    int budget = params.grid_points;
    if (!have_current) {
      f_cur = eval_at(c, x0);
      have_current = true;
      --budget;
    }
    const int grid_n = budget - 1;  // one evaluation reserved for the probe

    std::vector<double> xs(grid_n), fs(grid_n);
    int best = 0;
    for (int g = 0; g < grid_n; ++g) {
      xs[g] = x0 - w + 2.0 * w * g / (grid_n - 1);
      fs[g] = eval_at(c, xs[g]);
      if (fs[g] < fs[best]) best = g;
    }

    // quadratic vertex through the best grid point and its neighbors
    const int b = std::clamp(best, 1, grid_n - 2);
    const double x1 = xs[b - 1], x2 = xs[b], x3 = xs[b + 1];
    const double f1 = fs[b - 1], f2 = fs[b], f3 = fs[b + 1];
    const double num =
        (x2 - x1) * (x2 - x1) * (f2 - f3) - (x2 - x3) * (x2 - x3) * (f2 - f1);
    const double den = (x2 - x1) * (f2 - f3) - (x2 - x3) * (f2 - f1);
    double probe;
    if (std::abs(den) > 0.0 && std::isfinite(num / den))
      probe = std::clamp(x2 - 0.5 * num / den, x0 - w, x0 + w);
    else
      probe = 0.5 * (xs[best] + (best > 0 ? xs[best - 1] : xs[best + 1]));
    const double f_probe = eval_at(c, probe);

    double accept_x = x0, accept_f = f_cur;
    if (fs[best] < accept_f) {
      accept_x = xs[best];
      accept_f = fs[best];
    }
    if (f_probe < accept_f) {
      accept_x = probe;
      accept_f = f_probe;
    }
    *coeff = accept_x;
    f_cur = accept_f;
  }

  Arrangement out = arr;
  if (v.norm() > 0.0) {
    out.weights.row(index) = v.transpose();
    out.offsets(index) = t;
  }
  return out;
}

namespace detail {

// Stream-index layout inside one design run (all offsets stay below the
// restart stride, so parallel restarts never share a substream).
inline constexpr std::uint64_t kMoveStream = 8;
inline constexpr std::uint64_t kInitStream = 4096;
inline constexpr std::uint64_t kRefreshBase = 65536;
inline constexpr std::uint64_t kCrnBase = 131072;
inline constexpr std::uint64_t kFinalBase = 196608;
inline constexpr std::uint64_t kRestartStride = std::uint64_t{1} << 20;

struct Estimates {
  Codebook codebook;
  double mse = 0.0;
  double entropy = 0.0;
};

inline Estimates estimate_all(const Arrangement& arr, const SourceModel& source,
                              const EstimationParams& params,
                              std::uint64_t seed) {
  Estimates e;
  SampleStream cb_stream(source, seed);
  e.codebook = estimate_codebook(arr, params, cb_stream);
  SampleStream mse_stream(source, seed + 1);
  e.mse = estimate_mse(arr, e.codebook, params.mse_points, mse_stream);
  SampleStream ent_stream(source, seed + 2);
  e.entropy = estimate_entropy(arr, params.mse_points, ent_stream);
  return e;
}

template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp(jobs, 1, n);
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> cursor{0};
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace detail

/// One design run (alternating centroid refresh and configuration moves).
/// Every iteration applies a global perturbation with probability exp(-s t)
/// and otherwise a local pass on one random hyperplane, then re-estimates the
/// codebook and objective. The report carries the best configuration ever
/// seen, re-estimated at the final budget, not the last one.
inline DesignReport design(const SourceModel& source,
                           const OptimizerParams& params,
                           const Arrangement& init, std::uint64_t seed,
                           int restart_index = 0) {
  params.validate();
  init.validate();
  source.validate();
  if (init.dimension() != source.dimension || init.resolution() < 1)
    throw std::invalid_argument("init arrangement does not match (d, k)");
  const int k = init.resolution();

  const double sigma0 = params.sigma0 > 0.0
                            ? params.sigma0
                            : 0.5 * source_coordinate_stddev(source);
  const Schedule sched{params.s, sigma0, params.sigma_decay};
  const bool minimize = params.objective == Objective::mse_min;
  auto internal = [&](const detail::Estimates& e) {
    return minimize ? e.mse : -e.entropy;
  };
  auto natural = [&](const detail::Estimates& e) {
    return minimize ? e.mse : e.entropy;
  };

  rng::Engine moves = rng::substream(seed, detail::kMoveStream);
  MonteCarloObjective objective(source, params.objective, params.ls_points);

  Arrangement current = init;
  detail::Estimates est = detail::estimate_all(
      current, source, params.opt_estimation, seed + detail::kRefreshBase);
  Arrangement best = current;
  double best_internal = internal(est);

  DesignReport report;
  report.source = source;
  report.seed = seed;
  report.restart_index = restart_index;
  report.objective = params.objective;
  report.trace.reserve(params.t_max);

  for (int t = 1; t <= params.t_max; ++t) {
    char move;
    if (moves.next_unit() < sched.p_global(t)) {
      current = global_update(current, sched.sigma(t), moves);
      move = 'g';
    } else {
      const int j = static_cast<int>(moves.next_below(k));
      objective.reseed(seed + detail::kCrnBase + 2 * t,
                       seed + detail::kCrnBase + 2 * t + 1);
      current = local_update(current, j, objective, params);
      move = 'l';
    }
    est = detail::estimate_all(current, source, params.opt_estimation,
                               seed + detail::kRefreshBase + 4 * t);
    report.trace.push_back({t, natural(est), move});
    if (internal(est) < best_internal) {
      best_internal = internal(est);
      best = current;
    }
  }

  const detail::Estimates final_est = detail::estimate_all(
      best, source, params.final_estimation, seed + detail::kFinalBase);
  report.arrangement = std::move(best);
  report.codebook = final_est.codebook;
  report.final_mse = final_est.mse;
  report.final_entropy = final_est.entropy;
  report.region_count = static_cast<int>(final_est.codebook.size());
  return report;
}

enum class InitStrategy { random, genetic };

inline std::string to_string(InitStrategy s) {
  return s == InitStrategy::random ? "random" : "genetic";
}

/// Independent restarts with derived seeds (base + r * 2^20); restarts run
/// concurrently up to `jobs` workers and reports come back ordered by
/// restart index.
inline std::vector<DesignReport> design_multi(
    const SourceModel& source, int k, const OptimizerParams& params,
    InitStrategy init_strategy, int restarts, std::uint64_t base_seed,
    const GeneticParams& genetic_params = {}, int jobs = 0) {
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  params.validate();

  std::vector<DesignReport> reports(restarts);
  detail::parallel_for(restarts, jobs, [&](int r) {
    const std::uint64_t seed =
        base_seed + static_cast<std::uint64_t>(r) * detail::kRestartStride;
    SampleStream init_stream(source, seed + detail::kInitStream);
    Arrangement init =
        init_strategy == InitStrategy::random
            ? random_init(source, k, init_stream)
            : genetic_init(source, k, genetic_params,
                           make_mse_oracle(source), init_stream)
                  .first;
    reports[r] = design(source, params, init, seed, r);
  });
  return reports;
}

inline const DesignReport& best_report(const std::vector<DesignReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports");
  const bool minimize = reports.front().objective == Objective::mse_min;
  return *std::min_element(reports.begin(), reports.end(),
                           [&](const DesignReport& a, const DesignReport& b) {
                             return minimize ? a.final_mse < b.final_mse
                                             : a.final_entropy > b.final_entropy;
                           });
}

}  // namespace clvq
