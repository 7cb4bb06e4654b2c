#pragma once

#include "levybel/drift.hpp"
#include "levybel/flow.hpp"
#include "levybel/weights.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace levybel {

// Bounded test function with bounded gradient, used both as payoff f(X(t))
// and as IBP functional Phi(Z(t)).
struct TestFunction {
  std::string id;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

// Registry: "one", "sin_x1", "sin_sum" (sin of the coordinate sum),
// "tanh_x1", "gauss" (exp(-|x|^2)).
TestFunction make_test_function(const std::string& id);
std::vector<std::string> test_function_ids();

struct EstimatorConfig {
  std::vector<LevyMeasure> measures;  // one per coordinate
  MeasureParams measure_params;
  FieldParams field;
  std::string drift_id = "zero";
  Mat drift_matrix;  // empty: shipped matrix
  std::string payoff_id = "sin_sum";
  Vec x0;
  double t = 0.5;
  double eps_trunc = 1e-3;
  std::uint64_t n_paths = 10000;
  std::uint64_t master_seed = 1;
  std::uint64_t batch_size = 1024;
  int workers = 1;
  double q_max = 0.5;
  OdeOptions ode;

  int dim() const { return static_cast<int>(measures.size()); }
  // Throws ConfigError on any inconsistency.
  void validate() const;
  std::shared_ptr<const DriftModel> drift() const;
};

// Welford accumulator over vectors, merged with Chan's pairwise formula.
class RunningStats {
 public:
  RunningStats() = default;
  explicit RunningStats(int width) : mean_(Eigen::VectorXd::Zero(width)), m2_(Eigen::VectorXd::Zero(width)) {}

  void add(const Eigen::VectorXd& x);
  void merge(const RunningStats& other);

  std::uint64_t count() const { return n_; }
  int width() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::VectorXd variance() const;  // unbiased; zero when count < 2
  Eigen::VectorXd stderr_of_mean() const;

 private:
  std::uint64_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

struct FailureCounts {
  std::array<std::uint64_t, 4> by_reason{};  // indexed by WeightFailure

  std::uint64_t total() const;
  void add(WeightFailure f) { ++by_reason[static_cast<std::size_t>(f)]; }
  void merge(const FailureCounts& o);
  std::string describe() const;
};

// Result of a parallel path loop.
struct SampleSummary {
  RunningStats stats;
  FailureCounts failures;
  double wall_seconds = 0.0;
};

// Per-path kernel: fills `out` (already sized to the sample width) and returns
// WeightFailure::none, or returns the failure reason to exclude the path.
using PathKernel = std::function<WeightFailure(std::uint64_t path_index, Eigen::VectorXd& out)>;

// Runs paths [0, n_paths) in batches of `batch_size` on `workers` threads.
// Batch results are merged in batch-index order, so the result does not
// depend on the worker count or on scheduling.
SampleSummary run_paths(std::uint64_t n_paths, std::uint64_t batch_size, int workers, int width,
                        const PathKernel& kernel);

// LEVYBEL_WORKERS overrides `requested` when set to a positive integer.
int resolve_workers(int requested);

struct GradientEstimate {
  Vec mean;
  Vec stderr;
  std::uint64_t n_valid = 0;
  std::uint64_t n_failed = 0;
  FailureCounts failures;
  double wall_seconds = 0.0;
  // Failure fraction above 1e-6: the estimate may be biased.
  bool bias_flag = false;
};

// E f(X(t)) Y(t, x) over valid paths.
GradientEstimate bel_gradient(const EstimatorConfig& cfg);

enum class FdCoupling { common, independent };

// Central differences of the plain semigroup estimate with step h.
// `common` reuses each jump path for x + h e_i and x - h e_i; `independent`
// draws the minus side from a separate substream.
GradientEstimate fd_gradient(const EstimatorConfig& cfg, double h, FdCoupling coupling = FdCoupling::common);

double default_fd_step(const Vec& x0);

// Plain estimate of P_t f(x) = E f(X(t)); mean has one entry.
GradientEstimate semigroup_estimate(const EstimatorConfig& cfg);

struct IbpEstimate {
  double left = 0.0;  // E d_k Phi(Z(t)) ZV_k(t)
  double left_stderr = 0.0;
  double right = 0.0;  // E Phi(Z(t)) Dstar1_k(t)
  double right_stderr = 0.0;
  double diff_stderr = 0.0;  // stderr of the per-path difference
  std::uint64_t n_paths = 0;
  double wall_seconds = 0.0;

  double combined_stderr() const;  // sqrt(left_stderr^2 + right_stderr^2)
};

// Both sides of E D_k Phi = E Phi D_k^* 1 for Phi applied to the driving noise
// Z(t). Uses cfg.measures, t, eps_trunc, field, seed; the drift is irrelevant.
IbpEstimate ibp_check(const EstimatorConfig& cfg, int k, const std::string& phi_id);

enum class ScalingQuantity { mean_abs_y_levy, mean_abs_y_general, mean_abs_diff, mean_payoff };

std::string to_string(ScalingQuantity q);
ScalingQuantity scaling_quantity_from_string(const std::string& s);

// Truncation level as a function of the horizon: either fixed, or
// c * t^(1/alpha) which keeps the expected jump count per path constant.
struct TruncationRule {
  bool self_similar = false;
  double value = 1e-3;  // eps_trunc, or the constant c

  double at(double t, double alpha) const;
};

struct ScalingPoint {
  double t = 0.0;
  double eps_trunc = 0.0;
  double estimate = 0.0;
  double stderr = 0.0;
  std::uint64_t n_valid = 0;
  std::uint64_t n_failed = 0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double chi2_per_dof = 0.0;
};

// Weighted least squares of log y on log x, weights 1 / (rel. stderr)^2.
// The slope stderr is inflated by sqrt(chi2/dof) when that exceeds 1.
// Points with zero stderr get the largest finite weight among the others
// (all equal weights if every stderr is zero).
SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& stderr, double z = 1.959963984540054);

struct ScalingResult {
  std::vector<ScalingPoint> points;
  SlopeFit fit;
};

// For each t, estimates the quantity with stderr (norms are Euclidean over
// coordinates). mean_abs_diff couples Y(t) and Y(t,x) on the same path.
// Throws Error when a grid point has fewer than min_valid valid paths.
ScalingResult scaling_study(const EstimatorConfig& base, const std::vector<double>& t_grid, ScalingQuantity q,
                            const TruncationRule& rule, std::uint64_t min_valid = 2);

struct PathwiseCheckRow {
  std::uint64_t path_index = 0;
  int k = 0;
  std::vector<double> residuals;  // one per eps
  std::vector<double> ratios;     // residual(eps_i) / residual(eps_{i+1})
};

// Residuals of X^eps - X - eps D_k X for eps in eps_list on n_paths paths and
// every coordinate k.
std::vector<PathwiseCheckRow> pathwise_check(const EstimatorConfig& cfg, const std::vector<double>& eps_list);

struct QNormSample {
  double t = 0.0;
  double q_norm = 0.0;
  bool no_small_jumps = false;
};

// q_norm of every path at each time in t_grid (one path evolution per path).
std::vector<QNormSample> q_norm_study(const EstimatorConfig& cfg, const std::vector<double>& t_grid);

// Monte Carlo of ZV_j(t)^-q over paths where ZV_j > 0.
struct MomentSample {
  double mean = 0.0;
  double stderr = 0.0;
  std::uint64_t n_valid = 0;
  std::uint64_t n_failed = 0;
};
MomentSample zv_negative_moment(const EstimatorConfig& cfg, int j, double q);

}  // namespace levybel
