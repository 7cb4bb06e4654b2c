#include "levybel/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace levybel {

// -----------------------------------------------------------------------------
// Test functions
// -----------------------------------------------------------------------------

TestFunction make_test_function(const std::string& id) {
  TestFunction f;
  f.id = id;
  if (id == "one") {
    f.value = [](const Vec&) { return 1.0; };
    f.gradient = [](const Vec& x) { return Vec::Zero(x.size()); };
  } else if (id == "sin_x1") {
    f.value = [](const Vec& x) { return std::sin(x[0]); };
    f.gradient = [](const Vec& x) {
      Vec g = Vec::Zero(x.size());
      g[0] = std::cos(x[0]);
      return g;
    };
  } else if (id == "sin_sum") {
    f.value = [](const Vec& x) { return std::sin(x.sum()); };
    f.gradient = [](const Vec& x) { return Vec::Constant(x.size(), std::cos(x.sum())); };
  } else if (id == "tanh_x1") {
    f.value = [](const Vec& x) { return std::tanh(x[0]); };
    f.gradient = [](const Vec& x) {
      Vec g = Vec::Zero(x.size());
      const double th = std::tanh(x[0]);
      g[0] = 1.0 - th * th;
      return g;
    };
  } else if (id == "gauss") {
    f.value = [](const Vec& x) { return std::exp(-x.squaredNorm()); };
    f.gradient = [](const Vec& x) { return Vec(-2.0 * std::exp(-x.squaredNorm()) * x); };
  } else {
    throw ConfigError("unknown test function '" + id + "'");
  }
  return f;
}

std::vector<std::string> test_function_ids() { return {"one", "sin_x1", "sin_sum", "tanh_x1", "gauss"}; }

// -----------------------------------------------------------------------------
// Config
// -----------------------------------------------------------------------------

void EstimatorConfig::validate() const {
  if (measures.empty()) throw ConfigError("at least one coordinate is required");
  if (dim() > kMaxDim) throw ConfigError("dimension exceeds " + std::to_string(kMaxDim));
  if (x0.size() != dim()) throw ConfigError("x0 has " + std::to_string(x0.size()) + " entries, expected " +
                                            std::to_string(dim()));
  if (!x0.allFinite()) throw ConfigError("x0 must be finite");
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("t must be positive");
  if (!(eps_trunc > 0.0) || !std::isfinite(eps_trunc)) throw ConfigError("eps_trunc must be positive");
  if (n_paths < 1) throw ConfigError("n_paths must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (!(q_max > 0.0)) throw ConfigError("q_max must be positive");
  measure_params.validate();
  field.validate();
  check_consistent(field, measure_params);
  ode.validate();
  for (const auto& m : measures) {
    if (const auto* st = std::get_if<StableMeasure>(&m)) {
      if (!(field.kappa > 1.0 + 0.5 * st->alpha())) {
        throw ConfigError("kappa must exceed 1 + alpha/2 for stable noise (alpha=" + std::to_string(st->alpha()) +
                          ", kappa=" + std::to_string(field.kappa) + ")");
      }
    }
  }
  make_test_function(payoff_id);
  drift();
}

std::shared_ptr<const DriftModel> EstimatorConfig::drift() const { return make_drift(drift_id, dim(), drift_matrix); }

// -----------------------------------------------------------------------------
// Statistics
// -----------------------------------------------------------------------------

void RunningStats::add(const Eigen::VectorXd& x) {
  ++n_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_.array() += delta.array() * (x - mean_).array();
}

void RunningStats::merge(const RunningStats& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const Eigen::VectorXd delta = o.mean_ - mean_;
  mean_ += delta * (nb / n);
  m2_ += o.m2_ + delta.cwiseProduct(delta) * (na * nb / n);
  n_ += o.n_;
}

Eigen::VectorXd RunningStats::variance() const {
  if (n_ < 2) return Eigen::VectorXd::Zero(mean_.size());
  return m2_ / static_cast<double>(n_ - 1);
}

Eigen::VectorXd RunningStats::stderr_of_mean() const {
  if (n_ < 2) return Eigen::VectorXd::Zero(mean_.size());
  return (variance() / static_cast<double>(n_)).cwiseSqrt();
}

std::uint64_t FailureCounts::total() const {
  std::uint64_t s = 0;
  for (auto c : by_reason) s += c;
  return s;
}

void FailureCounts::merge(const FailureCounts& o) {
  for (std::size_t i = 0; i < by_reason.size(); ++i) by_reason[i] += o.by_reason[i];
}

std::string FailureCounts::describe() const {
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 1; i < by_reason.size(); ++i) {
    if (!first) os << ' ';
    os << to_string(static_cast<WeightFailure>(i)) << '=' << by_reason[i];
    first = false;
  }
  return os.str();
}

// -----------------------------------------------------------------------------
// Parallel driver
// -----------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Calls task(i) for i in [0, n) on up to `workers` threads. The first
// exception stops the pool and is rethrown on the calling thread.
template <class Task>
void parallel_for(std::uint64_t n, int workers, Task&& task) {
  const auto threads = static_cast<std::uint64_t>(std::max(1, workers));
  if (threads <= 1 || n <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    try {
      for (;;) {
        const std::uint64_t i = next.fetch_add(1);
        if (i >= n || stop.load()) break;
        task(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      stop = true;
    }
  };
  std::vector<std::thread> pool;
  const auto count = std::min(threads, n);
  pool.reserve(count);
  for (std::uint64_t w = 0; w < count; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

RngSpec jump_stream(const EstimatorConfig& cfg, std::uint64_t i) { return RngSpec{cfg.master_seed, i, StreamTag::jumps}; }

}  // namespace

SampleSummary run_paths(std::uint64_t n_paths, std::uint64_t batch_size, int workers, int width,
                        const PathKernel& kernel) {
  const auto t0 = Clock::now();
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  const std::uint64_t n_batches = (n_paths + batch_size - 1) / batch_size;
  struct Partial {
    RunningStats stats;
    FailureCounts failures;
  };
  std::vector<Partial> parts(n_batches);
  parallel_for(n_batches, workers, [&](std::uint64_t b) {
    Partial p{RunningStats(width), {}};
    Eigen::VectorXd out(width);
    const std::uint64_t lo = b * batch_size;
    const std::uint64_t hi = std::min(n_paths, lo + batch_size);
    for (std::uint64_t i = lo; i < hi; ++i) {
      out.setZero();
      const WeightFailure f = kernel(i, out);
      if (f == WeightFailure::none) {
        p.stats.add(out);
      } else {
        p.failures.add(f);
      }
    }
    parts[b] = std::move(p);
  });
  SampleSummary s{RunningStats(width), {}, 0.0};
  for (const auto& p : parts) {
    s.stats.merge(p.stats);
    s.failures.merge(p.failures);
  }
  s.wall_seconds = seconds_since(t0);
  return s;
}

int resolve_workers(int requested) {
  if (const char* env = std::getenv("LEVYBEL_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) return static_cast<int>(v);
  }
  return std::max(1, requested);
}

namespace {

GradientEstimate to_estimate(const SampleSummary& s, std::uint64_t n_paths) {
  GradientEstimate e;
  e.n_valid = s.stats.count();
  e.n_failed = s.failures.total();
  e.failures = s.failures;
  e.wall_seconds = s.wall_seconds;
  if (e.n_valid == 0) {
    throw Error("all " + std::to_string(n_paths) + " paths failed (" + s.failures.describe() + ")");
  }
  e.mean = s.stats.mean();
  e.stderr = s.stats.stderr_of_mean();
  e.bias_flag = static_cast<double>(e.n_failed) > 1e-6 * static_cast<double>(n_paths);
  return e;
}

}  // namespace

GradientEstimate bel_gradient(const EstimatorConfig& cfg) {
  cfg.validate();
  const JumpSimulator sim(cfg.measures, cfg.t, cfg.eps_trunc);
  const auto drift = cfg.drift();
  const TestFunction f = make_test_function(cfg.payoff_id);
  const int d = cfg.dim();
  const auto s = run_paths(cfg.n_paths, cfg.batch_size, cfg.workers, d, [&](std::uint64_t i, Eigen::VectorXd& out) {
    const JumpPath path = sim.simulate(jump_stream(cfg, i));
    const FlowState st = evolve_to(*drift, cfg.x0, path, cfg.t, cfg.field, cfg.measures, cfg.ode);
    const WeightBundle w = y_general(st, cfg.q_max);
    if (!w.valid) return w.failure_reason;
    out = f.value(st.X) * w.y_general;
    return WeightFailure::none;
  });
  return to_estimate(s, cfg.n_paths);
}

double default_fd_step(const Vec& x0) { return 1e-3 * (1.0 + x0.norm()); }

GradientEstimate fd_gradient(const EstimatorConfig& cfg, double h, FdCoupling coupling) {
  cfg.validate();
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
  const JumpSimulator sim(cfg.measures, cfg.t, cfg.eps_trunc);
  const auto drift = cfg.drift();
  const TestFunction f = make_test_function(cfg.payoff_id);
  const int d = cfg.dim();
  const auto s = run_paths(cfg.n_paths, cfg.batch_size, cfg.workers, d, [&](std::uint64_t i, Eigen::VectorXd& out) {
    const JumpPath plus = sim.simulate(jump_stream(cfg, i));
    const JumpPath minus =
        coupling == FdCoupling::common ? plus : sim.simulate(RngSpec{cfg.master_seed, i, StreamTag::aux});
    for (int c = 0; c < d; ++c) {
      Vec xp = cfg.x0;
      Vec xm = cfg.x0;
      xp[c] += h;
      xm[c] -= h;
      const double fp = f.value(terminal_state(*drift, xp, plus, cfg.t, cfg.ode));
      const double fm = f.value(terminal_state(*drift, xm, minus, cfg.t, cfg.ode));
      out[c] = (fp - fm) / (2.0 * h);
    }
    return WeightFailure::none;
  });
  return to_estimate(s, cfg.n_paths);
}

GradientEstimate semigroup_estimate(const EstimatorConfig& cfg) {
  cfg.validate();
  const JumpSimulator sim(cfg.measures, cfg.t, cfg.eps_trunc);
  const auto drift = cfg.drift();
  const TestFunction f = make_test_function(cfg.payoff_id);
  const auto s = run_paths(cfg.n_paths, cfg.batch_size, cfg.workers, 1, [&](std::uint64_t i, Eigen::VectorXd& out) {
    const JumpPath path = sim.simulate(jump_stream(cfg, i));
    out[0] = f.value(terminal_state(*drift, cfg.x0, path, cfg.t, cfg.ode));
    return WeightFailure::none;
  });
  return to_estimate(s, cfg.n_paths);
}

double IbpEstimate::combined_stderr() const { return std::hypot(left_stderr, right_stderr); }

IbpEstimate ibp_check(const EstimatorConfig& cfg, int k, const std::string& phi_id) {
  cfg.validate();
  const int d = cfg.dim();
  if (k < 0 || k >= d) throw ConfigError("ibp coordinate out of range");
  const TestFunction phi = make_test_function(phi_id);
  const JumpSimulator sim(cfg.measures, cfg.t, cfg.eps_trunc);
  const auto s = run_paths(cfg.n_paths, cfg.batch_size, cfg.workers, 3, [&](std::uint64_t i, Eigen::VectorXd& out) {
    const JumpPath path = sim.simulate(jump_stream(cfg, i));
    const NoiseFunctionals n = noise_functionals(path, cfg.t, cfg.field, cfg.measures);
    // D_k Z_j = delta_jk ZV_k
    const double left = phi.gradient(n.Z)[k] * n.ZV[k];
    const double right = phi.value(n.Z) * n.Dstar1[k];
    out << left, right, left - right;
    return WeightFailure::none;
  });
  IbpEstimate e;
  const auto m = s.stats.mean();
  const auto se = s.stats.stderr_of_mean();
  e.left = m[0];
  e.right = m[1];
  e.left_stderr = se[0];
  e.right_stderr = se[1];
  e.diff_stderr = se[2];
  e.n_paths = s.stats.count();
  e.wall_seconds = s.wall_seconds;
  return e;
}

// -----------------------------------------------------------------------------
// Scaling
// -----------------------------------------------------------------------------

std::string to_string(ScalingQuantity q) {
  switch (q) {
    case ScalingQuantity::mean_abs_y_levy:
      return "mean_abs_y_levy";
    case ScalingQuantity::mean_abs_y_general:
      return "mean_abs_y_general";
    case ScalingQuantity::mean_abs_diff:
      return "mean_abs_diff";
    case ScalingQuantity::mean_payoff:
      return "mean_payoff";
  }
  return "unknown";
}

ScalingQuantity scaling_quantity_from_string(const std::string& s) {
  for (auto q : {ScalingQuantity::mean_abs_y_levy, ScalingQuantity::mean_abs_y_general, ScalingQuantity::mean_abs_diff,
                 ScalingQuantity::mean_payoff}) {
    if (to_string(q) == s) return q;
  }
  throw ConfigError("unknown scaling quantity '" + s + "'");
}

double TruncationRule::at(double t, double alpha) const {
  if (!(value > 0.0)) throw ConfigError("truncation constant must be positive");
  return self_similar ? value * std::pow(t, 1.0 / alpha) : value;
}

SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& stderr, double z) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || stderr.size() != n) throw Error("slope fit needs at least two matching points");
  std::vector<double> lx(n), ly(n), w(n);
  double wmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error("slope fit needs positive x and y");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    const double rel = stderr[i] / y[i];
    w[i] = rel > 0.0 ? 1.0 / (rel * rel) : 0.0;
    if (std::isfinite(w[i])) wmax = std::max(wmax, w[i]);
  }
  for (auto& wi : w) {
    if (wi == 0.0 || !std::isfinite(wi)) wi = wmax > 0.0 ? wmax : 1.0;
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * lx[i];
    sy += w[i] * ly[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (lx[i] - mx) * (lx[i] - mx);
    sxy += w[i] * (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw Error("slope fit needs distinct x values");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    chi2 += w[i] * r * r;
  }
  fit.chi2_per_dof = n > 2 ? chi2 / static_cast<double>(n - 2) : 0.0;
  fit.slope_stderr = std::sqrt(std::max(1.0, fit.chi2_per_dof) / sxx);
  fit.ci_lo = fit.slope - z * fit.slope_stderr;
  fit.ci_hi = fit.slope + z * fit.slope_stderr;
  return fit;
}

ScalingResult scaling_study(const EstimatorConfig& base, const std::vector<double>& t_grid, ScalingQuantity q,
                            const TruncationRule& rule, std::uint64_t min_valid) {
  if (t_grid.size() < 2) throw ConfigError("scaling study needs at least two times");
  ScalingResult res;
  const int d = base.dim();
  const ZeroDrift zero(d);
  for (const double t : t_grid) {
    EstimatorConfig cfg = base;
    cfg.t = t;
    cfg.eps_trunc = rule.at(t, base.measure_params.rho_index);
    cfg.validate();
    const JumpSimulator sim(cfg.measures, cfg.t, cfg.eps_trunc);
    const auto drift = cfg.drift();
    const TestFunction f = make_test_function(cfg.payoff_id);
    const auto s = run_paths(cfg.n_paths, cfg.batch_size, cfg.workers, 1, [&](std::uint64_t i, Eigen::VectorXd& out) {
      const JumpPath path = sim.simulate(jump_stream(cfg, i));
      switch (q) {
        case ScalingQuantity::mean_payoff:
          out[0] = f.value(terminal_state(*drift, cfg.x0, path, cfg.t, cfg.ode));
          return WeightFailure::none;
        case ScalingQuantity::mean_abs_y_levy: {
          const FlowState st = evolve_to(zero, cfg.x0, path, cfg.t, cfg.field, cfg.measures, cfg.ode);
          if ((st.ZV.array() <= 0.0).any()) return WeightFailure::no_small_jumps;
          out[0] = y_levy(st).norm();
          return WeightFailure::none;
        }
        case ScalingQuantity::mean_abs_y_general:
        case ScalingQuantity::mean_abs_diff: {
          const FlowState st = evolve_to(*drift, cfg.x0, path, cfg.t, cfg.field, cfg.measures, cfg.ode);
          const WeightBundle w = y_general(st, cfg.q_max);
          if (!w.valid) return w.failure_reason;
          out[0] = q == ScalingQuantity::mean_abs_y_general ? w.y_general.norm() : (w.y_levy - w.y_general).norm();
          return WeightFailure::none;
        }
      }
      return WeightFailure::none;
    });
    if (s.stats.count() < min_valid) {
      throw Error("t=" + std::to_string(t) + ": only " + std::to_string(s.stats.count()) + " valid paths (" +
                  s.failures.describe() + ")");
    }
    ScalingPoint p;
    p.t = t;
    p.eps_trunc = cfg.eps_trunc;
    p.estimate = s.stats.mean()[0];
    p.stderr = s.stats.stderr_of_mean()[0];
    p.n_valid = s.stats.count();
    p.n_failed = s.failures.total();
    res.points.push_back(p);
  }
  std::vector<double> xs, ys, ses;
  for (const auto& p : res.points) {
    xs.push_back(p.t);
    ys.push_back(p.estimate);
    ses.push_back(p.stderr);
  }
  res.fit = fit_loglog_slope(xs, ys, ses);
  return res;
}

// -----------------------------------------------------------------------------
// Pathwise, Q-norm and moment studies
// -----------------------------------------------------------------------------

std::vector<PathwiseCheckRow> pathwise_check(const EstimatorConfig& cfg, const std::vector<double>& eps_list) {
  cfg.validate();
  if (eps_list.empty()) throw ConfigError("pathwise check needs at least one eps");
  const int d = cfg.dim();
  const JumpSimulator sim(cfg.measures, cfg.t, cfg.eps_trunc);
  const auto drift = cfg.drift();
  std::vector<PathwiseCheckRow> rows(cfg.n_paths * static_cast<std::uint64_t>(d));
  parallel_for(cfg.n_paths, cfg.workers, [&](std::uint64_t i) {
    const JumpPath path = sim.simulate(jump_stream(cfg, i));
    const FlowState base = evolve_to(*drift, cfg.x0, path, cfg.t, cfg.field, cfg.measures, cfg.ode);
    for (int k = 0; k < d; ++k) {
      PathwiseCheckRow& r = rows[i * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(k)];
      r.path_index = i;
      r.k = k;
      for (const double eps : eps_list) {
        const Vec shifted = terminal_state(*drift, cfg.x0, perturb_path(path, k, eps, cfg.field), cfg.t, cfg.ode);
        r.residuals.push_back((shifted - base.X - eps * base.DX.col(k)).norm());
      }
      for (std::size_t e = 0; e + 1 < r.residuals.size(); ++e) {
        r.ratios.push_back(r.residuals[e + 1] > 0.0 ? r.residuals[e] / r.residuals[e + 1]
                                                    : std::numeric_limits<double>::infinity());
      }
    }
  });
  return rows;
}

std::vector<QNormSample> q_norm_study(const EstimatorConfig& cfg, const std::vector<double>& t_grid) {
  cfg.validate();
  if (t_grid.empty()) throw ConfigError("q-norm study needs at least one time");
  std::vector<double> times = t_grid;
  std::sort(times.begin(), times.end());
  const double horizon = times.back();
  const JumpSimulator sim(cfg.measures, horizon, cfg.eps_trunc);
  const auto drift = cfg.drift();
  std::vector<QNormSample> out(cfg.n_paths * times.size());
  parallel_for(cfg.n_paths, cfg.workers, [&](std::uint64_t i) {
    const JumpPath path = sim.simulate(jump_stream(cfg, i));
    const auto states = evolve(*drift, cfg.x0, path, times, cfg.field, cfg.measures, cfg.ode);
    for (std::size_t n = 0; n < states.size(); ++n) {
      const WeightBundle w = y_general(states[n], std::numeric_limits<double>::infinity());
      QNormSample& q = out[i * times.size() + n];
      q.t = times[n];
      q.q_norm = w.q_norm;
      q.no_small_jumps = w.failure_reason == WeightFailure::no_small_jumps;
    }
  });
  return out;
}

MomentSample zv_negative_moment(const EstimatorConfig& cfg, int j, double q) {
  cfg.validate();
  const int d = cfg.dim();
  if (j < 0 || j >= d) throw ConfigError("moment coordinate out of range");
  const JumpSimulator sim(cfg.measures, cfg.t, cfg.eps_trunc);
  const ZeroDrift zero(d);
  const auto s = run_paths(cfg.n_paths, cfg.batch_size, cfg.workers, 1, [&](std::uint64_t i, Eigen::VectorXd& out) {
    const JumpPath path = sim.simulate(jump_stream(cfg, i));
    const FlowState st = evolve_to(zero, cfg.x0, path, cfg.t, cfg.field, cfg.measures, cfg.ode);
    if (!(st.ZV[j] > 0.0)) return WeightFailure::no_small_jumps;
    out[0] = std::pow(st.ZV[j], -q);
    return WeightFailure::none;
  });
  MomentSample m;
  m.n_valid = s.stats.count();
  m.n_failed = s.failures.total();
  if (m.n_valid > 0) {
    m.mean = s.stats.mean()[0];
    m.stderr = s.stats.stderr_of_mean()[0];
  }
  return m;
}

}  // namespace levybel
