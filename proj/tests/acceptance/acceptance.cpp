// Acceptance runner: one PASS/FAIL line per criterion on stdout, progress on
// stderr. `levybel_acceptance 2 5` runs a subset.

#include "config.hpp"
#include "experiments.hpp"

#include "levybel/estimator.hpp"
#include "levybel/jump_engine.hpp"
#include "levybel/moments.hpp"
#include "levybel/weights.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace levybel;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.4g", v); }

EstimatorConfig stable_config(double alpha, int d, double t, double eps, std::uint64_t n, std::uint64_t seed) {
  EstimatorConfig c;
  c.measures.assign(static_cast<std::size_t>(d), StableMeasure(alpha));
  c.measure_params = default_stable_params(alpha);
  c.field = FieldParams::from(c.measure_params);
  c.x0 = Vec::Constant(d, 0.3);
  c.t = t;
  c.eps_trunc = eps;
  c.n_paths = n;
  c.master_seed = seed;
  c.batch_size = 1024;
  c.workers = resolve_workers(1);
  c.ode.min_substeps = 1;
  return c;
}

// 1. E d_1 Phi(Z) ZV_1 = E Phi(Z) Dstar1_1 for Phi = sin, d = 1.
Outcome ibp_identity() {
  auto cfg = stable_config(1.5, 1, 0.5, 2e-3, 200000, 101);
  const auto r = ibp_check(cfg, 0, "sin_x1");
  const double se = r.combined_stderr();
  const double gap = std::abs(r.left - r.right);
  Outcome o;
  o.pass = gap <= 3.0 * se && r.wall_seconds <= 120.0;
  o.detail = "left=" + g(r.left) + " right=" + g(r.right) + " |diff|/se=" + g(gap / se) + " paths=" +
             std::to_string(r.n_paths) + " eps_trunc=2e-3 estimator_s=" + g(r.wall_seconds) + " (limit 120)";
  return o;
}

// 2. BEL gradient against common-random-number finite differences.
Outcome bel_vs_fd() {
  struct Case {
    double alpha, eps;
  };
  Outcome o{true, ""};
  for (const Case c : {Case{0.8, 5e-4}, Case{1.2, 3e-3}, Case{1.5, 1e-2}}) {
    auto cfg = stable_config(c.alpha, 2, 0.25, c.eps, 500000, 202);
    cfg.drift_id = "tanh";
    cfg.payoff_id = "sin_sum";
    cfg.ode.method = OdeMethod::heun;
    const auto t0 = std::chrono::steady_clock::now();
    const auto bel = bel_gradient(cfg);
    const auto fd = fd_gradient(cfg, default_fd_step(cfg.x0));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = secs <= 600.0;
    std::string part = "alpha=" + g(c.alpha) + " eps_trunc=" + g(c.eps);
    for (int k = 0; k < 2; ++k) {
      const double z = (bel.mean[k] - fd.mean[k]) / std::hypot(bel.stderr[k], fd.stderr[k]);
      ok = ok && std::abs(z) <= 3.0;
      part += " z" + std::to_string(k + 1) + "=" + g(z) + " (bel " + g(bel.mean[k]) + " fd " + g(fd.mean[k]) + ")";
    }
    part += " failed=" + std::to_string(bel.n_failed) + " s=" + g(secs) + (ok ? " ok" : " FAIL");
    std::cerr << "  " << part << "\n";
    o.pass = o.pass && ok;
    o.detail += (o.detail.empty() ? "" : "; ") + part;
  }
  return o;
}

// 3. E|Y(t)| ~ t^(-1/alpha) without drift.
Outcome y_scaling() {
  std::vector<double> grid;
  for (int e = -10; e <= -4; ++e) grid.push_back(std::ldexp(1.0, e));
  Outcome o{true, ""};
  for (double alpha : {0.8, 1.2, 1.6}) {
    auto cfg = stable_config(alpha, 1, 0.25, 1e-3, 100000, 303);
    const TruncationRule rule{true, 0.05};
    const auto r = scaling_study(cfg, grid, ScalingQuantity::mean_abs_y_levy, rule, 1000);
    const double target = -1.0 / alpha;
    const bool ok = std::abs(r.fit.slope - target) <= 0.15;
    const std::string part = "alpha=" + g(alpha) + " slope=" + g(r.fit.slope) + " ci=[" + g(r.fit.ci_lo) + "," +
                             g(r.fit.ci_hi) + "] target=" + g(target) + (ok ? " ok" : " FAIL");
    std::cerr << "  " << part << "\n";
    o.pass = o.pass && ok;
    o.detail += (o.detail.empty() ? "" : "; ") + part;
  }
  return o;
}

// 4. Slope of E|Y(t) - Y(t,x)| exceeds that of E|Y(t)| by at least 0.4.
Outcome perturbation_gap() {
  std::vector<double> grid;
  for (int e = -10; e <= -4; ++e) grid.push_back(std::ldexp(1.0, e));
  auto cfg = stable_config(1.5, 2, 0.25, 1e-3, 40000, 404);
  cfg.drift_id = "tanh";
  cfg.ode.method = OdeMethod::heun;
  const TruncationRule rule{true, 0.05};
  const auto diff = scaling_study(cfg, grid, ScalingQuantity::mean_abs_diff, rule, 1000);
  const auto base = scaling_study(cfg, grid, ScalingQuantity::mean_abs_y_levy, rule, 1000);
  const double gap = diff.fit.slope - base.fit.slope;
  Outcome o;
  o.pass = gap >= 0.4;
  o.detail = "slope diff=" + g(diff.fit.slope) + " slope levy=" + g(base.fit.slope) + " gap=" + g(gap) +
             " (>= 0.4, theory 0.75)";
  return o;
}

// 5. |X^eps - X - eps D_k X| shrinks by a factor in [3, 5] per halving.
Outcome pathwise_derivative() {
  auto cfg = stable_config(1.5, 2, 0.25, 1e-2, 100, 505);
  cfg.drift_id = "tanh";
  cfg.ode.min_substeps = 8;
  const std::vector<double> eps{0.01, 0.005, 0.0025};
  const auto rows = pathwise_check(cfg, eps);
  std::uint64_t checked = 0, in_band = 0;
  double lo = 1e300, hi = 0.0;
  std::set<std::uint64_t> paths;
  for (const auto& r : rows) {
    paths.insert(r.path_index);
    for (double q : r.ratios) {
      ++checked;
      lo = std::min(lo, q);
      hi = std::max(hi, q);
      if (q >= 3.0 && q <= 5.0) ++in_band;
    }
  }
  Outcome o;
  o.pass = paths.size() >= 100 && checked > 0 && in_band == checked;
  o.detail = "paths=" + std::to_string(paths.size()) + " ratios=" + std::to_string(checked) +
             " in [3,5]=" + std::to_string(in_band) + " min=" + g(lo) + " max=" + g(hi);
  return o;
}

// 6. Conditional negative-moment oracle against Monte Carlo, and the oracle's
// small-time exponent.
Outcome negative_moments() {
  auto cfg = stable_config(1.5, 1, 0.25, 1e-2, 1000000, 606);
  const auto mc = zv_negative_moment(cfg, 0, 2.0);
  MomentQuery q;
  q.measure = cfg.measures[0];
  q.field = cfg.field;
  q.t = cfg.t;
  q.q = 2.0;
  q.eps_trunc = cfg.eps_trunc;
  const double oracle = negative_moment(q).value;
  const double rel = std::abs(mc.mean - oracle) / oracle;
  const bool mc_ok = rel <= 0.02 && mc.n_valid >= 1000000;

  // Untruncated oracle on a dyadic grid: slope >= -kappa q / alpha - 0.2 and
  // a stable constant in E J^-q <= C t^(-kappa q / rho).
  q.eps_trunc = 0.0;
  const double target = -cfg.field.kappa * q.q / 1.5;
  std::vector<double> ts, vs, zeros;
  double cmin = 1e300, cmax = 0.0, prev = 1e300;
  bool monotone = true;
  // Small-time grid: near t = delta/2 the time cutoff bends the curve.
  for (int e = -12; e <= -4; ++e) {
    q.t = std::ldexp(1.0, e);
    const double v = negative_moment(q).value;
    monotone = monotone && v <= prev;
    prev = v;
    ts.push_back(q.t);
    vs.push_back(v);
    zeros.push_back(0.0);
    const double c = v * std::pow(q.t, -target);
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  const SlopeFit fit = fit_loglog_slope(ts, vs, zeros);
  const bool slope_ok = fit.slope >= target - 0.2 && cmax / cmin <= 2.0 && monotone;
  Outcome o;
  o.pass = mc_ok && slope_ok;
  o.detail = "oracle=" + g(oracle) + " mc=" + g(mc.mean) + " (" + g(mc.stderr) + ") rel=" + g(rel) +
             " valid=" + std::to_string(mc.n_valid) + "; oracle slope=" + g(fit.slope) + " target=" + g(target) +
             " C range ratio=" + g(cmax / cmin) + (monotone ? " nonincreasing" : " NOT monotone");
  return o;
}

// 7. Without drift the general weight reduces to the pure jump weight.
Outcome reduction_identity() {
  const std::vector<LevyMeasure> ms(2, StableMeasure(1.2));
  const FieldParams fp = FieldParams::from(default_stable_params(1.2));
  const ZeroDrift b(2);
  const Vec x0 = Vec::Constant(2, 0.3);
  std::uint64_t checked = 0, invalid = 0;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const JumpPath p = simulate_path(ms, 0.25, 0.01, RngSpec{707, i});
    const FlowState s = evolve_to(b, x0, p, 0.25, fp, ms, OdeOptions{});
    const WeightBundle w = y_general(s);
    if (!w.valid) {
      ++invalid;
      continue;
    }
    ++checked;
    for (int j = 0; j < 2; ++j) {
      const double d = std::abs(w.y_general[j] - w.y_levy[j]) / std::max(1.0, std::abs(w.y_levy[j]));
      worst = std::max(worst, d);
    }
  }
  Outcome o;
  o.pass = checked == 10000 && worst <= 1e-12;
  o.detail = "paths=" + std::to_string(checked) + " invalid=" + std::to_string(invalid) +
             " max |Yg-Y|/max(1,|Y|)=" + g(worst);
  return o;
}

// 8. q_norm / t bounded by one constant for t <= delta, and q_norm <= 1/2.
Outcome invertibility() {
  auto cfg = stable_config(1.5, 2, 0.5, 1e-2, 10000, 808);
  cfg.drift_id = "tanh";
  const auto s = q_norm_study(cfg, {0.0625, 0.125, 0.25, 0.5});
  std::vector<double> ratio;
  double qmax = 0.0;
  for (const auto& x : s) {
    qmax = std::max(qmax, x.q_norm);
    if (x.q_norm > 0.0) ratio.push_back(x.q_norm / x.t);
  }
  std::sort(ratio.begin(), ratio.end());
  const double med = ratio.empty() ? 0.0 : ratio[ratio.size() / 2];
  const double top = ratio.empty() ? 0.0 : ratio.back();
  Outcome o;
  o.pass = !ratio.empty() && top <= 10.0 * med && qmax <= 0.5;
  o.detail = "samples=" + std::to_string(s.size()) + " q/t median=" + g(med) + " max=" + g(top) +
             " max/median=" + g(med > 0 ? top / med : 0.0) + " max q_norm=" + g(qmax);
  return o;
}

// 9. CSV bytes do not depend on the worker count.
std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  using namespace levybel::cli;
  const std::string model = "[model]\ndim : int = 2\nalpha : real = 1.5\ndrift : string = tanh\nx0 : reals = 0.3, -0.2\n";
  const std::string sim = "[simulation]\nt : real = 0.25\neps_trunc : real = 0.02\nn_paths : u64 = 3000\nmin_substeps : int = 1\n";
  const std::string run = "[run]\nseed : u64 = 9\nbatch_size : u64 = 128\n";
  const std::vector<std::pair<std::string, std::string>> configs{
      {"validate-assumptions", run + model},
      {"gradient", run + model + sim},
      {"ibp-check", run + model + sim},
      {"scaling-study", run + model + sim +
                            "[scaling]\ntimes : reals = 0.0625, 0.125, 0.25\nquantity : string = mean_abs_diff\n"
                            "truncation : string = self_similar\ntruncation_value : real = 0.1\n"},
      {"negative-moments", run + model + sim},
      {"pathwise-check", run + model + "[simulation]\nt : real = 0.25\neps_trunc : real = 0.02\nn_paths : u64 = 40\n"},
  };
  const auto root = std::filesystem::temp_directory_path() / ("levybel_acceptance_" + std::to_string(::getpid()));
  std::ostringstream sink;
  std::size_t compared = 0;
  std::string mismatch;
  for (const auto& [kind, text] : configs) {
    std::vector<std::vector<std::string>> bytes;
    for (int workers : {1, 2, 5}) {
      std::istringstream in(text);
      RunOptions opts;
      opts.out_dir = (root / (kind + "_w" + std::to_string(workers))).string();
      opts.workers = workers;
      const auto res = run_experiment(kind, ConfigFile::parse(in, kind), opts, sink);
      std::vector<std::string> csvs;
      for (const auto& a : res.artifacts) {
        if (std::filesystem::path(a).extension() == ".csv") csvs.push_back(read_file(a));
      }
      bytes.push_back(csvs);
    }
    for (std::size_t w = 1; w < bytes.size(); ++w) {
      if (bytes[w] != bytes[0]) mismatch += (mismatch.empty() ? "" : ",") + kind;
    }
    compared += bytes[0].size();
  }
  std::filesystem::remove_all(root);
  Outcome o;
  o.pass = mismatch.empty() && compared >= configs.size();
  o.detail = "experiments=" + std::to_string(configs.size()) + " csv files=" + std::to_string(compared) +
             " workers=1,2,5" + (mismatch.empty() ? " identical" : " differ: " + mismatch);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "IBP identity", ibp_identity},
      {2, "BEL vs finite differences", bel_vs_fd},
      {3, "scaling of E|Y(t)|", y_scaling},
      {4, "perturbation gap", perturbation_gap},
      {5, "pathwise Malliavin derivative", pathwise_derivative},
      {6, "negative-moment oracle", negative_moments},
      {7, "reduction identity", reduction_identity},
      {8, "invertibility safeguard", invertibility},
      {9, "determinism across workers", determinism},
  };
  std::set<int> chosen;
  for (int i = 1; i < argc; ++i) chosen.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!chosen.empty() && !chosen.count(c.id)) continue;
    std::cerr << "criterion " << c.id << ": " << c.name << " ...\n";
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = Outcome{false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ", " << fmt("%.1f", secs)
              << " s): " << o.detail << std::endl;
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
