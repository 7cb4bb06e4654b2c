#include "experiments.hpp"

#include "levybel/moments.hpp"
#include "levybel/version.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace levybel::cli {

namespace fs = std::filesystem;

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"validate-assumptions", "gradient",       "ibp-check",
                                              "scaling-study",        "negative-moments", "pathwise-check"};
  return kinds;
}

const Schema& config_schema() {
  using T = ValueType;
  static const Schema schema{
      {"run", {{"kind", T::string}, {"seed", T::u64}, {"workers", T::integer}, {"batch_size", T::u64}}},
      {"model",
       {{"dim", T::integer},
        {"alpha", T::real},
        {"scale", T::real},
        {"measure_table", T::string},
        {"rho_index", T::real},
        {"delta", T::real},
        {"kappa", T::real},
        {"drift", T::string},
        {"drift_matrix", T::reals},
        {"x0", T::reals}}},
      {"simulation",
       {{"t", T::real},
        {"eps_trunc", T::real},
        {"n_paths", T::u64},
        {"ode_method", T::string},
        {"min_substeps", T::integer},
        {"max_step", T::real},
        {"tolerance", T::real},
        {"q_max", T::real}}},
      {"gradient", {{"payoff", T::string}, {"fd_step", T::real}, {"coupling", T::string}, {"z_max", T::real}}},
      {"ibp", {{"coordinate", T::integer}, {"phi", T::string}, {"z_max", T::real}}},
      {"scaling",
       {{"times", T::reals},
        {"quantity", T::string},
        {"truncation", T::string},
        {"truncation_value", T::real},
        {"target_slope", T::real},
        {"tolerance", T::real},
        {"min_valid", T::u64},
        {"reference_quantity", T::string},
        {"min_gap", T::real}}},
      {"moments",
       {{"coordinate", T::integer},
        {"q", T::real},
        {"rel_tolerance", T::real},
        {"times", T::reals},
        {"slope_slack", T::real},
        {"constant_ratio_max", T::real}}},
      {"pathwise",
       {{"eps_list", T::reals},
        {"ratio_min", T::real},
        {"ratio_max", T::real},
        {"min_paths", T::u64},
        {"noise_floor", T::real}}},
  };
  return schema;
}

namespace {

// -----------------------------------------------------------------------------
// Config -> estimator
// -----------------------------------------------------------------------------

double stable_alpha(const ConfigFile& cfg) { return cfg.get_real("model", "alpha"); }

bool uses_table(const ConfigFile& cfg) { return cfg.has("model", "measure_table"); }

double smallest_time(const ConfigFile& cfg) {
  double t = cfg.get_real("simulation", "t", 0.25);
  for (double s : cfg.get_reals("scaling", "times", std::vector<double>{})) t = std::min(t, s);
  return t;
}

Mat row_major_matrix(const std::vector<double>& v, int d) {
  if (v.size() != static_cast<std::size_t>(d * d)) {
    throw ConfigError("model.drift_matrix needs " + std::to_string(d * d) + " entries (row major)");
  }
  Mat m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = v[static_cast<std::size_t>(r * d + c)];
  return m;
}

OdeMethod ode_method(const std::string& s) {
  if (s == "rk4") return OdeMethod::rk4;
  if (s == "heun") return OdeMethod::heun;
  if (s == "rk45") return OdeMethod::rk45;
  throw ConfigError("simulation.ode_method must be rk4, heun or rk45, not '" + s + "'");
}

int coordinate(const ConfigFile& cfg, const std::string& section, int d) {
  const long long k = cfg.get_int(section, "coordinate", 1);
  if (k < 1 || k > d) throw ConfigError(section + ".coordinate must be in 1.." + std::to_string(d));
  return static_cast<int>(k - 1);
}

// -----------------------------------------------------------------------------
// Output helpers
// -----------------------------------------------------------------------------

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string short_num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

struct Context {
  std::string kind;
  ConfigFile cfg;
  RunOptions opts;
  std::ostream& log;
  RunResult result;
  std::ostringstream summary;

  // The worker count changes wall time only, so it stays out of the config
  // and therefore out of the hash.
  EstimatorConfig estimator() const {
    EstimatorConfig ec = build_estimator_config(cfg);
    if (opts.workers) ec.workers = resolve_workers(*opts.workers);
    return ec;
  }

  std::string stanza() const {
    std::ostringstream os;
    os << "# levybel " << version_string() << "\n";
    os << "# kind=" << kind << " seed=" << cfg.get_u64("run", "seed", 1) << " config_hash=" << cfg.hash_hex() << "\n";
    return os.str();
  }

  // Warns when an artifact from a different configuration is about to be replaced.
  void flag_replay(const fs::path& p) const {
    std::ifstream in(p);
    if (!in) return;
    std::string line;
    while (std::getline(in, line) && line.rfind('#', 0) == 0) {
      const auto pos = line.find("config_hash=");
      if (pos == std::string::npos) continue;
      const std::string old = line.substr(pos + 12);
      if (old != cfg.hash_hex()) {
        log << "warning: " << p.string() << " was produced by a different config (hash " << old
            << "); replacing it\n";
      }
      return;
    }
  }

  void write(const std::string& name, const std::string& body) {
    const fs::path p = fs::path(opts.out_dir) / name;
    flag_replay(p);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    out << body;
    if (!out) throw ConfigError("failed writing '" + p.string() + "'");
    result.artifacts.push_back(p.string());
  }

  void verdict(bool pass) {
    summary << "result: " << (pass ? "PASS" : "FAIL") << "\n";
    result.exit_code = pass ? kPass : kCheckFailed;
  }
};

// -----------------------------------------------------------------------------
// Experiments
// -----------------------------------------------------------------------------

void run_validate_assumptions(Context& c) {
  const EstimatorConfig ec = c.estimator();
  std::ostringstream csv, proxies;
  csv << c.stanza() << "coordinate,check,verdict,value\n";
  proxies << c.stanza() << "coordinate,sequence,scale,value\n";
  bool pass = true;
  for (int j = 0; j < ec.dim(); ++j) {
    if (j > 0 && !uses_table(c.cfg)) break;  // identical coordinates
    const auto rep = check_assumptions(ec.measures[static_cast<std::size_t>(j)], ec.measure_params);
    for (const auto* ic : {&rep.kappa_moment, &rep.score_moment, &rep.shifted_kappa_moment}) {
      csv << j + 1 << ",\"" << ic->name << "\"," << quad::to_string(ic->verdict) << ',' << num(ic->value) << '\n';
      c.summary << ic->name << ": " << quad::to_string(ic->verdict) << " (" << short_num(ic->value) << ")\n";
    }
    csv << j + 1 << ",\"" << rep.small_jump_index.name << "\"," << rep.small_jump_index.verdict << ",\n";
    csv << j + 1 << ",\"" << rep.sharp_scaling.name << "\"," << rep.sharp_scaling.verdict << ",\n";
    csv << j + 1 << ",\"kappa > 1 + rho/2\"," << (rep.kappa_above_stable_threshold ? "holds" : "fails") << ','
        << num(ec.measure_params.kappa) << '\n';
    for (const auto* seq : {&rep.small_jump_index, &rep.sharp_scaling}) {
      for (const auto& [x, v] : seq->points) proxies << j + 1 << ",\"" << seq->name << "\"," << num(x) << ',' << num(v) << '\n';
    }
    c.summary << "small-jump index proxy: " << rep.small_jump_index.verdict << "\n";
    c.summary << "sharp scaling proxy: " << rep.sharp_scaling.verdict << "\n";
    c.summary << "kappa > 1 + rho/2: " << (rep.kappa_above_stable_threshold ? "holds" : "fails") << "\n";
    pass = pass && rep.all_integrals_finite() && rep.kappa_above_stable_threshold &&
           rep.small_jump_index.verdict == "holds" && rep.sharp_scaling.verdict == "bounded";
  }
  c.write("assumptions.csv", csv.str());
  c.write("assumptions_proxies.csv", proxies.str());
  c.verdict(pass);
}

std::string failure_line(const char* label, const GradientEstimate& e) {
  std::ostringstream os;
  os << "# " << label << " n_valid=" << e.n_valid << " n_failed=" << e.n_failed << ' ' << e.failures.describe()
     << (e.bias_flag ? " bias_flag=1" : " bias_flag=0") << "\n";
  return os.str();
}

void run_gradient(Context& c) {
  EstimatorConfig ec = c.estimator();
  ec.payoff_id = c.cfg.get_string("gradient", "payoff", "sin_sum");
  const double h = c.cfg.get_real("gradient", "fd_step", default_fd_step(ec.x0));
  const std::string coupling = c.cfg.get_string("gradient", "coupling", "common");
  if (coupling != "common" && coupling != "independent") {
    throw ConfigError("gradient.coupling must be common or independent");
  }
  const double z_max = c.cfg.get_real("gradient", "z_max", 3.0);
  const auto bel = bel_gradient(ec);
  c.log << "bel: " << bel.wall_seconds << " s\n";
  const auto fd = fd_gradient(ec, h, coupling == "common" ? FdCoupling::common : FdCoupling::independent);
  c.log << "fd: " << fd.wall_seconds << " s\n";

  std::ostringstream csv;
  csv << c.stanza() << failure_line("bel", bel) << failure_line("fd", fd);
  csv << "component,bel_mean,bel_stderr,fd_mean,fd_stderr,z_score\n";
  bool pass = true;
  for (int k = 0; k < ec.dim(); ++k) {
    const double se = std::hypot(bel.stderr[k], fd.stderr[k]);
    const double z = se > 0.0 ? (bel.mean[k] - fd.mean[k]) / se : 0.0;
    csv << k + 1 << ',' << num(bel.mean[k]) << ',' << num(bel.stderr[k]) << ',' << num(fd.mean[k]) << ','
        << num(fd.stderr[k]) << ',' << num(z) << '\n';
    const bool ok = std::abs(z) <= z_max;
    pass = pass && ok;
    c.summary << "component " << k + 1 << ": bel=" << short_num(bel.mean[k]) << " (" << short_num(bel.stderr[k])
              << ") fd=" << short_num(fd.mean[k]) << " (" << short_num(fd.stderr[k]) << ") z=" << short_num(z)
              << " |z|<=" << short_num(z_max) << ' ' << (ok ? "PASS" : "FAIL") << "\n";
  }
  c.summary << "failures: bel " << bel.n_failed << " of " << ec.n_paths << " (" << bel.failures.describe() << ")"
            << (bel.bias_flag ? " bias flag set" : "") << "\n";
  c.write("gradient.csv", csv.str());
  c.verdict(pass);
}

void run_ibp(Context& c) {
  const EstimatorConfig ec = c.estimator();
  const int k = coordinate(c.cfg, "ibp", ec.dim());
  const std::string phi_id = c.cfg.get_string("ibp", "phi", "sin_x1");
  const double z_max = c.cfg.get_real("ibp", "z_max", 3.0);
  const auto r = ibp_check(ec, k, phi_id);
  c.log << "ibp: " << r.wall_seconds << " s\n";
  const double se = r.combined_stderr();
  const double z = se > 0.0 ? (r.left - r.right) / se : 0.0;
  std::ostringstream csv;
  csv << c.stanza() << "coordinate,left,left_stderr,right,right_stderr,combined_stderr,diff_stderr,z_score\n";
  csv << k + 1 << ',' << num(r.left) << ',' << num(r.left_stderr) << ',' << num(r.right) << ','
      << num(r.right_stderr) << ',' << num(se) << ',' << num(r.diff_stderr) << ',' << num(z) << '\n';
  c.write("ibp.csv", csv.str());
  const bool pass = std::abs(z) <= z_max;
  c.summary << "left=" << short_num(r.left) << " (" << short_num(r.left_stderr) << ") right=" << short_num(r.right)
            << " (" << short_num(r.right_stderr) << ") z=" << short_num(z) << " |z|<=" << short_num(z_max) << "\n";
  c.verdict(pass);
}

std::string scaling_csv(const Context& c, const ScalingResult& r) {
  std::ostringstream csv;
  csv << c.stanza() << "t,estimate,stderr,n_valid,n_failed\n";
  for (const auto& p : r.points) {
    csv << num(p.t) << ',' << num(p.estimate) << ',' << num(p.stderr) << ',' << p.n_valid << ',' << p.n_failed << '\n';
  }
  return csv.str();
}

std::string slope_line(const SlopeFit& f, double target) {
  std::ostringstream os;
  os << "slope=" << short_num(f.slope) << " ci=[" << short_num(f.ci_lo) << "," << short_num(f.ci_hi)
     << "] target=" << short_num(target);
  return os.str();
}

void run_scaling(Context& c) {
  EstimatorConfig ec = c.estimator();
  const auto times = c.cfg.get_reals("scaling", "times");
  const ScalingQuantity q = scaling_quantity_from_string(c.cfg.get_string("scaling", "quantity", "mean_abs_y_levy"));
  const std::string trunc = c.cfg.get_string("scaling", "truncation", "fixed");
  if (trunc != "fixed" && trunc != "self_similar") throw ConfigError("scaling.truncation must be fixed or self_similar");
  TruncationRule rule;
  rule.self_similar = trunc == "self_similar";
  rule.value = c.cfg.get_real("scaling", "truncation_value", ec.eps_trunc);
  const std::uint64_t min_valid = c.cfg.get_u64("scaling", "min_valid", 2);
  const double rho = ec.measure_params.rho_index;
  const double target = c.cfg.get_real("scaling", "target_slope", -1.0 / rho);
  const double tol = c.cfg.get_real("scaling", "tolerance", 0.15);

  const auto t0 = std::chrono::steady_clock::now();
  const ScalingResult r = scaling_study(ec, times, q, rule, min_valid);
  c.write("scaling.csv", scaling_csv(c, r));
  c.summary << "quantity=" << to_string(q) << "\n" << slope_line(r.fit, target) << "\n";

  bool pass = false;
  if (c.cfg.has("scaling", "reference_quantity")) {
    const ScalingQuantity ref = scaling_quantity_from_string(c.cfg.get_string("scaling", "reference_quantity"));
    const double min_gap = c.cfg.get_real("scaling", "min_gap", 0.4);
    const ScalingResult rr = scaling_study(ec, times, ref, rule, min_valid);
    c.write("scaling_reference.csv", scaling_csv(c, rr));
    const double gap = r.fit.slope - rr.fit.slope;
    c.summary << "reference quantity=" << to_string(ref) << "\n" << slope_line(rr.fit, target) << "\n";
    c.summary << "gap=" << short_num(gap) << " min_gap=" << short_num(min_gap) << "\n";
    pass = gap >= min_gap;
  } else {
    pass = std::abs(r.fit.slope - target) <= tol;
    c.summary << "|slope - target| <= " << short_num(tol) << "\n";
  }
  c.log << "scaling: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  c.verdict(pass);
}

void run_moments(Context& c) {
  const EstimatorConfig ec = c.estimator();
  const int j = coordinate(c.cfg, "moments", ec.dim());
  const double q = c.cfg.get_real("moments", "q", 2.0);
  const double rel_tol = c.cfg.get_real("moments", "rel_tolerance", 0.02);

  MomentQuery mq;
  mq.measure = ec.measures[static_cast<std::size_t>(j)];
  mq.field = ec.field;
  mq.t = ec.t;
  mq.q = q;
  mq.eps_trunc = ec.eps_trunc;
  const NegativeMoment oracle = negative_moment(mq);
  const MomentSample mc = zv_negative_moment(ec, j, q);
  if (mc.n_valid == 0) throw Error("no valid paths for the Monte Carlo moment");
  const double rel = std::abs(mc.mean - oracle.value) / oracle.value;

  std::ostringstream csv;
  csv << c.stanza() << "t,oracle,prob_positive,mc_mean,mc_stderr,n_valid,n_failed,rel_diff\n";
  csv << num(ec.t) << ',' << num(oracle.value) << ',' << num(oracle.prob_positive) << ',' << num(mc.mean) << ','
      << num(mc.stderr) << ',' << mc.n_valid << ',' << mc.n_failed << ',' << num(rel) << '\n';
  c.write("moments.csv", csv.str());
  bool pass = rel <= rel_tol;
  c.summary << "oracle=" << short_num(oracle.value) << " mc=" << short_num(mc.mean) << " (" << short_num(mc.stderr)
            << ") rel_diff=" << short_num(rel) << " tol=" << short_num(rel_tol) << ' ' << (pass ? "PASS" : "FAIL")
            << "\n";

  const auto times = c.cfg.get_reals("moments", "times", std::vector<double>{});
  if (!times.empty()) {
    // Oracle scaling in t for the untruncated stable measure.
    if (!std::holds_alternative<StableMeasure>(mq.measure)) {
      throw ConfigError("moments.times needs a stable measure (untruncated oracle)");
    }
    const double slack = c.cfg.get_real("moments", "slope_slack", 0.2);
    const double ratio_max = c.cfg.get_real("moments", "constant_ratio_max", 2.0);
    const double target = -ec.field.kappa * q / ec.measure_params.rho_index;
    MomentQuery u = mq;
    u.eps_trunc = 0.0;
    std::vector<double> vals, zeros;
    std::ostringstream sc;
    sc << c.stanza() << "t,oracle,constant\n";
    double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
    for (double t : times) {
      u.t = t;
      const double v = negative_moment(u).value;
      const double cst = v * std::pow(t, -target);
      cmin = std::min(cmin, cst);
      cmax = std::max(cmax, cst);
      vals.push_back(v);
      zeros.push_back(0.0);
      sc << num(t) << ',' << num(v) << ',' << num(cst) << '\n';
    }
    c.write("moments_scaling.csv", sc.str());
    const SlopeFit fit = fit_loglog_slope(times, vals, zeros);
    const bool slope_ok = fit.slope >= target - slack;
    const bool const_ok = cmax / cmin <= ratio_max;
    c.summary << slope_line(fit, target) << " slack=" << short_num(slack) << ' ' << (slope_ok ? "PASS" : "FAIL")
              << "\n";
    c.summary << "constant range=[" << short_num(cmin) << "," << short_num(cmax) << "] ratio<=" << short_num(ratio_max)
              << ' ' << (const_ok ? "PASS" : "FAIL") << "\n";
    pass = pass && slope_ok && const_ok;
  }
  c.verdict(pass);
}

void run_pathwise(Context& c) {
  const EstimatorConfig ec = c.estimator();
  const auto eps = c.cfg.get_reals("pathwise", "eps_list", std::vector<double>{0.01, 0.005, 0.0025});
  const double lo = c.cfg.get_real("pathwise", "ratio_min", 3.0);
  const double hi = c.cfg.get_real("pathwise", "ratio_max", 5.0);
  const std::uint64_t min_paths = c.cfg.get_u64("pathwise", "min_paths", 100);
  const double floor = c.cfg.get_real("pathwise", "noise_floor", 0.0);
  if (eps.size() < 2) throw ConfigError("pathwise.eps_list needs at least two values");
  const auto rows = pathwise_check(ec, eps);

  std::ostringstream csv;
  csv << c.stanza() << "path,coordinate,eps,residual,ratio\n";
  std::uint64_t checked = 0, in_band = 0, below_floor = 0;
  std::vector<double> all;
  for (const auto& r : rows) {
    for (std::size_t e = 0; e < eps.size(); ++e) {
      csv << r.path_index << ',' << r.k + 1 << ',' << num(eps[e]) << ',' << num(r.residuals[e]) << ','
          << (e == 0 ? std::string() : num(r.ratios[e - 1])) << '\n';
    }
    for (std::size_t e = 0; e < r.ratios.size(); ++e) {
      if (r.residuals[e + 1] <= floor) {
        ++below_floor;
        continue;
      }
      ++checked;
      all.push_back(r.ratios[e]);
      if (r.ratios[e] >= lo && r.ratios[e] <= hi) ++in_band;
    }
  }
  c.write("pathwise.csv", csv.str());
  std::sort(all.begin(), all.end());
  const double median = all.empty() ? 0.0 : all[all.size() / 2];
  const bool pass = ec.n_paths >= min_paths && checked > 0 && in_band == checked;
  c.summary << "paths=" << ec.n_paths << " ratios checked=" << checked << " in [" << short_num(lo) << ","
            << short_num(hi) << "]=" << in_band << " below noise floor=" << below_floor
            << " median=" << short_num(median);
  if (!all.empty()) c.summary << " min=" << short_num(all.front()) << " max=" << short_num(all.back());
  c.summary << "\n";
  c.verdict(pass);
}

}  // namespace

EstimatorConfig build_estimator_config(const ConfigFile& cfg) {
  EstimatorConfig ec;
  const long long d = cfg.get_int("model", "dim", 1);
  if (d < 1 || d > kMaxDim) throw ConfigError("model.dim must be in 1.." + std::to_string(kMaxDim));
  const int dim = static_cast<int>(d);
  const double delta = cfg.get_real("model", "delta", 0.5);

  if (uses_table(cfg)) {
    if (cfg.has("model", "alpha")) throw ConfigError("model: give either alpha or measure_table, not both");
    const TabulatedMeasure t = load_measure_table(cfg.get_string("model", "measure_table"));
    ec.measures.assign(static_cast<std::size_t>(dim), t);
    ec.measure_params.rho_index = cfg.get_real("model", "rho_index");
    ec.measure_params.kappa = cfg.get_real("model", "kappa");
  } else {
    const double alpha = stable_alpha(cfg);
    const double scale = cfg.get_real("model", "scale", 1.0);
    ec.measures.assign(static_cast<std::size_t>(dim), StableMeasure(alpha, scale));
    ec.measure_params.rho_index = cfg.get_real("model", "rho_index", alpha);
    ec.measure_params.kappa = cfg.get_real("model", "kappa", default_kappa(alpha));
  }
  ec.measure_params.delta = delta;
  ec.field = FieldParams::from(ec.measure_params);

  ec.drift_id = cfg.get_string("model", "drift", "zero");
  if (cfg.has("model", "drift_matrix")) ec.drift_matrix = row_major_matrix(cfg.get_reals("model", "drift_matrix"), dim);
  const auto x0 = cfg.get_reals("model", "x0", std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  ec.x0 = Vec::Zero(dim);
  if (x0.size() != static_cast<std::size_t>(dim)) throw ConfigError("model.x0 needs " + std::to_string(dim) + " entries");
  for (int i = 0; i < dim; ++i) ec.x0[i] = x0[static_cast<std::size_t>(i)];

  ec.t = cfg.get_real("simulation", "t", 0.25);
  ec.eps_trunc = cfg.has("simulation", "eps_trunc")
                     ? cfg.get_real("simulation", "eps_trunc")
                     : default_eps_trunc(ec.measure_params.rho_index, delta, smallest_time(cfg));
  ec.n_paths = cfg.get_u64("simulation", "n_paths", 10000);
  ec.q_max = cfg.get_real("simulation", "q_max", 0.5);
  ec.ode.method = ode_method(cfg.get_string("simulation", "ode_method", "rk4"));
  ec.ode.min_substeps = static_cast<int>(cfg.get_int("simulation", "min_substeps", 8));
  ec.ode.max_step = cfg.get_real("simulation", "max_step", 0.0);
  ec.ode.tolerance = cfg.get_real("simulation", "tolerance", 1e-10);

  ec.master_seed = cfg.get_u64("run", "seed", 1);
  ec.batch_size = cfg.get_u64("run", "batch_size", 1024);
  const long long w = cfg.get_int("run", "workers", 1);
  if (w < 1) throw ConfigError("run.workers must be positive");
  ec.workers = resolve_workers(static_cast<int>(w));
  ec.validate();
  return ec;
}

RunResult run_experiment(const std::string& kind, ConfigFile cfg, const RunOptions& opts, std::ostream& log) {
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw ConfigError("unknown experiment '" + kind + "'");
  cfg.check(config_schema());
  if (cfg.has("run", "kind") && cfg.get_string("run", "kind") != kind) {
    throw ConfigError("config is for '" + cfg.get_string("run", "kind") + "', not '" + kind + "'");
  }
  if (opts.seed) cfg.set("run", "seed", ValueType::u64, std::to_string(*opts.seed));
  if (opts.workers && *opts.workers < 1) throw ConfigError("--workers must be positive");

  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + opts.out_dir + "': " + ec.message());

  Context c{kind, cfg, opts, log, {}, {}};
  c.summary << c.stanza();
  if (kind == "validate-assumptions") run_validate_assumptions(c);
  if (kind == "gradient") run_gradient(c);
  if (kind == "ibp-check") run_ibp(c);
  if (kind == "scaling-study") run_scaling(c);
  if (kind == "negative-moments") run_moments(c);
  if (kind == "pathwise-check") run_pathwise(c);
  c.result.summary = c.summary.str();
  c.write(kind + "_summary.txt", c.result.summary);
  return c.result;
}

int run_guarded(const std::string& kind, const std::string& config_path, const RunOptions& opts, std::ostream& out,
                std::ostream& err) {
  try {
    const ConfigFile cfg = ConfigFile::load(config_path);
    const RunResult r = run_experiment(kind, cfg, opts, err);
    out << r.summary;
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const UnsupportedMeasureError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  }
}

}  // namespace levybel::cli
