#include "levybel/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <sstream>

namespace levybel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_domain(double xi, double delta, const char* what) {
  if (!(xi != 0.0) || !(std::abs(xi) < delta)) {
    throw DomainError(std::string(what) + ": xi = " + std::to_string(xi) +
                      " outside (-delta, delta) \\ {0} with delta = " + std::to_string(delta));
  }
}

// Magnitude r >= eps on one side with side_tail(r) = (1 - u) side_tail(eps).
double invert_side_tail(const std::function<double(double)>& side_tail, double eps, double u) {
  const double total = side_tail(eps);
  if (!(total > 0.0)) throw UnsupportedMeasureError("cannot sample: zero tail mass above eps_trunc");
  const double target = (1.0 - u) * total;
  if (target >= total) return eps;
  double lo = eps;
  double hi = 2.0 * eps;
  while (side_tail(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw UnsupportedMeasureError("tail inversion did not bracket the quantile");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (side_tail(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

StableMeasure::StableMeasure(double alpha, double scale) : alpha_(alpha), scale_(scale) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw ConfigError("stable measure needs 0 < alpha < 2, got " + std::to_string(alpha));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("stable measure needs scale > 0, got " + std::to_string(scale));
  }
}

void MeasureParams::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be positive");
  if (!(kappa > 1.0) || !std::isfinite(kappa)) throw ConfigError("kappa must exceed 1");
  if (!(rho_index > 0.0) || !std::isfinite(rho_index)) throw ConfigError("rho_index must be positive");
}

double default_kappa(double alpha) { return 1.0 + 0.75 * alpha; }

double default_eps_trunc(double alpha, double delta, double t_min) {
  return std::min(1e-4, 0.5 * delta * std::pow(t_min, 2.0 / alpha));
}

MeasureParams default_stable_params(double alpha, double delta) {
  return MeasureParams{delta, default_kappa(alpha), alpha};
}

bool is_symmetric(const LevyMeasure& m) {
  return std::visit(overloaded{[](const StableMeasure&) { return true; },
                               [](const TabulatedMeasure& t) { return t.symmetric; }},
                    m);
}

std::optional<double> compensator_drift(const LevyMeasure& m) {
  return std::visit(overloaded{[](const StableMeasure&) { return std::optional<double>(0.0); },
                               [](const TabulatedMeasure& t) {
                                 return t.symmetric ? std::optional<double>(0.0) : t.compensator_drift;
                               }},
                    m);
}

std::string describe(const LevyMeasure& m) {
  return std::visit(overloaded{[](const StableMeasure& s) {
                                 std::ostringstream os;
                                 os << "stable(alpha=" << s.alpha() << ", scale=" << s.scale() << ")";
                                 return os.str();
                               },
                               [](const TabulatedMeasure& t) {
                                 return std::string(t.symmetric ? "tabulated(symmetric)"
                                                                : "tabulated(asymmetric)");
                               }},
                    m);
}

double density(const LevyMeasure& m, double xi, double delta) {
  require_domain(xi, delta, "density");
  return std::visit(
      overloaded{[xi](const StableMeasure& s) { return s.scale() * std::pow(std::abs(xi), -1.0 - s.alpha()); },
                 [xi](const TabulatedMeasure& t) { return t.density(xi); }},
      m);
}

double log_density_derivative(const LevyMeasure& m, double xi, double delta) {
  require_domain(xi, delta, "log_density_derivative");
  return std::visit(overloaded{[xi](const StableMeasure& s) { return -(1.0 + s.alpha()) / xi; },
                               [xi](const TabulatedMeasure& t) { return t.log_deriv(xi); }},
                    m);
}

double tail_mass(const LevyMeasure& m, double eps) {
  if (!(eps > 0.0)) throw DomainError("tail_mass needs eps > 0");
  return std::visit(
      overloaded{[eps](const StableMeasure& s) { return 2.0 * s.scale() * std::pow(eps, -s.alpha()) / s.alpha(); },
                 [eps](const TabulatedMeasure& t) { return t.tail_cdf(eps); }},
      m);
}

double side_tail_mass(const LevyMeasure& m, double eps, int sign) {
  if (!(eps > 0.0)) throw DomainError("side_tail_mass needs eps > 0");
  return std::visit(overloaded{[eps](const StableMeasure& s) {
                                 return s.scale() * std::pow(eps, -s.alpha()) / s.alpha();
                               },
                               [eps, sign](const TabulatedMeasure& t) {
                                 if (t.symmetric) return 0.5 * t.tail_cdf(eps);
                                 if (!t.positive_tail) {
                                   throw UnsupportedMeasureError(
                                       "asymmetric tabulated measure without positive_tail");
                                 }
                                 const double pos = t.positive_tail(eps);
                                 return sign > 0 ? pos : t.tail_cdf(eps) - pos;
                               }},
                    m);
}

double sample_jump_size(const LevyMeasure& m, double eps_trunc, double u, double sign_draw) {
  if (!(eps_trunc > 0.0)) throw DomainError("sample_jump_size needs eps_trunc > 0");
  return std::visit(
      overloaded{
          [&](const StableMeasure& s) {
            const double r = eps_trunc * std::exp(-std::log(1.0 - u) * (1.0 / s.alpha()));
            return sign_draw < 0.5 ? r : -r;
          },
          [&](const TabulatedMeasure& t) {
            if (!t.tail_cdf) throw UnsupportedMeasureError("tabulated measure has no tail function");
            if (t.symmetric) {
              const double r = t.magnitude_sampler
                                   ? t.magnitude_sampler(eps_trunc, u)
                                   : invert_side_tail([&t](double x) { return t.tail_cdf(x); }, eps_trunc, u);
              return sign_draw < 0.5 ? r : -r;
            }
            if (!t.positive_tail) {
              throw UnsupportedMeasureError("asymmetric tabulated measure without positive_tail");
            }
            const double total = t.tail_cdf(eps_trunc);
            const double p_plus = t.positive_tail(eps_trunc) / total;
            if (sign_draw < p_plus) {
              return invert_side_tail([&t](double x) { return t.positive_tail(x); }, eps_trunc, u);
            }
            return -invert_side_tail([&t](double x) { return t.tail_cdf(x) - t.positive_tail(x); },
                                     eps_trunc, u);
          }},
      m);
}

double dropped_jump_variance(const LevyMeasure& m, double eps, double delta) {
  if (!(eps > 0.0)) return 0.0;
  if (const auto* s = std::get_if<StableMeasure>(&m)) {
    return 2.0 * s->scale() * std::pow(eps, 2.0 - s->alpha()) / (2.0 - s->alpha());
  }
  if (eps > delta) throw DomainError("dropped_jump_variance needs eps <= delta for tabulated measures");
  const double top = std::min(eps, delta * (1.0 - 1e-12));
  auto f = [&](double r) { return r * r * (density(m, r, delta) + density(m, -r, delta)); };
  return quad::integrate_to_zero(f, top).value;
}

// -----------------------------------------------------------------------------
// Assumption checks
// -----------------------------------------------------------------------------

bool AssumptionReport::all_integrals_finite() const {
  return kappa_moment.verdict == quad::Convergence::finite &&
         score_moment.verdict == quad::Convergence::finite &&
         shifted_kappa_moment.verdict == quad::Convergence::finite;
}

namespace {

IntegralCheck symmetric_integral(const std::string& name, const std::function<double(double)>& f,
                                 double delta) {
  auto both = [&f](double r) { return f(r) + f(-r); };
  const auto res = quad::integrate_to_zero(both, delta);
  return IntegralCheck{name, res.verdict, res.value};
}

std::string classify_lower_bounded(const std::vector<std::pair<double, double>>& pts) {
  const std::size_t n = pts.size();
  const double mid = pts[n / 2].second;
  const double last = pts.back().second;
  if (std::isinf(last) && last > 0) return "holds";
  if (!(mid > 0.0)) return "inconclusive";
  if (last >= 0.5 * mid) return "holds";
  if (last < 0.1 * mid) return "fails";
  return "inconclusive";
}

std::string classify_upper_bounded(const std::vector<std::pair<double, double>>& pts) {
  const std::size_t n = pts.size();
  double early_max = 0.0;
  for (std::size_t i = 0; i < n / 2; ++i) early_max = std::max(early_max, pts[i].second);
  const double mid = pts[n / 2].second;
  const double last = pts.back().second;
  if (!std::isfinite(last)) return "unbounded";
  if (last <= 2.0 * early_max) return "bounded";
  if (mid > 0.0 && last > 10.0 * mid) return "unbounded";
  return "inconclusive";
}

}  // namespace

AssumptionReport check_assumptions(const LevyMeasure& m, const MeasureParams& params) {
  params.validate();
  const double delta = params.delta;
  const double kappa = params.kappa;
  const double rho = params.rho_index;

  auto dens = [&](double xi) { return density(m, xi, delta); };
  auto score = [&](double xi) { return log_density_derivative(m, xi, delta); };

  AssumptionReport rep;
  rep.kappa_moment = symmetric_integral(
      "int |xi|^kappa rho", [&](double xi) { return std::pow(std::abs(xi), kappa) * dens(xi); }, delta);
  rep.score_moment = symmetric_integral(
      "int |xi|^(2kappa) (rho'/rho)^2 rho",
      [&](double xi) {
        const double s = score(xi);
        return std::pow(std::abs(xi), 2.0 * kappa) * s * s * dens(xi);
      },
      delta);
  rep.shifted_kappa_moment = symmetric_integral(
      "int |xi|^(2kappa-2) rho", [&](double xi) { return std::pow(std::abs(xi), 2.0 * kappa - 2.0) * dens(xi); },
      delta);

  rep.small_jump_index.name = "eps^rho * m{|xi| >= eps} (proxy for the liminf as eps -> 0)";
  for (int k = 1; k <= 40; ++k) {
    const double eps = delta * std::ldexp(1.0, -k);
    rep.small_jump_index.points.emplace_back(eps, std::pow(eps, rho) * tail_mass(m, eps));
  }
  rep.small_jump_index.verdict = classify_lower_bounded(rep.small_jump_index.points);

  rep.sharp_scaling.name =
      "r^((2-2kappa)/rho+1) * int_{-r}^{r} [|xi|^(2kappa)(rho'/rho)^2 + |xi|^(2kappa-2)] rho (proxy for the limsup)";
  auto inner = [&](double r) {
    const double s = score(r);
    const double s_neg = score(-r);
    const double a = std::pow(r, 2.0 * kappa);
    const double b = std::pow(r, 2.0 * kappa - 2.0);
    return (a * s * s + b) * dens(r) + (a * s_neg * s_neg + b) * dens(-r);
  };
  const double expo = (2.0 - 2.0 * kappa) / rho + 1.0;
  for (int k = 1; k <= 30; ++k) {
    const double r = delta * std::ldexp(1.0, -k);
    const auto integral = quad::integrate_to_zero(inner, r);
    const double v = integral.verdict == quad::Convergence::finite
                         ? std::pow(r, expo) * integral.value
                         : std::numeric_limits<double>::infinity();
    rep.sharp_scaling.points.emplace_back(r, v);
  }
  rep.sharp_scaling.verdict = classify_upper_bounded(rep.sharp_scaling.points);
  rep.kappa_above_stable_threshold = kappa > 1.0 + 0.5 * rho;
  return rep;
}

// -----------------------------------------------------------------------------
// Table loader
// -----------------------------------------------------------------------------

namespace {

// One side (xi > 0 or mirrored xi < 0) of a tabulated density, interpolated in
// log-log coordinates.
struct SideTable {
  std::vector<double> logr;   // strictly increasing
  std::vector<double> logrho;
  std::vector<double> slope;  // d log rho / d log |xi| = xi rho' / rho
  std::vector<double> upper_mass;  // upper_mass[i] = int_{r_i}^{r_max} rho

  bool empty() const { return logr.empty(); }
  double r_min() const { return std::exp(logr.front()); }
  double r_max() const { return std::exp(logr.back()); }

  // Returns (log rho, d log rho / d log r) at x = log r.
  std::pair<double, double> eval(double x) const {
    if (x <= logr.front()) {
      return {logrho.front() + slope.front() * (x - logr.front()), slope.front()};
    }
    const auto it = std::upper_bound(logr.begin(), logr.end(), x);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - logr.begin()) - 1, logr.size() - 2);
    const double h = logr[i + 1] - logr[i];
    const double t = (x - logr[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    const double y0 = logrho[i], y1 = logrho[i + 1];
    const double s0 = slope[i], s1 = slope[i + 1];
    const double y = h00 * y0 + h10 * h * s0 + h01 * y1 + h11 * h * s1;
    const double dh00 = 6 * t2 - 6 * t;
    const double dh10 = 3 * t2 - 4 * t + 1;
    const double dh01 = -6 * t2 + 6 * t;
    const double dh11 = 3 * t2 - 2 * t;
    const double dy = (dh00 * y0 + dh10 * h * s0 + dh01 * y1 + dh11 * h * s1) / h;
    return {y, dy};
  }

  double density(double r) const {
    if (r > r_max()) return 0.0;
    return std::exp(eval(std::log(r)).first);
  }

  // d log rho / d|xi|.
  double score(double r) const {
    if (r > r_max()) return 0.0;
    return eval(std::log(r)).second / r;
  }

  void build_masses() {
    const std::size_t n = logr.size();
    upper_mass.assign(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) {
      const double a = std::exp(logr[i]);
      const double b = std::exp(logr[i + 1]);
      upper_mass[i] = upper_mass[i + 1] + quad::integrate([this](double r) { return density(r); }, a, b, 1e-13);
    }
  }

  double tail(double eps) const {
    if (empty()) return 0.0;
    const double rmax = r_max();
    if (eps >= rmax) return 0.0;
    const double r0 = r_min();
    if (eps < r0) {
      // Power-law extension c r^s below the first node.
      const double s = slope.front();
      const double c = std::exp(logrho.front()) / std::pow(r0, s);
      const double extra = (std::abs(s + 1.0) < 1e-14) ? c * std::log(r0 / eps)
                                                       : c * (std::pow(r0, s + 1.0) - std::pow(eps, s + 1.0)) / (s + 1.0);
      return upper_mass.front() + extra;
    }
    const auto it = std::upper_bound(logr.begin(), logr.end(), std::log(eps));
    const std::size_t i = static_cast<std::size_t>(it - logr.begin());  // first node above eps
    const double b = std::exp(logr[i]);
    return upper_mass[i] + quad::integrate([this](double r) { return density(r); }, eps, b, 1e-13);
  }
};

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("measure table: expected a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

TabulatedMeasure parse_measure_table(std::istream& in) {
  bool symmetric = true;
  std::optional<double> drift;
  bool saw_magic = false;
  bool saw_columns = false;
  std::vector<std::array<double, 3>> rows;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string body = trim(t.substr(1));
      if (body.rfind("levybel-measure-table", 0) == 0) {
        saw_magic = true;
        continue;
      }
      const auto colon = body.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = trim(body.substr(0, colon));
      const std::string val = trim(body.substr(colon + 1));
      if (key == "symmetric") {
        symmetric = parse_bool(val);
      } else if (key == "compensator_drift") {
        drift = std::stod(val);
      } else {
        throw ConfigError("measure table line " + std::to_string(lineno) + ": unknown metadata key '" + key + "'");
      }
      continue;
    }
    std::string normalized = t;
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    std::istringstream fields(normalized);
    if (!saw_columns) {
      std::string a, b, c;
      fields >> a >> b >> c;
      if (a != "xi" || b != "rho" || c != "rho_prime") {
        throw ConfigError("measure table: expected column header 'xi rho rho_prime'");
      }
      saw_columns = true;
      continue;
    }
    std::array<double, 3> row{};
    if (!(fields >> row[0] >> row[1] >> row[2])) {
      throw ConfigError("measure table line " + std::to_string(lineno) + ": expected three numbers");
    }
    if (row[0] == 0.0 || !(row[1] > 0.0) || !std::isfinite(row[2])) {
      throw ConfigError("measure table line " + std::to_string(lineno) + ": need xi != 0, rho > 0, finite rho'");
    }
    if (!rows.empty() && !(row[0] > rows.back()[0])) {
      throw ConfigError("measure table: xi must be strictly increasing");
    }
    rows.push_back(row);
  }
  if (!saw_magic) throw ConfigError("measure table: missing '# levybel-measure-table v1' header");
  if (!saw_columns) throw ConfigError("measure table: missing column header");

  auto pos = std::make_shared<SideTable>();
  auto neg = std::make_shared<SideTable>();
  std::vector<std::array<double, 3>> negrows;
  for (const auto& r : rows) {
    if (r[0] > 0) {
      pos->logr.push_back(std::log(r[0]));
      pos->logrho.push_back(std::log(r[1]));
      pos->slope.push_back(r[0] * r[2] / r[1]);
    } else {
      negrows.push_back(r);
    }
  }
  // Negative side stored by increasing |xi|.
  for (auto it = negrows.rbegin(); it != negrows.rend(); ++it) {
    const auto& r = *it;
    neg->logr.push_back(std::log(-r[0]));
    neg->logrho.push_back(std::log(r[1]));
    neg->slope.push_back(r[0] * r[2] / r[1]);
  }
  if (symmetric) {
    if (pos->logr.size() < 2) throw ConfigError("symmetric measure table needs at least two rows with xi > 0");
    if (!neg->empty()) {
      // Both sides given: they must agree at the tabulated nodes.
      for (std::size_t i = 0; i < neg->logr.size(); ++i) {
        const double r = std::exp(neg->logr[i]);
        const double ref = pos->density(r);
        if (std::abs(std::exp(neg->logrho[i]) - ref) > 1e-9 * ref) {
          throw ConfigError("measure table flagged symmetric but rho(-xi) != rho(xi)");
        }
      }
    }
    neg = pos;
  } else {
    if (pos->logr.size() < 2 || neg->logr.size() < 2) {
      throw ConfigError("asymmetric measure table needs at least two rows on each side");
    }
  }
  pos->build_masses();
  if (neg != pos) neg->build_masses();

  TabulatedMeasure m;
  m.symmetric = symmetric;
  m.compensator_drift = drift;
  m.density = [pos, neg](double xi) { return xi > 0 ? pos->density(xi) : neg->density(-xi); };
  m.log_deriv = [pos, neg](double xi) { return xi > 0 ? pos->score(xi) : -neg->score(-xi); };
  m.tail_cdf = [pos, neg](double eps) { return pos->tail(eps) + neg->tail(eps); };
  m.positive_tail = [pos](double eps) { return pos->tail(eps); };
  return m;
}

TabulatedMeasure load_measure_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open measure table '" + path + "'");
  return parse_measure_table(in);
}

}  // namespace levybel
