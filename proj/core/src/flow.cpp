#include "levybel/flow.hpp"

#include "levybel/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace levybel {

namespace {

constexpr int kMaxState = kMaxDim + 3 * kMaxDim * kMaxDim + kMaxDim * kMaxDim * kMaxDim;
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxState, 1>;
using MapMat = Eigen::Map<Eigen::MatrixXd>;
using CMapMat = Eigen::Map<const Eigen::MatrixXd>;

// Flat layout of the ODE state: [X | J | Jinv | DX | DJ_0 .. DJ_{d-1}],
// matrices column-major. `full == false` keeps only X.
struct Layout {
  int d = 1;
  bool full = true;

  int d2() const { return d * d; }
  int size() const { return full ? d + 3 * d2() + d * d2() : d; }
  int off_J() const { return d; }
  int off_Jinv() const { return d + d2(); }
  int off_DX() const { return d + 2 * d2(); }
  int off_DJ(int k) const { return d + 3 * d2() + k * d2(); }

  Mat get(const StateVec& y, int off) const { return CMapMat(y.data() + off, d, d); }
  MapMat ref(StateVec& y, int off) const { return MapMat(y.data() + off, d, d); }
};

// C (+)= sign * A B for column-major d x d blocks. Plain loops beat the
// generic dynamic-size product at these sizes (d <= 8).
inline void small_matmul(int d, const double* A, const double* B, double* C, double sign, bool accumulate) {
  for (int c = 0; c < d; ++c) {
    double* cc = C + c * d;
    if (!accumulate) std::fill(cc, cc + d, 0.0);
    for (int k = 0; k < d; ++k) {
      const double bkc = sign * B[c * d + k];
      const double* ak = A + k * d;
      for (int r = 0; r < d; ++r) cc[r] += ak[r] * bkc;
    }
  }
}

class Rhs {
 public:
  Rhs(const DriftModel& drift, const Layout& layout, const Vec& drift_correction)
      : b_(drift), L_(layout), c_(drift_correction) {}

  void operator()(const StateVec& y, StateVec& dy) const {
    const int d = L_.d;
    dy.resize(y.size());
    const Vec X = y.head(d);
    if (!L_.full) {
      dy.head(d) = b_.value(X) + c_;
      return;
    }
    const Mat DX = L_.get(y, L_.off_DX());
    Vec value;
    Mat G;
    std::array<Mat, kMaxDim> H;
    b_.linearize(X, DX, value, G, H.data());
    dy.head(d) = value + c_;
    const double* g = G.data();
    const double* J = y.data() + L_.off_J();
    const double* Jinv = y.data() + L_.off_Jinv();
    double* out = dy.data();
    small_matmul(d, g, J, out + L_.off_J(), 1.0, false);
    small_matmul(d, Jinv, g, out + L_.off_Jinv(), -1.0, false);
    small_matmul(d, g, y.data() + L_.off_DX(), out + L_.off_DX(), 1.0, false);
    for (int k = 0; k < d; ++k) {
      double* dst = out + L_.off_DJ(k);
      small_matmul(d, H[static_cast<std::size_t>(k)].data(), J, dst, 1.0, false);
      small_matmul(d, g, y.data() + L_.off_DJ(k), dst, 1.0, true);
    }
  }

 private:
  const DriftModel& b_;
  Layout L_;
  Vec c_;
};

void rk4_step(const Rhs& f, StateVec& y, double h) {
  StateVec k1, k2, k3, k4, tmp;
  f(y, k1);
  tmp = y + (0.5 * h) * k1;
  f(tmp, k2);
  tmp = y + (0.5 * h) * k2;
  f(tmp, k3);
  tmp = y + h * k3;
  f(tmp, k4);
  y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void heun_step(const Rhs& f, StateVec& y, double h) {
  StateVec k1, k2, tmp;
  f(y, k1);
  tmp = y + h * k1;
  f(tmp, k2);
  y += (0.5 * h) * (k1 + k2);
}

// Dormand-Prince 5(4) over [a, b].
void rk45_integrate(const Rhs& f, StateVec& y, double a, double b, const OdeOptions& opts, double max_step) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2;
  (void)c3;
  (void)c4;
  (void)c5;

  double t = a;
  double h = std::min(max_step, b - a);
  StateVec k1, k2, k3, k4, k5, k6, k7, tmp, y5, err;
  f(y, k1);
  while (t < b) {
    if (t + h > b) h = b - t;
    if (h <= 1e-14 * std::max(1.0, std::abs(b))) {
      throw IntegrationError("adaptive step size underflow at t = " + std::to_string(t));
    }
    tmp = y + h * (a21 * k1);
    f(tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    f(tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(tmp, k6);
    y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(y5, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale_err =
        (err.array().abs() / (opts.tolerance * (1.0 + y.array().abs().max(y5.array().abs())))).maxCoeff();
    if (!std::isfinite(scale_err)) throw NonFiniteStateError("non-finite state during adaptive integration");
    if (scale_err <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;
    }
    const double factor = scale_err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(scale_err, -0.2), 0.2, 5.0);
    h = std::min(max_step, h * factor);
  }
}

class Integrator {
 public:
  Integrator(const DriftModel& drift, const JumpPath& path, const Layout& layout, const OdeOptions& opts)
      : drift_(drift),
        layout_(layout),
        opts_(opts),
        correction_(Vec::Zero(layout.d)),
        rhs_(drift, layout, make_correction(path, layout.d)) {
    opts_.validate();
    correction_ = make_correction(path, layout.d);
    max_step_ = opts_.max_step > 0.0 ? opts_.max_step : path.horizon / 64.0;
  }

  void advance(StateVec& y, double a, double b) const {
    if (!(b > a)) return;
    if (drift_.is_zero()) {
      y.head(layout_.d) += (b - a) * correction_;
      return;
    }
    if (opts_.method != OdeMethod::rk45) {
      const int n = std::max(opts_.min_substeps, static_cast<int>(std::ceil((b - a) / max_step_)));
      const double h = (b - a) / n;
      if (opts_.method == OdeMethod::rk4) {
        for (int i = 0; i < n; ++i) rk4_step(rhs_, y, h);
      } else {
        for (int i = 0; i < n; ++i) heun_step(rhs_, y, h);
      }
    } else {
      rk45_integrate(rhs_, y, a, b, opts_, max_step_);
    }
    if (!y.allFinite()) {
      throw NonFiniteStateError("non-finite flow state after integrating to t = " + std::to_string(b));
    }
  }

 private:
  static Vec make_correction(const JumpPath& path, int d) {
    Vec c = Vec::Zero(d);
    for (int j = 0; j < d && j < static_cast<int>(path.drift_correction.size()); ++j) {
      c[j] = path.drift_correction[static_cast<std::size_t>(j)];
    }
    return c;
  }

  const DriftModel& drift_;
  Layout layout_;
  OdeOptions opts_;
  Vec correction_;
  Rhs rhs_;
  double max_step_ = 0.0;
};

void check_inputs(const DriftModel& drift, const Vec& x0, const JumpPath& path) {
  if (drift.dim() != x0.size() || path.dim != x0.size()) {
    throw ConfigError("dimension mismatch between drift (" + std::to_string(drift.dim()) + "), x0 (" +
                      std::to_string(x0.size()) + ") and path (" + std::to_string(path.dim) + ")");
  }
  if (!x0.allFinite()) throw ConfigError("initial point must be finite");
}

// int_0^t psi(s) ds.
double psi_integral(double t, const FieldParams& p) {
  const double half = 0.5 * p.delta;
  if (t <= half) return t;
  const double upper = std::min(t, p.delta);
  return half + quad::integrate([&p](double s) { return psi(s, p); }, half, upper, 1e-13);
}

// int_{eps <= |xi| < delta} g(xi) rho(xi) dxi; zero for symmetric measures.
double ibp_compensator(const LevyMeasure& m, double eps, const FieldParams& p) {
  if (is_symmetric(m) || eps >= p.delta) return 0.0;
  auto f = [&](double r) {
    return ibp_integrand(m, r, p) * density(m, r, p.delta) + ibp_integrand(m, -r, p) * density(m, -r, p.delta);
  };
  return quad::integrate_dyadic(f, eps, p.delta * (1.0 - 1e-15), 1e-11);
}

// Field values of a path's events, read in increasing index order. They are
// computed a block at a time, batched per coordinate, so the work stays in
// cache.
class FieldValueStream {
 public:
  FieldValueStream(const JumpPath& path, const FieldParams& field, const std::vector<LevyMeasure>& measures)
      : path_(path), field_(field), measures_(measures) {}

  const JumpFieldValues& at(std::size_t i) {
    if (i < begin_ || i >= begin_ + len_) fill(i);
    return vals_[i - begin_];
  }

 private:
  static constexpr std::size_t kBlock = 256;

  void fill(std::size_t i0) {
    const auto& ev = path_.events;
    begin_ = i0;
    len_ = std::min(kBlock, ev.size() - i0);
    if (path_.dim == 1) {
      for (std::size_t k = 0; k < len_; ++k) {
        s_[k] = ev[i0 + k].time;
        xi_[k] = ev[i0 + k].size;
      }
      jump_field_values(measures_.front(), std::span(s_.data(), len_), std::span(xi_.data(), len_), field_,
                        std::span(vals_.data(), len_));
      return;
    }
    for (int j = 0; j < path_.dim; ++j) {
      std::size_t m = 0;
      for (std::size_t k = 0; k < len_; ++k) {
        if (ev[i0 + k].coord != j) continue;
        s_[m] = ev[i0 + k].time;
        xi_[m] = ev[i0 + k].size;
        idx_[m++] = k;
      }
      if (m == 0) continue;
      jump_field_values(measures_[static_cast<std::size_t>(j)], std::span(s_.data(), m), std::span(xi_.data(), m),
                        field_, std::span(part_.data(), m));
      for (std::size_t k = 0; k < m; ++k) vals_[idx_[k]] = part_[k];
    }
  }

  const JumpPath& path_;
  const FieldParams& field_;
  const std::vector<LevyMeasure>& measures_;
  std::size_t begin_ = 0;
  std::size_t len_ = 0;
  std::array<JumpFieldValues, kBlock> vals_;
  std::array<JumpFieldValues, kBlock> part_;
  std::array<double, kBlock> s_, xi_;
  std::array<std::size_t, kBlock> idx_;
};

}  // namespace

NoiseFunctionals noise_functionals(const JumpPath& path, double t, const FieldParams& field,
                                   const std::vector<LevyMeasure>& measures) {
  field.validate();
  const int d = path.dim;
  if (static_cast<int>(measures.size()) != d) throw ConfigError("need one measure per coordinate");
  if (t < 0.0 || t > path.horizon) throw DomainError("output time outside [0, horizon]");
  NoiseFunctionals n{Vec::Zero(d), Vec::Zero(d), Vec::Zero(d), Vec::Zero(d)};
  Vec jump_sum = Vec::Zero(d);
  FieldValueStream values(path, field, measures);
  for (std::size_t i = 0; i < path.events.size(); ++i) {
    const auto& e = path.events[i];
    if (e.time > t) break;
    const int j = e.coord;
    const auto& v = values.at(i);
    if (v.psi_s > 0.0 && v.phi > 0.0) {
      n.ZV[j] += v.psi_s * v.phi;
      n.DZV[j] += v.psi_s * v.psi_s * v.phi * v.dphi;
      jump_sum[j] += v.psi_s * v.g;
    }
    n.Z[j] += e.size;
  }
  n.Dstar1 = -jump_sum;
  for (int j = 0; j < d; ++j) {
    if (!path.drift_correction.empty()) n.Z[j] += path.drift_correction[static_cast<std::size_t>(j)] * t;
    const double c = ibp_compensator(measures[static_cast<std::size_t>(j)], path.eps_trunc, field);
    if (c != 0.0) n.Dstar1[j] += psi_integral(t, field) * c;
  }
  return n;
}

void OdeOptions::validate() const {
  if (!(tolerance > 0.0)) throw ConfigError("ODE tolerance must be positive");
  if (min_substeps < 1) throw ConfigError("ODE min_substeps must be at least 1");
}

double FlowState::inverse_defect() const {
  return (J * Jinv - Mat::Identity(J.rows(), J.cols())).norm();
}

std::vector<FlowState> evolve(const DriftModel& drift, const Vec& x0, const JumpPath& path,
                              std::span<const double> t_out, const FieldParams& field,
                              const std::vector<LevyMeasure>& measures, const OdeOptions& opts) {
  check_inputs(drift, x0, path);
  field.validate();
  const int d = static_cast<int>(x0.size());
  if (static_cast<int>(measures.size()) != d) throw ConfigError("need one measure per coordinate");
  for (std::size_t i = 0; i < t_out.size(); ++i) {
    if (t_out[i] < 0.0 || t_out[i] > path.horizon) throw DomainError("output time outside [0, horizon]");
    if (i > 0 && t_out[i] < t_out[i - 1]) throw DomainError("output times must be sorted");
  }

  const Layout L{d, true};
  const Integrator integ(drift, path, L, opts);
  const bool linear_flow = drift.is_zero();

  std::vector<double> compensator(static_cast<std::size_t>(d), 0.0);
  bool any_compensator = false;
  for (int j = 0; j < d; ++j) {
    compensator[static_cast<std::size_t>(j)] = ibp_compensator(measures[static_cast<std::size_t>(j)], path.eps_trunc, field);
    any_compensator = any_compensator || compensator[static_cast<std::size_t>(j)] != 0.0;
  }

  const bool any_correction =
      std::any_of(path.drift_correction.begin(), path.drift_correction.end(), [](double c) { return c != 0.0; });

  StateVec y = StateVec::Zero(L.size());
  y.head(d) = x0;
  L.ref(y, L.off_J()).setIdentity();
  L.ref(y, L.off_Jinv()).setIdentity();

  Vec ZV = Vec::Zero(d), DZV = Vec::Zero(d), jump_sum = Vec::Zero(d), sq = Vec::Zero(d);
  Mat M = Mat::Zero(d, d);
  std::vector<Mat> DM(static_cast<std::size_t>(d), Mat::Zero(d, d));
  int small_jumps = 0;

  const auto& events = path.events;
  FieldValueStream values(path, field, measures);

  auto apply_jump = [&](std::size_t i) {
    const JumpEvent& e = events[i];
    const int j = e.coord;
    const auto& v = values.at(i);
    if (v.psi_s > 0.0 && v.phi > 0.0) {
      const double w = v.psi_s * v.phi;
      const double dw = v.psi_s * v.psi_s * v.phi * v.dphi;
      if (linear_flow) {
        // Jinv = I and DJ = 0 exactly.
        M(j, j) += w;
        DM[static_cast<std::size_t>(j)](j, j) += dw;
      } else {
        const Mat Jinv = L.get(y, L.off_Jinv());
        const Vec jinv_col = Jinv.col(j);
        M.col(j) += w * jinv_col;
        for (int k = 0; k < d; ++k) {
          // D_k R(s-) e_j = -Jinv DJ_k Jinv e_j
          const CMapMat DJk(y.data() + L.off_DJ(k), d, d);
          const Vec tmp = DJk.lazyProduct(jinv_col);
          DM[static_cast<std::size_t>(k)].col(j) -= w * Jinv.lazyProduct(tmp);
        }
        DM[static_cast<std::size_t>(j)].col(j) += dw * jinv_col;
      }
      y[L.off_DX() + j * d + j] += w;
      ZV[j] += w;
      DZV[j] += dw;
      jump_sum[j] += v.psi_s * v.g;
      sq[j] += v.psi_s * v.psi_s * v.dphi * v.dphi;
      ++small_jumps;
    }
    y[j] += e.size;
  };

  std::vector<FlowState> out;
  out.reserve(t_out.size());
  double t_cur = 0.0;
  std::size_t ei = 0;
  for (const double t_o : t_out) {
    while (ei < events.size() && events[ei].time <= t_o) {
      if (!linear_flow || any_correction) integ.advance(y, t_cur, events[ei].time);
      t_cur = events[ei].time;
      apply_jump(ei);
      ++ei;
    }
    integ.advance(y, t_cur, t_o);
    t_cur = t_o;

    FlowState s;
    s.t = t_o;
    s.X = y.head(d);
    s.J = L.get(y, L.off_J());
    s.Jinv = L.get(y, L.off_Jinv());
    s.DX = L.get(y, L.off_DX());
    s.DJ.reserve(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) s.DJ.push_back(L.get(y, L.off_DJ(k)));
    s.ZV = ZV;
    s.DZV = DZV;
    s.Dstar1 = -jump_sum;
    if (any_compensator) {
      const double pint = psi_integral(t_o, field);
      for (int j = 0; j < d; ++j) s.Dstar1[j] += pint * compensator[static_cast<std::size_t>(j)];
    }
    s.M = M;
    s.DM = DM;
    s.sum_psi2_dphi2 = sq;
    s.small_jumps = small_jumps;
    if (!s.X.allFinite()) throw NonFiniteStateError("non-finite state at t = " + std::to_string(t_o));
    out.push_back(std::move(s));
  }
  return out;
}

FlowState evolve_to(const DriftModel& drift, const Vec& x0, const JumpPath& path, double t,
                    const FieldParams& field, const std::vector<LevyMeasure>& measures, const OdeOptions& opts) {
  const double times[1] = {t};
  return std::move(evolve(drift, x0, path, times, field, measures, opts).front());
}

Vec terminal_state(const DriftModel& drift, const Vec& x0, const JumpPath& path, double t, const OdeOptions& opts) {
  check_inputs(drift, x0, path);
  if (t < 0.0 || t > path.horizon) throw DomainError("output time outside [0, horizon]");
  const int d = static_cast<int>(x0.size());
  const Layout L{d, false};
  const Integrator integ(drift, path, L, opts);
  StateVec y = x0;
  double t_cur = 0.0;
  for (const auto& e : path.events) {
    if (e.time > t) break;
    integ.advance(y, t_cur, e.time);
    t_cur = e.time;
    y[e.coord] += e.size;
  }
  integ.advance(y, t_cur, t);
  if (!y.allFinite()) throw NonFiniteStateError("non-finite state at t = " + std::to_string(t));
  return y;
}

PathwiseResidual pathwise_derivative_residual(const DriftModel& drift, const Vec& x0, const JumpPath& path,
                                              double t, int k, double eps, const FieldParams& field,
                                              const std::vector<LevyMeasure>& measures, const OdeOptions& opts) {
  if (eps == 0.0) throw DomainError("pathwise_derivative_residual needs eps != 0");
  const FlowState base = evolve_to(drift, x0, path, t, field, measures, opts);
  const Vec shifted = terminal_state(drift, x0, perturb_path(path, k, eps, field), t, opts);
  PathwiseResidual r;
  r.residual = (shifted - base.X - eps * base.DX.col(k)).norm();
  r.normalized = r.residual / (eps * eps);
  return r;
}

void write_trace(std::ostream& out, std::span<const FlowState> states) {
  if (states.empty()) return;
  const int d = states.front().dim();
  out << "t";
  for (int i = 1; i <= d; ++i) out << ",x_" << i;
  for (int i = 1; i <= d; ++i) out << ",zv_" << i;
  out << ",inverse_defect\n";
  out << std::setprecision(17);
  for (const auto& s : states) {
    out << s.t;
    for (int i = 0; i < d; ++i) out << ',' << s.X[i];
    for (int i = 0; i < d; ++i) out << ',' << s.ZV[i];
    out << ',' << s.inverse_defect() << '\n';
  }
}

}  // namespace levybel
