#include "levybel/jump_engine.hpp"

#include "vmath.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace levybel {


JumpSimulator::JumpSimulator(std::vector<LevyMeasure> measures, double horizon, double eps_trunc)
    : measures_(std::move(measures)), horizon_(horizon), eps_trunc_(eps_trunc) {
  if (measures_.empty()) throw ConfigError("at least one coordinate measure is required");
  if (static_cast<int>(measures_.size()) > kMaxDim) {
    throw ConfigError("dimension " + std::to_string(measures_.size()) + " exceeds the supported maximum " +
                      std::to_string(kMaxDim));
  }
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw ConfigError("horizon must be positive");
  if (!(eps_trunc_ > 0.0) || !std::isfinite(eps_trunc_)) throw ConfigError("eps_trunc must be positive");
  for (std::size_t j = 0; j < measures_.size(); ++j) {
    const auto drift = compensator_drift(measures_[j]);
    if (!drift) {
      throw UnsupportedMeasureError("coordinate " + std::to_string(j + 1) +
                                    ": asymmetric measure requires a compensator drift");
    }
    drift_.push_back(*drift);
    const double lam = tail_mass(measures_[j], eps_trunc_);
    if (!(lam >= 0.0) || !std::isfinite(lam)) {
      throw ConfigError("coordinate " + std::to_string(j + 1) + ": tail mass above eps_trunc is not finite");
    }
    intensity_.push_back(lam);
  }
}

JumpPath JumpSimulator::simulate(const RngSpec& rng) const {
  CounterRng gen(rng);
  JumpPath path;
  path.horizon = horizon_;
  path.eps_trunc = eps_trunc_;
  path.dim = dim();
  path.drift_correction = drift_;
  path.master_seed = rng.master_seed;
  path.path_index = rng.path_index;

  // Each coordinate is a compound Poisson process: exponential inter-arrival
  // times with rate tail_mass(eps_trunc), so its events come out time-sorted.
  std::vector<std::vector<JumpEvent>> per_coord(measures_.size());
  std::size_t total = 0;
  for (std::size_t j = 0; j < measures_.size(); ++j) {
    const double rate = intensity_[j];
    if (!(rate > 0.0)) continue;
    auto& out = per_coord[j];
    out.reserve(static_cast<std::size_t>(rate * horizon_ + 4.0 * std::sqrt(rate * horizon_) + 8.0));
    const auto* stable = std::get_if<StableMeasure>(&measures_[j]);
    const double inv_alpha = stable ? 1.0 / stable->alpha() : 0.0;
    const double inv_rate = 1.0 / rate;
    double time = 0.0;
    if (stable) {
      // Draws in chunks so the logs and exps run over arrays. Each event uses
      // two consecutive outputs (gap, then size with its sign bit) exactly as
      // one at a time would; the stream is rewound past the overdrawn tail.
      constexpr std::size_t kChunk = 256;
      std::array<double, kChunk> gap{}, mag{};
      std::array<bool, kChunk> neg{};
      std::uint64_t pos = gen.position();
      for (bool done = false; !done;) {
        const double expect = rate * (horizon_ - time);
        const std::size_t len = static_cast<std::size_t>(
            std::clamp(expect + 4.0 * std::sqrt(expect) + 8.0, 8.0, static_cast<double>(kChunk)));
        for (std::size_t k = 0; k < len; ++k) {
          gap[k] = 1.0 - gen.uniform();
          bool b = false;
          mag[k] = 1.0 - gen.uniform(b);
          neg[k] = b;
        }
        vmath::log_inplace(gap.data(), len);
        vmath::log_inplace(mag.data(), len);
        std::size_t m = 0;
        for (; m < len; ++m) {
          time -= gap[m] * inv_rate;
          if (!(time <= horizon_)) {
            done = true;
            break;
          }
          gap[m] = time;
          mag[m] *= -inv_alpha;
        }
        vmath::exp_inplace(mag.data(), m);
        for (std::size_t k = 0; k < m; ++k) {
          const double r = std::max(eps_trunc_, eps_trunc_ * mag[k]);
          out.push_back(JumpEvent{gap[k], static_cast<int>(j), neg[k] ? -r : r});
        }
        pos += done ? 2 * m + 1 : 2 * len;
      }
      gen.seek(pos);
    } else {
      for (;;) {
        time -= std::log(1.0 - gen.uniform()) * inv_rate;
        if (!(time <= horizon_)) break;
        const double u = gen.uniform();
        const double sign = gen.uniform();
        out.push_back(JumpEvent{time, static_cast<int>(j), sample_jump_size(measures_[j], eps_trunc_, u, sign)});
      }
    }
    total += out.size();
  }

  if (measures_.size() == 1) {
    path.events = std::move(per_coord.front());
    return path;
  }
  // d-way merge by (time, coord).
  path.events.reserve(total);
  std::vector<std::size_t> head(measures_.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t best = measures_.size();
    for (std::size_t j = 0; j < measures_.size(); ++j) {
      if (head[j] == per_coord[j].size()) continue;
      if (best == measures_.size() || per_coord[j][head[j]].time < per_coord[best][head[best]].time) best = j;
    }
    path.events.push_back(per_coord[best][head[best]++]);
  }
  return path;
}

JumpPath simulate_path(const std::vector<LevyMeasure>& measures, double horizon, double eps_trunc,
                       const RngSpec& rng) {
  return JumpSimulator(measures, horizon, eps_trunc).simulate(rng);
}

JumpPath perturb_path(const JumpPath& path, int k, double eps, const FieldParams& p) {
  if (std::abs(eps) > 1.0) throw DomainError("perturb_path needs |eps| <= 1");
  JumpPath out = path;
  if (eps == 0.0) return out;
  for (auto& e : out.events) {
    if (e.coord != k) continue;
    e.size = e.size + eps * v_weight(e.time, e.size, p);
  }
  return out;
}

double increment(const JumpPath& path, double t, int j) {
  double sum = 0.0;
  for (const auto& e : path.events) {
    if (e.time > t) break;
    if (e.coord == j) sum += e.size;
  }
  if (!path.drift_correction.empty()) sum += path.drift_correction[static_cast<std::size_t>(j)] * t;
  return sum;
}

void write_path(std::ostream& out, const JumpPath& path) {
  out << "# levybel-path v1\n";
  out << std::setprecision(17);
  out << "# horizon: " << path.horizon << "\n";
  out << "# eps_trunc: " << path.eps_trunc << "\n";
  out << "# dim: " << path.dim << "\n";
  out << "# master_seed: " << path.master_seed << "\n";
  out << "# path_index: " << path.path_index << "\n";
  out << "# drift_correction:";
  for (double d : path.drift_correction) out << ' ' << d;
  out << "\n";
  out << "time,coord,size\n";
  for (const auto& e : path.events) out << e.time << ',' << (e.coord + 1) << ',' << e.size << '\n';
}

JumpPath read_path(std::istream& in) {
  JumpPath path;
  std::string line;
  bool header = false;
  bool magic = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("levybel-path v1") != std::string::npos) {
        magic = true;
        continue;
      }
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::string key = line.substr(1, colon - 1);
      key.erase(0, key.find_first_not_of(' '));
      std::istringstream val(line.substr(colon + 1));
      if (key == "horizon") {
        val >> path.horizon;
      } else if (key == "eps_trunc") {
        val >> path.eps_trunc;
      } else if (key == "dim") {
        val >> path.dim;
      } else if (key == "master_seed") {
        val >> path.master_seed;
      } else if (key == "path_index") {
        val >> path.path_index;
      } else if (key == "drift_correction") {
        double d = 0.0;
        while (val >> d) path.drift_correction.push_back(d);
      }
      continue;
    }
    if (!header) {
      if (line != "time,coord,size") throw ConfigError("path dump: expected header 'time,coord,size'");
      header = true;
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    JumpEvent e;
    if (!(row >> e.time >> e.coord >> e.size)) throw ConfigError("path dump: malformed row '" + line + "'");
    e.coord -= 1;
    if (e.coord < 0 || e.coord >= path.dim) throw ConfigError("path dump: coordinate out of range");
    path.events.push_back(e);
  }
  if (!magic || !header) throw ConfigError("path dump: missing header");
  if (path.drift_correction.empty()) path.drift_correction.assign(static_cast<std::size_t>(path.dim), 0.0);
  return path;
}

}  // namespace levybel
