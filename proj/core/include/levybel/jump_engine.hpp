#pragma once

#include "levybel/field.hpp"
#include "levybel/levy_model.hpp"
#include "levybel/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace levybel {

struct JumpEvent {
  double time = 0.0;  // in (0, T]
  int coord = 0;      // 0-based coordinate index
  double size = 0.0;  // nonzero, |size| >= eps_trunc
};

// One realization of the d Poisson random measures above eps_trunc on [0, T].
struct JumpPath {
  double horizon = 0.0;
  double eps_trunc = 0.0;
  int dim = 1;
  std::vector<JumpEvent> events;  // sorted by (time, coord), insertion order on ties
  // Per-coordinate constant drift that compensates asymmetric jumps; zero for
  // symmetric measures.
  std::vector<double> drift_correction;
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

// Prepared simulator: validates the measures once and caches the Poisson
// intensities so that per-path work is only sampling.
class JumpSimulator {
 public:
  JumpSimulator(std::vector<LevyMeasure> measures, double horizon, double eps_trunc);

  JumpPath simulate(const RngSpec& rng) const;

  int dim() const { return static_cast<int>(measures_.size()); }
  double horizon() const { return horizon_; }
  double eps_trunc() const { return eps_trunc_; }
  const std::vector<LevyMeasure>& measures() const { return measures_; }
  // Expected number of events per path for coordinate j.
  double intensity(int j) const { return intensity_[static_cast<std::size_t>(j)] * horizon_; }

 private:
  std::vector<LevyMeasure> measures_;
  double horizon_;
  double eps_trunc_;
  std::vector<double> intensity_;  // tail_mass(eps_trunc) per coordinate
  std::vector<double> drift_;
};

JumpPath simulate_path(const std::vector<LevyMeasure>& measures, double horizon, double eps_trunc,
                       const RngSpec& rng);

// Moves every coordinate-k jump (s, xi) to (s, xi + eps V(s, xi)).
JumpPath perturb_path(const JumpPath& path, int k, double eps, const FieldParams& p);

// Z_j(t): sum of coordinate-j jump sizes up to time t, plus the compensating
// drift for asymmetric measures.
double increment(const JumpPath& path, double t, int j);

// Path dump: '#'-prefixed header (horizon, eps_trunc, dim, seed, path index)
// followed by "time,coord,size" rows with 1-based coord. Sizes and times are
// written with 17 significant digits so a reload is bit-exact.
void write_path(std::ostream& out, const JumpPath& path);
JumpPath read_path(std::istream& in);

}  // namespace levybel
