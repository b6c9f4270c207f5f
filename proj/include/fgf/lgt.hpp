#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fgf/lattice.hpp"
#include "fgf/rng.hpp"
#include "fgf/wilson.hpp"
#include "json.hpp"

namespace fgf {

// U(1) lattice gauge field: one angle per edge, weight exp(β Σ_p cos θ_p)
// with θ_p = (dθ)(p).
class U1Lattice {
 public:
  U1Lattice(ComplexPtr cx, double beta);

  const LatticeComplex& complex() const { return *cx_; }
  ComplexPtr complex_ptr() const { return cx_; }
  double beta() const { return beta_; }
  const std::vector<double>& angles() const { return theta_; }
  void set_angles(std::vector<double> theta);

  long long edges() const { return static_cast<long long>(theta_.size()); }
  long long plaquettes() const { return static_cast<long long>(plaq_edges_.size()); }
  double plaquette_angle(long long p) const;
  double mean_plaquette_cos() const;
  double action() const;  // -β Σ_p cos θ_p
  // cos Σ_e γ(e) θ(e)
  double wilson_loop(const std::vector<SparseEntry>& gamma) const;

  // One Metropolis sweep over all edges with uniform proposals of half-width
  // `width`; draws use counters from `counter` on. Returns the acceptance rate.
  double sweep(double width, const Stream& rng, std::uint64_t& counter);

 private:
  struct Incidence {
    long long plaquette;
    int sign;
  };
  ComplexPtr cx_;
  double beta_;
  std::vector<double> theta_;
  std::vector<std::array<std::pair<long long, int>, 4>> plaq_edges_;
  std::vector<std::vector<Incidence>> edge_plaqs_;
};

struct MetropolisOptions {
  long long sweeps = 4000;
  long long burn_in = 500;
  double width = 1.0;       // initial proposal half-width
  bool tune = true;         // adapt the width during burn-in toward 45% acceptance
  double target_low = 0.30, target_high = 0.60;
  int batches = 32;
  std::uint64_t seed = 0;
  bool cold_start = true;
};

struct McEstimate {
  double value = 0;
  double stderr_ = 0;
  double tau_int = 0.5;  // integrated autocorrelation time in sweeps
  double acceptance = 0;
  double width = 0;
  long long samples = 0;

  nlohmann::json to_json() const;
};

// Batched-means mean, error and integrated autocorrelation time.
McEstimate batched_means(const std::vector<double>& series, int batches);

// Mean Wilson loop over the given loops (all on the field's complex). Burn-in
// (width tuned during its first 3/4 when enabled), then one measurement per
// sweep; NumericalError if the acceptance leaves [target_low, target_high].
McEstimate wilson_mc_estimate(ComplexPtr cx, double beta, const std::vector<RectLoop>& loops,
                              const MetropolisOptions& opt = {});
McEstimate plaquette_mc_estimate(ComplexPtr cx, double beta, const MetropolisOptions& opt = {});

// Gauge transformation that zeroes θ on a BFS spanning tree of the vertex
// graph rooted at `root`; angles wrapped to (-π, π]. Returns the gauge λ.
std::vector<double> gauge_fix_tree(U1Lattice& lat, const Coord& root);

// (I₁(β)/I₀(β))^area: the exact 2-D free-boundary Wilson loop
double u1_exact_2d(double beta, int area);

// All L×H loops in the (i, j) plane whose corners lie in [lo, hi] per axis.
std::vector<RectLoop> translated_loops(ComplexPtr cx, int i, int j, int L, int H, const Coord& lo, const Coord& hi);

}  // namespace fgf
