#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fgf/lattice.hpp"
#include "fgf/lie.hpp"
#include "fgf/torus.hpp"
#include "json.hpp"

namespace fgf {

// Nonzero value of a form on the cell (x, mask)
struct SparseEntry {
  unsigned mask = 0;
  Coord x{};
  double value = 0;
};

// Rectangular lattice loop in the (i, j) plane with its spanning 2-form.
struct RectLoop {
  ComplexPtr cx;
  int i = 0, j = 1;
  Coord corner{};
  int L = 1, H = 1;
  std::vector<SparseEntry> edges;  // nonzero entries of γ
  LatticeForm gamma;               // d*S; empty unless built dense
  LatticeForm S;                   // indicator of the L×H plaquettes, oriented along (i, j)

  int area() const { return L * H; }
  int perimeter() const { return 2 * (L + H); }
  bool dense() const { return gamma.size() > 0; }
};

// With dense = false only the edge list is kept (large boxes).
RectLoop build_rect_loop(ComplexPtr cx, int i, int j, const Coord& corner, int L, int H, bool dense = true);

// (f, (-Δ)^{-1} g) for forms of one degree on one complex, from per-component
// eigen-expansions restricted to the supports. Kernel modes are dropped.
double green_pairing(const LatticeForm& f, const LatticeForm& g);
double green_pairing(const LatticeComplex& cx, int k, const std::vector<SparseEntry>& f,
                     const std::vector<SparseEntry>& g);
std::vector<SparseEntry> sparse_entries(const LatticeForm& f);

// (γ, (-Δ)^{-1} γ)
double loop_energy(const RectLoop& loop);
// exp(-(γ, (-Δ)^{-1} γ) / (2β))
double wilson_gaussian_expectation(const RectLoop& loop, double beta);
// E W₁ E W₂ (exp(-(γ₁, (-Δ)^{-1} γ₂) / β) - 1)
double loop_covariance(const RectLoop& a, const RectLoop& b, double beta);

struct ConfinementRow {
  int L = 0, H = 0;
  std::vector<int> box;
  double value = 0;  // (γ, (-Δ)^{-1} γ)
  double per_area = 0, per_perim = 0, per_perim_log = 0;
};

struct ConfinementScan {
  int n = 0;
  int slab_M = -1;  // -1: full box
  double beta = 1;
  std::vector<ConfinementRow> rows;
  std::string column;      // the normalization expected to stabilize
  double variation = 0;    // (max - min) / mean of that column over the top half of the L range
  double variation_all = 0;  // same over every row
  double threshold = 0.1;
  bool stable = false;

  std::string csv() const;
};

// Square loops L = H centered in boxes of side margin·L (slab: in-plane side,
// vertical extent 2M). Refuses margins below 3.
ConfinementScan confinement_scan(int n, int slab_M, const std::vector<int>& Ls, double beta, double margin = 3.0);

struct MassGapRow {
  int d = 0;
  double small = 0, large = 0;  // (p, dd*(-Δ)^{-1} p') at the two box sizes
  double rel_diff = 0;
};

struct MassGapReport {
  int n = 0, M = -1;  // M = -1: full box control
  int box_small = 0, box_large = 0;
  std::vector<MassGapRow> rows;
  double rate = 0;       // c in |value| ≈ C e^{-c d} (slab)
  double exponent = 0;   // p in |value| ≈ C d^p (full box control)
  double max_rel_diff = 0;

  std::string csv() const;
};

// Horizontal unit plaquettes p, p' at in-plane distance d along axis 0, both in
// the middle layer, placed symmetrically about the box center.
double plaquette_pairing(const LatticeComplex& cx, int d);
MassGapReport slab_mass_gap(int n, int M, const std::vector<int>& distances, int box_small, int box_large);
MassGapReport full_box_decay(int n, const std::vector<int>& distances, int box_small, int box_large);

// Perfect matchings of {0..m-1} with V = cycles(σ_μ π), σ_μ the product of the
// cyclic shifts on consecutive blocks of sizes μ; empty blocks count one cycle.
struct PairingMap {
  int m = 0;
  std::vector<int> partner;
  std::vector<int> mu;
  int V = 0;
  int E() const { return m / 2; }
};

int count_cycles(const std::vector<int>& perm);
int pairing_vertices(const std::vector<int>& partner, const std::vector<int>& mu);
std::vector<PairingMap> pairing_maps(int m, const std::vector<int>& mu);

// Piecewise-constant big loop: Γ(t) = pieces[j] on [times[j], times[j+1]).
struct BigLoop {
  std::vector<double> times;
  std::vector<TorusSpectrum> pieces;  // real scalar 1-form spectra with d*Γ = 0
  double sup_norm = 0;                // sup_j ‖Γ_j‖_{Ḣ^{-1}}

  static BigLoop piecewise(std::vector<double> times, std::vector<TorusSpectrum> pieces);
  static BigLoop constant(const TorusSpectrum& g) { return piecewise({0.0, 1.0}, {g}); }
  bool is_constant() const { return pieces.size() == 1; }
};

struct SurfaceSum {
  double value = 0;
  double tail_bound = 0;
  double stderr_ = 0;
  int m_max = 0, N = 1;
  std::vector<double> terms;  // signed contribution of each m

  nlohmann::json to_json() const;
};

struct SurfaceSumOptions {
  int m_max = 6;
  long long mc_tuples = 20000;
  std::uint64_t seed = 0;
  double tail_tolerance = 1e-3;
  int max_pairs = 8;
};

// E Π_ℓ W_{Γ_ℓ} for a u(N) 1-form GFF through the pairing expansion.
SurfaceSum surface_sum_expectation(const std::vector<BigLoop>& loops, int N, const SurfaceSumOptions& opt = {});

// h(1) for A along Γ: ordered product of per-interval series truncated at
// m_max terms; real scalar A is taken as the u(1) form iA.
CMatrix holonomy_series(const TorusSpectrum& A, const BigLoop& loop, int m_max = 40, double tol = 1e-12);
// (A, Γ) as an N×N matrix (1×1 and multiplied by i for scalar A)
CMatrix loop_pairing(const TorusSpectrum& A, const TorusSpectrum& gamma);

}  // namespace fgf
