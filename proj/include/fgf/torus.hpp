#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "fgf/common.hpp"

namespace fgf {

using Mode = std::vector<int>;
// coefficients of one Fourier mode over increasing index tuples, in subsets(n,k) order
using Block = std::vector<cplx>;
using Covector = std::vector<cplx>;

class FormAlgebra {
 public:
  explicit FormAlgebra(int n);
  int dim() const { return n_; }
  int comps(int k) const { return static_cast<int>(masks(k).size()); }
  const std::vector<unsigned>& masks(int k) const;
  int position(unsigned mask) const { return pos_[mask]; }

  // a ∧ f
  Block wedge(int k, const Covector& a, const Block& f) const;
  // contraction with a (no conjugation); adjoint of (conj a)∧
  Block interior(int k, const Covector& a, const Block& f) const;
  Block star(int k, const Block& f) const;
  // f ∧ g for a k-block f and an l-block g
  Block wedge_blocks(int k, const Block& f, int l, const Block& g) const;

 private:
  int n_;
  std::vector<std::vector<unsigned>> masks_;
  std::vector<int> pos_;
};

const FormAlgebra& algebra(int n);

Covector fourier_symbol(const std::vector<double>& alpha);  // i·α
double norm2(const std::vector<double>& alpha);
double block_norm(const Block& b);
cplx block_inner(const Block& a, const Block& b);  // Σ a conj(b)

// Per-mode d = (iα)∧ and d* = -i ι_α.
Block block_d(int n, int k, const std::vector<double>& alpha, const Block& f);
Block block_dstar(int n, int k, const std::vector<double>& alpha, const Block& f);
// E = α∧ι_α/|α|², E* = ι_α α∧/|α|²; zero at α = 0.
Block block_exact(int n, int k, const std::vector<double>& alpha, const Block& f);
Block block_coexact(int n, int k, const std::vector<double>& alpha, const Block& f);

// (dim of exact block, dim of coexact block) = (C(n-1,k-1), C(n-1,k))
std::pair<int, int> block_dims(int n, int k, const Mode& alpha);
// same pair from ranks of d_{k-1} and d_k on the block
std::pair<int, int> block_dims_by_rank(int n, int k, const Mode& alpha);

// n=3 curl = ⋆d on 1-forms: unit eigenvectors for +|α| and -|α|.
std::array<Block, 2> curl_eigenbasis(const std::vector<double>& alpha);
Block block_curl(const std::vector<double>& alpha, const Block& f);

// Truncated Fourier representation on [-π,π)^n with max-norm cutoff K.
// Real-scalar spectra have one entry per component; u(N) spectra carry N×N
// complex entries (row-major) per component.
class TorusSpectrum {
 public:
  TorusSpectrum() = default;
  TorusSpectrum(int n, int k, int cutoff, int matrix_size = 0);

  int dim() const { return n_; }
  int degree() const { return k_; }
  int cutoff() const { return K_; }
  int side() const { return 2 * K_ + 1; }
  int matrix_size() const { return N_; }
  bool is_matrix() const { return N_ > 0; }
  int entries() const { return N_ > 0 ? N_ * N_ : 1; }
  int comps() const { return comps_; }
  long long mode_count() const { return modes_; }

  Mode mode(long long idx) const;
  std::vector<double> mode_real(long long idx) const;
  long long mode_index(const Mode& a) const;  // -1 outside the cutoff
  long long negate(long long idx) const { return modes_ - 1 - idx; }
  long long zero_mode() const { return modes_ / 2; }
  // lexicographically positive half (first nonzero coordinate > 0)
  bool positive(long long idx) const { return idx > zero_mode(); }

  cplx& at(long long mode, int comp, int entry = 0) { return c_[slice(comp, entry) + mode]; }
  cplx at(long long mode, int comp, int entry = 0) const { return c_[slice(comp, entry) + mode]; }
  long long slice(int comp, int entry) const { return (static_cast<long long>(comp) * entries() + entry) * modes_; }

  Block block(long long mode, int entry = 0) const;
  void set_block(long long mode, const Block& b, int entry = 0);

  std::vector<cplx>& data() { return c_; }
  const std::vector<cplx>& data() const { return c_; }

  // largest deviation from Â(-α) = conj Â(α) (scalar) or -Â(α)^† (matrix)
  double reality_defect() const;
  bool same_shape(const TorusSpectrum& o) const;

 private:
  int n_ = 0, k_ = 0, K_ = 0, N_ = 0, comps_ = 0;
  long long modes_ = 0;
  std::vector<cplx> c_;
};

TorusSpectrum spectral_d(const TorusSpectrum& f);
TorusSpectrum spectral_dstar(const TorusSpectrum& f);
TorusSpectrum spectral_star(const TorusSpectrum& f);
// (-Δ)^t per mode: multiply by |α|^{2t}
TorusSpectrum fractional_power(const TorusSpectrum& f, double t);
enum class Projection { Exact, Coexact };
TorusSpectrum spectral_project(const TorusSpectrum& f, Projection p);
// Re Σ_α Σ_I Σ_entries f conj g (the L² pairing by Plancherel)
double spectral_inner(const TorusSpectrum& f, const TorusSpectrum& g);
// Σ_{α≠0} |α|^{-2s} Re(f conj g): the Ḣ^{-s} pairing
double spectral_inner_hminus(const TorusSpectrum& f, const TorusSpectrum& g, double s = 1.0);

// Samples on the grid x_j = -π + 2π j / M, per component and matrix entry.
struct TorusGrid {
  int n = 0, k = 0, M = 0, N = 0;
  std::vector<cplx> data;  // layout [(comp*entries + e) * M^n + point]
  int entries() const { return N > 0 ? N * N : 1; }
  long long points() const;
  int comps() const;
  cplx& at(long long point, int comp, int e = 0) { return data[(static_cast<long long>(comp) * entries() + e) * points() + point]; }
  cplx at(long long point, int comp, int e = 0) const { return data[(static_cast<long long>(comp) * entries() + e) * points() + point]; }
};

TorusGrid to_grid(const TorusSpectrum& f, int M);
TorusSpectrum from_grid(const TorusGrid& g, int cutoff);
// ∫ Re Σ f conj g dx by the trapezoid rule (exact for band-limited products)
double grid_inner(const TorusGrid& f, const TorusGrid& g);
// f ∧ g, or [f ∧ g] with commutators for matrix-valued forms
TorusGrid grid_wedge(const TorusGrid& f, const TorusGrid& g, bool bracket);

void write_spectrum(const TorusSpectrum& f, const std::string& stem);
TorusSpectrum read_spectrum(const std::string& stem);

}  // namespace fgf
