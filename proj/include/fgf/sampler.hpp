#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fgf/lattice.hpp"
#include "fgf/torus.hpp"
#include "json.hpp"

namespace fgf {

enum class Variant { Plain, ExactProjected, CoexactProjected, Massive, Proca, ChernSimons };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct FieldSpec {
  int n = 3;
  int k = 1;
  double s = 1.0;
  double beta = 1.0;
  Variant variant = Variant::Plain;
  double lambda = 0.0;  // mass λ = m² (massive, Proca) or Chern–Simons weight
  bool torus = true;
  int cutoff = 8;
  std::vector<int> extents;
  Topology topology = Topology::Free;
  int matrix_size = 0;  // u(N)-valued torus field when > 0

  double hurst() const { return s - n / 2.0; }
  void validate() const;
  nlohmann::json to_json() const;
  static FieldSpec from_json(const nlohmann::json& j);
};

struct FieldSample {
  FieldSpec spec;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::optional<TorusSpectrum> torus;
  std::optional<LatticeForm> lattice;
};

// Per-mode linear map M(α) with A(α) = M(α) Z(α), Z standard complex normal
// per component; the covariance block is M M^†. Zero at α = 0.
using ModeMatrix = std::vector<cplx>;  // row-major C(n,k) × C(n,k)
ModeMatrix mode_factor(const FieldSpec& spec, const std::vector<double>& alpha);
ModeMatrix mode_covariance(const FieldSpec& spec, const std::vector<double>& alpha);

// Precomputed per-mode factors for repeated torus sampling.
class TorusSampler {
 public:
  explicit TorusSampler(const FieldSpec& spec);
  TorusSpectrum sample(std::uint64_t seed, std::uint64_t stream = 0) const;
  const FieldSpec& spec() const { return spec_; }

 private:
  FieldSpec spec_;
  TorusSpectrum shape_;
  std::vector<ModeMatrix> factor_;  // indexed by mode; empty for the non-positive half
  std::vector<std::vector<cplx>> basis_;
};

// Torus sampler: positive-half modes are drawn, A(-α) is the conjugate.
// Z at mode index m, component c, matrix basis element a uses counters
// 2q, 2q+1 with q = (m*comps + c)*N² + a of Stream(seed, stream).
TorusSpectrum sample_torus(const FieldSpec& spec, std::uint64_t seed, std::uint64_t stream = 0);
// Lattice sampler: β^{-1/2} g(-Δ) W, W iid N(0,1) per cell, followed by the
// projection the variant asks for; exact on every box via the separable basis.
LatticeForm sample_lattice(const FieldSpec& spec, std::uint64_t seed, std::uint64_t stream = 0);
FieldSample sample_field(const FieldSpec& spec, std::uint64_t seed, std::uint64_t stream = 0);

// Σ_α φ̂(α)^† C(α) ψ̂(α): the exact Cov((A,φ),(A,ψ)) of the torus sampler
double torus_covariance(const FieldSpec& spec, const TorusSpectrum& phi, const TorusSpectrum& psi);
// exact Cov((A,φ),(A,ψ)) of the lattice sampler
double lattice_covariance(const FieldSpec& spec, const LatticeForm& phi, const LatticeForm& psi);

// Coulomb gauge: E* per mode. Axial gauge along `axis`: subtract (Â_j/α_j)·α
// on modes with α_j ≠ 0.
TorusSpectrum gauge_fix_coulomb(const TorusSpectrum& a);
TorusSpectrum gauge_fix_axial(const TorusSpectrum& a, int axis);
LatticeForm gauge_fix_coulomb(const LatticeForm& a);

struct RestrictionRow {
  Mode alpha;                // restricted mode on the (n-1)-torus
  double exact = 0;          // (2π)^{-1} Σ_{|m| ≤ K} (|α'|²+m²)^{-s} / β
  double untruncated = 0;    // same sum over all m
  double hurst_proxy = 0;    // c·|α'|^{1-2s} / β
  double empirical = 0;      // mean |B̂(α')|²
  double stderr_ = 0;
};

// c = (2π)^{-1} ∫ (1+u²)^{-s} du
double hurst_constant(double s);
// (2π)^{-1} Σ_{m ∈ Z} (a²+m²)^{-s}, summed to convergence
double restricted_mode_variance(double a2, double s, int cutoff = -1);

// Restrict samples of the scalar torus GFF (k=0) to the hyperplane
// x_axis = offset and report per-mode variances of the restriction.
std::vector<RestrictionRow> restrict_hyperplane(const FieldSpec& spec, int axis, double offset,
                                                const std::vector<Mode>& modes, int samples, std::uint64_t seed);
// B̂(α') for each of `samples` independent fields
std::vector<cplx> restricted_coefficients(const FieldSpec& spec, int axis, double offset, const Mode& mode,
                                          int samples, std::uint64_t seed);

struct FsheReport {
  std::vector<double> mode_norm;
  std::vector<double> equal_time;    // 2·Var(A_α(t))
  std::vector<double> equal_time_se;
  std::vector<double> lag_cov;       // E[A_α(t+τ) conj A_α(t)]
  std::vector<double> lag_cov_se;
  double lag = 0;
};

// Exact per-mode Ornstein–Uhlenbeck simulation of ∂_t A = -(-Δ)^{s} A + ξ
// on the listed modes, started in stationarity.
FsheReport fshe_stationary_check(double s, const std::vector<double>& mode_norms, double dt, int steps, int chains,
                                 int lag_steps, std::uint64_t seed);

struct CovEstimate {
  double value = 0;
  double stderr_ = 0;
};

enum class DerivedOp { D, DStar, Star, Curl };

struct DerivedLawRow {
  double analytic = 0;
  double empirical = 0;
  double stderr_ = 0;
  double z = 0;  // (empirical - analytic) / stderr
};

struct DerivedLawReport {
  DerivedOp op = DerivedOp::D;
  int samples = 0;
  std::vector<DerivedLawRow> rows;
  double max_abs_z = 0;
  double max_dd = 0;  // largest |d(dA)| (D) or |d*(d*A)| (DStar) over all samples
};

// Empirical Cov((op A, φ), (op A, ψ)) for torus samples of `spec` against the
// spectral oracle: (φ, E ψ)_{Ḣ^{-(s-1)}} for d, (φ, E* ψ)_{Ḣ^{-(s-1)}} for d*,
// (φ, ψ)_{Ḣ^{-s}} for ⋆, and (φ, E* ψ)_{Ḣ^{-(s-1)}} for ⋆d (n = 3, k = 1).
DerivedLawReport derived_law_check(const FieldSpec& spec, DerivedOp op,
                                   const std::vector<std::pair<TorusSpectrum, TorusSpectrum>>& tests, int samples,
                                   std::uint64_t seed);

struct ScalingRow {
  int L = 0;
  double eps = 0, beta = 0;
  double variance = 0;   // Var (A_ε, φ_ε) on the lattice
  double rescaled = 0;   // ε^{2(n-2k)} · variance
  double continuum = 0;  // (φ, P (-Δ)^{-1} φ) on the unit torus
  double rel_err = 0;
};

// Periodic boxes of side L = 1/ε with β_ε = ε^{n-2k-2}; φ_ε(c) = ε^k φ_I at the
// cell midpoint, φ a fixed trigonometric k-form. The variant picks P (plain:
// identity; coexact-projected: E*).
std::vector<ScalingRow> scaling_check(int n, int k, Variant variant, const std::vector<int>& Ls);

// unbiased sample covariance with a jackknife standard error
CovEstimate estimate_covariance(const std::vector<double>& x, const std::vector<double>& y);
CovEstimate estimate_mean(const std::vector<double>& x);

}  // namespace fgf
