#pragma once

#include <array>
#include <vector>

#include "fgf/testfn.hpp"

namespace fgf {

struct KernelConstants {
  int n = 0;
  // γ_n(α) = 2^α π^{n/2} Γ(α/2) / Γ((n-α)/2); throws at poles of either Γ
  double gamma(double alpha) const;
  // surface area of the unit sphere in R^n
  double omega() const;
  // Pizzetti coefficient H_j
  double pizzetti(int j) const;
};

KernelConstants constants(int n);

// G^s at distance r for 2s > 0: power law, or the log form when 2s = n + 2m
double green_kernel(double s, int n, double r);

struct QuadOptions {
  double tol = 1e-10;  // relative tolerance of each adaptive panel
};

// ((-Δ)^{-α/2} f)(x) for every real α: Riesz potential, log kernel,
// Pizzetti-subtracted kernel, or exact Laplacian powers at α = -2m.
QuadResult fractional_apply(const ScalarField& f, double alpha, const Point& x, const QuadOptions& opt = {});

// u(ρ) = ((-Δ)^{-α/2} φ)(center + ρ e_1) on a uniform grid of [0, R], for φ
// radially symmetric about `center`.
RadialField tabulate_fractional(const TestFunction& phi, double alpha, const Point& center, double R, int intervals,
                                const QuadOptions& opt = {});

enum class KernelVariant { Closed, Coclosed };  // FGF^1_s with d = 0, or with d* = 0

// n × n row-major covariance kernel of the projected 1-form field at x ≠ y
std::vector<double> projected_kernel(double s, KernelVariant v, int n, const Point& x, const Point& y);

struct PVSchedule {
  double eps0 = 0.5;
  int levels = 5;  // ε_j = ε0 / 2^j, j < levels
  int order = 2;   // Richardson steps, removing ε², ε⁴, ...
  void validate() const;
  std::vector<double> ladder() const;
};

struct PVResult {
  double value = 0;
  double error = 0;  // extrapolation spread plus quadrature error
  std::vector<double> eps;
  std::vector<double> truncated;  // ε-truncated values, contact term included
};

// (φ, R_ij ψ) with R_ij = ∂_i ∂_j (-Δ)^{-1}, from the ε-truncated singular
// kernel plus the contact term -δ_ij (φ,ψ)/n
PVResult pv_riesz(int i, int j, const TestFunction& phi, const TestFunction& psi, const PVSchedule& sch = {});

// Cov((EW, φ), (EW, ψ)) for 2-form white noise W; components in subsets(n,2) order
PVResult pv_projected_whitenoise(const std::vector<TestFunction>& phi, const std::vector<TestFunction>& psi,
                                 const PVSchedule& sch = {});

using Vec3 = std::array<double, 3>;
// closed curve as nodes at uniform parameter spacing
struct Curve {
  std::vector<Vec3> nodes;
};

Curve circle(const Vec3& center, const Vec3& normal, double radius, int nodes);
Curve reversed(const Curve& c);

// -(4π)^{-1} ∬ det(γ', γ̃', γ - γ̃) / |γ - γ̃|³ by the periodic trapezoid rule,
// tangents from centered differences
double gauss_linking(const Curve& a, const Curve& b, double min_separation = 1e-6);

}  // namespace fgf
