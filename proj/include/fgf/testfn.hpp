#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "fgf/common.hpp"
#include "json.hpp"

namespace fgf {

using Point = std::vector<double>;

struct QuadResult {
  double value = 0;
  double error = 0;  // a-posteriori estimate
};

// Multivariate polynomial in n variables.
class Poly {
 public:
  Poly() = default;
  explicit Poly(int n) : n_(n) {}
  static Poly constant(int n, double c);

  int dim() const { return n_; }
  int degree() const;
  bool empty() const { return c_.empty(); }
  const std::map<std::vector<int>, double>& terms() const { return c_; }
  void add_term(const std::vector<int>& exps, double coef);

  double operator()(const double* u) const;
  Poly derivative(int axis) const;
  Poly times_coord(int axis) const;
  Poly operator+(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double s) const;
  // q(w) = p(A w + b)
  Poly compose_affine(double A, const Point& b) const;
  void prune(double tol = 0.0);

 private:
  int n_ = 0;
  std::map<std::vector<int>, double> c_;
};

// p(y - c) exp(-|y - c|² / (2σ²))
struct GaussTerm {
  Point center;
  double sigma = 1.0;
  Poly poly;
  bool radial = false;  // poly depends on |y - c| only

  int dim() const { return static_cast<int>(center.size()); }
  double operator()(const Point& y) const;
  GaussTerm laplacian() const;
  // (2π)^{-n} ∫ f(y) e^{-i p·y} dy
  cplx fourier(const Point& p) const;
};

// Average of t(x + rω)·w(ω) over the unit sphere, w = ω_i ω_j when i ≥ 0 and 1
// otherwise; with `traceless`, w = n ω_i ω_j - δ_ij. Implemented for n ≤ 3.
QuadResult sphere_average(const GaussTerm& t, const Point& x, double r, int i = -1, int j = -1, double tol = 1e-11,
                          bool traceless = false);

// Real scalar field on R^n seen by the radial quadratures.
class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual int dim() const = 0;
  virtual double value(const Point& x) const = 0;
  // (Δ^j f)(x)
  virtual double laplacian_power(const Point& x, int j) const = 0;
  virtual QuadResult spherical_mean(const Point& x, double r) const = 0;
  // radial breakpoints about x; the last entry bounds the support numerically
  virtual std::vector<double> radial_breaks(const Point& x) const = 0;
  // smallest length scale of the field
  virtual double scale() const = 0;
};

// Δ^m applied to a finite sum of Gaussian terms; moments below degree 2m vanish.
class TestFunction : public ScalarField {
 public:
  TestFunction() = default;
  TestFunction(std::vector<GaussTerm> base, int m);

  int dim() const override { return n_; }
  int order() const { return m_; }
  const std::vector<GaussTerm>& base() const { return base_; }
  // Δ^{m+j} of the base sum, as Gaussian terms
  const std::vector<GaussTerm>& terms(int j = 0) const;

  double value(const Point& x) const override;
  double laplacian_power(const Point& x, int j) const override;
  QuadResult spherical_mean(const Point& x, double r) const override;
  std::vector<double> radial_breaks(const Point& x) const override;
  double scale() const override;
  cplx fourier(const Point& p) const;

  nlohmann::json to_json() const;
  static TestFunction from_json(const nlohmann::json& j);

 private:
  int n_ = 0, m_ = 0;
  std::vector<GaussTerm> base_;
  mutable std::vector<std::vector<GaussTerm>> lap_;  // lap_[j] = Δ^j base
};

struct TestShape {
  int terms = 1;
  int degree = 2;
  double sigma = 1.0;
  double spread = 0.5;  // centers uniform in [-spread, spread]^n
  bool radial = false;  // single centered term with a polynomial in |y|²
};

TestFunction make_test_function(int n, int m, const TestShape& shape, std::uint64_t seed);

// ∫ f g dx, exact for Gaussian terms
double l2_inner(const TestFunction& f, const TestFunction& g);
// C(z) = ∫ f(x) g(x - z) dx as Gaussian terms in z
std::vector<GaussTerm> cross_correlation(const TestFunction& f, const TestFunction& g);

// Radially symmetric field about `center` from samples u(k R / N), k = 0..N,
// interpolated by a quintic spline and taken as 0 beyond R.
class RadialField : public ScalarField {
 public:
  RadialField(int n, Point center, double R, const std::vector<double>& samples);

  int dim() const override { return n_; }
  double profile(double rho) const;
  double value(const Point& x) const override;
  double laplacian_power(const Point& x, int j) const override;  // j ≤ 1
  QuadResult spherical_mean(const Point& x, double r) const override;
  std::vector<double> radial_breaks(const Point& x) const override;
  double scale() const override { return 8 * h_; }

 private:
  struct Spline;
  double moment(double a, double b) const;  // ∫_a^b u(t) t dt
  int n_;
  Point c_;
  double R_, h_;
  std::shared_ptr<const Spline> spline_;
};

// Gauss–Hermite rule for weight e^{-t²}
void gauss_hermite(int q, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace fgf
