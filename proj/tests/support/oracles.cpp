#include "oracles.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "fgf/sampler.hpp"

namespace fgf::oracle {

namespace {

constexpr double kPi = std::numbers::pi;
using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

}  // namespace


// ∫_0^∞ q^w j_l(q) dq: tanh-sinh on [0, 1], Gauss–Kronrod to Q, Ooura tail
// using the asymptotic-free closed forms of j_l
double bessel_moment(int l, double w) {
  auto f = [&](double q) { return q < 1e-30 ? 0.0 : std::pow(q, w) * boost::math::sph_bessel(static_cast<unsigned>(l), q); };
  boost::math::quadrature::tanh_sinh<double> ts;
  const double Q = 40 * kPi;
  double acc = ts.integrate(f, 0.0, 1.0, 1e-14);
  for (int k = 0; k < 40; ++k) acc += GK::integrate(f, std::max(1.0, k * kPi), (k + 1) * kPi, 10, 1e-14);
  // j_l = P(1/q) sin q + R(1/q) cos q
  auto sc = [l](double q, double& as, double& ac) {
    if (l == 0) { as = 1 / q; ac = 0; }
    else if (l == 1) { as = 1 / (q * q); ac = -1 / q; }
    else { as = 3 / (q * q * q) - 1 / q; ac = -3 / (q * q); }
  };
  static boost::math::quadrature::ooura_fourier_sin<double> osin(1e-13);
  static boost::math::quadrature::ooura_fourier_cos<double> ocos(1e-13);
  auto gs = [&](double t) { double as, ac; sc(Q + t, as, ac); return std::pow(Q + t, w) * as; };
  auto gc = [&](double t) { double as, ac; sc(Q + t, as, ac); return std::pow(Q + t, w) * ac; };
  // sin(Q+t) = sin t, cos(Q+t) = cos t since Q is a multiple of 2π
  acc += osin.integrate(gs, 1.0).first + ocos.integrate(gc, 1.0).first;
  return acc;
}

// K^{d=0}(z) = (2π)^{-3} ∫ e^{ip·z} p pᵀ |p|^{-2-2s} dp in closed radial form
std::vector<double> fourier_closed_kernel(double s, const Point& z) {
  const double r = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
  const double F1 = bessel_moment(1, 1 - 2 * s), F2 = bessel_moment(2, 2 - 2 * s);
  const double pre = std::pow(r, 2 * s - 3) / (2 * kPi * kPi);
  std::vector<double> K(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) K[i * 3 + j] = pre * ((i == j ? F1 : 0.0) - F2 * z[i] * z[j] / (r * r));
  return K;
}

double fourier_green(double s, double r) { return std::pow(r, 2 * s - 3) / (2 * kPi * kPi) * bessel_moment(0, 2 - 2 * s); }

// ∫ mult(|p|) φ̂(p) e^{ip·x} dp for φ radial about its center, via the Hankel transform
double hankel_oracle(const TestFunction& phi, const Point& x, const std::function<double(double)>& mult) {
  const int n = phi.dim();
  const auto& c = phi.base()[0].center;
  double d = 0;
  for (int k = 0; k < n; ++k) d += (x[k] - c[k]) * (x[k] - c[k]);
  d = std::sqrt(d);
  auto f = [&](double p) {
    if (p == 0) return 0.0;
    Point pv(n, 0.0);
    pv[0] = p;
    // φ̂ with the center phase removed
    double fh = (phi.fourier(pv) * std::polar(1.0, p * c[0])).real();
    if (n == 3) return 4 * kPi * p * p * mult(p) * fh * boost::math::sph_bessel(0, p * d);
    return 2 * kPi * p * mult(p) * fh * boost::math::cyl_bessel_j(0, p * d);
  };
  const double P = 14 / phi.scale();
  double acc = 0;
  for (int k = 0; k < 14; ++k) acc += GK::integrate(f, P * k / 14, P * (k + 1) / 14, 15, 1e-13);
  return acc;
}

// (2π)^2 ∫ conj φ̂(p) w(p) ψ̂(p) dp in polar coordinates, n = 2
double fourier_pairing_2d(const TestFunction& phi, const TestFunction& psi, const std::function<double(const Point&)>& w) {
  const double P = 14 / std::min(phi.scale(), psi.scale());
  boost::math::quadrature::gauss<double, 40> gl;
  auto radial = [&](double p) {
    const int N = 64;
    double acc = 0;
    for (int a = 0; a < N; ++a) {
      double th = 2 * kPi * a / N;
      Point pv{p * std::cos(th), p * std::sin(th)};
      acc += (std::conj(phi.fourier(pv)) * psi.fourier(pv)).real() * w(pv);
    }
    return acc * 2 * kPi / N * p;
  };
  double acc = 0;
  for (int k = 0; k < 14; ++k) acc += gl.integrate(radial, P * k / 14, P * (k + 1) / 14);
  return 4 * kPi * kPi * acc;
}

TorusSpectrum coexact_loop_piece(int n, int K, double norm2, std::uint64_t seed) {
  FieldSpec spec;
  spec.n = n;
  spec.k = 1;
  spec.s = 0.0;
  spec.cutoff = K;
  auto g = spectral_project(sample_torus(spec, seed), Projection::Coexact);
  const double cur = spectral_inner_hminus(g, g, 1.0);
  for (auto& v : g.data()) v *= std::sqrt(norm2 / cur);
  return g;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace fgf::oracle
