#include "fgf/testfn.hpp"
#include "quad.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/interpolators/cardinal_quintic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "fgf/rng.hpp"

namespace fgf {

namespace {


double norm(const Point& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// probabilists' Hermite polynomials He_0..He_k at x
std::vector<double> hermite_he(int k, double x) {
  std::vector<double> h(k + 1);
  h[0] = 1;
  if (k >= 1) h[1] = x;
  for (int i = 1; i < k; ++i) h[i + 1] = x * h[i] - i * h[i - 1];
  return h;
}

// GK over [a, b] split at the interior breaks
template <class F>
QuadResult integrate_pieces(F f, std::vector<double> pts, double tol) {
  return detail::adaptive_pieces(f, std::move(pts), tol);
}

}  // namespace

Poly Poly::constant(int n, double c) {
  Poly p(n);
  p.add_term(std::vector<int>(n, 0), c);
  return p;
}

int Poly::degree() const {
  int d = 0;
  for (const auto& [e, c] : c_) {
    int s = 0;
    for (int v : e) s += v;
    d = std::max(d, s);
  }
  return d;
}

void Poly::add_term(const std::vector<int>& exps, double coef) {
  if (coef == 0.0) return;
  auto& v = c_[exps];
  v += coef;
}

double Poly::operator()(const double* u) const {
  double s = 0;
  for (const auto& [e, c] : c_) {
    double t = c;
    for (int k = 0; k < n_; ++k)
      for (int i = 0; i < e[k]; ++i) t *= u[k];
    s += t;
  }
  return s;
}

Poly Poly::derivative(int axis) const {
  Poly p(n_);
  for (const auto& [e, c] : c_) {
    if (e[axis] == 0) continue;
    auto f = e;
    --f[axis];
    p.add_term(f, c * e[axis]);
  }
  return p;
}

Poly Poly::times_coord(int axis) const {
  Poly p(n_);
  for (const auto& [e, c] : c_) {
    auto f = e;
    ++f[axis];
    p.add_term(f, c);
  }
  return p;
}

Poly Poly::operator+(const Poly& o) const {
  Poly p = *this;
  if (p.n_ == 0) p.n_ = o.n_;
  for (const auto& [e, c] : o.c_) p.add_term(e, c);
  return p;
}

Poly Poly::operator*(const Poly& o) const {
  Poly p(std::max(n_, o.n_));
  for (const auto& [e1, c1] : c_)
    for (const auto& [e2, c2] : o.c_) {
      auto e = e1;
      for (int k = 0; k < p.n_; ++k) e[k] += e2[k];
      p.add_term(e, c1 * c2);
    }
  return p;
}

Poly Poly::operator*(double s) const {
  Poly p(n_);
  for (const auto& [e, c] : c_) p.add_term(e, c * s);
  return p;
}

Poly Poly::compose_affine(double A, const Point& b) const {
  // (A w_k + b_k)^j as univariate polynomials, cached per axis and power
  const int D = degree();
  std::vector<std::vector<Poly>> pw(n_, std::vector<Poly>(D + 1));
  for (int k = 0; k < n_; ++k) {
    pw[k][0] = constant(n_, 1.0);
    Poly lin(n_);
    std::vector<int> e(n_, 0);
    lin.add_term(e, b[k]);
    e[k] = 1;
    lin.add_term(e, A);
    for (int j = 1; j <= D; ++j) pw[k][j] = pw[k][j - 1] * lin;
  }
  Poly out(n_);
  for (const auto& [e, c] : c_) {
    Poly t = constant(n_, c);
    for (int k = 0; k < n_; ++k)
      if (e[k] > 0) t = t * pw[k][e[k]];
    out = out + t;
  }
  return out;
}

void Poly::prune(double tol) {
  for (auto it = c_.begin(); it != c_.end();) {
    if (std::abs(it->second) <= tol)
      it = c_.erase(it);
    else
      ++it;
  }
}

double GaussTerm::operator()(const Point& y) const {
  const int n = dim();
  double u[8], r2 = 0;
  for (int k = 0; k < n; ++k) {
    u[k] = y[k] - center[k];
    r2 += u[k] * u[k];
  }
  return poly(u) * std::exp(-r2 / (2 * sigma * sigma));
}

GaussTerm GaussTerm::laplacian() const {
  // ∂_k (P e) = (∂_k P - u_k P / σ²) e
  const double is2 = 1 / (sigma * sigma);
  auto d = [&](const Poly& p, int k) { return p.derivative(k) + p.times_coord(k) * (-is2); };
  GaussTerm t = *this;
  Poly acc(dim());
  for (int k = 0; k < dim(); ++k) acc = acc + d(d(poly, k), k);
  acc.prune();
  t.poly = acc;
  return t;
}

cplx GaussTerm::fourier(const Point& p) const {
  const int n = dim();
  const int D = poly.degree();
  std::vector<std::vector<cplx>> f(n, std::vector<cplx>(D + 1));
  cplx phase = 1;
  for (int k = 0; k < n; ++k) {
    auto he = hermite_he(D, sigma * p[k]);
    const double g = sigma * std::exp(-sigma * sigma * p[k] * p[k] / 2) / std::sqrt(2 * std::numbers::pi);
    cplx ik = 1;
    for (int a = 0; a <= D; ++a) {
      f[k][a] = ik * std::pow(-sigma, a) * he[a] * g;
      ik *= cplx(0, 1);
    }
    phase *= std::polar(1.0, -p[k] * center[k]);
  }
  cplx s = 0;
  for (const auto& [e, c] : poly.terms()) {
    cplx t = c;
    for (int k = 0; k < n; ++k) t *= f[k][e[k]];
    s += t;
  }
  return s * phase;
}

QuadResult sphere_average(const GaussTerm& t, const Point& x, double r, int i, int j, double tol, bool traceless) {
  const int n = t.dim();
  require(static_cast<int>(x.size()) == n, "point dimension mismatch");
  const bool weighted = i >= 0;
  const double shift = traceless && i == j ? 1.0 : 0.0;
  const double mult = traceless ? n : 1.0;
  if (r == 0.0) return {t(x) * (weighted ? mult * (i == j ? 1.0 / n : 0.0) - shift : 1.0), 0.0};
  Point y(n), w(n);
  auto g = [&](const Point& om) {
    for (int k = 0; k < n; ++k) y[k] = x[k] + r * om[k];
    return t(y) * (weighted ? mult * om[i] * om[j] - shift : 1.0);
  };
  if (n == 1) {
    w[0] = 1;
    double a = g(w);
    w[0] = -1;
    return {(a + g(w)) / 2, 0.0};
  }
  require(n <= 3, "sphere quadrature is implemented for n <= 3");
  // polar axis toward the Gaussian center
  Point e(n);
  double d = 0;
  for (int k = 0; k < n; ++k) {
    e[k] = t.center[k] - x[k];
    d += e[k] * e[k];
  }
  d = std::sqrt(d);
  if (d < 1e-14 * t.sigma) {
    std::fill(e.begin(), e.end(), 0.0);
    e[0] = 1;
  } else {
    for (auto& v : e) v /= d;
  }
  const double wd = t.sigma / r;
  std::vector<double> br{0.0, std::numbers::pi};
  for (double f : {1.0, 4.0, 12.0})
    if (f * wd < std::numbers::pi) br.push_back(f * wd);
  if (n == 2) {
    Point p{-e[1], e[0]};
    auto f = [&](double th) {
      for (int k = 0; k < 2; ++k) w[k] = std::cos(th) * e[k] + std::sin(th) * p[k];
      double a = g(w);
      for (int k = 0; k < 2; ++k) w[k] = std::cos(th) * e[k] - std::sin(th) * p[k];
      return a + g(w);
    };
    auto q = integrate_pieces(f, br, tol);
    return {q.value / (2 * std::numbers::pi), q.error / (2 * std::numbers::pi)};
  }
  // n = 3: orthonormal completion e1, e2
  int kmin = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(e[k]) < std::abs(e[kmin])) kmin = k;
  Point e1(3, 0.0);
  e1[kmin] = 1;
  double dot = e[kmin];
  for (int k = 0; k < 3; ++k) e1[k] -= dot * e[k];
  double nn = norm(e1);
  for (auto& v : e1) v /= nn;
  Point e2{e[1] * e1[2] - e[2] * e1[1], e[2] * e1[0] - e[0] * e1[2], e[0] * e1[1] - e[1] * e1[0]};
  // the azimuthal integrand is a trigonometric polynomial of degree ≤ deg + 2
  const int naz = (t.radial && !weighted) ? 1 : t.poly.degree() + (weighted ? 2 : 0) + 1;
  std::vector<double> ca(naz), sa(naz);
  for (int a = 0; a < naz; ++a) {
    ca[a] = std::cos(2 * std::numbers::pi * a / naz);
    sa[a] = std::sin(2 * std::numbers::pi * a / naz);
  }
  auto f = [&](double th) {
    const double c = std::cos(th), s = std::sin(th);
    double acc = 0;
    for (int a = 0; a < naz; ++a) {
      for (int k = 0; k < 3; ++k) w[k] = c * e[k] + s * (ca[a] * e1[k] + sa[a] * e2[k]);
      acc += g(w);
    }
    return acc / naz * s / 2;
  };
  return integrate_pieces(f, br, tol);
}

TestFunction::TestFunction(std::vector<GaussTerm> base, int m) : m_(m), base_(std::move(base)) {
  require(m >= 0, "vanishing order must be nonnegative");
  require(!base_.empty(), "test function needs at least one term");
  n_ = base_[0].dim();
  for (const auto& t : base_) {
    require(t.dim() == n_ && t.poly.dim() == n_, "test function terms differ in dimension");
    require(t.sigma > 0, "Gaussian width must be positive");
  }
  lap_.push_back(base_);
  for (int j = 1; j <= m_ + 6; ++j) {
    std::vector<GaussTerm> next;
    for (const auto& t : lap_.back()) next.push_back(t.laplacian());
    lap_.push_back(std::move(next));
  }
}

const std::vector<GaussTerm>& TestFunction::terms(int j) const {
  require(j >= 0 && m_ + j < static_cast<int>(lap_.size()), "Laplacian power out of the precomputed range");
  return lap_[m_ + j];
}

double TestFunction::value(const Point& x) const {
  double s = 0;
  for (const auto& t : terms(0)) s += t(x);
  return s;
}

double TestFunction::laplacian_power(const Point& x, int j) const {
  double s = 0;
  for (const auto& t : terms(j)) s += t(x);
  return s;
}

QuadResult TestFunction::spherical_mean(const Point& x, double r) const {
  QuadResult q;
  for (const auto& t : terms(0)) {
    auto a = sphere_average(t, x, r);
    q.value += a.value;
    q.error += a.error;
  }
  return q;
}

std::vector<double> TestFunction::radial_breaks(const Point& x) const {
  std::vector<double> b;
  double outer = 0;
  for (const auto& t : terms(0)) {
    Point u(n_);
    for (int k = 0; k < n_; ++k) u[k] = x[k] - t.center[k];
    const double d = norm(u);
    for (double f : {-12.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 12.0})
      if (d + f * t.sigma > 0) b.push_back(d + f * t.sigma);
    outer = std::max(outer, d + (14 + std::sqrt(t.poly.degree())) * t.sigma);
  }
  std::sort(b.begin(), b.end());
  b.push_back(outer);
  return b;
}

double TestFunction::scale() const {
  double s = base_[0].sigma;
  for (const auto& t : base_) s = std::min(s, t.sigma);
  return s;
}

cplx TestFunction::fourier(const Point& p) const {
  cplx s = 0;
  for (const auto& t : base_) s += t.fourier(p);
  double p2 = 0;
  for (double v : p) p2 += v * v;
  return s * std::pow(-p2, m_);
}

nlohmann::json TestFunction::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  j["m"] = m_;
  j["terms"] = nlohmann::json::array();
  for (const auto& t : base_) {
    nlohmann::json jt;
    jt["center"] = t.center;
    jt["sigma"] = t.sigma;
    jt["radial"] = t.radial;
    jt["poly"] = nlohmann::json::array();
    for (const auto& [e, c] : t.poly.terms()) jt["poly"].push_back({{"exponents", e}, {"coef", c}});
    j["terms"].push_back(jt);
  }
  return j;
}

TestFunction TestFunction::from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    std::vector<GaussTerm> base;
    for (const auto& jt : j.at("terms")) {
      GaussTerm t;
      t.center = jt.at("center").get<Point>();
      t.sigma = jt.at("sigma").get<double>();
      t.radial = jt.value("radial", false);
      t.poly = Poly(n);
      for (const auto& m : jt.at("poly")) t.poly.add_term(m.at("exponents").get<std::vector<int>>(), m.at("coef").get<double>());
      base.push_back(std::move(t));
    }
    return TestFunction(std::move(base), j.at("m").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad test function: ") + e.what());
  }
}

TestFunction make_test_function(int n, int m, const TestShape& shape, std::uint64_t seed) {
  require(n >= 1 && n <= 6, "n must be in 1..6");
  require(shape.terms >= 1 && shape.degree >= 0 && shape.sigma > 0, "bad test function shape");
  Sequence rng(seed, 0);
  std::vector<GaussTerm> base;
  const int terms = shape.radial ? 1 : shape.terms;
  for (int q = 0; q < terms; ++q) {
    GaussTerm t;
    t.center.resize(n);
    for (auto& c : t.center) c = shape.spread * (2 * rng.uniform() - 1);
    t.sigma = shape.sigma;
    t.poly = Poly(n);
    if (shape.radial) {
      t.radial = true;
      // Σ_l a_l |u|^{2l}
      Poly r2(n);
      for (int k = 0; k < n; ++k) {
        std::vector<int> e(n, 0);
        e[k] = 2;
        r2.add_term(e, 1.0);
      }
      Poly pw = Poly::constant(n, 1.0);
      for (int l = 0; 2 * l <= shape.degree; ++l) {
        t.poly = t.poly + pw * (l == 0 ? 1.0 : 0.5 * rng.normal());
        pw = pw * r2;
      }
    } else {
      // all monomials of total degree ≤ degree
      std::vector<int> e(n, 0);
      while (true) {
        int s = 0;
        for (int v : e) s += v;
        if (s <= shape.degree) t.poly.add_term(e, rng.normal() * std::pow(shape.sigma, -s));
        int k = 0;
        while (k < n && ++e[k] > shape.degree) e[k++] = 0;
        if (k == n) break;
      }
    }
    base.push_back(std::move(t));
  }
  return TestFunction(std::move(base), m);
}

void gauss_hermite(int q, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
  for (int k = 1; k < q; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(q);
  weights.resize(q);
  for (int k = 0; k < q; ++k) {
    nodes[k] = es.eigenvalues()(k);
    weights[k] = std::sqrt(std::numbers::pi) * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  }
}

std::vector<GaussTerm> cross_correlation(const TestFunction& f, const TestFunction& g) {
  require(f.dim() == g.dim(), "test functions differ in dimension");
  const int n = f.dim();
  std::vector<GaussTerm> out;
  for (const auto& a : f.terms(0))
    for (const auto& b : g.terms(0)) {
      const double s1 = a.sigma * a.sigma, s2 = b.sigma * b.sigma;
      const double A = 1 / s1 + 1 / s2, sc = std::sqrt(2 / A);
      const int q = (a.poly.degree() + b.poly.degree()) / 2 + 1;
      std::vector<double> t, w;
      gauss_hermite(q, t, w);
      GaussTerm c;
      c.center.resize(n);
      for (int k = 0; k < n; ++k) c.center[k] = a.center[k] - b.center[k];
      c.sigma = std::sqrt(s1 + s2);
      c.poly = Poly(n);
      // x - c1 = w/(A s2) + sc t,  x - z - c2 = -w/(A s1) + sc t
      std::vector<int> idx(n, 0);
      while (true) {
        Point shift(n);
        double wt = std::pow(sc, n);
        for (int k = 0; k < n; ++k) {
          shift[k] = sc * t[idx[k]];
          wt *= w[idx[k]];
        }
        c.poly = c.poly + a.poly.compose_affine(1 / (A * s2), shift) * b.poly.compose_affine(-1 / (A * s1), shift) * wt;
        int k = 0;
        while (k < n && ++idx[k] == q) idx[k++] = 0;
        if (k == n) break;
      }
      double big = 0;
      for (const auto& [e, v] : c.poly.terms()) big = std::max(big, std::abs(v));
      c.poly.prune(1e-15 * big);
      out.push_back(std::move(c));
    }
  return out;
}

double l2_inner(const TestFunction& f, const TestFunction& g) {
  Point zero(f.dim(), 0.0);
  double s = 0;
  for (const auto& t : cross_correlation(f, g)) s += t(zero);
  return s;
}

struct RadialField::Spline {
  boost::math::interpolators::cardinal_quintic_b_spline<double> s;
  std::vector<double> cum;  // cum[k] = ∫_0^{k h} u(t) t dt
};

namespace {

// ∫_a^b u(t) t dt inside one knot interval: 4-point Gauss–Legendre is exact
template <class S>
double knot_piece(const S& s, double a, double b) {
  static const boost::math::quadrature::gauss<double, 4> gl;
  return gl.integrate([&](double t) { return s(t) * t; }, a, b);
}

}  // namespace

RadialField::RadialField(int n, Point center, double R, const std::vector<double>& samples)
    : n_(n), c_(std::move(center)), R_(R) {
  require(static_cast<int>(c_.size()) == n, "center dimension mismatch");
  require(R > 0 && samples.size() >= 8, "radial profile needs at least 8 samples");
  const int N = static_cast<int>(samples.size()) - 1;
  h_ = R / N;
  // even extension to [-R, R] so the spline is smooth through the origin
  std::vector<double> y(2 * N + 1);
  for (int k = -N; k <= N; ++k) y[k + N] = samples[std::abs(k)];
  auto sp = std::make_shared<Spline>(Spline{{y, -R, h_, {0.0, 0.0}, {0.0, 0.0}}, std::vector<double>(N + 1, 0.0)});
  for (int k = 0; k < N; ++k) sp->cum[k + 1] = sp->cum[k] + knot_piece(sp->s, k * h_, (k + 1) * h_);
  spline_ = sp;
}

double RadialField::moment(double a, double b) const {
  const int N = static_cast<int>(spline_->cum.size()) - 1;
  b = std::min(b, R_);
  if (a >= b) return 0.0;
  const int ka = std::min(static_cast<int>(std::floor(a / h_)), N - 1);
  const int kb = std::min(static_cast<int>(std::floor(b / h_)), N - 1);
  if (ka == kb) return knot_piece(spline_->s, a, b);
  double v = knot_piece(spline_->s, a, (ka + 1) * h_) + knot_piece(spline_->s, kb * h_, b);
  return v + spline_->cum[kb] - spline_->cum[ka + 1];
}

double RadialField::profile(double rho) const { return rho >= R_ ? 0.0 : spline_->s(rho); }

double RadialField::value(const Point& x) const {
  Point u(n_);
  for (int k = 0; k < n_; ++k) u[k] = x[k] - c_[k];
  return profile(norm(u));
}

double RadialField::laplacian_power(const Point& x, int j) const {
  if (j == 0) return value(x);
  require(j == 1, "radial field provides Laplacian powers up to 1");
  Point u(n_);
  for (int k = 0; k < n_; ++k) u[k] = x[k] - c_[k];
  const double rho = norm(u);
  if (rho >= R_) return 0.0;
  if (rho < h_) return n_ * spline_->s.double_prime(0.0);
  return spline_->s.double_prime(rho) + (n_ - 1) * spline_->s.prime(rho) / rho;
}

QuadResult RadialField::spherical_mean(const Point& x, double r) const {
  Point u(n_);
  for (int k = 0; k < n_; ++k) u[k] = x[k] - c_[k];
  const double d = norm(u);
  if (r == 0) return {profile(d), 0.0};
  if (n_ == 1) return {(profile(std::abs(d - r)) + profile(d + r)) / 2, 0.0};
  if (n_ == 2) {
    auto f = [&](double th) { return profile(std::sqrt(std::max(0.0, d * d + r * r + 2 * d * r * std::cos(th)))); };
    auto q = integrate_pieces(f, {0.0, std::numbers::pi / 2, std::numbers::pi}, 1e-11);
    return {q.value / std::numbers::pi, q.error / std::numbers::pi};
  }
  require(n_ == 3, "radial field quadrature is implemented for n <= 3");
  if (d < 1e-12) return {profile(r), 0.0};
  return {moment(std::abs(d - r), d + r) / (2 * r * d), 0.0};
}

std::vector<double> RadialField::radial_breaks(const Point& x) const {
  Point u(n_);
  for (int k = 0; k < n_; ++k) u[k] = x[k] - c_[k];
  const double d = norm(u);
  std::vector<double> b;
  if (n_ == 3) {
    // the spherical mean is piecewise smooth between knot crossings of d ± r
    const int N = static_cast<int>(std::lround(R_ / h_));
    for (int k = 0; k <= N; ++k) {
      if (std::abs(k * h_ - d) > 0) b.push_back(std::abs(k * h_ - d));
      b.push_back(d + k * h_);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }
  for (int k = -16; k <= 16; ++k)
    if (d + k * R_ / 16 > 0) b.push_back(d + k * R_ / 16);
  return b;
}

}  // namespace fgf
