#include "fgf/kernels.hpp"
#include "quad.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <tuple>

namespace fgf {

namespace {

constexpr double kPi = std::numbers::pi;

bool near_int(double v, double tol = 1e-12) { return std::abs(v - std::round(v)) <= tol; }

// sorted, deduplicated breakpoints restricted to [a, b] with both ends included
std::vector<double> panels(std::vector<double> br, double a, double b) {
  std::vector<double> p{a, b};
  for (double v : br)
    if (v > a && v < b) p.push_back(v);
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  return p;
}

template <class F>
QuadResult integrate_panels(F f, const std::vector<double>& p, double tol, bool singular_left) {
  QuadResult q;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    double err = 0, v;
    if (i == 0 && singular_left) {
      boost::math::quadrature::tanh_sinh<double> ts;
      v = ts.integrate(f, p[0], p[1], tol, &err);
    } else {
      auto a = detail::adaptive(f, p[i], p[i + 1], tol);
      v = a.value;
      err = a.error;
    }
    q.value += v;
    q.error += err;
  }
  return q;
}

}  // namespace

double KernelConstants::gamma(double alpha) const {
  if (alpha <= 0 && near_int(alpha / 2)) throw InvalidArgument("gamma_n: pole of Gamma(alpha/2)");
  if ((n - alpha) <= 0 && near_int((n - alpha) / 2)) throw InvalidArgument("gamma_n: pole of Gamma((n-alpha)/2)");
  return std::pow(2.0, alpha) * std::pow(kPi, n / 2.0) * std::tgamma(alpha / 2) / std::tgamma((n - alpha) / 2);
}

double KernelConstants::omega() const { return 2 * std::pow(kPi, n / 2.0) / std::tgamma(n / 2.0); }

double KernelConstants::pizzetti(int j) const {
  require(j >= 0, "Pizzetti index must be nonnegative");
  double h = 1;
  for (int i = 0; i < j; ++i) h /= 2.0 * (i + 1) * (n + 2 * i);
  return h;
}

KernelConstants constants(int n) {
  require(n >= 1, "dimension must be positive");
  return KernelConstants{n};
}

double green_kernel(double s, int n, double r) {
  require(s > 0, "pointwise kernel needs 2s > 0");
  require(r > 0, "kernel is singular at r = 0");
  const double m2 = 2 * s - n;
  if (m2 >= -1e-12 && near_int(m2 / 2)) {
    const int m = static_cast<int>(std::lround(m2 / 2));
    const double c = 2 * ((m + 1) % 2 ? -1.0 : 1.0) * std::pow(2.0, -(n + 2 * m)) * std::pow(kPi, -n / 2.0) /
                     (std::tgamma(m + 1.0) * std::tgamma((n + 2 * m) / 2.0));
    return c * std::pow(r, 2 * m) * std::log(r);
  }
  return std::pow(r, 2 * s - n) / constants(n).gamma(2 * s);
}

QuadResult fractional_apply(const ScalarField& f, double alpha, const Point& x, const QuadOptions& opt) {
  const int n = f.dim();
  require(static_cast<int>(x.size()) == n, "point dimension mismatch");
  const auto K = constants(n);
  if (alpha == 0) return {f.value(x), 0.0};
  if (alpha < 0 && near_int(alpha / 2)) {
    const int m = static_cast<int>(std::lround(-alpha / 2));
    return {(m % 2 ? -1.0 : 1.0) * f.laplacian_power(x, m), 0.0};
  }
  auto br = f.radial_breaks(x);
  const double R = br.back();
  double inner_err = 0;
  auto mean = [&](double r) {
    auto q = f.spherical_mean(x, r);
    inner_err = std::max(inner_err, q.error);
    return q.value;
  };
  if (alpha > 0) {
    const double m2 = alpha - n;
    const bool logcase = m2 >= -1e-12 && near_int(m2 / 2);
    double pref;
    std::function<double(double)> w;
    if (logcase) {
      const int m = static_cast<int>(std::lround(m2 / 2));
      pref = K.omega() * 2 * ((m + 1) % 2 ? -1.0 : 1.0) * std::pow(2.0, -(n + 2 * m)) * std::pow(kPi, -n / 2.0) /
             (std::tgamma(m + 1.0) * std::tgamma((n + 2 * m) / 2.0));
      w = [n, m](double r) { return std::pow(r, n + 2 * m - 1) * std::log(r); };
    } else {
      pref = K.omega() / K.gamma(alpha);
      w = [alpha](double r) { return std::pow(r, alpha - 1); };
    }
    auto p = panels(br, 0.0, R);
    auto q = integrate_panels([&](double r) { return r == 0 ? 0.0 : w(r) * mean(r); }, p, opt.tol, true);
    double wabs = integrate_panels([&](double r) { return r == 0 ? 0.0 : std::abs(w(r)); }, p, 1e-6, true).value;
    return {pref * q.value, std::abs(pref) * (q.error + inner_err * wabs)};
  }
  // α < 0: subtract the Pizzetti polynomial of degree < 2m
  const int m = static_cast<int>(std::ceil(-alpha / 2));
  std::vector<double> L(m + 1);
  for (int j = 0; j <= m; ++j) L[j] = f.laplacian_power(x, j);
  const double pref = K.omega() / K.gamma(alpha);
  auto T = [&](double r) {
    double t = 0, r2j = 1;
    for (int j = 0; j < m; ++j, r2j *= r * r) t += K.pizzetti(j) * L[j] * r2j;
    return t;
  };
  const double rs = 1e-3 * f.scale();
  double val = K.pizzetti(m) * L[m] * std::pow(rs, 2 * m + alpha) / (2 * m + alpha);
  double err = std::abs(K.pizzetti(m + 1) * std::pow(rs, 2 * m + 2 + alpha)) * std::abs(L[m]) / f.scale() / f.scale();
  for (int j = 0; j < m; ++j) val += K.pizzetti(j) * L[j] * std::pow(R, 2 * j + alpha) / (2 * j + alpha);
  auto p = panels(br, rs, R);
  auto q = integrate_panels([&](double r) { return (mean(r) - T(r)) * std::pow(r, alpha - 1); }, p, opt.tol, false);
  val += q.value;
  err += q.error + inner_err * std::pow(rs, alpha) / -alpha;
  return {pref * val, std::abs(pref) * err};
}

RadialField tabulate_fractional(const TestFunction& phi, double alpha, const Point& center, double R, int intervals,
                                const QuadOptions& opt) {
  const int n = phi.dim();
  require(static_cast<int>(center.size()) == n, "center dimension mismatch");
  require(intervals >= 8 && R > 0, "radial grid too small");
  for (const auto& t : phi.terms(0)) {
    require(t.radial, "tabulation needs a radially symmetric test function");
    for (int k = 0; k < n; ++k) require(std::abs(t.center[k] - center[k]) <= 1e-14, "test function is not centered");
  }
  std::vector<double> u(intervals + 1);
  Point x = center;
  for (int k = 0; k <= intervals; ++k) {
    x[0] = center[0] + R * k / intervals;
    u[k] = fractional_apply(phi, alpha, x, opt).value;
  }
  return RadialField(n, center, R, u);
}

std::vector<double> projected_kernel(double s, KernelVariant v, int n, const Point& x, const Point& y) {
  require(s > 0, "projected kernel needs s > 0");
  require(static_cast<int>(x.size()) == n && static_cast<int>(y.size()) == n, "point dimension mismatch");
  Point z(n);
  double r2 = 0;
  for (int k = 0; k < n; ++k) {
    z[k] = x[k] - y[k];
    r2 += z[k] * z[k];
  }
  require(r2 > 0, "projected kernel is singular at x = y");
  const double r = std::sqrt(r2), G = green_kernel(s, n, r);
  double cd, B;
  if (std::abs(s - 1) < 1e-14) {
    cd = 0.5;
    B = std::pow(r, -n) / (2 * constants(n).omega());
  } else if (s < 1) {
    cd = 1 / (2 * s);
    B = std::tgamma((n - 2 * (s - 1)) / 2) / (std::pow(2.0, 2 * s) * std::pow(kPi, n / 2.0) * std::tgamma(s + 1)) *
        std::pow(r, 2 * (s - 1) - n);
  } else {
    cd = 1 / (2 * s);
    B = std::tgamma(s - 1) / (4 * std::tgamma(s + 1)) * green_kernel(s - 1, n, r);
  }
  const double sg = v == KernelVariant::Closed ? -1.0 : 1.0;
  const double diag = v == KernelVariant::Closed ? cd : 1 - cd;
  std::vector<double> K(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K[i * n + j] = (i == j ? diag * G : 0.0) + sg * B * z[i] * z[j];
  return K;
}

void PVSchedule::validate() const {
  require(eps0 > 0 && std::isfinite(eps0), "epsilon ladder must start positive");
  require(levels >= 2, "epsilon ladder needs at least two levels");
  require(order >= 1 && order < levels, "Richardson order must be below the ladder length");
}

std::vector<double> PVSchedule::ladder() const {
  std::vector<double> e(levels);
  for (int j = 0; j < levels; ++j) e[j] = eps0 / std::pow(2.0, j);
  return e;
}

namespace {

PVResult riesz_from_corr(int i, int j, const std::vector<GaussTerm>& C, int n, const PVSchedule& sch) {
  sch.validate();
  require(i >= 0 && i < n && j >= 0 && j < n, "Riesz index out of range");
  auto eps = sch.ladder();
  const int L = sch.levels;
  std::vector<double> tail(L, 0.0);  // tail[k] = ∫_{ε_k}^∞
  double qerr = 0, contact = 0;
  Point origin(n, 0.0);
  for (const auto& t : C) {
    contact += t(origin);
    auto h = [&](double r) { return sphere_average(t, origin, r, i, j, 1e-12, true).value / r; };
    double d = 0;
    for (double c : t.center) d += c * c;
    d = std::sqrt(d);
    std::vector<double> br;
    for (double f : {-12.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 12.0}) br.push_back(d + f * t.sigma);
    const double R = d + (14 + std::sqrt(t.poly.degree())) * t.sigma;
    double acc = 0;
    for (int k = 0; k < L; ++k) {
      const double hi = k == 0 ? R : eps[k - 1];
      if (eps[k] < hi) {
        auto q = integrate_panels(h, panels(br, eps[k], hi), 1e-10, false);
        acc += q.value;
        qerr += q.error;
      }
      tail[k] += acc;
    }
  }
  PVResult res;
  res.eps = eps;
  const double ct = i == j ? -contact / n : 0.0;
  std::vector<double> v(L);
  for (int k = 0; k < L; ++k) v[k] = tail[k] + ct;
  res.truncated = v;
  // Richardson in powers of ε²
  std::vector<double> prev = v, cur;
  double spread = 0;
  for (int o = 1; o <= sch.order; ++o) {
    const double f = std::pow(4.0, o);
    cur.assign(prev.size() - 1, 0.0);
    for (std::size_t k = 0; k + 1 < prev.size(); ++k) cur[k] = (f * prev[k + 1] - prev[k]) / (f - 1);
    spread = std::abs(cur.back() - prev.back());
    prev = cur;
  }
  res.value = prev.back();
  res.error = spread + qerr;
  return res;
}

}  // namespace

PVResult pv_riesz(int i, int j, const TestFunction& phi, const TestFunction& psi, const PVSchedule& sch) {
  return riesz_from_corr(i, j, cross_correlation(phi, psi), phi.dim(), sch);
}

PVResult pv_projected_whitenoise(const std::vector<TestFunction>& phi, const std::vector<TestFunction>& psi,
                                 const PVSchedule& sch) {
  require(!phi.empty() && phi.size() == psi.size(), "2-form test functions need matching components");
  const int n = phi[0].dim();
  const auto masks = subsets(n, 2);
  require(phi.size() == masks.size(), "2-form needs C(n,2) components");
  std::vector<int> pos(1u << n, -1);
  for (std::size_t c = 0; c < masks.size(); ++c) pos[masks[c]] = static_cast<int>(c);
  // component of the antisymmetric extension: (index, sign)
  auto comp = [&](int a, int b) -> std::pair<int, double> {
    if (a == b) return {-1, 0.0};
    return {pos[(1u << a) | (1u << b)], a < b ? 1.0 : -1.0};
  };
  std::map<std::pair<int, int>, std::vector<GaussTerm>> corr;
  std::map<std::tuple<int, int, int, int>, PVResult> cache;
  auto riesz = [&](int I, int J, int a, int b) -> const PVResult& {
    if (a > b) std::swap(a, b);
    auto key = std::make_tuple(I, J, a, b);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto cit = corr.find({I, J});
    if (cit == corr.end()) cit = corr.emplace(std::make_pair(I, J), cross_correlation(phi[I], psi[J])).first;
    return cache.emplace(key, riesz_from_corr(a, b, cit->second, n, sch)).first->second;
  };
  PVResult out;
  out.eps = sch.ladder();
  out.truncated.assign(sch.levels, 0.0);
  auto accumulate = [&](double c, const PVResult& r) {
    out.value += c * r.value;
    out.error += std::abs(c) * r.error;
    for (int k = 0; k < sch.levels; ++k) out.truncated[k] += c * r.truncated[k];
  };
  // (φ, Eψ) = ½ Σ_{ijk} (φ_ij, -R_ik ψ_kj + R_jk ψ_ki)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto [I, si] = comp(i, j);
      if (I < 0) continue;
      for (int k = 0; k < n; ++k) {
        if (auto [J, sj] = comp(k, j); J >= 0) accumulate(-0.5 * si * sj, riesz(I, J, i, k));
        if (auto [J, sj] = comp(k, i); J >= 0) accumulate(0.5 * si * sj, riesz(I, J, j, k));
      }
    }
  return out;
}

Curve circle(const Vec3& center, const Vec3& normal, double radius, int nodes) {
  require(nodes >= 3 && radius > 0, "circle needs radius > 0 and at least 3 nodes");
  double nn = std::sqrt(normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]);
  require(nn > 0, "circle normal must be nonzero");
  Vec3 e{normal[0] / nn, normal[1] / nn, normal[2] / nn};
  int k = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(e[a]) < std::abs(e[k])) k = a;
  Vec3 u{0, 0, 0};
  u[k] = 1;
  double d = e[k];
  for (int a = 0; a < 3; ++a) u[a] -= d * e[a];
  double un = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  for (auto& v : u) v /= un;
  Vec3 w{e[1] * u[2] - e[2] * u[1], e[2] * u[0] - e[0] * u[2], e[0] * u[1] - e[1] * u[0]};
  Curve c;
  for (int t = 0; t < nodes; ++t) {
    double th = 2 * kPi * t / nodes;
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = center[a] + radius * (std::cos(th) * u[a] + std::sin(th) * w[a]);
    c.nodes.push_back(p);
  }
  return c;
}

Curve reversed(const Curve& c) {
  Curve r = c;
  std::reverse(r.nodes.begin(), r.nodes.end());
  return r;
}

double gauss_linking(const Curve& a, const Curve& b, double min_separation) {
  require(a.nodes.size() >= 3 && b.nodes.size() >= 3, "curves need at least 3 nodes");
  auto tangents = [](const Curve& c) {
    const std::size_t N = c.nodes.size();
    std::vector<Vec3> t(N);
    for (std::size_t k = 0; k < N; ++k) {
      const auto& p = c.nodes[(k + 1) % N];
      const auto& q = c.nodes[(k + N - 1) % N];
      for (int d = 0; d < 3; ++d) t[k][d] = (p[d] - q[d]) / 2;
    }
    return t;
  };
  auto ta = tangents(a), tb = tangents(b);
  double s = 0;
  for (std::size_t k = 0; k < a.nodes.size(); ++k)
    for (std::size_t l = 0; l < b.nodes.size(); ++l) {
      Vec3 d;
      for (int c = 0; c < 3; ++c) d[c] = a.nodes[k][c] - b.nodes[l][c];
      const double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      if (r < min_separation) throw InvalidArgument("curves intersect within tolerance");
      const auto& u = ta[k];
      const auto& v = tb[l];
      const double det = u[0] * (v[1] * d[2] - v[2] * d[1]) - u[1] * (v[0] * d[2] - v[2] * d[0]) +
                         u[2] * (v[0] * d[1] - v[1] * d[0]);
      s += det / (r * r * r);
    }
  return -s / (4 * kPi);
}

}  // namespace fgf
