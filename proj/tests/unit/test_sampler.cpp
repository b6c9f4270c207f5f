#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fgf/lie.hpp"
#include "fgf/rng.hpp"
#include "fgf/sampler.hpp"

using namespace fgf;

namespace {

FieldSpec torus_spec(int n, int k, int K, Variant v = Variant::Plain, double lambda = 0, double s = 1) {
  FieldSpec f;
  f.n = n;
  f.k = k;
  f.cutoff = K;
  f.variant = v;
  f.lambda = lambda;
  f.s = s;
  return f;
}

bool skew_hermitian(const CMatrix& X, int N) {
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (std::abs(X[i * N + j] + std::conj(X[j * N + i])) > 1e-15) return false;
  return true;
}

}  // namespace

TEST_CASE("u(N) basis") {
  for (int N = 1; N <= 4; ++N) {
    auto B = lie_basis(N);
    CHECK(static_cast<int>(B.size()) == N * N);
    for (const auto& X : B) CHECK(skew_hermitian(X, N));
    CHECK(gram_error(B, N) <= 1e-14);
    CHECK(casimir_error(B, N) <= 1e-14);
  }
}

TEST_CASE("field spec json") {
  auto f = torus_spec(3, 1, 5, Variant::Proca, 0.7, 1.5);
  auto g = FieldSpec::from_json(f.to_json());
  CHECK(g.to_json() == f.to_json());
  FieldSpec l;
  l.torus = false;
  l.extents = {4, 5, 6};
  l.topology = Topology::Periodic;
  CHECK(FieldSpec::from_json(l.to_json()).to_json() == l.to_json());
  auto bad = f.to_json();
  bad["variant"] = "chern-simons";
  bad["lambda"] = 1.5;
  CHECK_THROWS_AS(FieldSpec::from_json(bad), InvalidArgument);
  bad = f.to_json();
  bad["beta"] = -1;
  CHECK_THROWS_AS(FieldSpec::from_json(bad), InvalidArgument);
}

TEST_CASE("mode covariance formulas") {
  std::vector<double> a{1, 2, -2};
  const double a2 = 9;
  auto tr = [](const ModeMatrix& C, int d) {
    cplx t = 0;
    for (int i = 0; i < d; ++i) t += C[i * d + i];
    return t.real();
  };
  CHECK(tr(mode_covariance(torus_spec(3, 1, 4), a), 3) == doctest::Approx(3 / a2).epsilon(1e-14));
  CHECK(tr(mode_covariance(torus_spec(3, 1, 4, Variant::Massive, 1.0), a), 3) ==
        doctest::Approx(3 / (a2 + 1)).epsilon(1e-14));
  // Proca: λ^{-1} on the exact line, (|α|²+λ)^{-1} on the 2-dim coexact plane
  CHECK(tr(mode_covariance(torus_spec(3, 1, 4, Variant::Proca, 0.5), a), 3) ==
        doctest::Approx(1 / 0.5 + 2 / (a2 + 0.5)).epsilon(1e-14));
  CHECK(tr(mode_covariance(torus_spec(3, 1, 4, Variant::ExactProjected), a), 3) ==
        doctest::Approx(1 / a2).epsilon(1e-14));
  // Chern–Simons white-noise weighting at |α| = 1, λ = 1/2: variances 2/3 and 2
  std::vector<double> e{1, 0, 0};
  auto C = mode_covariance(torus_spec(3, 1, 4, Variant::ChernSimons, 0.5, 0.0), e);
  auto v = curl_eigenbasis(e);
  for (int sg = 0; sg < 2; ++sg) {
    cplx q = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) q += std::conj(v[sg][i]) * C[i * 3 + j] * v[sg][j];
    CHECK(q.real() == doctest::Approx(sg == 0 ? 2.0 / 3.0 : 2.0).epsilon(1e-14));
    CHECK(std::abs(q.imag()) <= 1e-15);
  }
  CHECK(std::abs(C[0]) <= 1e-15);
}

TEST_CASE("torus samples are real and deterministic") {
  for (int N : {0, 2}) {
    auto f = torus_spec(3, 1, 3);
    f.matrix_size = N;
    TorusSampler S(f);
    auto a = S.sample(11, 2), b = S.sample(11, 2), c = S.sample(11, 3);
    CHECK(a.reality_defect() <= 1e-15);
    CHECK(a.data() == b.data());
    CHECK(a.data() != c.data());
    for (int comp = 0; comp < a.comps(); ++comp)
      for (int e = 0; e < a.entries(); ++e) CHECK(a.at(a.zero_mode(), comp, e) == cplx(0));
  }
}

TEST_CASE("torus sampler mode variances") {
  const int S = 4000;
  std::vector<double> alpha{1, -1, 2};
  for (auto v : {Variant::Plain, Variant::Massive, Variant::Proca, Variant::ChernSimons}) {
    auto f = torus_spec(3, 1, 2, v, v == Variant::ChernSimons ? 0.5 : 1.0);
    TorusSampler T(f);
    const long long m = T.sample(0).mode_index({1, -1, 2});
    auto C = mode_covariance(f, alpha);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        std::vector<double> re(S), im(S);
        for (int t = 0; t < S; ++t) {
          auto a = T.sample(5, t);
          cplx p = a.at(m, i) * std::conj(a.at(m, j));
          re[t] = p.real();
          im[t] = p.imag();
        }
        auto er = estimate_mean(re), ei = estimate_mean(im);
        CHECK(std::abs(er.value - C[i * 3 + j].real()) <= 5 * er.stderr_);
        CHECK(std::abs(ei.value - C[i * 3 + j].imag()) <= 5 * ei.stderr_ + 1e-12);
      }
  }
}

TEST_CASE("lattice sampler covariance") {
  FieldSpec f;
  f.n = 2;
  f.k = 1;
  f.torus = false;
  f.extents = {5, 6};
  f.topology = Topology::Periodic;
  const int S = 3000;
  for (auto v : {Variant::Plain, Variant::Massive, Variant::Proca, Variant::CoexactProjected}) {
    f.variant = v;
    f.lambda = v == Variant::Plain || v == Variant::CoexactProjected ? 0.0 : 0.8;
    auto cx = std::make_shared<const LatticeComplex>(2, f.extents, f.topology);
    LatticeForm phi(cx, 1), psi(cx, 1);
    Sequence rng(9, 0);
    for (auto& x : phi.values()) x = rng.normal();
    for (auto& x : psi.values()) x = rng.normal();
    std::vector<double> xs(S), ys(S);
    for (int t = 0; t < S; ++t) {
      auto a = sample_lattice(f, 3, t);
      xs[t] = inner(a, phi);
      ys[t] = inner(a, psi);
    }
    auto e = estimate_covariance(xs, ys);
    const double exact = lattice_covariance(f, phi, psi);
    CHECK(std::abs(e.value - exact) <= 5 * e.stderr_);
    CHECK(lattice_covariance(f, psi, phi) == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("gauge fixing") {
  auto a = sample_torus(torus_spec(3, 1, 3), 4);
  auto c = gauge_fix_coulomb(a);
  auto x = gauge_fix_axial(a, 2);
  CHECK(block_norm(spectral_dstar(c).data()) <= 1e-13);
  auto da = spectral_d(a), dc = spectral_d(c), dx = spectral_d(x);
  for (std::size_t i = 0; i < da.data().size(); ++i) {
    CHECK(std::abs(da.data()[i] - dc.data()[i]) <= 1e-13);
    CHECK(std::abs(da.data()[i] - dx.data()[i]) <= 1e-13);
  }
  for (long long m = 0; m < x.mode_count(); ++m)
    if (x.mode(m)[2] != 0) CHECK(std::abs(x.at(m, 2)) <= 1e-15);
  CHECK(x.reality_defect() <= 1e-14);
}

TEST_CASE("restriction oracles") {
  boost::math::quadrature::tanh_sinh<double> q;
  for (double s : {0.75, 1.0, 1.5, 2.2}) {
    double c = q.integrate([s](double t) {
      // u = tan t
      double u = std::tan(t);
      return std::pow(1 + u * u, 1 - s);
    }, -std::numbers::pi / 2, std::numbers::pi / 2) / (2 * std::numbers::pi);
    CHECK(hurst_constant(s) == doctest::Approx(c).epsilon(1e-8));
  }
  CHECK(hurst_constant(1.0) == doctest::Approx(0.5).epsilon(1e-14));
  // s = 1 closed form: Σ_m (a²+m²)^{-1} = π coth(π a)/a
  for (double a : {0.5, 1.0, 3.0, 16.0}) {
    double exact = std::numbers::pi / std::tanh(std::numbers::pi * a) / a / (2 * std::numbers::pi);
    CHECK(restricted_mode_variance(a * a, 1.0) == doctest::Approx(exact).epsilon(1e-9));
  }
  double brute = 0;
  for (int m = -3; m <= 3; ++m) brute += std::pow(4.0 + m * m, -1.3);
  CHECK(restricted_mode_variance(4.0, 1.3, 3) == doctest::Approx(brute / (2 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("restricted coefficients come from the torus field") {
  auto f = torus_spec(2, 0, 4);
  const double t = 0.7;
  auto b = restricted_coefficients(f, 0, t, {3}, 3, 21);
  for (int i = 0; i < 3; ++i) {
    auto a = sample_torus(f, 21, i);
    cplx acc = 0;
    for (int m = -4; m <= 4; ++m) acc += a.at(a.mode_index({m, 3}), 0) * std::polar(1.0, m * t);
    acc /= std::sqrt(2 * std::numbers::pi);
    CHECK(std::abs(acc - b[i]) <= 1e-13);
  }
}

TEST_CASE("fractional heat equation stationarity") {
  auto rep = fshe_stationary_check(1.0, {1.0, 2.0}, 0.05, 4000, 20, 10, 8);
  for (std::size_t i = 0; i < rep.mode_norm.size(); ++i) {
    double kappa = std::pow(rep.mode_norm[i], 2.0);
    CHECK(std::abs(rep.equal_time[i] - 1 / kappa) <= 4 * rep.equal_time_se[i]);
    CHECK(std::abs(rep.lag_cov[i] - std::exp(-kappa * rep.lag) / (2 * kappa)) <= 4 * rep.lag_cov_se[i]);
  }
}

TEST_CASE("covariance estimator") {
  std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 6};
  auto e = estimate_covariance(x, y);
  CHECK(e.value == doctest::Approx(2.5).epsilon(1e-14));
  // jackknife by explicit deletion
  std::vector<double> loo;
  for (int d = 0; d < 5; ++d) {
    double mx = 0, my = 0, s = 0;
    for (int i = 0; i < 5; ++i)
      if (i != d) mx += x[i] / 4, my += y[i] / 4;
    for (int i = 0; i < 5; ++i)
      if (i != d) s += (x[i] - mx) * (y[i] - my) / 3;
    loo.push_back(s);
  }
  double m = 0, v = 0;
  for (double l : loo) m += l / 5;
  for (double l : loo) v += (l - m) * (l - m);
  CHECK(e.stderr_ == doctest::Approx(std::sqrt(4.0 / 5.0 * v)).epsilon(1e-12));
}

TEST_CASE("derived laws") {
  auto test_form = [](int k, std::uint64_t seed) {
    auto f = torus_spec(3, k, 3, Variant::Plain, 0, 1.5);
    return sample_torus(f, seed, 77);
  };
  struct Case {
    int k;
    DerivedOp op;
    Variant v;
    int out_k;
  };
  for (auto c : {Case{0, DerivedOp::D, Variant::Plain, 1}, Case{1, DerivedOp::DStar, Variant::Plain, 0},
                 Case{1, DerivedOp::Star, Variant::Plain, 2}, Case{1, DerivedOp::Curl, Variant::CoexactProjected, 1}}) {
    auto spec = torus_spec(3, c.k, 3, c.v);
    std::vector<std::pair<TorusSpectrum, TorusSpectrum>> tests{{test_form(c.out_k, 1), test_form(c.out_k, 2)},
                                                                {test_form(c.out_k, 3), test_form(c.out_k, 3)}};
    auto rep = derived_law_check(spec, c.op, tests, 3000, 12);
    CHECK(rep.max_abs_z < 4.0);
    CHECK(rep.max_dd <= 1e-12);
    CHECK(rep.rows[1].analytic > 0);
  }
  // the analytic side for d on 0-forms at s = 1 is (φ, Eφ) in L²
  auto phi = test_form(1, 4);
  auto rep = derived_law_check(torus_spec(3, 0, 3), DerivedOp::D, {{phi, phi}}, 3, 1);
  CHECK(rep.rows[0].analytic == doctest::Approx(spectral_inner(spectral_project(phi, Projection::Exact), phi)));
  CHECK_THROWS_AS(derived_law_check(torus_spec(3, 0, 3), DerivedOp::DStar, {{phi, phi}}, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(derived_law_check(torus_spec(3, 0, 3), DerivedOp::D, {{test_form(2, 1), test_form(2, 1)}}, 10, 1),
                  InvalidArgument);
}

TEST_CASE("scaling of rescaled lattice observables") {
  for (int k : {0, 1}) {
    auto rows = scaling_check(3, k, k == 0 ? Variant::Plain : Variant::CoexactProjected, {6, 12, 24});
    // second-order convergence: the error shrinks about fourfold per halving
    CHECK(rows[0].rel_err < 0.20);
    CHECK(rows[1].rel_err < rows[0].rel_err / 3);
    CHECK(rows[2].rel_err < rows[1].rel_err / 3);
    CHECK(rows[2].beta == doctest::Approx(std::pow(1.0 / 24, 3 - 2 * k - 2)));
  }
  // the exact lattice variance agrees with samples on the coarsest box
  FieldSpec f;
  f.n = 3;
  f.k = 1;
  f.variant = Variant::CoexactProjected;
  f.torus = false;
  f.extents = {6, 6, 6};
  f.topology = Topology::Periodic;
  auto cx = std::make_shared<const LatticeComplex>(3, f.extents, f.topology);
  LatticeForm phi(cx, 1);
  Sequence rng(2, 0);
  for (auto& x : phi.values()) x = rng.normal();
  std::vector<double> xs(1500);
  for (std::size_t t = 0; t < xs.size(); ++t) xs[t] = inner(sample_lattice(f, 8, t), phi);
  auto e = estimate_covariance(xs, xs);
  CHECK(std::abs(e.value - lattice_covariance(f, phi, phi)) < 4 * e.stderr_);
  CHECK_THROWS_AS(scaling_check(3, 1, Variant::Massive, {6}), InvalidArgument);
}
