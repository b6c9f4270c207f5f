#include "criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <sstream>

#include "fgf/kernels.hpp"
#include "fgf/lattice.hpp"
#include "fgf/lgt.hpp"
#include "fgf/lie.hpp"
#include "fgf/rng.hpp"
#include "fgf/sampler.hpp"
#include "fgf/torus.hpp"
#include "fgf/wilson.hpp"
#include "oracles.hpp"

namespace fgf::acceptance {

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // records a named requirement; failed ones are marked in the detail text
  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << (ok ? "" : "FAILED ") << what;
  }
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

ComplexPtr make_box(int n, std::vector<int> L, Topology t = Topology::Free) {
  return std::make_shared<const LatticeComplex>(n, std::move(L), t);
}

LatticeForm random_form(ComplexPtr cx, int k, Sequence& rng) {
  LatticeForm f(std::move(cx), k);
  for (auto& v : f.values()) v = rng.normal();
  return f;
}

double rel_norm(const LatticeForm& a, const LatticeForm& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0 ? (a - b).norm() : (a - b).norm() / s;
}

double block_rel(const Block& a, const Block& b) {
  double d = 0, s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += std::norm(a[i] - b[i]);
    s += std::norm(a[i]) + std::norm(b[i]);
  }
  return s == 0 ? std::sqrt(d) : std::sqrt(d / s);
}

long long choose(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

long long odd_factorial(int m) {
  long long r = 1;
  for (int k = m; k > 1; k -= 2) r *= k;
  return r;
}

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

// Σ_{c'~c}(f(c') - f(c)) over the 2n translates, for cells whose translates
// are all in the complex; returns the relative mismatch with the composed Δ
// and the number of cells compared.
std::pair<double, long long> coordinatewise_mismatch(const LatticeForm& f) {
  const auto& cx = f.complex();
  const int n = cx.dim(), k = f.degree();
  const LatticeForm lap = hodge_laplacian(f);
  double d2 = 0, s2 = 0;
  long long used = 0;
  for (long long i = 0; i < cx.cell_count(k); ++i) {
    const Cell c = cx.cell(k, i);
    double acc = 0;
    bool inside = true;
    for (int j = 0; j < n && inside; ++j)
      for (int s : {1, -1}) {
        Coord y = c.x;
        y[j] += s;
        const long long t = cx.index(k, c.mask, y);
        if (t < 0) {
          inside = false;
          break;
        }
        acc += f[t] - f[i];
      }
    if (!inside) continue;
    ++used;
    d2 += (lap[i] - acc) * (lap[i] - acc);
    s2 += acc * acc;
  }
  return {s2 > 0 ? std::sqrt(d2 / s2) : std::sqrt(d2), used};
}

Outcome exterior_identities(bool quick) {
  Outcome out;
  Sequence rng(101, 0);
  const int cases = quick ? 200 : 1000;
  double worst[6] = {0, 0, 0, 0, 0, 0};
  long long coordinatewise_cells = 0;
  for (int c = 0; c < cases; ++c) {
    const int n = 1 + static_cast<int>(rng.bits() % 4);
    const int kind = static_cast<int>(rng.bits() % 3);
    ComplexPtr cx;
    if (kind == 2 && n >= 3) {
      cx = std::make_shared<const LatticeComplex>(LatticeComplex::slab(n, 3 + static_cast<int>(rng.bits() % 2), 1));
    } else {
      const bool periodic = kind == 1;
      std::vector<int> L(n);
      for (auto& v : L) v = (periodic ? 3 : 2) + static_cast<int>(rng.bits() % 2);
      cx = make_box(n, L, periodic ? Topology::Periodic : Topology::Free);
    }
    const int k = static_cast<int>(rng.bits() % (n + 1));
    auto f = random_form(cx, k, rng);
    if (k < n) {
      auto df = exterior_derivative(f);
      worst[0] = std::max(worst[0], exterior_derivative(df).norm() / f.norm());
      auto g = random_form(cx, k + 1, rng);
      auto dsg = codifferential(g);
      const double lhs = inner(df, g), rhs = inner(f, dsg);
      worst[2] = std::max(worst[2], std::abs(lhs - rhs) / (df.norm() * g.norm() + f.norm() * dsg.norm()));
    }
    worst[1] = std::max(worst[1], codifferential(codifferential(f)).norm() / f.norm());
    auto [mis, used] = coordinatewise_mismatch(f);
    worst[5] = std::max(worst[5], mis);
    coordinatewise_cells += used;
    // Hodge star on one Fourier block of the same (n, k)
    std::vector<double> a(n);
    do {
      for (auto& v : a) v = std::floor(rng.uniform() * 9) - 4;
    } while (norm2(a) == 0);
    const auto& A = algebra(n);
    Block b(A.comps(k));
    for (auto& v : b) v = cplx(rng.normal(), rng.normal());
    Block ss = A.star(n - k, A.star(k, b));
    const double sgn = (k * (n - k)) % 2 ? -1.0 : 1.0;
    for (auto& v : ss) v *= sgn;
    worst[3] = std::max(worst[3], block_rel(ss, b));
    if (k >= 1) {
      Block via = A.star(n - k + 1, block_d(n, n - k, a, A.star(k, b)));
      const double sg = (n * (k + 1) + 1) % 2 ? -1.0 : 1.0;
      for (auto& v : via) v *= sg;
      worst[4] = std::max(worst[4], block_rel(via, block_dstar(n, k, a, b)));
    }
  }
  const char* names[6] = {"d^2", "(d*)^2", "adjointness", "star-star sign", "d* via star", "coordinatewise"};
  for (int i = 0; i < 6; ++i) out.require(worst[i] <= 1e-12, std::string(names[i]) + " " + fmt(worst[i], 2));
  out.require(coordinatewise_cells > 0, std::to_string(coordinatewise_cells) + " coordinatewise cells");
  out.detail << "; " << cases << " cases, tol 1e-12";
  return out;
}

Outcome hodge_projections(bool) {
  Outcome out;
  SolveOptions opt;
  opt.tol = 1e-10;
  opt.method = SolveMethod::PCG;
  Sequence rng(202, 0);
  std::vector<ComplexPtr> boxes{make_box(2, {7, 6}), make_box(3, {5, 4, 6}),
                                std::make_shared<const LatticeComplex>(LatticeComplex::slab(3, 8, 1)),
                                make_box(4, {3, 4, 3, 3})};
  double sum = 0, idem = 0, orth = 0, image = 0, top = 0;
  for (const auto& cx : boxes) {
    const int n = cx->dim();
    for (int k = 0; k <= n; ++k) {
      auto f = remove_kernel(random_form(cx, k, rng));
      auto g = remove_kernel(random_form(cx, k, rng));
      auto pe = hodge_project(f, HodgePart::Exact, opt), pc = hodge_project(f, HodgePart::Coexact, opt);
      sum = std::max(sum, rel_norm(pe + pc, f));
      idem = std::max(idem, rel_norm(hodge_project(pe, HodgePart::Exact, opt), pe));
      idem = std::max(idem, rel_norm(hodge_project(pc, HodgePart::Coexact, opt), pc));
      orth = std::max(orth, std::abs(inner(pe, hodge_project(g, HodgePart::Coexact, opt))) / (f.norm() * g.norm()));
      if (k >= 1) {
        auto dh = exterior_derivative(random_form(cx, k - 1, rng));
        image = std::max(image, rel_norm(hodge_project(dh, HodgePart::Exact, opt), dh));
      }
      if (n == 2 && k == 2) top = std::max(top, rel_norm(pe, f));
    }
  }
  out.require(sum <= 1e-8, "E+E*=I " + fmt(sum, 2));
  out.require(idem <= 1e-8, "idempotence " + fmt(idem, 2));
  out.require(orth <= 1e-8, "orthogonality " + fmt(orth, 2));
  out.require(image <= 1e-8, "E(dh)=dh " + fmt(image, 2));
  out.require(top <= 1e-8, "n=2 top degree exact part = I " + fmt(top, 2));
  out.detail << "; PCG tol 1e-10, bound 1e-8";
  return out;
}

Outcome pascal_dimensions(bool) {
  Outcome out;
  Sequence rng(303, 0);
  int bad = 0;
  for (int c = 0; c < 200; ++c) {
    const int n = 1 + static_cast<int>(rng.bits() % 5);
    const int k = static_cast<int>(rng.bits() % (n + 1));
    Mode a(n);
    bool zero = true;
    while (zero) {
      for (auto& v : a) v = static_cast<int>(rng.bits() % 11) - 5;
      zero = std::all_of(a.begin(), a.end(), [](int v) { return v == 0; });
    }
    auto [e, co] = block_dims_by_rank(n, k, a);
    if (e != choose(n - 1, k - 1) || co != choose(n - 1, k)) ++bad;
  }
  out.require(bad == 0, std::to_string(bad) + "/200 mismatches against (C(n-1,k-1), C(n-1,k))");
  return out;
}

TorusSpectrum smooth_form(int k, int K, std::uint64_t seed) { return sample_torus(torus_spec(3, k, K, Variant::Plain, 0, 1.5), seed, 77); }

Outcome sampler_covariance(bool quick) {
  Outcome out;
  const int K = 8, S = quick ? 2000 : 10000;
  struct Case {
    const char* name;
    Variant v;
    double lambda;
  };
  for (auto c : {Case{"plain", Variant::Plain, 0}, Case{"massive", Variant::Massive, 1},
                 Case{"proca", Variant::Proca, 1}, Case{"chern-simons", Variant::ChernSimons, 0.5}}) {
    auto spec = torus_spec(3, 1, K, c.v, c.lambda);
    TorusSampler T(spec);
    std::vector<TorusSpectrum> forms;
    for (int i = 0; i < 11; ++i) forms.push_back(smooth_form(1, K, 500 + i));
    // ten pairs (φ_i, φ_{i+1}), with one of them diagonal
    std::vector<std::vector<double>> proj(forms.size(), std::vector<double>(S));
    for (int t = 0; t < S; ++t) {
      auto a = T.sample(41, t);
      for (std::size_t i = 0; i < forms.size(); ++i) proj[i][t] = spectral_inner(a, forms[i]);
    }
    double zmax = 0;
    for (int p = 0; p < 10; ++p) {
      const int i = p, j = p == 9 ? p : p + 1;
      auto e = estimate_covariance(proj[i], proj[j]);
      const double exact = torus_covariance(spec, forms[i], forms[j]);
      zmax = std::max(zmax, std::abs(e.value - exact) / e.stderr_);
    }
    out.require(zmax <= 4.0, std::string(c.name) + " max|z| " + fmt(zmax));
  }
  out.detail << "; T^3 cutoff 8, " << S << " samples, 10 pairs each, bound 4 sigma";
  return out;
}

Outcome derived_laws(bool quick) {
  Outcome out;
  const int K = 4, S = quick ? 2000 : 10000;
  struct Case {
    const char* name;
    int k;
    DerivedOp op;
    Variant v;
    int out_k;
  };
  for (auto c : {Case{"d k=0", 0, DerivedOp::D, Variant::Plain, 1}, Case{"d k=1", 1, DerivedOp::D, Variant::Plain, 2},
                 Case{"d* k=1", 1, DerivedOp::DStar, Variant::Plain, 0},
                 Case{"star k=1", 1, DerivedOp::Star, Variant::Plain, 2},
                 Case{"curl coexact", 1, DerivedOp::Curl, Variant::CoexactProjected, 1}}) {
    std::vector<std::pair<TorusSpectrum, TorusSpectrum>> tests;
    for (int p = 0; p < 4; ++p) tests.push_back({smooth_form(c.out_k, K, 10 + p), smooth_form(c.out_k, K, p == 3 ? 13 : 11 + p)});
    auto rep = derived_law_check(torus_spec(3, c.k, K, c.v), c.op, tests, S, 12);
    out.require(rep.max_abs_z <= 4.0 && rep.max_dd <= 1e-12,
                std::string(c.name) + " max|z| " + fmt(rep.max_abs_z) + (rep.max_dd > 0 ? " dd " + fmt(rep.max_dd, 2) : ""));
  }
  out.detail << "; s=1, T^3 cutoff 4, " << S << " samples, bound 4 sigma";
  return out;
}

Outcome kernel_oracles(bool quick) {
  Outcome out;
  Sequence rng(606, 0);
  // 20 pairs against the Fourier-side projector, n = 3
  double worst = 0;
  int pair = 0;
  for (double s : {0.75, 1.0, 1.25})
    for (int rep = 0; rep < 7 && pair < (quick ? 6 : 20); ++rep, ++pair) {
      Point x{rng.normal(), rng.normal(), rng.normal()}, y{rng.normal(), rng.normal(), rng.normal()};
      Point z{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
      auto A = projected_kernel(s, KernelVariant::Closed, 3, x, y);
      auto B = projected_kernel(s, KernelVariant::Coclosed, 3, x, y);
      auto F = oracle::fourier_closed_kernel(s, z);
      const double G = oracle::fourier_green(s, std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]));
      double scale = 0;
      for (double v : F) scale = std::max(scale, std::abs(v));
      for (int e = 0; e < 9; ++e) {
        worst = std::max(worst, std::abs(A[e] - F[e]) / scale);
        worst = std::max(worst, std::abs(B[e] - ((e % 4 == 0 ? G : 0.0) - F[e])) / scale);
      }
    }
  out.require(worst <= 1e-3, std::to_string(pair) + " pairs vs Fourier projector " + fmt(worst, 2));
  // K^{d=0} + K^{d*=0} = G^s I
  double split = 0;
  for (int n = 2; n <= 4; ++n)
    for (double s : {0.3, 0.8, 1.0, 1.5, 2.0, 2.6}) {
      Point x(n), y(n);
      for (int k = 0; k < n; ++k) {
        x[k] = rng.normal();
        y[k] = rng.normal();
      }
      auto a = projected_kernel(s, KernelVariant::Closed, n, x, y);
      auto b = projected_kernel(s, KernelVariant::Coclosed, n, x, y);
      double r = 0;
      for (int k = 0; k < n; ++k) r += (x[k] - y[k]) * (x[k] - y[k]);
      const double G = green_kernel(s, n, std::sqrt(r));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          split = std::max(split, std::abs(a[i * n + j] + b[i * n + j] - (i == j ? G : 0.0)) / std::abs(G));
    }
  out.require(split <= 1e-12, "K+K*=G I " + fmt(split, 2));
  // Σ_i R_ii = -(φ, ψ)
  auto f = make_test_function(2, 0, {2, 2, 0.8, 0.6, false}, 21);
  auto g = make_test_function(2, 0, {2, 2, 0.9, 0.6, false}, 22);
  const double fg = l2_inner(f, g);
  const double trace = pv_riesz(0, 0, f, g).value + pv_riesz(1, 1, f, g).value;
  const double tr_err = oracle::rel(trace, -fg);
  out.require(tr_err <= 1e-3, "Riesz trace " + fmt(tr_err, 2));
  // (-Δ)^{α/2} (-Δ)^{-α/2} φ = φ
  auto phi = make_test_function(3, 1, {1, 2, 1.0, 0.0, true}, 12);
  const Point c = phi.base()[0].center;
  double trip = 0;
  for (double alpha : {0.5, 1.5}) {
    auto u = tabulate_fractional(phi, alpha, c, 24.0, 160);
    for (Point x : {Point{0.0, 0.0, 0.0}, Point{0.5, 0.2, -0.3}, Point{1.1, 0.0, 0.4}})
      trip = std::max(trip, oracle::rel(fractional_apply(u, -alpha, x).value, phi.value(x)));
  }
  out.require(trip <= 1e-4, "round trip " + fmt(trip, 2));
  return out;
}

std::vector<int> partner_of(int m, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<int> p(m);
  for (auto [a, b] : pairs) {
    p[a - 1] = b - 1;
    p[b - 1] = a - 1;
  }
  return p;
}

Outcome cycle_counts(bool) {
  Outcome out;
  const int v1 = pairing_vertices(partner_of(8, {{1, 5}, {2, 4}, {3, 8}, {6, 7}}), {8});
  out.require(v1 == 2, "single 8-gon fixture V=" + std::to_string(v1) + " (expected 2)");
  const int v2 = pairing_vertices(partner_of(12, {{1, 11}, {2, 7}, {3, 6}, {4, 10}, {5, 9}, {8, 12}}), {4, 3, 5});
  out.require(v2 == 3, "mu=(4,3,5) fixture V=" + std::to_string(v2) + " (expected 3)");
  bool counts = true;
  std::string seen;
  for (int m = 2; m <= 8; m += 2) {
    const auto maps = pairing_maps(m, {m});
    counts = counts && static_cast<long long>(maps.size()) == odd_factorial(m - 1);
    seen += (seen.empty() ? "" : ",") + std::to_string(maps.size());
  }
  out.require(counts, "(m-1)!! enumeration counts " + seen);
  return out;
}

Outcome casimir(bool) {
  Outcome out;
  double worst = 0;
  for (int N : {1, 2, 3}) {
    auto basis = lie_basis(N);
    if (static_cast<int>(basis.size()) != N * N) {
      out.require(false, "basis size for N=" + std::to_string(N));
      continue;
    }
    // Σ_a (E_a)_{ij} (E_a)_{kl} = -(1/N) δ_il δ_kj
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
          for (int l = 0; l < N; ++l) {
            cplx acc = 0;
            for (const auto& E : basis) acc += E[i * N + j] * E[k * N + l];
            const double target = (i == l && k == j) ? -1.0 / N : 0.0;
            worst = std::max(worst, std::abs(acc - target));
          }
    // orthonormal under -N Re Tr(XY)
    for (std::size_t a = 0; a < basis.size(); ++a)
      for (std::size_t b = 0; b < basis.size(); ++b) {
        cplx tr = 0;
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j) tr += basis[a][i * N + j] * basis[b][j * N + i];
        worst = std::max(worst, std::abs(-N * tr.real() - (a == b ? 1.0 : 0.0)));
      }
  }
  out.require(worst <= 1e-12, "N=1,2,3 max entry error " + fmt(worst, 2));
  return out;
}

Outcome surface_sum(bool quick) {
  Outcome out;
  const int n = 2, K = 3;
  auto loop = BigLoop::constant(oracle::coexact_loop_piece(n, K, 0.25, 11));
  SurfaceSumOptions o;
  o.m_max = 8;
  auto r1 = surface_sum_expectation({loop}, 1, o);
  const double e1 = oracle::rel(r1.value, std::exp(-0.125));
  out.require(e1 <= 1e-6, "N=1 vs exp(-1/8) rel " + fmt(e1, 2));
  auto big = BigLoop::piecewise({0.0, 0.4, 1.0}, {oracle::coexact_loop_piece(n, K, 0.3, 21), oracle::coexact_loop_piece(n, K, 0.2, 22)});
  SurfaceSumOptions o2;
  o2.m_max = 6;
  o2.mc_tuples = quick ? 4000 : 20000;
  o2.tail_tolerance = 1e-4;
  auto r2 = surface_sum_expectation({big}, 2, o2);
  FieldSpec spec = torus_spec(n, 1, K);
  spec.matrix_size = 2;
  TorusSampler sampler(spec);
  const int S = quick ? 2000 : 10000;
  std::vector<double> tr(S);
  for (int t = 0; t < S; ++t) tr[t] = mat_trace(holonomy_series(sampler.sample(5, t), big, 40, 1e-10), 2).real();
  auto est = estimate_mean(tr);
  const double sigma = std::hypot(est.stderr_, r2.stderr_);
  const double z = std::abs(r2.value - est.value) / sigma;
  out.require(std::abs(r2.value - est.value) <= 3 * sigma + r2.tail_bound,
              "N=2 series " + fmt(r2.value, 5) + "+-" + fmt(r2.stderr_, 2) + " vs holonomy MC " + fmt(est.value, 5) +
                  "+-" + fmt(est.stderr_, 2) + " (" + fmt(z, 2) + " sigma, " + std::to_string(S) + " fields)");
  return out;
}

Outcome confinement(bool quick) {
  Outcome out;
  // n = 2: (γ, (-Δ)^{-1} γ) is the area for every rectangle
  auto cx2 = make_box(2, {40, 40});
  double area_err = 0;
  int rects = 0;
  for (int L : {1, 2, 3, 5, 8, 13})
    for (int H : {1, 4, 7, 12}) {
      auto loop = build_rect_loop(cx2, 0, 1, Coord{20 - L / 2, 20 - H / 2}, L, H, false);
      area_err = std::max(area_err, oracle::rel(loop_energy(loop), double(L * H)));
      ++rects;
    }
  out.require(area_err <= 1e-9, "n=2 area law on " + std::to_string(rects) + " rectangles " + fmt(area_err, 2));
  std::vector<int> Ls = quick ? std::vector<int>{6, 8, 10} : std::vector<int>{6, 8, 10, 12, 14, 16};
  auto s4 = confinement_scan(4, -1, Ls, 1.0);
  out.require(s4.variation_all <= 0.10, "n=4 value/perim variation " + fmt(s4.variation_all));
  auto s3 = confinement_scan(3, -1, Ls, 1.0);
  out.require(s3.variation_all <= 0.10, "n=3 value/(perim log perim) variation " + fmt(s3.variation_all));
  for (int M : {1, 2}) {
    auto sl = confinement_scan(3, M, Ls, 1.0);
    out.require(sl.variation_all <= 0.15, "slab M=" + std::to_string(M) + " value/area variation " + fmt(sl.variation_all));
  }
  out.detail << "; L " << Ls.front() << ".." << Ls.back() << ", margin 3, (max-min)/mean over all L";
  return out;
}

Outcome mass_gap(bool quick) {
  Outcome out;
  std::vector<int> ds = quick ? std::vector<int>{4, 8, 12} : std::vector<int>{4, 6, 8, 10, 12, 14, 16};
  for (int M : {1, 2}) {
    auto rep = slab_mass_gap(3, M, ds, 40, 48);
    out.require(rep.rate > 0 && rep.max_rel_diff <= 0.05, "slab M=" + std::to_string(M) + " rate " + fmt(rep.rate) +
                                                              " two-box diff " + fmt(rep.max_rel_diff, 2));
  }
  auto full = full_box_decay(3, ds, 40, 48);
  out.require(std::abs(full.exponent - (-1.0)) <= 0.5, "full-box n=3 exponent " + fmt(full.exponent) + " (window -1+-0.5)");
  out.detail << "; distances " << ds.front() << ".." << ds.back() << ", boxes 40/48";
  return out;
}

Outcome lgt_crosscheck(bool quick) {
  Outcome out;
  {
    auto cx = make_box(2, {16, 16});
    auto loops = translated_loops(cx, 0, 1, 3, 3, Coord{2, 2}, Coord{11, 11});
    MetropolisOptions o;
    o.sweeps = quick ? 3000 : 20000;
    o.burn_in = quick ? 300 : 1000;
    o.seed = 6;
    auto r = wilson_mc_estimate(cx, 6.0, loops, o);
    const double exact = u1_exact_2d(6.0, 9);
    const double gauss = wilson_gaussian_expectation(build_rect_loop(cx, 0, 1, Coord{6, 6}, 3, 3, false), 6.0);
    out.require(std::abs(r.value - exact) <= 3 * r.stderr_,
                "2D beta=6 3x3 W " + fmt(r.value, 4) + "+-" + fmt(r.stderr_, 2) + " vs exact " + fmt(exact, 4));
    out.require(std::abs(r.value - gauss) <= 0.15 * gauss, "vs Gaussian " + fmt(gauss, 4));
    // the loop is gauge invariant under the tree gauge fixing
    U1Lattice lat(cx, 6.0);
    Sequence rng(12, 0);
    std::vector<double> th(lat.edges());
    for (auto& v : th) v = rng.normal();
    lat.set_angles(th);
    const double before = lat.wilson_loop(loops.front().edges);
    gauge_fix_tree(lat, Coord{0, 0});
    out.require(std::abs(lat.wilson_loop(loops.front().edges) - before) <= 1e-12, "tree gauge invariance");
  }
  {
    auto cx = make_box(3, {12, 12, 12});
    auto loops = translated_loops(cx, 0, 1, 2, 2, Coord{4, 4, 4}, Coord{6, 6, 7});
    double gauss = 0;
    for (const auto& l : loops) gauss += wilson_gaussian_expectation(l, 8.0);
    gauss /= loops.size();
    MetropolisOptions o;
    o.sweeps = quick ? 1000 : 8000;
    o.burn_in = 300;
    o.seed = 7;
    auto r = wilson_mc_estimate(cx, 8.0, loops, o);
    out.require(std::abs(r.value - gauss) <= 3 * r.stderr_ + 0.1 * gauss,
                "3D beta=8 2x2 W " + fmt(r.value, 4) + "+-" + fmt(r.stderr_, 2) + " vs Gaussian " + fmt(gauss, 4));
  }
  return out;
}

Outcome linking(bool) {
  Outcome out;
  auto a = circle({0, 0, 0}, {0, 0, 1}, 1.0, 512);
  auto b = circle({1, 0, 0}, {0, 1, 0}, 1.0, 512);
  const double lk = gauss_linking(a, b);
  out.require(std::abs(std::abs(lk) - 1) <= 1e-2, "Hopf " + fmt(lk, 6));
  const double far = gauss_linking(a, circle({3, 0, 0.5}, {0, 1, 0}, 1.0, 512));
  out.require(std::abs(far) <= 1e-3, "unlinked " + fmt(far, 2));
  const double anti = std::max(std::abs(gauss_linking(reversed(a), b) + lk), std::abs(gauss_linking(a, reversed(b)) + lk));
  out.require(anti <= 1e-12 * std::abs(lk), "orientation antisymmetry " + fmt(anti, 2));
  return out;
}

Outcome restriction_fshe(bool quick) {
  Outcome out;
  const int S = quick ? 1000 : 4000;
  double zmax = 0, hurst = 0, hurst_trunc = 0;
  const std::vector<Mode> window{{4, 0}, {3, 4}, {0, 7}, {6, 8}, {0, 12}, {11, 11}, {16, 0}};
  const std::vector<Mode> outside{{1, 0}, {2, 1}};
  for (double s : {1.0, 1.5}) {
    auto spec = torus_spec(3, 0, 64, Variant::Plain, 0, s);
    auto rows = restrict_hyperplane(spec, 2, 0.3, window, S, 31);
    auto extra = restrict_hyperplane(spec, 2, 0.3, outside, S, 32);
    for (const auto& r : rows) {
      hurst = std::max(hurst, std::abs(r.hurst_proxy / r.untruncated - 1));
      hurst_trunc = std::max(hurst_trunc, std::abs(r.hurst_proxy / r.exact - 1));
    }
    rows.insert(rows.end(), extra.begin(), extra.end());
    for (const auto& r : rows) zmax = std::max(zmax, std::abs(r.empirical - r.exact) / r.stderr_);
  }
  out.require(zmax <= 4.0, "restricted variance vs mode sum max|z| " + fmt(zmax));
  out.require(hurst <= 0.10, "Hurst proxy vs mode sum in 4<=|a'|<=16 " + fmt(hurst, 2) + " (cutoff-truncated " +
                                 fmt(hurst_trunc, 2) + ")");
  double z_eq = 0, z_lag = 0;
  for (double s : {0.75, 1.0}) {
    auto rep = fshe_stationary_check(s, {1.0, 2.0, 3.0}, 0.05, quick ? 2000 : 4000, quick ? 20 : 40, 10, 8);
    for (std::size_t i = 0; i < rep.mode_norm.size(); ++i) {
      const double kappa = std::pow(rep.mode_norm[i], 2 * s);
      z_eq = std::max(z_eq, std::abs(rep.equal_time[i] - 1 / kappa) / rep.equal_time_se[i]);
      z_lag = std::max(z_lag, std::abs(rep.lag_cov[i] - std::exp(-kappa * rep.lag) / (2 * kappa)) / rep.lag_cov_se[i]);
    }
  }
  out.require(z_eq <= 4.0 && z_lag <= 4.0, "heat equation stationary variance max|z| " + fmt(z_eq) + ", lag covariance " + fmt(z_lag));
  out.detail << "; n=3 cutoff 64, s in {1,1.5}, " << S << " samples";
  return out;
}

Outcome scaling(bool) {
  Outcome out;
  const std::vector<int> Ls{8, 16, 32};
  struct Case {
    const char* name;
    int k;
    Variant v;
  };
  for (auto c : {Case{"k=0", 0, Variant::Plain}, Case{"k=1", 1, Variant::Plain}, Case{"k=1 coexact", 1, Variant::CoexactProjected}}) {
    auto rows = scaling_check(3, c.k, c.v, Ls);
    double step = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
      step = std::max(step, std::abs(rows[i].rescaled - rows[i - 1].rescaled) / std::abs(rows[i].rescaled));
    const double last = rows.back().rel_err;
    out.require(step <= 0.10 && last <= 0.10, std::string(c.name) + " halving change " + fmt(step, 2) + ", error at L=" +
                                                  std::to_string(rows.back().L) + " " + fmt(last, 2));
  }
  out.detail << "; periodic n=3, beta = eps^(n-2k-2)";
  return out;
}

struct Entry {
  int id;
  const char* title;
  double limit;
  Outcome (*fn)(bool);
};

const Entry kEntries[kCriteria] = {
    {1, "exterior calculus identities", 30, exterior_identities},
    {2, "Hodge projections", 60, hodge_projections},
    {3, "Pascal block dimensions", 10, pascal_dimensions},
    {4, "sampler covariance", 300, sampler_covariance},
    {5, "derived laws", 180, derived_laws},
    {6, "kernel oracles", 180, kernel_oracles},
    {7, "cycle-count fixtures", 5, cycle_counts},
    {8, "Casimir identity", 1, casimir},
    {9, "surface sum", 300, surface_sum},
    {10, "confinement", 600, confinement},
    {11, "slab mass gap", 300, mass_gap},
    {12, "lattice gauge cross-check", 600, lgt_crosscheck},
    {13, "linking", 30, linking},
    {14, "restriction and heat equation", 180, restriction_fshe},
    {15, "scaling exponent", 300, scaling},
};

}  // namespace

std::vector<Result> run(const Options& opt, const std::function<void(const Result&)>& sink) {
  std::vector<Result> out;
  for (const auto& e : kEntries) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), e.id) == opt.only.end()) continue;
    Result r;
    r.id = e.id;
    r.title = e.title;
    r.limit_seconds = e.limit;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Outcome o = e.fn(opt.quick);
      r.pass = o.pass;
      r.detail = o.detail.str();
    } catch (const std::exception& ex) {
      r.pass = false;
      r.detail = std::string("error: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!opt.quick && r.seconds > r.limit_seconds) {
      r.pass = false;
      r.detail += "; FAILED runtime limit";
    }
    if (sink) sink(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format(const Result& r) {
  std::ostringstream s;
  s << (r.pass ? "PASS" : "FAIL") << " " << r.id << " " << r.title << ": " << r.detail << " [" << fmt(r.seconds, 3)
    << " s / " << fmt(r.limit_seconds, 3) << " s]";
  return s.str();
}

}  // namespace fgf::acceptance
