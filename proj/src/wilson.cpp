#include "fgf/wilson.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "fgf/rng.hpp"
#include "fgf/separable.hpp"

namespace fgf {

namespace {

// d* of the unit plaquette (0, {i,j}) as (mask, offset, sign), read off the
// codifferential on a one-plaquette complex
struct EdgeStencil {
  unsigned mask;
  int di, dj;
  double sign;
};

std::vector<EdgeStencil> plaquette_boundary(int n, int i, int j) {
  std::vector<int> ext(n, 1);
  auto cx = std::make_shared<const LatticeComplex>(n, ext, Topology::Free);
  LatticeForm p(cx, 2);
  p[cx->index(2, (1u << i) | (1u << j), Coord{})] = 1.0;
  auto g = codifferential(p);
  std::vector<EdgeStencil> out;
  for (long long e = 0; e < static_cast<long long>(g.size()); ++e) {
    if (g[e] == 0.0) continue;
    auto c = cx->cell(1, e);
    out.push_back({c.mask, c.x[i], c.x[j], g[e]});
  }
  return out;
}

}  // namespace

RectLoop build_rect_loop(ComplexPtr cx, int i, int j, const Coord& corner, int L, int H, bool dense) {
  require(cx != nullptr, "null complex");
  const int n = cx->dim();
  require(i >= 0 && j >= 0 && i < n && j < n && i != j, "loop plane needs two distinct axes");
  require(L >= 1 && H >= 1, "loop sides must be positive");
  if (i > j) {
    std::swap(i, j);
    std::swap(L, H);
  }
  RectLoop r;
  r.cx = cx;
  r.i = i;
  r.j = j;
  r.corner = corner;
  r.L = L;
  r.H = H;
  const unsigned mask = (1u << i) | (1u << j);
  for (Coord x : {corner, [&] {
                    Coord y = corner;
                    y[i] += L - 1;
                    y[j] += H - 1;
                    return y;
                  }()})
    require(cx->index(2, mask, x) >= 0, "rectangle does not fit in the complex");
  if (cx->periodic())
    require(L < cx->extents()[i] && H < cx->extents()[j], "rectangle wraps around the periodic box");
  // interior edges cancel; only the boundary survives
  std::map<std::pair<unsigned, std::vector<int>>, double> acc;
  const auto st = plaquette_boundary(n, i, j);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < H; ++b)
      for (const auto& e : st) {
        Coord x = corner;
        x[i] += a + e.di;
        x[j] += b + e.dj;
        acc[{e.mask, std::vector<int>(x.begin(), x.begin() + n)}] += e.sign;
      }
  for (const auto& [key, v] : acc) {
    if (v == 0.0) continue;
    SparseEntry s;
    s.mask = key.first;
    std::copy(key.second.begin(), key.second.end(), s.x.begin());
    s.value = v;
    r.edges.push_back(s);
  }
  if (dense) {
    r.S = LatticeForm(cx, 2);
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < H; ++b) {
        Coord x = corner;
        x[i] += a;
        x[j] += b;
        r.S[cx->index(2, mask, x)] = 1.0;
      }
    r.gamma = codifferential(r.S);
  }
  return r;
}

namespace {

// coefficients of one component block in its tensor eigenbasis, computed from
// the bounding box of the support only
struct SparseCoefficients {
  SeparableGrid grid;
  std::vector<double> c;  // row-major over grid.dims
  bool empty = true;
};

SparseCoefficients sparse_forward(const LatticeComplex& cx, int k, const CellBlock& b,
                                  const std::vector<SparseEntry>& f) {
  SparseCoefficients out;
  out.grid = component_grid(cx, b.mask);
  const int n = out.grid.n;
  Coord lo, hi;
  for (int a = 0; a < n; ++a) {
    lo[a] = std::numeric_limits<int>::max();
    hi[a] = -1;
  }
  std::vector<std::pair<Coord, double>> pts;
  for (const auto& e : f) {
    if (e.mask != b.mask || e.value == 0.0) continue;
    const long long idx = cx.index(k, e.mask, e.x);
    require(idx >= 0, "sparse entry outside the complex");
    long long t = idx - b.offset;
    Coord x{};
    for (int a = 0; a < n; ++a) {
      x[a] = static_cast<int>(t / b.stride[a]);
      t %= b.stride[a];
      lo[a] = std::min(lo[a], x[a]);
      hi[a] = std::max(hi[a], x[a]);
    }
    pts.emplace_back(x, e.value);
  }
  if (pts.empty()) return out;
  out.empty = false;
  Coord ext{};
  long long size = 1;
  for (int a = 0; a < n; ++a) {
    ext[a] = hi[a] - lo[a] + 1;
    size *= ext[a];
  }
  std::vector<double> data(size, 0.0);
  for (const auto& [x, v] : pts) {
    long long r = 0;
    for (int a = 0; a < n; ++a) r = r * ext[a] + (x[a] - lo[a]);
    data[r] += v;
  }
  // axes in order of least growth first
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int p, int q) {
    return double(out.grid.dims[p]) / ext[p] < double(out.grid.dims[q]) / ext[q];
  });
  for (int a : order) {
    const auto& E = eig1d(out.grid.bc[a], out.grid.dims[a]);
    const int m = out.grid.dims[a], w = ext[a];
    long long outer = 1, inner = 1;
    for (int q = 0; q < a; ++q) outer *= ext[q];
    for (int q = a + 1; q < n; ++q) inner *= ext[q];
    std::vector<double> next(static_cast<std::size_t>(outer) * m * inner, 0.0);
    for (long long o = 0; o < outer; ++o)
      for (int kk = 0; kk < m; ++kk) {
        double* dst = next.data() + (o * m + kk) * inner;
        for (int x = 0; x < w; ++x) {
          const double u = E.U[(lo[a] + x) + static_cast<std::size_t>(m) * kk];
          if (u == 0.0) continue;
          const double* src = data.data() + (o * w + x) * inner;
          for (long long t = 0; t < inner; ++t) dst[t] += u * src[t];
        }
      }
    data.swap(next);
    ext[a] = m;
  }
  out.c = std::move(data);
  return out;
}

// Σ_k a(k) b(k) / λ(k), λ the sum of the 1-D eigenvalues, kernel modes dropped
double weighted_dot(const SparseCoefficients& A, const SparseCoefficients& B) {
  const int n = A.grid.n;
  std::vector<const std::vector<double>*> lam(n);
  for (int a = 0; a < n; ++a) lam[a] = &eig1d(A.grid.bc[a], A.grid.dims[a]).lam;
  const int last = A.grid.dims[n - 1];
  double acc = 0;
  long long base = 0;
  std::function<void(int, double)> rec = [&](int a, double partial) {
    if (a == n - 1) {
      const double* x = A.c.data() + base;
      const double* y = B.c.data() + base;
      for (int kk = 0; kk < last; ++kk) {
        const double l = partial + (*lam[a])[kk];
        if (l > 1e-12) acc += x[kk] * y[kk] / l;
      }
      base += last;
      return;
    }
    for (int kk = 0; kk < A.grid.dims[a]; ++kk) rec(a + 1, partial + (*lam[a])[kk]);
  };
  rec(0, 0.0);
  return acc;
}

}  // namespace

std::vector<SparseEntry> sparse_entries(const LatticeForm& f) {
  std::vector<SparseEntry> out;
  for (long long r = 0; r < static_cast<long long>(f.size()); ++r) {
    if (f[r] == 0.0) continue;
    auto c = f.complex().cell(f.degree(), r);
    out.push_back({c.mask, c.x, f[r]});
  }
  return out;
}

double green_pairing(const LatticeComplex& cx, int k, const std::vector<SparseEntry>& f,
                     const std::vector<SparseEntry>& g) {
  double acc = 0;
  for (const auto& b : cx.blocks(k)) {
    auto A = sparse_forward(cx, k, b, f);
    if (A.empty) continue;
    auto B = sparse_forward(cx, k, b, g);
    if (B.empty) continue;
    acc += weighted_dot(A, B);
  }
  return acc;
}

double green_pairing(const LatticeForm& f, const LatticeForm& g) {
  require(f.degree() == g.degree(), "forms have different degrees");
  require(f.complex_ptr() == g.complex_ptr() || f.complex().same_as(g.complex()), "forms live on different complexes");
  return green_pairing(f.complex(), f.degree(), sparse_entries(f), sparse_entries(g));
}

double loop_energy(const RectLoop& loop) { return green_pairing(*loop.cx, 1, loop.edges, loop.edges); }

double wilson_gaussian_expectation(const RectLoop& loop, double beta) {
  require(beta > 0, "beta must be positive");
  return std::exp(-loop_energy(loop) / (2 * beta));
}

double loop_covariance(const RectLoop& a, const RectLoop& b, double beta) {
  require(beta > 0, "beta must be positive");
  require(a.cx->same_as(*b.cx), "loops live on different complexes");
  const double c = green_pairing(*a.cx, 1, a.edges, b.edges);
  return wilson_gaussian_expectation(a, beta) * wilson_gaussian_expectation(b, beta) * (std::exp(-c / beta) - 1);
}

namespace {

double relative_spread(const std::vector<double>& v) {
  if (v.empty()) return 0;
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  return (*mx - *mn) / std::abs(mean);
}

}  // namespace

ConfinementScan confinement_scan(int n, int slab_M, const std::vector<int>& Ls, double beta, double margin) {
  require(n >= 2 && n <= 4, "confinement scan supports n = 2, 3, 4");
  require(beta > 0, "beta must be positive");
  require(margin >= 3.0, "box margin below 3L would contaminate the loop with boundary effects");
  require(!Ls.empty(), "empty L range");
  require(slab_M < 0 || n >= 3, "slab needs n >= 3");
  ConfinementScan out;
  out.n = n;
  out.slab_M = slab_M;
  out.beta = beta;
  if (n == 2 || slab_M >= 0) {
    out.column = "per_area";
    out.threshold = n == 2 ? 1e-9 : 0.15;
  } else if (n == 3) {
    out.column = "per_perim_log";
    out.threshold = 0.10;
  } else {
    out.column = "per_perim";
    out.threshold = 0.10;
  }
  std::vector<int> sorted = Ls;
  std::sort(sorted.begin(), sorted.end());
  for (int L : sorted) {
    require(L >= 1, "loop sides must be positive");
    const int side = static_cast<int>(std::ceil(margin * L));
    std::vector<int> ext(n, side);
    if (slab_M >= 0)
      for (int a = 2; a < n; ++a) ext[a] = 2 * slab_M;
    auto cx = std::make_shared<const LatticeComplex>(n, ext, Topology::Free);
    Coord corner{};
    corner[0] = corner[1] = (side - L) / 2;
    for (int a = 2; a < n; ++a) corner[a] = ext[a] / 2;
    auto loop = build_rect_loop(cx, 0, 1, corner, L, L, false);
    ConfinementRow row;
    row.L = row.H = L;
    row.box = ext;
    row.value = loop_energy(loop);
    const double P = loop.perimeter();
    row.per_area = row.value / loop.area();
    row.per_perim = row.value / P;
    row.per_perim_log = row.value / (P * std::log(P));
    out.rows.push_back(row);
  }
  auto col = [&](const ConfinementRow& r) {
    return out.column == "per_area" ? r.per_area : out.column == "per_perim" ? r.per_perim : r.per_perim_log;
  };
  std::vector<double> all, top;
  for (std::size_t k = 0; k < out.rows.size(); ++k) {
    all.push_back(col(out.rows[k]));
    if (2 * k >= out.rows.size() - 1 || out.rows.size() == 1) top.push_back(col(out.rows[k]));
  }
  out.variation = relative_spread(top);
  out.variation_all = relative_spread(all);
  out.stable = out.variation <= out.threshold;
  return out;
}

std::string ConfinementScan::csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "# n=" << n << " slab_M=" << slab_M << " beta=" << beta << " stable_column=" << column
     << " variation_top_half=" << variation << " variation_all=" << variation_all << "\n";
  os << "L,H,box,value,value_per_area,value_per_perim,value_per_perim_log_perim,wilson_expectation\n";
  for (const auto& r : rows) {
    os << r.L << "," << r.H << ",";
    for (std::size_t a = 0; a < r.box.size(); ++a) os << (a ? "x" : "") << r.box[a];
    os << "," << r.value << "," << r.per_area << "," << r.per_perim << "," << r.per_perim_log << ","
       << std::exp(-r.value / (2 * beta)) << "\n";
  }
  return os.str();
}

double plaquette_pairing(const LatticeComplex& cx, int d) {
  require(d >= 1, "plaquettes must be distinct");
  const int n = cx.dim();
  auto ptr = std::make_shared<const LatticeComplex>(cx);
  const int side = cx.extents()[0];
  Coord c{};
  for (int a = 2; a < n; ++a) c[a] = cx.extents()[a] / 2;
  c[1] = side / 2;
  Coord x = c, y = c;
  x[0] = (side - d) / 2;
  y[0] = x[0] + d;
  auto p = build_rect_loop(ptr, 0, 1, x, 1, 1, false);
  auto q = build_rect_loop(ptr, 0, 1, y, 1, 1, false);
  return green_pairing(cx, 1, p.edges, q.edges);
}

namespace {

// least-squares slope of y against x
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

MassGapReport decay_table(int n, int M, const std::vector<int>& distances, int box_small, int box_large) {
  require(n >= 2, "dimension must be at least 2");
  require(distances.size() >= 2, "need at least two distances to fit");
  require(box_small <= box_large, "box sizes must be ordered");
  const int dmax = *std::max_element(distances.begin(), distances.end());
  require(box_small >= 2 * dmax + 8, "box margin too small for the largest distance");
  auto make = [&](int side) {
    std::vector<int> ext(n, side);
    if (M >= 0)
      for (int a = 2; a < n; ++a) ext[a] = 2 * M;
    return LatticeComplex(n, ext, Topology::Free);
  };
  const auto small = make(box_small), large = make(box_large);
  MassGapReport rep;
  rep.n = n;
  rep.M = M;
  rep.box_small = box_small;
  rep.box_large = box_large;
  std::vector<double> xs, ys;
  for (int d : distances) {
    MassGapRow row;
    row.d = d;
    row.small = plaquette_pairing(small, d);
    row.large = plaquette_pairing(large, d);
    row.rel_diff = std::abs(row.small - row.large) / std::abs(row.large);
    rep.max_rel_diff = std::max(rep.max_rel_diff, row.rel_diff);
    rep.rows.push_back(row);
    xs.push_back(M >= 0 ? double(d) : std::log(double(d)));
    ys.push_back(std::log(std::abs(row.large)));
  }
  const double slope = fit_slope(xs, ys);
  if (M >= 0)
    rep.rate = -slope;
  else
    rep.exponent = slope;
  return rep;
}

}  // namespace

MassGapReport slab_mass_gap(int n, int M, const std::vector<int>& distances, int box_small, int box_large) {
  require(n >= 3 && M >= 1, "slab needs n >= 3 and M >= 1");
  return decay_table(n, M, distances, box_small, box_large);
}

MassGapReport full_box_decay(int n, const std::vector<int>& distances, int box_small, int box_large) {
  return decay_table(n, -1, distances, box_small, box_large);
}

std::string MassGapReport::csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "# n=" << n << " M=" << M << " box_small=" << box_small << " box_large=" << box_large << " rate=" << rate
     << " exponent=" << exponent << " max_rel_diff=" << max_rel_diff << "\n";
  os << "d,value_small_box,value_large_box,rel_diff\n";
  for (const auto& r : rows) os << r.d << "," << r.small << "," << r.large << "," << r.rel_diff << "\n";
  return os.str();
}

int count_cycles(const std::vector<int>& perm) {
  std::vector<char> seen(perm.size(), 0);
  int c = 0;
  for (std::size_t s = 0; s < perm.size(); ++s) {
    if (seen[s]) continue;
    ++c;
    for (std::size_t x = s; !seen[x]; x = perm[x]) seen[x] = 1;
  }
  return c;
}

int pairing_vertices(const std::vector<int>& partner, const std::vector<int>& mu) {
  const int m = static_cast<int>(partner.size());
  std::vector<int> sigma(m);
  int start = 0, empty = 0;
  for (int part : mu) {
    require(part >= 0, "polygon sizes must be nonnegative");
    if (part == 0) ++empty;
    for (int r = 0; r < part; ++r) sigma[start + r] = start + (r + 1) % part;
    start += part;
  }
  require(start == m, "polygon sizes must sum to m");
  std::vector<int> comp(m);
  for (int x = 0; x < m; ++x) comp[x] = sigma[partner[x]];
  return count_cycles(comp) + empty;
}

namespace {

template <class F>
void enumerate_pairings(std::vector<int>& partner, F&& visit) {
  int first = -1;
  for (std::size_t i = 0; i < partner.size(); ++i)
    if (partner[i] < 0) {
      first = static_cast<int>(i);
      break;
    }
  if (first < 0) {
    visit(partner);
    return;
  }
  for (std::size_t j = first + 1; j < partner.size(); ++j) {
    if (partner[j] >= 0) continue;
    partner[first] = static_cast<int>(j);
    partner[j] = first;
    enumerate_pairings(partner, visit);
    partner[first] = partner[j] = -1;
  }
}

}  // namespace

std::vector<PairingMap> pairing_maps(int m, const std::vector<int>& mu) {
  require(m >= 0 && m % 2 == 0, "pairings need an even number of edges");
  require(std::accumulate(mu.begin(), mu.end(), 0) == m, "polygon sizes must sum to m");
  std::vector<PairingMap> out;
  std::vector<int> partner(m, -1);
  enumerate_pairings(partner, [&](const std::vector<int>& p) {
    PairingMap pm;
    pm.m = m;
    pm.partner = p;
    pm.mu = mu;
    pm.V = pairing_vertices(p, mu);
    out.push_back(std::move(pm));
  });
  return out;
}

BigLoop BigLoop::piecewise(std::vector<double> times, std::vector<TorusSpectrum> pieces) {
  require(!pieces.empty() && times.size() == pieces.size() + 1, "big loop needs J pieces and J+1 times");
  require(times.front() == 0.0 && times.back() == 1.0, "big loop time partition must span [0, 1]");
  for (std::size_t j = 0; j + 1 < times.size(); ++j) require(times[j] < times[j + 1], "time partition must increase");
  BigLoop b;
  b.times = std::move(times);
  for (const auto& g : pieces) {
    require(g.degree() == 1 && !g.is_matrix(), "big loop pieces must be real scalar 1-form spectra");
    require(g.same_shape(pieces[0]), "big loop pieces differ in shape");
    require(g.reality_defect() <= 1e-12, "big loop pieces must be real");
    auto div = spectral_dstar(g);
    double dn = 0, gn = 0;
    for (const auto& v : div.data()) dn = std::max(dn, std::abs(v));
    for (const auto& v : g.data()) gn = std::max(gn, std::abs(v));
    require(dn <= 1e-10 * std::max(gn, 1e-300) * std::max(1, g.cutoff()), "big loop pieces must satisfy d*Γ = 0");
    b.sup_norm = std::max(b.sup_norm, std::sqrt(spectral_inner_hminus(g, g, 1.0)));
  }
  require(std::isfinite(b.sup_norm), "big loop norm must be finite");
  b.pieces = std::move(pieces);
  return b;
}

nlohmann::json SurfaceSum::to_json() const {
  return {{"value", value}, {"tail_bound", tail_bound}, {"stderr", stderr_}, {"m_max", m_max}, {"N", N}, {"terms", terms}};
}

namespace {

// pairing list of one μ, memoized
struct PairingTable {
  std::vector<std::vector<std::uint8_t>> partners;
  std::vector<int> V;
};

const PairingTable& pairing_table(const std::vector<int>& mu) {
  static std::map<std::vector<int>, PairingTable> cache;
  auto it = cache.find(mu);
  if (it != cache.end()) return it->second;
  const int m = std::accumulate(mu.begin(), mu.end(), 0);
  PairingTable t;
  std::vector<int> partner(m, -1);
  enumerate_pairings(partner, [&](const std::vector<int>& p) {
    t.partners.emplace_back(p.begin(), p.end());
    t.V.push_back(pairing_vertices(p, mu));
  });
  return cache.emplace(mu, std::move(t)).first->second;
}

// compositions of `total` into k nonnegative parts
void compositions(int total, int k, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k - 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int v = 0; v <= total; ++v) {
    cur.push_back(v);
    compositions(total - v, k, cur, out);
    cur.pop_back();
  }
}

}  // namespace

SurfaceSum surface_sum_expectation(const std::vector<BigLoop>& loops, int N, const SurfaceSumOptions& opt) {
  require(!loops.empty(), "surface sum needs at least one loop");
  require(N >= 1, "N must be positive");
  require(opt.m_max >= 0, "m_max must be nonnegative");
  require(opt.m_max <= opt.max_pairs, "m_max above the pairing limit (enumeration grows as (2m-1)!!)");
  const int k = static_cast<int>(loops.size());
  double sup = 0;
  bool all_constant = true;
  for (const auto& l : loops) {
    require(!l.pieces.empty(), "empty big loop");
    require(l.pieces[0].same_shape(loops[0].pieces[0]), "big loops differ in spectral shape");
    sup = std::max(sup, l.sup_norm);
    all_constant = all_constant && l.is_constant();
  }
  SurfaceSum res;
  res.N = N;
  res.m_max = opt.m_max;
  // tail: |N^{V-E}| ≤ N^k, |Π| ≤ sup^{2m}, Σ_compositions Π 1/m_ℓ! = k^{2m}/(2m)!
  {
    const double x = std::pow(k * sup, 2) / 2;
    double term = 1, tail = 0;
    for (int m = 1; m < 400; ++m) {
      term *= x / m;  // (2m-1)!! y^{2m} / (2m)! = (y²/2)^m / m!
      if (m > opt.m_max) {
        tail += term;
        if (term < 1e-18 * std::max(tail, 1e-300)) break;
      }
    }
    res.tail_bound = std::pow(double(N), k) * tail;
  }
  if (res.tail_bound > opt.tail_tolerance)
    throw InvalidArgument("surface sum tail bound " + std::to_string(res.tail_bound) + " exceeds tolerance");

  // labels: (loop, piece); Gram matrix of Ḣ^{-1} pairings
  std::vector<int> label_base(k + 1, 0);
  for (int l = 0; l < k; ++l) label_base[l + 1] = label_base[l] + static_cast<int>(loops[l].pieces.size());
  const int nl = label_base[k];
  std::vector<double> gram(nl * nl);
  for (int a = 0; a < k; ++a)
    for (std::size_t pa = 0; pa < loops[a].pieces.size(); ++pa)
      for (int b = 0; b < k; ++b)
        for (std::size_t pb = 0; pb < loops[b].pieces.size(); ++pb)
          gram[(label_base[a] + pa) * nl + label_base[b] + pb] =
              spectral_inner_hminus(loops[a].pieces[pa], loops[b].pieces[pb], 1.0);

  // Σ_π N^{V-E} Π gram(labels) for one label sequence
  auto pairing_sum = [&](const std::vector<int>& mu, const std::vector<int>& labels) {
    const auto& t = pairing_table(mu);
    const int m = static_cast<int>(labels.size());
    double acc = 0;
    for (std::size_t q = 0; q < t.V.size(); ++q) {
      double prod = std::pow(double(N), t.V[q] - m / 2);
      const auto& p = t.partners[q];
      for (int i = 0; i < m; ++i)
        if (p[i] > i) prod *= gram[labels[i] * nl + labels[p[i]]];
      acc += prod;
    }
    return acc;
  };

  res.value = 0;
  double var = 0;
  Stream rng(opt.seed, 0x5eed);
  std::uint64_t draw = 0;
  for (int m = 0; m <= opt.m_max; ++m) {
    std::vector<std::vector<int>> comps;
    std::vector<int> cur;
    compositions(2 * m, k, cur, comps);
    double term = 0, term_var = 0;
    for (const auto& mu : comps) {
      if (all_constant) {
        double w = 1;
        for (int part : mu) w /= std::tgamma(part + 1.0);
        std::vector<int> labels;
        for (int l = 0; l < k; ++l) labels.insert(labels.end(), mu[l], label_base[l]);
        term += w * pairing_sum(mu, labels);
        continue;
      }
      // sorted uniform tuples per loop; the integrand depends only on the labels
      double vol = 1;
      for (int part : mu) vol /= std::tgamma(part + 1.0);
      std::map<std::vector<int>, double> memo;
      double s1 = 0, s2 = 0;
      std::vector<int> labels;
      std::vector<double> t;
      for (long long r = 0; r < opt.mc_tuples; ++r) {
        labels.clear();
        for (int l = 0; l < k; ++l) {
          t.resize(mu[l]);
          for (auto& v : t) v = rng.uniform(draw++);
          std::sort(t.begin(), t.end());
          const auto& T = loops[l].times;
          for (double v : t) {
            const int j = static_cast<int>(std::upper_bound(T.begin(), T.end(), v) - T.begin()) - 1;
            labels.push_back(label_base[l] + std::clamp(j, 0, static_cast<int>(loops[l].pieces.size()) - 1));
          }
        }
        auto it = memo.find(labels);
        if (it == memo.end()) it = memo.emplace(labels, pairing_sum(mu, labels)).first;
        s1 += it->second;
        s2 += it->second * it->second;
      }
      const double R = static_cast<double>(opt.mc_tuples);
      const double mean = s1 / R;
      term += vol * mean;
      if (opt.mc_tuples > 1) term_var += vol * vol * std::max(0.0, s2 / R - mean * mean) / (R - 1);
    }
    const double sign = m % 2 ? -1.0 : 1.0;
    res.terms.push_back(sign * term);
    res.value += sign * term;
    var += term_var;
  }
  // the m = 0 term is Tr I = N^k: each empty polygon counts one cycle
  res.stderr_ = std::sqrt(var);
  return res;
}

CMatrix loop_pairing(const TorusSpectrum& A, const TorusSpectrum& gamma) {
  require(A.dim() == gamma.dim() && A.degree() == 1 && gamma.degree() == 1, "pairing needs 1-form spectra");
  require(A.cutoff() == gamma.cutoff(), "spectra differ in cutoff");
  require(!gamma.is_matrix(), "loop spectra must be scalar");
  const int N = A.is_matrix() ? A.matrix_size() : 1;
  CMatrix X(N * N, 0.0);
  for (int e = 0; e < A.entries(); ++e) {
    cplx s = 0;
    for (int c = 0; c < A.comps(); ++c)
      for (long long m = 0; m < A.mode_count(); ++m) s += A.at(m, c, e) * std::conj(gamma.at(m, c));
    X[e] = A.is_matrix() ? s : cplx(0, 1) * s.real();
  }
  return X;
}

CMatrix holonomy_series(const TorusSpectrum& A, const BigLoop& loop, int m_max, double tol) {
  require(m_max >= 0, "m_max must be nonnegative");
  const int N = A.is_matrix() ? A.matrix_size() : 1;
  CMatrix h = mat_identity(N);
  double err = 0;
  for (std::size_t j = 0; j < loop.pieces.size(); ++j) {
    CMatrix X = loop_pairing(A, loop.pieces[j]);
    const double tau = loop.times[j + 1] - loop.times[j];
    double xn = 0;
    for (auto& v : X) {
      v *= tau;
      xn += std::norm(v);
    }
    xn = std::sqrt(xn);
    // Σ_{r ≤ m_max} X^r / r!
    CMatrix term = mat_identity(N), sum = term;
    for (int r = 1; r <= m_max; ++r) {
      term = mat_mul(term, X, N);
      for (auto& v : term) v /= r;
      for (int e = 0; e < N * N; ++e) sum[e] += term[e];
    }
    double rest = std::exp(xn) * std::pow(xn, m_max + 1) / std::tgamma(m_max + 2.0);
    err += rest;
    h = mat_mul(h, sum, N);
  }
  if (err > tol) throw NumericalError("holonomy series truncation error " + std::to_string(err) + " exceeds tolerance");
  return h;
}

}  // namespace fgf
