#include "fgf/torus.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

#include "json.hpp"

namespace fgf {

namespace {

int sign_of(int parity) { return parity % 2 ? -1 : 1; }

}  // namespace

FormAlgebra::FormAlgebra(int n) : n_(n), masks_(n + 1), pos_(1u << n, -1) {
  for (int k = 0; k <= n; ++k) {
    masks_[k] = subsets(n, k);
    for (std::size_t i = 0; i < masks_[k].size(); ++i) pos_[masks_[k][i]] = static_cast<int>(i);
  }
}

const std::vector<unsigned>& FormAlgebra::masks(int k) const {
  static const std::vector<unsigned> empty;
  if (k < 0 || k > n_) return empty;
  return masks_[k];
}

Block FormAlgebra::wedge(int k, const Covector& a, const Block& f) const {
  Block out(comps(k + 1), 0.0);
  for (unsigned J : masks(k + 1))
    for (int j : mask_axes(J)) out[pos_[J]] += static_cast<double>(sign_of(position_in(J, j))) * a[j] * f[pos_[J & ~(1u << j)]];
  return out;
}

Block FormAlgebra::interior(int k, const Covector& a, const Block& f) const {
  Block out(comps(k - 1), 0.0);
  for (unsigned I : masks(k - 1))
    for (int j = 0; j < n_; ++j) {
      if (I >> j & 1u) continue;
      unsigned J = I | (1u << j);
      out[pos_[I]] += static_cast<double>(sign_of(position_in(J, j))) * a[j] * f[pos_[J]];
    }
  return out;
}

Block FormAlgebra::star(int k, const Block& f) const {
  const unsigned full = (1u << n_) - 1u;
  Block out(comps(n_ - k), 0.0);
  for (unsigned I : masks(k)) {
    unsigned J = full & ~I;
    out[pos_[J]] = static_cast<double>(shuffle_sign(I, J)) * f[pos_[I]];
  }
  return out;
}

Block FormAlgebra::wedge_blocks(int k, const Block& f, int l, const Block& g) const {
  Block out(comps(k + l), 0.0);
  for (unsigned I : masks(k))
    for (unsigned J : masks(l))
      if (!(I & J)) out[pos_[I | J]] += static_cast<double>(shuffle_sign(I, J)) * f[pos_[I]] * g[pos_[J]];
  return out;
}

const FormAlgebra& algebra(int n) {
  static std::mutex mu;
  static std::map<int, FormAlgebra> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, FormAlgebra(n)).first;
  return it->second;
}

Covector fourier_symbol(const std::vector<double>& alpha) {
  Covector a(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) a[i] = cplx(0.0, alpha[i]);
  return a;
}

double norm2(const std::vector<double>& alpha) {
  double s = 0;
  for (double v : alpha) s += v * v;
  return s;
}

double block_norm(const Block& b) {
  double s = 0;
  for (const auto& v : b) s += std::norm(v);
  return std::sqrt(s);
}

cplx block_inner(const Block& a, const Block& b) {
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

Block block_d(int n, int k, const std::vector<double>& alpha, const Block& f) {
  return algebra(n).wedge(k, fourier_symbol(alpha), f);
}

Block block_dstar(int n, int k, const std::vector<double>& alpha, const Block& f) {
  Covector a(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) a[i] = cplx(0.0, -alpha[i]);
  return algebra(n).interior(k, a, f);
}

namespace {

Covector real_covector(const std::vector<double>& alpha) { return Covector(alpha.begin(), alpha.end()); }

}  // namespace

Block block_exact(int n, int k, const std::vector<double>& alpha, const Block& f) {
  const double a2 = norm2(alpha);
  if (a2 == 0) return Block(f.size(), 0.0);
  const auto& A = algebra(n);
  auto a = real_covector(alpha);
  Block out = A.wedge(k - 1, a, A.interior(k, a, f));
  for (auto& v : out) v /= a2;
  return out;
}

Block block_coexact(int n, int k, const std::vector<double>& alpha, const Block& f) {
  const double a2 = norm2(alpha);
  if (a2 == 0) return Block(f.size(), 0.0);
  const auto& A = algebra(n);
  auto a = real_covector(alpha);
  Block out = A.interior(k + 1, a, A.wedge(k, a, f));
  for (auto& v : out) v /= a2;
  return out;
}

std::pair<int, int> block_dims(int n, int k, const Mode& alpha) {
  require(std::any_of(alpha.begin(), alpha.end(), [](int v) { return v != 0; }), "block dimensions need a nonzero mode");
  require(k >= 0 && k <= n, "degree out of range");
  return {static_cast<int>(binomial(n - 1, k - 1)), static_cast<int>(binomial(n - 1, k))};
}

namespace {

int rank_of_d(int n, int k, const std::vector<double>& alpha) {
  if (k < 0 || k >= n) return 0;
  const auto& A = algebra(n);
  const int rows = A.comps(k + 1), cols = A.comps(k);
  Eigen::MatrixXcd D(rows, cols);
  for (int c = 0; c < cols; ++c) {
    Block e(cols, 0.0);
    e[c] = 1.0;
    Block col = block_d(n, k, alpha, e);
    for (int r = 0; r < rows; ++r) D(r, c) = col[r];
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(D);
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

}  // namespace

std::pair<int, int> block_dims_by_rank(int n, int k, const Mode& alpha) {
  require(std::any_of(alpha.begin(), alpha.end(), [](int v) { return v != 0; }), "block dimensions need a nonzero mode");
  std::vector<double> a(alpha.begin(), alpha.end());
  return {rank_of_d(n, k - 1, a), rank_of_d(n, k, a)};
}

Block block_curl(const std::vector<double>& alpha, const Block& f) {
  require(alpha.size() == 3 && f.size() == 3, "curl needs n = 3 and a 1-form block");
  return algebra(3).star(2, block_d(3, 1, alpha, f));
}

std::array<Block, 2> curl_eigenbasis(const std::vector<double>& alpha) {
  require(alpha.size() == 3, "curl eigenbasis needs n = 3");
  require(norm2(alpha) > 0, "curl eigenbasis needs a nonzero mode");
  Eigen::Matrix3cd C;
  for (int c = 0; c < 3; ++c) {
    Block e(3, 0.0);
    e[c] = 1.0;
    Block col = block_curl(alpha, e);
    for (int r = 0; r < 3; ++r) C(r, c) = col[r];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(C);
  std::array<Block, 2> out;
  for (int s = 0; s < 2; ++s) {
    Eigen::Vector3cd v = es.eigenvectors().col(s == 0 ? 2 : 0);
    // fix the phase: the first entry of maximal modulus is real positive
    int p = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(v[i]) > std::abs(v[p]) + 1e-12) p = i;
    v *= std::conj(v[p]) / std::abs(v[p]);
    out[s] = Block(v.data(), v.data() + 3);
  }
  return out;
}

TorusSpectrum::TorusSpectrum(int n, int k, int cutoff, int matrix_size)
    : n_(n), k_(k), K_(cutoff), N_(matrix_size) {
  require(n >= 1 && n <= 6, "torus dimension must be in 1..6");
  require(k >= 0 && k <= n, "degree out of range");
  require(cutoff >= 0, "cutoff must be nonnegative");
  require(matrix_size >= 0, "matrix size must be nonnegative");
  comps_ = static_cast<int>(binomial(n, k));
  modes_ = 1;
  for (int i = 0; i < n; ++i) modes_ *= side();
  c_.assign(static_cast<std::size_t>(modes_) * comps_ * entries(), 0.0);
}

Mode TorusSpectrum::mode(long long idx) const {
  Mode a(n_);
  for (int i = n_ - 1; i >= 0; --i) {
    a[i] = static_cast<int>(idx % side()) - K_;
    idx /= side();
  }
  return a;
}

std::vector<double> TorusSpectrum::mode_real(long long idx) const {
  Mode a = mode(idx);
  return std::vector<double>(a.begin(), a.end());
}

long long TorusSpectrum::mode_index(const Mode& a) const {
  long long idx = 0;
  for (int i = 0; i < n_; ++i) {
    if (a[i] < -K_ || a[i] > K_) return -1;
    idx = idx * side() + (a[i] + K_);
  }
  return idx;
}

Block TorusSpectrum::block(long long mode, int entry) const {
  Block b(comps_);
  for (int c = 0; c < comps_; ++c) b[c] = at(mode, c, entry);
  return b;
}

void TorusSpectrum::set_block(long long mode, const Block& b, int entry) {
  for (int c = 0; c < comps_; ++c) at(mode, c, entry) = b[c];
}

double TorusSpectrum::reality_defect() const {
  double worst = 0;
  for (long long m = 0; m < modes_; ++m) {
    long long nm = negate(m);
    for (int c = 0; c < comps_; ++c) {
      if (!is_matrix()) {
        worst = std::max(worst, std::abs(at(nm, c) - std::conj(at(m, c))));
        continue;
      }
      for (int r = 0; r < N_; ++r)
        for (int q = 0; q < N_; ++q)
          worst = std::max(worst, std::abs(at(nm, c, r * N_ + q) + std::conj(at(m, c, q * N_ + r))));
    }
  }
  return worst;
}

bool TorusSpectrum::same_shape(const TorusSpectrum& o) const {
  return n_ == o.n_ && k_ == o.k_ && K_ == o.K_ && N_ == o.N_;
}

namespace {

template <class F>
TorusSpectrum map_blocks(const TorusSpectrum& f, int out_k, F&& fn) {
  TorusSpectrum out(f.dim(), out_k, f.cutoff(), f.matrix_size());
  for (long long m = 0; m < f.mode_count(); ++m) {
    auto a = f.mode_real(m);
    for (int e = 0; e < f.entries(); ++e) out.set_block(m, fn(a, f.block(m, e)), e);
  }
  return out;
}

}  // namespace

TorusSpectrum spectral_d(const TorusSpectrum& f) {
  require(f.degree() < f.dim(), "d of a top-degree form");
  const int n = f.dim(), k = f.degree();
  return map_blocks(f, k + 1, [&](const std::vector<double>& a, const Block& b) { return block_d(n, k, a, b); });
}

TorusSpectrum spectral_dstar(const TorusSpectrum& f) {
  require(f.degree() > 0, "d* of a 0-form");
  const int n = f.dim(), k = f.degree();
  return map_blocks(f, k - 1, [&](const std::vector<double>& a, const Block& b) { return block_dstar(n, k, a, b); });
}

TorusSpectrum spectral_star(const TorusSpectrum& f) {
  const int n = f.dim(), k = f.degree();
  return map_blocks(f, n - k, [&](const std::vector<double>&, const Block& b) { return algebra(n).star(k, b); });
}

TorusSpectrum fractional_power(const TorusSpectrum& f, double t) {
  TorusSpectrum out = f;
  if (t == 0) return out;
  const long long z = f.zero_mode();
  for (int c = 0; c < f.comps(); ++c)
    for (int e = 0; e < f.entries(); ++e) {
      if (t < 0 && std::abs(f.at(z, c, e)) > 0)
        throw InvalidArgument("negative power applied to a nonzero harmonic block");
      out.at(z, c, e) = 0.0;
    }
  for (long long m = 0; m < f.mode_count(); ++m) {
    if (m == z) continue;
    double w = std::pow(norm2(f.mode_real(m)), t);
    for (int c = 0; c < f.comps(); ++c)
      for (int e = 0; e < f.entries(); ++e) out.at(m, c, e) *= w;
  }
  return out;
}

TorusSpectrum spectral_project(const TorusSpectrum& f, Projection p) {
  const int n = f.dim(), k = f.degree();
  return map_blocks(f, k, [&](const std::vector<double>& a, const Block& b) {
    return p == Projection::Exact ? block_exact(n, k, a, b) : block_coexact(n, k, a, b);
  });
}

double spectral_inner(const TorusSpectrum& f, const TorusSpectrum& g) {
  require(f.same_shape(g), "spectra differ in shape");
  double s = 0;
  for (std::size_t i = 0; i < f.data().size(); ++i) s += (f.data()[i] * std::conj(g.data()[i])).real();
  return s;
}

double spectral_inner_hminus(const TorusSpectrum& f, const TorusSpectrum& g, double s) {
  require(f.same_shape(g), "spectra differ in shape");
  double acc = 0;
  for (long long m = 0; m < f.mode_count(); ++m) {
    if (m == f.zero_mode()) continue;
    double w = std::pow(norm2(f.mode_real(m)), -s), t = 0;
    for (int c = 0; c < f.comps(); ++c)
      for (int e = 0; e < f.entries(); ++e) t += (f.at(m, c, e) * std::conj(g.at(m, c, e))).real();
    acc += w * t;
  }
  return acc;
}

long long TorusGrid::points() const {
  long long p = 1;
  for (int i = 0; i < n; ++i) p *= M;
  return p;
}

int TorusGrid::comps() const { return static_cast<int>(binomial(n, k)); }

namespace {

// y <- T x along `axis` of a row-major complex array; T is rows × dims[axis]
void apply_axis_c(std::vector<cplx>& data, std::vector<int>& dims, int axis, const std::vector<cplx>& T, int rows) {
  const int len = dims[axis];
  long long outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= dims[i];
  for (std::size_t i = axis + 1; i < dims.size(); ++i) inner *= dims[i];
  std::vector<cplx> out(static_cast<std::size_t>(outer) * rows * inner, 0.0);
  for (long long o = 0; o < outer; ++o) {
    const cplx* in = data.data() + o * len * inner;
    cplx* dst = out.data() + o * rows * inner;
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < len; ++j) {
        const cplx c = T[static_cast<std::size_t>(r) * len + j];
        const cplx* src = in + j * inner;
        cplx* d = dst + r * inner;
        for (long long t = 0; t < inner; ++t) d[t] += c * src[t];
      }
  }
  data.swap(out);
  dims[axis] = rows;
}

double grid_x(int j, int M) { return -std::numbers::pi + 2.0 * std::numbers::pi * j / M; }

}  // namespace

TorusGrid to_grid(const TorusSpectrum& f, int M) {
  require(M >= f.side(), "grid resolution must be at least 2*cutoff+1");
  const int n = f.dim(), K = f.cutoff();
  TorusGrid g;
  g.n = n;
  g.k = f.degree();
  g.M = M;
  g.N = f.matrix_size();
  g.data.assign(static_cast<std::size_t>(g.points()) * f.comps() * f.entries(), 0.0);
  std::vector<cplx> T(static_cast<std::size_t>(M) * f.side());
  for (int j = 0; j < M; ++j)
    for (int a = 0; a < f.side(); ++a) T[static_cast<std::size_t>(j) * f.side() + a] = std::polar(1.0, (a - K) * grid_x(j, M));
  const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * n);
  for (int c = 0; c < f.comps(); ++c)
    for (int e = 0; e < f.entries(); ++e) {
      std::vector<cplx> s(f.data().begin() + f.slice(c, e), f.data().begin() + f.slice(c, e) + f.mode_count());
      std::vector<int> dims(n, f.side());
      for (int ax = 0; ax < n; ++ax) apply_axis_c(s, dims, ax, T, M);
      for (long long p = 0; p < g.points(); ++p) g.at(p, c, e) = norm * s[p];
    }
  return g;
}

TorusSpectrum from_grid(const TorusGrid& g, int cutoff) {
  TorusSpectrum f(g.n, g.k, cutoff, g.N);
  require(g.M >= f.side(), "grid resolution must be at least 2*cutoff+1");
  std::vector<cplx> T(static_cast<std::size_t>(f.side()) * g.M);
  for (int a = 0; a < f.side(); ++a)
    for (int j = 0; j < g.M; ++j) T[static_cast<std::size_t>(a) * g.M + j] = std::polar(1.0, -(a - cutoff) * grid_x(j, g.M));
  const double norm = std::pow(2.0 * std::numbers::pi, 0.5 * g.n) / static_cast<double>(g.points());
  for (int c = 0; c < f.comps(); ++c)
    for (int e = 0; e < f.entries(); ++e) {
      std::vector<cplx> s(g.data.begin() + (static_cast<long long>(c) * g.entries() + e) * g.points(),
                          g.data.begin() + (static_cast<long long>(c) * g.entries() + e + 1) * g.points());
      std::vector<int> dims(g.n, g.M);
      for (int ax = 0; ax < g.n; ++ax) apply_axis_c(s, dims, ax, T, f.side());
      for (long long m = 0; m < f.mode_count(); ++m) f.at(m, c, e) = norm * s[m];
    }
  return f;
}

double grid_inner(const TorusGrid& f, const TorusGrid& g) {
  require(f.n == g.n && f.k == g.k && f.M == g.M && f.N == g.N, "grids differ in shape");
  double s = 0;
  for (std::size_t i = 0; i < f.data.size(); ++i) s += (f.data[i] * std::conj(g.data[i])).real();
  return s * std::pow(2.0 * std::numbers::pi / f.M, f.n);
}

TorusGrid grid_wedge(const TorusGrid& f, const TorusGrid& g, bool bracket) {
  require(f.n == g.n && f.M == g.M && f.N == g.N, "grids differ in shape");
  require(!bracket || f.N > 0, "bracket wedge needs matrix-valued forms");
  const int n = f.n, N = f.N, E = f.entries();
  const auto& A = algebra(n);
  TorusGrid out;
  out.n = n;
  out.k = f.k + g.k;
  out.M = f.M;
  out.N = N;
  if (out.k > n) {
    out.k = n;
    out.data.assign(static_cast<std::size_t>(out.points()) * out.comps() * E, 0.0);
    return out;
  }
  out.data.assign(static_cast<std::size_t>(out.points()) * out.comps() * E, 0.0);
  const long long P = f.points();
  for (unsigned I : A.masks(f.k))
    for (unsigned J : A.masks(g.k)) {
      if (I & J) continue;
      const double sg = shuffle_sign(I, J);
      const int ci = A.position(I), cj = A.position(J), co = A.position(I | J);
      for (long long p = 0; p < P; ++p) {
        if (N == 0) {
          out.at(p, co) += sg * f.at(p, ci) * g.at(p, cj);
          continue;
        }
        for (int r = 0; r < N; ++r)
          for (int q = 0; q < N; ++q) {
            cplx v = 0;
            for (int t = 0; t < N; ++t) {
              v += f.at(p, ci, r * N + t) * g.at(p, cj, t * N + q);
              if (bracket) v -= g.at(p, cj, r * N + t) * f.at(p, ci, t * N + q);
            }
            out.at(p, co, r * N + q) += sg * v;
          }
      }
    }
  return out;
}

void write_spectrum(const TorusSpectrum& f, const std::string& stem) {
  static_assert(std::endian::native == std::endian::little, "binary spectrum output assumes a little-endian host");
  nlohmann::json h;
  h["n"] = f.dim();
  h["k"] = f.degree();
  h["cutoff"] = f.cutoff();
  h["valueKind"] = f.is_matrix() ? "u(N)-matrix" : "real-scalar";
  h["N"] = f.matrix_size();
  h["modes"] = f.mode_count();
  h["record"] = "alpha[n] then (re, im) per component and entry";
  std::ofstream js(stem + ".json");
  if (!js) throw InvalidArgument("cannot write " + stem + ".json");
  js << h.dump(2) << "\n";
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw InvalidArgument("cannot write " + stem + ".bin");
  std::vector<double> rec;
  for (long long m = 0; m < f.mode_count(); ++m) {
    rec.clear();
    for (int a : f.mode(m)) rec.push_back(a);
    for (int c = 0; c < f.comps(); ++c)
      for (int e = 0; e < f.entries(); ++e) {
        rec.push_back(f.at(m, c, e).real());
        rec.push_back(f.at(m, c, e).imag());
      }
    bin.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size() * sizeof(double)));
  }
}

TorusSpectrum read_spectrum(const std::string& stem) {
  std::ifstream js(stem + ".json");
  if (!js) throw InvalidArgument("cannot read " + stem + ".json");
  auto h = nlohmann::json::parse(js);
  TorusSpectrum f(h.at("n").get<int>(), h.at("k").get<int>(), h.at("cutoff").get<int>(), h.value("N", 0));
  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw InvalidArgument("cannot read " + stem + ".bin");
  const std::size_t len = f.dim() + 2 * f.comps() * f.entries();
  std::vector<double> rec(len);
  for (long long m = 0; m < f.mode_count(); ++m) {
    bin.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(len * sizeof(double)));
    require(bin.gcount() == static_cast<std::streamsize>(len * sizeof(double)), "truncated spectrum data");
    std::size_t i = f.dim();
    for (int c = 0; c < f.comps(); ++c)
      for (int e = 0; e < f.entries(); ++e, i += 2) f.at(m, c, e) = cplx(rec[i], rec[i + 1]);
  }
  return f;
}

}  // namespace fgf
