#include "fgf/lattice.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fgf/separable.hpp"
#include "json.hpp"

namespace fgf {

std::string to_string(Topology t) {
  switch (t) {
    case Topology::Free: return "free";
    case Topology::Slab: return "slab";
    case Topology::Periodic: return "periodic";
  }
  return "free";
}

Topology topology_from_string(const std::string& s) {
  if (s == "free") return Topology::Free;
  if (s == "slab") return Topology::Slab;
  if (s == "periodic") return Topology::Periodic;
  throw InvalidArgument("unknown topology '" + s + "'");
}

namespace {

// advance x through a row-major box of the given dims (last axis fastest)
inline void step(Coord& x, const Coord& dims, int n) {
  for (int a = n - 1; a >= 0; --a) {
    if (++x[a] < dims[a]) return;
    x[a] = 0;
  }
}

inline int wrap(int v, int m) {
  v %= m;
  return v < 0 ? v + m : v;
}

}  // namespace

LatticeComplex::LatticeComplex(int n, std::vector<int> extents, Topology topo, double mesh)
    : n_(n), L_(std::move(extents)), topo_(topo), mesh_(mesh) {
  require(n >= 1 && n <= kMaxDim, "dimension must be in 1.." + std::to_string(kMaxDim));
  require(static_cast<int>(L_.size()) == n, "extents must have n entries");
  require(mesh > 0, "mesh must be positive");
  for (int L : L_) {
    require(L >= 1, "extents must be positive");
    if (topo == Topology::Periodic) require(L >= 3, "periodic extents must be at least 3");
  }
  // slots for degrees -1 .. n+1; the outer two stay empty
  blocks_.assign(n + 3, {});
  counts_.assign(n + 3, 0);
  for (int k = 0; k <= n; ++k) {
    long long off = 0;
    for (unsigned m : subsets(n, k)) {
      CellBlock b;
      b.mask = m;
      b.offset = off;
      b.size = 1;
      for (int a = 0; a < n; ++a) b.dims[a] = (periodic() || (m >> a & 1u)) ? L_[a] : L_[a] + 1;
      for (int a = n - 1; a >= 0; --a) {
        b.stride[a] = static_cast<int>(b.size);
        b.size *= b.dims[a];
      }
      off += b.size;
      blocks_[k + 1].push_back(b);
    }
    counts_[k + 1] = off;
  }
}

LatticeComplex LatticeComplex::slab(int n, int L, int M) {
  require(n >= 2, "slab needs n >= 2");
  require(M >= 1, "slab half-height must be positive");
  std::vector<int> ext(n, 2 * M);
  ext[0] = ext[1] = L;
  return LatticeComplex(n, ext, Topology::Slab);
}

long long LatticeComplex::cell_count(int k) const {
  if (k < -1 || k > n_ + 1) return 0;
  return counts_[k + 1];
}

const std::vector<CellBlock>& LatticeComplex::blocks(int k) const {
  static const std::vector<CellBlock> empty;
  if (k < -1 || k > n_ + 1) return empty;
  return blocks_[k + 1];
}

const CellBlock& LatticeComplex::block(int k, unsigned mask) const {
  for (const auto& b : blocks(k))
    if (b.mask == mask) return b;
  throw InvalidArgument("axis set does not match degree");
}

long long LatticeComplex::index(int k, unsigned mask, Coord x) const {
  const auto& bs = blocks(k);
  // blocks are few (at most C(6,3)=20); linear scan is cheaper than a map
  for (const auto& b : bs) {
    if (b.mask != mask) continue;
    long long idx = b.offset;
    for (int a = 0; a < n_; ++a) {
      int v = x[a];
      if (periodic()) {
        v = wrap(v, b.dims[a]);
      } else if (v < 0 || v >= b.dims[a]) {
        return -1;
      }
      idx += static_cast<long long>(v) * b.stride[a];
    }
    return idx;
  }
  return -1;
}

Cell LatticeComplex::cell(int k, long long idx) const {
  require(idx >= 0 && idx < cell_count(k), "cell index out of range");
  const auto& bs = blocks(k);
  auto it = std::upper_bound(bs.begin(), bs.end(), idx, [](long long v, const CellBlock& b) { return v < b.offset; });
  const CellBlock& b = *(it - 1);
  Cell c;
  c.mask = b.mask;
  long long r = idx - b.offset;
  for (int a = 0; a < n_; ++a) {
    c.x[a] = static_cast<int>(r / b.stride[a]);
    r %= b.stride[a];
  }
  return c;
}

std::vector<Cell> LatticeComplex::enumerate_cells(int k) const {
  require(k >= 0 && k <= n_, "degree out of range");
  std::vector<Cell> out;
  out.reserve(cell_count(k));
  Coord vd{};
  long long nv = 1;
  for (int a = 0; a < n_; ++a) {
    vd[a] = vertices_along(a);
    nv *= vd[a];
  }
  auto masks = subsets(n_, k);
  Coord x{};
  for (long long t = 0; t < nv; ++t, step(x, vd, n_))
    for (unsigned m : masks)
      if (index(k, m, x) >= 0) out.push_back({x, m});
  return out;
}

int LatticeComplex::coface_count(const Cell& c) const {
  int k = popcount(c.mask), cnt = 0;
  for (int j = 0; j < n_; ++j) {
    if (c.mask >> j & 1u) continue;
    unsigned J = c.mask | (1u << j);
    Coord y = c.x;
    cnt += index(k + 1, J, y) >= 0;
    --y[j];
    cnt += index(k + 1, J, y) >= 0;
  }
  return cnt;
}

bool LatticeComplex::same_as(const LatticeComplex& o) const {
  return n_ == o.n_ && L_ == o.L_ && topo_ == o.topo_ && mesh_ == o.mesh_;
}

LatticeForm::LatticeForm(ComplexPtr cx, int k) : cx_(std::move(cx)), k_(k) {
  require(cx_ != nullptr, "null complex");
  require(k >= -1 && k <= cx_->dim() + 1, "degree out of range");
  v_.assign(cx_->cell_count(k), 0.0);
}

LatticeForm::LatticeForm(ComplexPtr cx, int k, std::vector<double> values) : LatticeForm(std::move(cx), k) {
  require(values.size() == v_.size(), "value count does not match cell count");
  v_ = std::move(values);
}

double LatticeForm::at(Coord x, unsigned mask, int sign) const {
  long long i = cx_->index(k_, mask, x);
  return i < 0 ? 0.0 : sign * v_[i];
}

namespace {

void check_compatible(const LatticeForm& a, const LatticeForm& b) {
  if (a.complex_ptr() != b.complex_ptr() && !a.complex().same_as(b.complex()))
    throw InvalidArgument("forms live on different complexes");
  if (a.degree() != b.degree()) throw InvalidArgument("forms have different degrees");
}

}  // namespace

LatticeForm& LatticeForm::operator+=(const LatticeForm& o) {
  check_compatible(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

LatticeForm& LatticeForm::operator-=(const LatticeForm& o) {
  check_compatible(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

LatticeForm& LatticeForm::operator*=(double a) {
  for (double& v : v_) v *= a;
  return *this;
}

double LatticeForm::norm() const { return std::sqrt(inner(*this, *this)); }

double inner(const LatticeForm& f, const LatticeForm& g) {
  check_compatible(f, g);
  double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return s;
}

LatticeForm exterior_derivative(const LatticeForm& f) {
  const auto& cx = f.complex();
  const int n = cx.dim(), k = std::min(f.degree(), cx.dim());
  LatticeForm out(f.complex_ptr(), k + 1);
  for (const auto& b : cx.blocks(k + 1)) {
    auto axes = mask_axes(b.mask);
    Coord x{};
    for (long long t = 0; t < b.size; ++t, step(x, b.dims, n)) {
      double v = 0;
      for (std::size_t l = 0; l < axes.size(); ++l) {
        int j = axes[l];
        unsigned I = b.mask & ~(1u << j);
        Coord y = x;
        ++y[j];
        double term = f.at(y, I) - f.at(x, I);
        v += (l % 2 ? -term : term);
      }
      out[b.offset + t] = v;
    }
  }
  return out;
}

LatticeForm codifferential(const LatticeForm& g) {
  const auto& cx = g.complex();
  const int n = cx.dim(), k = std::max(g.degree(), 0);
  LatticeForm out(g.complex_ptr(), k - 1);
  for (const auto& b : cx.blocks(k - 1)) {
    Coord y{};
    for (long long t = 0; t < b.size; ++t, step(y, b.dims, n)) {
      double v = 0;
      for (int j = 0; j < n; ++j) {
        if (b.mask >> j & 1u) continue;
        unsigned J = b.mask | (1u << j);
        int s = position_in(J, j) % 2 ? -1 : 1;
        Coord z = y;
        --z[j];
        v += s * (g.at(z, J) - g.at(y, J));
      }
      out[b.offset + t] = v;
    }
  }
  return out;
}

LatticeForm hodge_laplacian(const LatticeForm& f) {
  LatticeForm a = exterior_derivative(codifferential(f));
  a += codifferential(exterior_derivative(f));
  a *= -1.0;
  return a;
}

std::vector<double> neg_laplacian_diagonal(const LatticeComplex& cx, int k) {
  std::vector<double> d(cx.cell_count(k));
  for (const auto& b : cx.blocks(k)) {
    Cell c;
    c.mask = b.mask;
    for (long long t = 0; t < b.size; ++t, step(c.x, b.dims, cx.dim())) d[b.offset + t] = 2.0 * k + cx.coface_count(c);
  }
  return d;
}

LatticeForm neg_laplacian_componentwise(const LatticeForm& f) {
  const auto& cx = f.complex();
  const int n = cx.dim();
  LatticeForm out(f.complex_ptr(), f.degree());
  for (const auto& b : cx.blocks(f.degree())) {
    const double* src = f.values().data() + b.offset;
    Coord x{};
    for (long long t = 0; t < b.size; ++t, step(x, b.dims, n)) {
      double c = src[t], v = 0;
      for (int a = 0; a < n; ++a) {
        const int m = b.dims[a], s = b.stride[a];
        if (cx.periodic()) {
          double up = src[t + static_cast<long long>(wrap(x[a] + 1, m) - x[a]) * s];
          double dn = src[t + static_cast<long long>(wrap(x[a] - 1, m) - x[a]) * s];
          v += 2 * c - up - dn;
        } else if (b.mask >> a & 1u) {
          v += 2 * c - (x[a] + 1 < m ? src[t + s] : 0.0) - (x[a] > 0 ? src[t - s] : 0.0);
        } else {
          if (x[a] + 1 < m) v += c - src[t + s];
          if (x[a] > 0) v += c - src[t - s];
        }
      }
      out[b.offset + t] = v;
    }
  }
  return out;
}

bool has_kernel(const LatticeComplex& cx, int k) {
  if (k < 0 || k > cx.dim()) return false;
  return cx.periodic() || k == 0;
}

namespace {

// per-block means (the kernel coordinates when a kernel exists)
std::vector<double> block_means(const LatticeForm& f) {
  std::vector<double> m;
  for (const auto& b : f.complex().blocks(f.degree())) {
    double s = 0;
    for (long long t = 0; t < b.size; ++t) s += f[b.offset + t];
    m.push_back(s / b.size);
  }
  return m;
}

}  // namespace

LatticeForm remove_kernel(const LatticeForm& f) {
  if (!has_kernel(f.complex(), f.degree())) return f;
  LatticeForm g = f;
  auto means = block_means(f);
  const auto& bs = f.complex().blocks(f.degree());
  for (std::size_t i = 0; i < bs.size(); ++i)
    for (long long t = 0; t < bs[i].size; ++t) g[bs[i].offset + t] -= means[i];
  return g;
}

LatticeForm apply_spectral(const LatticeForm& f, const std::function<double(double)>& g) {
  LatticeForm out = f;
  for (const auto& b : f.complex().blocks(f.degree())) {
    std::vector<double> data(f.values().begin() + b.offset, f.values().begin() + b.offset + b.size);
    separable_apply(data, component_grid(f.complex(), b.mask), g);
    std::copy(data.begin(), data.end(), out.values().begin() + b.offset);
  }
  return out;
}

std::vector<double> dense_neg_laplacian(const LatticeComplex& cx, int k) {
  auto ptr = std::make_shared<const LatticeComplex>(cx);
  const long long N = cx.cell_count(k);
  require(N <= 20000, "dense Laplacian requested for too many cells");
  std::vector<double> A(N * N);
  LatticeForm e(ptr, k);
  for (long long j = 0; j < N; ++j) {
    e[j] = 1.0;
    LatticeForm col = hodge_laplacian(e);
    for (long long i = 0; i < N; ++i) A[i + N * j] = -col[i];
    e[j] = 0.0;
  }
  return A;
}

namespace {

LatticeForm solve_pcg(const LatticeForm& f, const SolveOptions& opt, SolveReport& rep) {
  const auto& cx = f.complex();
  const bool sing = has_kernel(cx, f.degree());
  auto diag = neg_laplacian_diagonal(cx, f.degree());
  auto A = [&](const LatticeForm& x) {
    LatticeForm y = hodge_laplacian(x);
    y *= -1.0;
    return y;
  };
  auto precond = [&](const LatticeForm& r) {
    LatticeForm z = r;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] /= diag[i];
    return sing ? remove_kernel(z) : z;
  };
  const double fn = f.norm();
  LatticeForm x(f.complex_ptr(), f.degree());
  if (fn == 0.0) return x;
  const long long cap = opt.max_iter > 0 ? opt.max_iter : 10 * static_cast<long long>(f.size());
  LatticeForm r = f;
  LatticeForm z = precond(r);
  LatticeForm p = z;
  double rz = inner(r, z);
  long long it = 0;
  double rel = 1.0;
  while (true) {
    rel = r.norm() / fn;
    if (rel <= opt.tol) break;
    if (it >= cap)
      throw NumericalError("PCG iteration cap " + std::to_string(cap) + " exceeded, relative residual " +
                           std::to_string(rel));
    LatticeForm Ap = A(p);
    double alpha = rz / inner(p, Ap);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    z = precond(r);
    double rz_new = inner(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    ++it;
  }
  rep.iterations = static_cast<int>(it);
  return x;
}

LatticeForm solve_dense(const LatticeForm& f) {
  const long long N = f.size();
  auto Av = dense_neg_laplacian(f.complex(), f.degree());
  Eigen::Map<Eigen::MatrixXd> A(Av.data(), N, N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eigen::Map<const Eigen::VectorXd> b(f.values().data(), N);
  Eigen::VectorXd c = es.eigenvectors().transpose() * b;
  const double cut = 1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  for (long long i = 0; i < N; ++i) c[i] = es.eigenvalues()[i] > cut ? c[i] / es.eigenvalues()[i] : 0.0;
  Eigen::VectorXd x = es.eigenvectors() * c;
  return LatticeForm(f.complex_ptr(), f.degree(), std::vector<double>(x.data(), x.data() + N));
}

}  // namespace

LatticeForm poisson_solve(const LatticeForm& f, const SolveOptions& opt, SolveReport* rep) {
  const auto& cx = f.complex();
  const int k = f.degree();
  require(k >= 0 && k <= cx.dim(), "degree out of range");
  const double fn = f.norm();
  if (has_kernel(cx, k)) {
    LatticeForm g = remove_kernel(f);
    LatticeForm diff = f - g;
    if (diff.norm() > 1e-8 * std::max(fn, 1e-300) && fn > 0)
      throw InvalidArgument(k == 0 && !cx.periodic() ? "0-form right-hand side is not mean-zero"
                                                     : "right-hand side has a harmonic component");
  }
  SolveReport local;
  SolveMethod m = opt.method == SolveMethod::Auto ? SolveMethod::Separable : opt.method;
  local.method = m;
  LatticeForm x;
  switch (m) {
    case SolveMethod::PCG: x = solve_pcg(f, opt, local); break;
    case SolveMethod::Dense: x = solve_dense(f); break;
    default: x = apply_spectral(f, [](double l) { return l > 0 ? 1.0 / l : 0.0; }); break;
  }
  if (has_kernel(cx, k)) x = remove_kernel(x);
  if (fn > 0) {
    LatticeForm res = hodge_laplacian(x);
    res += f;
    local.relative_residual = res.norm() / fn;
  }
  if (local.relative_residual > std::max(opt.tol, 1e-9))
    throw NumericalError("Poisson solve residual " + std::to_string(local.relative_residual) + " above tolerance");
  if (rep) *rep = local;
  return x;
}

LatticeForm hodge_project(const LatticeForm& f, HodgePart part, const SolveOptions& opt) {
  LatticeForm u = poisson_solve(remove_kernel(f), opt);
  if (part == HodgePart::Exact) return exterior_derivative(codifferential(u));
  return codifferential(exterior_derivative(u));
}

void write_form(const LatticeForm& f, const std::string& stem) {
  static_assert(std::endian::native == std::endian::little, "binary form output assumes a little-endian host");
  const auto& cx = f.complex();
  nlohmann::json h;
  h["n"] = cx.dim();
  h["extents"] = cx.extents();
  h["topology"] = to_string(cx.topology());
  h["k"] = f.degree();
  h["mesh"] = cx.mesh();
  h["ordering"] = "lex-v1";
  h["count"] = f.size();
  std::ofstream js(stem + ".json");
  if (!js) throw InvalidArgument("cannot write " + stem + ".json");
  js << h.dump(2) << "\n";
  std::vector<double> buf;
  buf.reserve(f.size());
  for (const auto& c : cx.enumerate_cells(f.degree())) buf.push_back(f[cx.index(f.degree(), c.mask, c.x)]);
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw InvalidArgument("cannot write " + stem + ".bin");
  bin.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

LatticeForm read_form(const std::string& stem) {
  std::ifstream js(stem + ".json");
  if (!js) throw InvalidArgument("cannot read " + stem + ".json");
  nlohmann::json h = nlohmann::json::parse(js);
  require(h.value("ordering", "") == "lex-v1", "unsupported cell ordering");
  auto cx = std::make_shared<const LatticeComplex>(h.at("n").get<int>(), h.at("extents").get<std::vector<int>>(),
                                                   topology_from_string(h.at("topology").get<std::string>()),
                                                   h.value("mesh", 1.0));
  const int k = h.at("k").get<int>();
  LatticeForm f(cx, k);
  std::vector<double> buf(f.size());
  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw InvalidArgument("cannot read " + stem + ".bin");
  bin.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  require(bin.gcount() == static_cast<std::streamsize>(buf.size() * sizeof(double)), "truncated form data");
  auto cells = cx->enumerate_cells(k);
  for (std::size_t i = 0; i < cells.size(); ++i) f[cx->index(k, cells[i].mask, cells[i].x)] = buf[i];
  return f;
}

void write_form_csv(const LatticeForm& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  const auto& cx = f.complex();
  out << "cell,value\n";
  out.precision(17);
  long long id = 0;
  for (const auto& c : cx.enumerate_cells(f.degree())) {
    out << id++ << ":(";
    for (int a = 0; a < cx.dim(); ++a) out << (a ? " " : "") << c.x[a];
    out << ")[";
    auto ax = mask_axes(c.mask);
    for (std::size_t i = 0; i < ax.size(); ++i) out << (i ? " " : "") << ax[i];
    out << "]," << f[cx.index(f.degree(), c.mask, c.x)] << "\n";
  }
}

}  // namespace fgf
