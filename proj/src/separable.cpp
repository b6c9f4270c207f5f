#include "fgf/separable.hpp"

#include <Eigen/Dense>
#include <map>
#include <mutex>

namespace fgf {

namespace {

Eig1D build(Bc1D bc, int m) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    if (i > 0) A(i, i - 1) = -1;
    if (i + 1 < m) A(i, i + 1) = -1;
  }
  switch (bc) {
    case Bc1D::Dirichlet:
      for (int i = 0; i < m; ++i) A(i, i) = 2;
      break;
    case Bc1D::Neumann:
      for (int i = 0; i < m; ++i) A(i, i) = (i > 0) + (i + 1 < m);
      break;
    case Bc1D::Periodic:
      require(m >= 3, "periodic axis needs at least 3 sites");
      for (int i = 0; i < m; ++i) A(i, i) = 2;
      A(0, m - 1) -= 1;
      A(m - 1, 0) -= 1;
      break;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eig1D e;
  e.m = m;
  e.lam.assign(es.eigenvalues().data(), es.eigenvalues().data() + m);
  e.U.assign(es.eigenvectors().data(), es.eigenvectors().data() + m * m);
  // clean the exact zero mode so kernels are detected reliably
  for (double& l : e.lam)
    if (std::abs(l) < 1e-13) l = 0.0;
  return e;
}

}  // namespace

const Eig1D& eig1d(Bc1D bc, int m) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, Eig1D> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(static_cast<int>(bc), m);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build(bc, m)).first;
  return it->second;
}

long long SeparableGrid::size() const {
  long long s = 1;
  for (int i = 0; i < n; ++i) s *= dims[i];
  return s;
}

void apply_axis(std::vector<double>& data, const Coord& dims, int n, int axis, const std::vector<double>& M,
                bool transpose) {
  long long outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= dims[i];
  for (int i = axis + 1; i < n; ++i) inner *= dims[i];
  const int len = dims[axis];
  std::vector<double> buf(static_cast<std::size_t>(len) * inner);
  for (long long o = 0; o < outer; ++o) {
    double* base = data.data() + o * len * inner;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < len; ++i) {
      double* out = buf.data() + i * inner;
      for (int j = 0; j < len; ++j) {
        // M column-major: M(i,j) = M[i + len*j]
        double c = transpose ? M[j + static_cast<std::size_t>(len) * i] : M[i + static_cast<std::size_t>(len) * j];
        if (c == 0.0) continue;
        const double* in = base + j * inner;
        for (long long t = 0; t < inner; ++t) out[t] += c * in[t];
      }
    }
    std::copy(buf.begin(), buf.end(), base);
  }
}

SeparableGrid component_grid(const LatticeComplex& cx, unsigned mask) {
  SeparableGrid g;
  g.n = cx.dim();
  for (int a = 0; a < g.n; ++a) {
    bool along = mask >> a & 1u;
    if (cx.periodic()) {
      g.dims[a] = cx.extents()[a];
      g.bc.push_back(Bc1D::Periodic);
    } else if (along) {
      g.dims[a] = cx.extents()[a];
      g.bc.push_back(Bc1D::Dirichlet);
    } else {
      g.dims[a] = cx.extents()[a] + 1;
      g.bc.push_back(Bc1D::Neumann);
    }
  }
  return g;
}

void separable_forward(std::vector<double>& data, const SeparableGrid& grid) {
  for (int a = 0; a < grid.n; ++a) apply_axis(data, grid.dims, grid.n, a, eig1d(grid.bc[a], grid.dims[a]).U, true);
}

void separable_inverse(std::vector<double>& data, const SeparableGrid& grid) {
  for (int a = 0; a < grid.n; ++a) apply_axis(data, grid.dims, grid.n, a, eig1d(grid.bc[a], grid.dims[a]).U, false);
}

std::vector<double> separable_eigenvalues(const SeparableGrid& grid) {
  std::vector<double> lam(grid.size(), 0.0);
  long long inner = grid.size();
  for (int a = 0; a < grid.n; ++a) {
    const auto& e = eig1d(grid.bc[a], grid.dims[a]);
    inner /= grid.dims[a];
    for (long long i = 0; i < grid.size(); ++i) lam[i] += e.lam[(i / inner) % grid.dims[a]];
  }
  return lam;
}

void separable_apply(std::vector<double>& data, const SeparableGrid& grid, const std::function<double(double)>& g) {
  separable_forward(data, grid);
  auto lam = separable_eigenvalues(grid);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= g(lam[i] < 1e-12 ? 0.0 : lam[i]);
  separable_inverse(data, grid);
}

}  // namespace fgf
