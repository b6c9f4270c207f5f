#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fgf/common.hpp"

namespace fgf {

enum class Topology { Free, Slab, Periodic };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

constexpr int kMaxDim = 6;
using Coord = std::array<int, kMaxDim>;

// Cells of one axis set I: base vertices x range over a box whose shape is
// L_i along i in I and (vertex count) along the other axes.
struct CellBlock {
  unsigned mask = 0;
  Coord dims{};
  Coord stride{};
  long long offset = 0;
  long long size = 0;
};

struct Cell {
  Coord x{};
  unsigned mask = 0;
};

class LatticeComplex {
 public:
  // extents are edge counts L_i; free/slab boxes have L_i+1 vertices per axis,
  // periodic boxes have L_i vertices with wraparound (L_i >= 3).
  LatticeComplex(int n, std::vector<int> extents, Topology topo = Topology::Free, double mesh = 1.0);

  // Z^2 x [-M,M]^(n-2) truncated to an in-plane box of side L.
  static LatticeComplex slab(int n, int L, int M);

  int dim() const { return n_; }
  const std::vector<int>& extents() const { return L_; }
  Topology topology() const { return topo_; }
  double mesh() const { return mesh_; }
  bool periodic() const { return topo_ == Topology::Periodic; }
  int vertices_along(int axis) const { return periodic() ? L_[axis] : L_[axis] + 1; }

  long long cell_count(int k) const;
  const std::vector<CellBlock>& blocks(int k) const;
  const CellBlock& block(int k, unsigned mask) const;

  // -1 when the cell is not in the complex; periodic coordinates wrap.
  long long index(int k, unsigned mask, Coord x) const;
  Cell cell(int k, long long idx) const;

  std::vector<Cell> enumerate_cells(int k) const;

  // Number of (k+1)-cells of the complex containing the given k-cell.
  int coface_count(const Cell& c) const;

  bool same_as(const LatticeComplex& o) const;

 private:
  int n_;
  std::vector<int> L_;
  Topology topo_;
  double mesh_;
  std::vector<std::vector<CellBlock>> blocks_;
  std::vector<long long> counts_;
};

using ComplexPtr = std::shared_ptr<const LatticeComplex>;

class LatticeForm {
 public:
  LatticeForm() = default;
  LatticeForm(ComplexPtr cx, int k);
  LatticeForm(ComplexPtr cx, int k, std::vector<double> values);

  const LatticeComplex& complex() const { return *cx_; }
  ComplexPtr complex_ptr() const { return cx_; }
  int degree() const { return k_; }
  std::size_t size() const { return v_.size(); }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }
  double& operator[](long long i) { return v_[i]; }
  double operator[](long long i) const { return v_[i]; }

  // Value on an oriented cell s*(x, I): sign times the stored value, 0 off Λ.
  double at(Coord x, unsigned mask, int sign = 1) const;

  LatticeForm& operator+=(const LatticeForm& o);
  LatticeForm& operator-=(const LatticeForm& o);
  LatticeForm& operator*=(double a);
  friend LatticeForm operator+(LatticeForm a, const LatticeForm& b) { return a += b; }
  friend LatticeForm operator-(LatticeForm a, const LatticeForm& b) { return a -= b; }
  friend LatticeForm operator*(double a, LatticeForm f) { return f *= a; }

  double norm() const;

 private:
  ComplexPtr cx_;
  int k_ = 0;
  std::vector<double> v_;
};

double inner(const LatticeForm& f, const LatticeForm& g);

LatticeForm exterior_derivative(const LatticeForm& f);
LatticeForm codifferential(const LatticeForm& f);
// -(dd* + d*d), always by composition
LatticeForm hodge_laplacian(const LatticeForm& f);

// Diagonal of the composed -Δ: 2k + number of cofaces in the complex.
std::vector<double> neg_laplacian_diagonal(const LatticeComplex& cx, int k);

// Per-component scalar stencil of -Δ (Dirichlet ghosts along the cell's own
// axes, free along the others). Equal to the composed operator; used by the
// fast solvers and verified against the composition in the tests.
LatticeForm neg_laplacian_componentwise(const LatticeForm& f);

enum class SolveMethod { Auto, PCG, Dense, Separable };

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  SolveMethod method = SolveMethod::Auto;
};

struct SolveOptions {
  double tol = 1e-10;
  long long max_iter = -1;  // default 10 * cells
  SolveMethod method = SolveMethod::Auto;
};

// Null space of -Δ on this degree: constants for k=0 on free/slab boxes,
// per-component constants on periodic boxes; empty otherwise.
bool has_kernel(const LatticeComplex& cx, int k);
LatticeForm remove_kernel(const LatticeForm& f);

LatticeForm poisson_solve(const LatticeForm& f, const SolveOptions& opt = {}, SolveReport* rep = nullptr);

enum class HodgePart { Exact, Coexact };
LatticeForm hodge_project(const LatticeForm& f, HodgePart part, const SolveOptions& opt = {});

// g(-Δ) applied exactly through the separable eigenbasis of each component
// block; g receives the eigenvalue and must handle 0 itself.
LatticeForm apply_spectral(const LatticeForm& f, const std::function<double(double)>& g);

// Dense symmetric matrix of -Δ on degree k (small complexes only).
std::vector<double> dense_neg_laplacian(const LatticeComplex& cx, int k);

void write_form(const LatticeForm& f, const std::string& stem);
LatticeForm read_form(const std::string& stem);
void write_form_csv(const LatticeForm& f, const std::string& path);

}  // namespace fgf
