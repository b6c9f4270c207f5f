#pragma once

#include <functional>
#include <vector>

#include "fgf/lattice.hpp"

namespace fgf {

enum class Bc1D { Dirichlet, Neumann, Periodic };

// Eigen-decomposition of a 1-D second-difference operator of size m.
// Dirichlet: m cells with zero ghosts at both ends. Neumann: path graph on m
// nodes. Periodic: cycle on m nodes.
struct Eig1D {
  int m = 0;
  std::vector<double> U;    // column-major, U[i + m*j] = j-th eigenvector
  std::vector<double> lam;  // ascending
};

const Eig1D& eig1d(Bc1D bc, int m);

// y <- M x along one axis of an n-dim row-major array (last axis fastest).
void apply_axis(std::vector<double>& data, const Coord& dims, int n, int axis, const std::vector<double>& M,
                bool transpose);

struct SeparableGrid {
  int n = 0;
  Coord dims{};
  std::vector<Bc1D> bc;
  long long size() const;
};

// Boundary pattern of the component block with axis set `mask`.
SeparableGrid component_grid(const LatticeComplex& cx, unsigned mask);

// data <- g(Σλ) in the tensor eigenbasis
void separable_apply(std::vector<double>& data, const SeparableGrid& grid, const std::function<double(double)>& g);

// Coefficients in the tensor eigenbasis and back.
void separable_forward(std::vector<double>& data, const SeparableGrid& grid);
void separable_inverse(std::vector<double>& data, const SeparableGrid& grid);
std::vector<double> separable_eigenvalues(const SeparableGrid& grid);

}  // namespace fgf
