#pragma once

#include <vector>

#include "fgf/common.hpp"

namespace fgf {

// N×N complex matrix, row-major
using CMatrix = std::vector<cplx>;

// Orthonormal basis of u(N) under <X,Y> = -N Tr(XY): (E_ij - E_ji)/sqrt(2N),
// i(E_ij + E_ji)/sqrt(2N) for i<j, then i E_ii/sqrt(N).
std::vector<CMatrix> lie_basis(int N);

double lie_inner(const CMatrix& X, const CMatrix& Y, int N);  // -N Re Tr(XY)
// max entry error of Σ_a E_a⊗E_a + (1/N) swap on C^N ⊗ C^N
double casimir_error(const std::vector<CMatrix>& basis, int N);
// max |Gram - I|
double gram_error(const std::vector<CMatrix>& basis, int N);

CMatrix mat_mul(const CMatrix& a, const CMatrix& b, int N);
CMatrix mat_identity(int N);
cplx mat_trace(const CMatrix& a, int N);

}  // namespace fgf
