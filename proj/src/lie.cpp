#include "fgf/lie.hpp"

#include <cmath>

namespace fgf {

std::vector<CMatrix> lie_basis(int N) {
  require(N >= 1, "u(N) needs N >= 1");
  std::vector<CMatrix> out;
  const double a = 1 / std::sqrt(2.0 * N), b = 1 / std::sqrt(static_cast<double>(N));
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      CMatrix X(N * N, 0.0);
      X[i * N + j] = a;
      X[j * N + i] = -a;
      out.push_back(X);
    }
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      CMatrix X(N * N, 0.0);
      X[i * N + j] = cplx(0, a);
      X[j * N + i] = cplx(0, a);
      out.push_back(X);
    }
  for (int i = 0; i < N; ++i) {
    CMatrix X(N * N, 0.0);
    X[i * N + i] = cplx(0, b);
    out.push_back(X);
  }
  return out;
}

CMatrix mat_mul(const CMatrix& a, const CMatrix& b, int N) {
  CMatrix c(N * N, 0.0);
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < N; ++t) {
      const cplx v = a[i * N + t];
      if (v == 0.0) continue;
      for (int j = 0; j < N; ++j) c[i * N + j] += v * b[t * N + j];
    }
  return c;
}

CMatrix mat_identity(int N) {
  CMatrix I(N * N, 0.0);
  for (int i = 0; i < N; ++i) I[i * N + i] = 1.0;
  return I;
}

cplx mat_trace(const CMatrix& a, int N) {
  cplx t = 0;
  for (int i = 0; i < N; ++i) t += a[i * N + i];
  return t;
}

double lie_inner(const CMatrix& X, const CMatrix& Y, int N) { return -N * mat_trace(mat_mul(X, Y, N), N).real(); }

double gram_error(const std::vector<CMatrix>& basis, int N) {
  double e = 0;
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t b = 0; b < basis.size(); ++b)
      e = std::max(e, std::abs(lie_inner(basis[a], basis[b], N) - (a == b ? 1.0 : 0.0)));
  return e;
}

double casimir_error(const std::vector<CMatrix>& basis, int N) {
  // (X⊗Y)_{(i,k),(j,l)} = X_ij Y_kl ; swap_{(i,k),(j,l)} = δ_il δ_kj
  double e = 0;
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < N; ++j)
        for (int l = 0; l < N; ++l) {
          cplx s = 0;
          for (const auto& E : basis) s += E[i * N + j] * E[k * N + l];
          const double swap = (i == l && k == j) ? 1.0 : 0.0;
          e = std::max(e, std::abs(s + swap / N));
        }
  return e;
}

}  // namespace fgf
