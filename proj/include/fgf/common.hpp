#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fgf {

using cplx = std::complex<double>;

// Bad input or violated precondition. The CLI maps this to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure (solver cap, quadrature, tolerance). Exit code 1.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

const char* version();

long long binomial(int n, int k);
long long double_factorial(int n);  // n!! with (-1)!! = 0!! = 1

// Axis subsets of {0..n-1} as bitmasks, ordered lexicographically on the
// increasing index tuple (so {0,1} < {0,2} < {1,2}).
std::vector<unsigned> subsets(int n, int k);
int popcount(unsigned m);
std::vector<int> mask_axes(unsigned m);
int position_in(unsigned mask, int axis);  // number of members below axis

// Sign of the permutation that sorts the concatenation I ++ J (disjoint).
int shuffle_sign(unsigned I, unsigned J);

}  // namespace fgf
