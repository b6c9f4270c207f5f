#include "fgf/common.hpp"

#include <algorithm>
#include <bit>

namespace fgf {

const char* version() { return FGF_VERSION; }

long long binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

long long double_factorial(int n) {
  long long r = 1;
  for (int i = n; i > 1; i -= 2) r *= i;
  return r;
}

int popcount(unsigned m) { return std::popcount(m); }

std::vector<int> mask_axes(unsigned m) {
  std::vector<int> a;
  for (int i = 0; m >> i; ++i)
    if (m >> i & 1u) a.push_back(i);
  return a;
}

std::vector<unsigned> subsets(int n, int k) {
  std::vector<unsigned> out;
  if (k < 0 || k > n) return out;
  for (unsigned m = 0; m < (1u << n); ++m)
    if (popcount(m) == k) out.push_back(m);
  std::sort(out.begin(), out.end(), [](unsigned a, unsigned b) {
    return mask_axes(a) < mask_axes(b);
  });
  return out;
}

int position_in(unsigned mask, int axis) {
  return popcount(mask & ((1u << axis) - 1u));
}

int shuffle_sign(unsigned I, unsigned J) {
  // count pairs (i in I, j in J) with i > j
  int inv = 0;
  for (int j : mask_axes(J)) inv += popcount(I & ~((1u << (j + 1)) - 1u));
  return (inv & 1) ? -1 : 1;
}

}  // namespace fgf
