#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

#include "fgf/testfn.hpp"

namespace fgf::detail {

using GKR = boost::math::quadrature::gauss_kronrod<double, 31>;

// Adaptive Gauss–Kronrod with the stopping rule err ≤ tol·∫|f|, so integrals
// that cancel to ~0 terminate instead of bisecting to full depth.
template <class F>
QuadResult adaptive(F& f, double a, double b, double tol, int max_depth = 14) {
  struct Panel {
    double a, b, v, e;
  };
  auto eval = [&](double lo, double hi) {
    double err = 0, l1 = 0;
    double v = GKR::integrate(f, lo, hi, 0, 0.0, &err, &l1);
    return std::make_pair(Panel{lo, hi, v, err}, l1);
  };
  auto [root, l1] = eval(a, b);
  const double target = tol * std::max(l1, 1e-300);
  std::vector<std::pair<Panel, int>> stack{{root, 0}};
  QuadResult out;
  while (!stack.empty()) {
    auto [p, depth] = stack.back();
    stack.pop_back();
    const double share = target * (p.b - p.a) / (b - a);
    if (p.e <= share || depth >= max_depth) {
      out.value += p.v;
      out.error += p.e;
      continue;
    }
    const double mid = 0.5 * (p.a + p.b);
    stack.push_back({eval(p.a, mid).first, depth + 1});
    stack.push_back({eval(mid, p.b).first, depth + 1});
  }
  return out;
}

// adaptive() over consecutive breakpoints, after sorting and deduplication
template <class F>
QuadResult adaptive_pieces(F& f, std::vector<double> pts, double tol) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  QuadResult r;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    auto q = adaptive(f, pts[i], pts[i + 1], tol);
    r.value += q.value;
    r.error += q.error;
  }
  return r;
}

}  // namespace fgf::detail
