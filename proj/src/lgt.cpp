#include "fgf/lgt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>

namespace fgf {

namespace {

double wrap(double a) {
  a = std::remainder(a, 2 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2 * std::numbers::pi : a;
}

}  // namespace

U1Lattice::U1Lattice(ComplexPtr cx, double beta) : cx_(std::move(cx)), beta_(beta) {
  require(cx_ != nullptr, "null complex");
  require(cx_->dim() >= 2, "gauge field needs n >= 2");
  require(beta >= 0, "beta must be nonnegative");
  theta_.assign(cx_->cell_count(1), 0.0);
  edge_plaqs_.resize(theta_.size());
  plaq_edges_.resize(cx_->cell_count(2));
  const int n = cx_->dim();
  for (const auto& b : cx_->blocks(2)) {
    auto ax = mask_axes(b.mask);
    const int i = ax[0], j = ax[1];
    Coord x{};
    for (long long t = 0; t < b.size; ++t) {
      const long long p = b.offset + t;
      Coord xi = x, xj = x;
      ++xi[i];
      ++xj[j];
      plaq_edges_[p] = {std::pair{cx_->index(1, 1u << i, x), 1}, std::pair{cx_->index(1, 1u << j, xi), 1},
                        std::pair{cx_->index(1, 1u << i, xj), -1}, std::pair{cx_->index(1, 1u << j, x), -1}};
      for (const auto& [e, s] : plaq_edges_[p]) edge_plaqs_[e].push_back({p, s});
      for (int a = n - 1; a >= 0; --a) {
        if (++x[a] < b.dims[a]) break;
        x[a] = 0;
      }
    }
  }
}

void U1Lattice::set_angles(std::vector<double> theta) {
  require(theta.size() == theta_.size(), "angle count does not match the edge count");
  theta_ = std::move(theta);
}

double U1Lattice::plaquette_angle(long long p) const {
  double a = 0;
  for (const auto& [e, s] : plaq_edges_[p]) a += s * theta_[e];
  return a;
}

double U1Lattice::mean_plaquette_cos() const {
  double acc = 0;
  for (long long p = 0; p < plaquettes(); ++p) acc += std::cos(plaquette_angle(p));
  return plaquettes() ? acc / plaquettes() : 0.0;
}

double U1Lattice::action() const { return -beta_ * mean_plaquette_cos() * plaquettes(); }

double U1Lattice::wilson_loop(const std::vector<SparseEntry>& gamma) const {
  double phase = 0;
  for (const auto& e : gamma) {
    const long long idx = cx_->index(1, e.mask, e.x);
    require(idx >= 0, "loop edge outside the complex");
    phase += e.value * theta_[idx];
  }
  return std::cos(phase);
}

double U1Lattice::sweep(double width, const Stream& rng, std::uint64_t& counter) {
  long long accepted = 0;
  for (long long e = 0; e < edges(); ++e) {
    const double delta = width * (2 * rng.uniform(counter++) - 1);
    double dS = 0;  // change of Σ cos θ_p
    for (const auto& [p, s] : edge_plaqs_[e]) {
      const double a = plaquette_angle(p);
      dS += std::cos(a + s * delta) - std::cos(a);
    }
    const double u = rng.uniform(counter++);
    if (dS >= 0 || u < std::exp(beta_ * dS)) {
      theta_[e] = wrap(theta_[e] + delta);
      ++accepted;
    }
  }
  return edges() ? double(accepted) / edges() : 0.0;
}

nlohmann::json McEstimate::to_json() const {
  return {{"value", value},   {"stderr", stderr_},  {"tau_int", tau_int},
          {"acceptance", acceptance}, {"width", width}, {"samples", samples}};
}

McEstimate batched_means(const std::vector<double>& series, int batches) {
  require(batches >= 2, "need at least two batches");
  const long long N = static_cast<long long>(series.size());
  require(N >= 2 * batches, "series too short for the batch count");
  McEstimate r;
  r.samples = N;
  r.value = std::accumulate(series.begin(), series.end(), 0.0) / N;
  const long long B = N / batches;
  double var = 0, vb = 0;
  for (double x : series) var += (x - r.value) * (x - r.value);
  var /= N - 1;
  std::vector<double> means(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    for (long long t = 0; t < B; ++t) means[b] += series[b * B + t];
    means[b] /= B;
  }
  const double mb = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  for (double m : means) vb += (m - mb) * (m - mb);
  vb /= batches - 1;
  r.stderr_ = std::sqrt(vb / batches);
  r.tau_int = var > 0 ? std::max(0.5, 0.5 * B * vb / var) : 0.5;
  return r;
}

namespace {

template <class F>
McEstimate run_metropolis(U1Lattice& lat, const MetropolisOptions& opt, F&& measure) {
  require(opt.sweeps >= 2 * opt.batches, "too few sweeps for the batch count");
  require(opt.burn_in >= 0 && opt.width > 0, "invalid Metropolis options");
  Stream rng(opt.seed, 0x1a7);
  std::uint64_t counter = 0;
  if (!opt.cold_start) {
    std::vector<double> th(lat.edges());
    for (auto& v : th) v = wrap(2 * std::numbers::pi * rng.uniform(counter++));
    lat.set_angles(std::move(th));
  }
  double width = std::min(opt.width, std::numbers::pi);
  const double target = 0.5 * (opt.target_low + opt.target_high);
  for (long long s = 0; s < opt.burn_in; ++s) {
    const double acc = lat.sweep(width, rng, counter);
    if (opt.tune && s < opt.burn_in * 3 / 4) width = std::clamp(width * std::exp(acc - target), 1e-3, std::numbers::pi);
  }
  std::vector<double> series;
  series.reserve(opt.sweeps);
  double acc = 0;
  for (long long s = 0; s < opt.sweeps; ++s) {
    acc += lat.sweep(width, rng, counter);
    series.push_back(measure(lat));
  }
  auto r = batched_means(series, opt.batches);
  r.acceptance = acc / opt.sweeps;
  r.width = width;
  // at width π the proposal is global; higher acceptance is then not a tuning failure
  if (opt.tune && (r.acceptance < opt.target_low || (r.acceptance > opt.target_high && width < std::numbers::pi)))
    throw NumericalError("Metropolis acceptance " + std::to_string(r.acceptance) + " outside the target band");
  return r;
}

}  // namespace

McEstimate wilson_mc_estimate(ComplexPtr cx, double beta, const std::vector<RectLoop>& loops,
                              const MetropolisOptions& opt) {
  require(!loops.empty(), "no loops to measure");
  for (const auto& l : loops) require(l.cx->same_as(*cx), "loop lives on a different complex");
  U1Lattice lat(cx, beta);
  return run_metropolis(lat, opt, [&](const U1Lattice& f) {
    double acc = 0;
    for (const auto& l : loops) acc += f.wilson_loop(l.edges);
    return acc / loops.size();
  });
}

McEstimate plaquette_mc_estimate(ComplexPtr cx, double beta, const MetropolisOptions& opt) {
  U1Lattice lat(cx, beta);
  return run_metropolis(lat, opt, [](const U1Lattice& f) { return f.mean_plaquette_cos(); });
}

std::vector<double> gauge_fix_tree(U1Lattice& lat, const Coord& root) {
  const auto& cx = lat.complex();
  const int n = cx.dim();
  const long long root_idx = cx.index(0, 0u, root);
  require(root_idx >= 0, "root vertex outside the complex");
  std::vector<double> lam(cx.cell_count(0), 0.0);
  std::vector<char> seen(lam.size(), 0);
  const auto& th = lat.angles();
  std::deque<long long> queue{root_idx};
  seen[root_idx] = 1;
  // along edge (x, i): θ' = θ + λ(x + e_i) - λ(x); tree edges become 0
  while (!queue.empty()) {
    const long long v = queue.front();
    queue.pop_front();
    const Coord x = cx.cell(0, v).x;
    for (int i = 0; i < n; ++i) {
      Coord up = x, dn = x;
      ++up[i];
      --dn[i];
      const long long eu = cx.index(1, 1u << i, x), wu = cx.index(0, 0u, up);
      if (eu >= 0 && wu >= 0 && !seen[wu]) {
        lam[wu] = lam[v] - th[eu];
        seen[wu] = 1;
        queue.push_back(wu);
      }
      const long long ed = cx.index(1, 1u << i, dn), wd = cx.index(0, 0u, dn);
      if (ed >= 0 && wd >= 0 && !seen[wd]) {
        lam[wd] = lam[v] + th[ed];
        seen[wd] = 1;
        queue.push_back(wd);
      }
    }
  }
  LatticeForm l0(lat.complex_ptr(), 0, lam);
  auto dl = exterior_derivative(l0);
  std::vector<double> out(th.size());
  for (std::size_t e = 0; e < th.size(); ++e) out[e] = wrap(th[e] + dl[e]);
  lat.set_angles(std::move(out));
  return lam;
}

double u1_exact_2d(double beta, int area) {
  require(beta > 0 && area >= 0, "invalid arguments");
  return std::pow(std::cyl_bessel_i(1.0, beta) / std::cyl_bessel_i(0.0, beta), area);
}

std::vector<RectLoop> translated_loops(ComplexPtr cx, int i, int j, int L, int H, const Coord& lo, const Coord& hi) {
  const int n = cx->dim();
  std::vector<RectLoop> out;
  Coord x = lo;
  while (true) {
    out.push_back(build_rect_loop(cx, i, j, x, L, H, false));
    int a = n - 1;
    for (; a >= 0; --a) {
      if (++x[a] <= hi[a]) break;
      x[a] = lo[a];
    }
    if (a < 0) break;
  }
  return out;
}

}  // namespace fgf
