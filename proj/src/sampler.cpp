#include "fgf/sampler.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <numbers>

#include "fgf/lie.hpp"
#include "fgf/rng.hpp"

namespace fgf {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Plain: return "plain";
    case Variant::ExactProjected: return "exact-projected";
    case Variant::CoexactProjected: return "coexact-projected";
    case Variant::Massive: return "massive";
    case Variant::Proca: return "proca";
    case Variant::ChernSimons: return "chern-simons";
  }
  return "plain";
}

Variant variant_from_string(const std::string& s) {
  for (Variant v : {Variant::Plain, Variant::ExactProjected, Variant::CoexactProjected, Variant::Massive, Variant::Proca,
                    Variant::ChernSimons})
    if (to_string(v) == s) return v;
  throw InvalidArgument("unknown variant '" + s + "'");
}

void FieldSpec::validate() const {
  require(n >= 1 && n <= 6, "n must be in 1..6");
  require(k >= 0 && k <= n, "k must be in 0..n");
  require(beta > 0 && std::isfinite(beta), "beta must be positive");
  require(std::isfinite(s), "s must be finite");
  if (torus) {
    require(cutoff >= 1, "torus cutoff must be positive");
  } else {
    require(static_cast<int>(extents.size()) == n, "lattice extents must have n entries");
    require(matrix_size == 0, "matrix-valued fields are torus-only");
  }
  require(matrix_size >= 0, "matrix size must be nonnegative");
  switch (variant) {
    case Variant::Massive: require(lambda > 0, "massive variant needs lambda > 0"); break;
    case Variant::Proca:
      require(lambda > 0, "Proca field needs lambda > 0");
      require(k == 1, "Proca field is a 1-form");
      break;
    case Variant::ChernSimons:
      require(torus, "Chern-Simons weighting is torus-only");
      require(n == 3 && k == 1, "Chern-Simons weighting needs n = 3, k = 1");
      require(lambda >= 0 && lambda < 1, "Chern-Simons weight must satisfy 0 <= lambda < 1");
      break;
    default: break;
  }
}

nlohmann::json FieldSpec::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["k"] = k;
  j["s"] = s;
  j["beta"] = beta;
  j["variant"] = to_string(variant);
  j["lambda"] = lambda;
  j["matrix_size"] = matrix_size;
  if (torus) {
    j["geometry"] = {{"type", "torus"}, {"cutoff", cutoff}};
  } else {
    j["geometry"] = {{"type", "lattice"}, {"extents", extents}, {"topology", to_string(topology)}};
  }
  return j;
}

FieldSpec FieldSpec::from_json(const nlohmann::json& j) {
  FieldSpec f;
  try {
    f.n = j.value("n", f.n);
    f.k = j.value("k", f.k);
    f.s = j.value("s", f.s);
    f.beta = j.value("beta", f.beta);
    f.variant = variant_from_string(j.value("variant", std::string("plain")));
    f.lambda = j.value("lambda", 0.0);
    f.matrix_size = j.value("matrix_size", 0);
    if (j.contains("geometry")) {
      const auto& g = j.at("geometry");
      const std::string type = g.value("type", std::string("torus"));
      if (type == "torus") {
        f.torus = true;
        f.cutoff = g.value("cutoff", f.cutoff);
      } else if (type == "lattice") {
        f.torus = false;
        f.extents = g.at("extents").get<std::vector<int>>();
        f.topology = topology_from_string(g.value("topology", std::string("free")));
      } else {
        throw InvalidArgument("unknown geometry type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad field spec: ") + e.what());
  }
  f.validate();
  return f;
}

namespace {

ModeMatrix projector(int n, int k, const std::vector<double>& a, Projection p) {
  const int C = static_cast<int>(binomial(n, k));
  ModeMatrix P(C * C);
  for (int c = 0; c < C; ++c) {
    Block e(C, 0.0);
    e[c] = 1.0;
    Block col = p == Projection::Exact ? block_exact(n, k, a, e) : block_coexact(n, k, a, e);
    for (int r = 0; r < C; ++r) P[r * C + c] = col[r];
  }
  return P;
}

ModeMatrix scaled_identity(int C, double w) {
  ModeMatrix M(C * C, 0.0);
  for (int i = 0; i < C; ++i) M[i * C + i] = w;
  return M;
}

}  // namespace

ModeMatrix mode_factor(const FieldSpec& spec, const std::vector<double>& alpha) {
  const int n = spec.n, k = spec.k, C = static_cast<int>(binomial(n, k));
  const double a2 = norm2(alpha);
  if (a2 == 0) return ModeMatrix(C * C, 0.0);
  const double b = 1 / std::sqrt(spec.beta), r = std::sqrt(a2);
  ModeMatrix M;
  switch (spec.variant) {
    case Variant::Plain: M = scaled_identity(C, std::pow(a2, -spec.s / 2)); break;
    case Variant::Massive: M = scaled_identity(C, std::pow(a2 + spec.lambda, -spec.s / 2)); break;
    case Variant::ExactProjected:
    case Variant::CoexactProjected: {
      M = projector(n, k, alpha, spec.variant == Variant::ExactProjected ? Projection::Exact : Projection::Coexact);
      for (auto& v : M) v *= std::pow(a2, -spec.s / 2);
      break;
    }
    case Variant::Proca: {
      auto E = projector(n, k, alpha, Projection::Exact), Es = projector(n, k, alpha, Projection::Coexact);
      M.assign(C * C, 0.0);
      for (int i = 0; i < C * C; ++i) M[i] = E[i] / std::sqrt(spec.lambda) + Es[i] / std::sqrt(a2 + spec.lambda);
      break;
    }
    case Variant::ChernSimons: {
      auto v = curl_eigenbasis(alpha);
      M.assign(C * C, 0.0);
      for (int sg = 0; sg < 2; ++sg) {
        double w = std::pow(1 + (sg == 0 ? 1 : -1) * spec.lambda / r, -0.5) * std::pow(a2, -spec.s / 2);
        for (int i = 0; i < C; ++i)
          for (int j = 0; j < C; ++j) M[i * C + j] += w * v[sg][i] * std::conj(v[sg][j]);
      }
      break;
    }
  }
  for (auto& x : M) x *= b;
  return M;
}

ModeMatrix mode_covariance(const FieldSpec& spec, const std::vector<double>& alpha) {
  auto M = mode_factor(spec, alpha);
  const int C = static_cast<int>(binomial(spec.n, spec.k));
  ModeMatrix out(C * C, 0.0);
  for (int i = 0; i < C; ++i)
    for (int j = 0; j < C; ++j)
      for (int t = 0; t < C; ++t) out[i * C + j] += M[i * C + t] * std::conj(M[j * C + t]);
  return out;
}

TorusSampler::TorusSampler(const FieldSpec& spec)
    : spec_(spec), shape_(spec.n, spec.k, spec.cutoff, spec.matrix_size) {
  spec.validate();
  require(spec.torus, "torus sampler needs torus geometry");
  factor_.resize(shape_.mode_count());
  for (long long m = 0; m < shape_.mode_count(); ++m)
    if (shape_.positive(m)) factor_[m] = mode_factor(spec, shape_.mode_real(m));
  if (spec.matrix_size > 0) basis_ = lie_basis(spec.matrix_size);
}

TorusSpectrum TorusSampler::sample(std::uint64_t seed, std::uint64_t stream) const {
  TorusSpectrum A = shape_;
  Stream rng(seed, stream);
  const int C = A.comps(), N = A.matrix_size(), G = N > 0 ? N * N : 1;
  std::vector<cplx> z(C), x(C);
  for (long long m = 0; m < A.mode_count(); ++m) {
    if (!A.positive(m)) continue;
    const auto& M = factor_[m];
    const long long neg = A.negate(m);
    for (int a = 0; a < G; ++a) {
      for (int c = 0; c < C; ++c) z[c] = rng.cnormal((static_cast<std::uint64_t>(m) * C + c) * G + a);
      for (int i = 0; i < C; ++i) {
        cplx v = 0;
        for (int t = 0; t < C; ++t) v += M[i * C + t] * z[t];
        x[i] = v;
      }
      if (N == 0) {
        for (int i = 0; i < C; ++i) {
          A.at(m, i) = x[i];
          A.at(neg, i) = std::conj(x[i]);
        }
        continue;
      }
      // u(N): Â(α) = Σ_a x_a E_a and Â(-α) = Σ_a conj(x_a) E_a
      const auto& E = basis_[a];
      for (int i = 0; i < C; ++i)
        for (int e = 0; e < N * N; ++e) {
          if (E[e] == 0.0) continue;
          A.at(m, i, e) += x[i] * E[e];
          A.at(neg, i, e) += std::conj(x[i]) * E[e];
        }
    }
  }
  return A;
}

TorusSpectrum sample_torus(const FieldSpec& spec, std::uint64_t seed, std::uint64_t stream) {
  return TorusSampler(spec).sample(seed, stream);
}

namespace {

std::function<double(double)> lattice_multiplier(const FieldSpec& spec, double power_scale) {
  // power_scale 1 gives the sampler map g, 2 gives the covariance g²
  const double s = spec.s * power_scale;
  if (spec.variant == Variant::Massive || spec.variant == Variant::Proca) {
    const double lam = spec.lambda;
    const double p = spec.variant == Variant::Proca ? -0.5 * power_scale : -s / 2;
    return [lam, p](double l) { return std::pow(l + lam, p); };
  }
  if (s == 0) return [](double l) { return l > 0 ? 1.0 : 0.0; };
  return [s](double l) { return l > 0 ? std::pow(l, -s / 2) : 0.0; };
}

LatticeForm white_noise(ComplexPtr cx, int k, std::uint64_t seed, std::uint64_t stream) {
  LatticeForm w(cx, k);
  Stream rng(seed, stream);
  auto& v = w.values();
  for (std::size_t i = 0; i + 1 < v.size(); i += 2) std::tie(v[i], v[i + 1]) = rng.normal_pair(i / 2);
  if (v.size() % 2) v.back() = rng.normal(v.size() - 1);
  return w;
}

LatticeForm project(const LatticeForm& f, Projection p) {
  return hodge_project(f, p == Projection::Exact ? HodgePart::Exact : HodgePart::Coexact);
}

}  // namespace

LatticeForm sample_lattice(const FieldSpec& spec, std::uint64_t seed, std::uint64_t stream) {
  spec.validate();
  require(!spec.torus, "lattice sampler needs lattice geometry");
  auto cx = std::make_shared<const LatticeComplex>(spec.n, spec.extents, spec.topology);
  LatticeForm w = white_noise(cx, spec.k, seed, stream);
  LatticeForm a;
  switch (spec.variant) {
    case Variant::Proca: {
      auto ex = project(w, Projection::Exact);
      ex *= 1 / std::sqrt(spec.lambda);
      a = apply_spectral(project(w, Projection::Coexact), lattice_multiplier(spec, 1));
      a += ex;
      break;
    }
    case Variant::ExactProjected:
    case Variant::CoexactProjected:
      a = project(apply_spectral(w, lattice_multiplier(spec, 1)),
                  spec.variant == Variant::ExactProjected ? Projection::Exact : Projection::Coexact);
      break;
    default: a = apply_spectral(w, lattice_multiplier(spec, 1)); break;
  }
  a *= 1 / std::sqrt(spec.beta);
  return a;
}

FieldSample sample_field(const FieldSpec& spec, std::uint64_t seed, std::uint64_t stream) {
  FieldSample out;
  out.spec = spec;
  out.seed = seed;
  out.stream = stream;
  if (spec.torus)
    out.torus = sample_torus(spec, seed, stream);
  else
    out.lattice = sample_lattice(spec, seed, stream);
  return out;
}

double torus_covariance(const FieldSpec& spec, const TorusSpectrum& phi, const TorusSpectrum& psi) {
  require(phi.same_shape(psi) && !phi.is_matrix(), "test forms must be scalar spectra of equal shape");
  require(phi.dim() == spec.n && phi.degree() == spec.k, "test form degree does not match the field");
  const int C = phi.comps();
  double acc = 0;
  for (long long m = 0; m < phi.mode_count(); ++m) {
    Block a = phi.block(m), b = psi.block(m);
    if (block_norm(a) == 0 || block_norm(b) == 0) continue;
    auto Cm = mode_covariance(spec, phi.mode_real(m));
    cplx v = 0;
    for (int i = 0; i < C; ++i)
      for (int j = 0; j < C; ++j) v += std::conj(a[i]) * Cm[i * C + j] * b[j];
    acc += v.real();
  }
  return acc;
}

double lattice_covariance(const FieldSpec& spec, const LatticeForm& phi, const LatticeForm& psi) {
  require(phi.degree() == spec.k && psi.degree() == spec.k, "test form degree does not match the field");
  double v = 0;
  switch (spec.variant) {
    case Variant::Proca: {
      auto e1 = project(phi, Projection::Exact), e2 = project(psi, Projection::Exact);
      auto c1 = project(phi, Projection::Coexact);
      v = inner(e1, e2) / spec.lambda + inner(apply_spectral(c1, lattice_multiplier(spec, 2)), psi);
      break;
    }
    case Variant::ExactProjected:
    case Variant::CoexactProjected: {
      auto p = project(phi, spec.variant == Variant::ExactProjected ? Projection::Exact : Projection::Coexact);
      v = inner(apply_spectral(p, lattice_multiplier(spec, 2)), psi);
      break;
    }
    default: v = inner(apply_spectral(phi, lattice_multiplier(spec, 2)), psi); break;
  }
  return v / spec.beta;
}

TorusSpectrum gauge_fix_coulomb(const TorusSpectrum& a) {
  require(a.degree() == 1, "gauge fixing acts on 1-forms");
  return spectral_project(a, Projection::Coexact);
}

TorusSpectrum gauge_fix_axial(const TorusSpectrum& a, int axis) {
  require(a.degree() == 1, "gauge fixing acts on 1-forms");
  require(axis >= 0 && axis < a.dim(), "axial gauge axis out of range");
  TorusSpectrum out = a;
  for (long long m = 0; m < a.mode_count(); ++m) {
    Mode al = a.mode(m);
    if (al[axis] == 0) continue;
    for (int e = 0; e < a.entries(); ++e) {
      cplx c = a.at(m, axis, e) / static_cast<double>(al[axis]);
      for (int i = 0; i < a.dim(); ++i) out.at(m, i, e) -= c * static_cast<double>(al[i]);
    }
  }
  return out;
}

LatticeForm gauge_fix_coulomb(const LatticeForm& a) {
  require(a.degree() == 1, "gauge fixing acts on 1-forms");
  return project(a, Projection::Coexact);
}

double hurst_constant(double s) {
  require(s > 0.5, "restriction needs s > 1/2");
  return std::tgamma(0.5) * std::tgamma(s - 0.5) / (2 * std::numbers::pi * std::tgamma(s));
}

double restricted_mode_variance(double a2, double s, int cutoff) {
  require(s > 0.5, "restriction needs s > 1/2");
  const int M = cutoff >= 0 ? cutoff : 4096;
  double sum = 0;
  for (int m = M; m >= 1; --m) sum += 2 * std::pow(a2 + double(m) * m, -s);
  if (a2 > 0) sum += std::pow(a2, -s);
  if (cutoff < 0) {
    // tail Σ_{|m|>M} by the midpoint rule: 2∫_{M+1/2}^∞ (a²+u²)^{-s} du
    boost::math::quadrature::exp_sinh<double> q;
    sum += 2 * q.integrate([&](double u) { return std::pow(a2 + (M + 0.5 + u) * (M + 0.5 + u), -s); });
  }
  return sum / (2 * std::numbers::pi);
}

namespace {

// B̂(α') = (2π)^{-1/2} Σ_m Â(α' ⊕ m) e^{i m t}, with Â drawn exactly as the
// torus sampler (k = 0, scalar) would draw it for the full cutoff box.
cplx restricted_draw(const FieldSpec& spec, const Stream& rng, int axis, double t, const Mode& ap) {
  const int n = spec.n, K = spec.cutoff, side = 2 * K + 1;
  long long total = 1;
  for (int i = 0; i < n; ++i) total *= side;
  const long long zero = total / 2;
  cplx acc = 0;
  Mode a(n);
  for (int m = -K; m <= K; ++m) {
    for (int i = 0, j = 0; i < n; ++i) a[i] = (i == axis) ? m : ap[j++];
    long long idx = 0;
    double a2 = 0;
    for (int i = 0; i < n; ++i) {
      idx = idx * side + (a[i] + K);
      a2 += double(a[i]) * a[i];
    }
    if (idx == zero) continue;
    cplx z = idx > zero ? rng.cnormal(idx) : std::conj(rng.cnormal(total - 1 - idx));
    acc += std::pow(a2, -spec.s / 2) * z * std::polar(1.0, m * t);
  }
  return acc / std::sqrt(2 * std::numbers::pi * spec.beta);
}

}  // namespace

std::vector<cplx> restricted_coefficients(const FieldSpec& spec, int axis, double offset, const Mode& mode,
                                          int samples, std::uint64_t seed) {
  spec.validate();
  require(spec.torus && spec.k == 0 && spec.variant == Variant::Plain && spec.matrix_size == 0,
          "restriction is implemented for the scalar torus GFF");
  require(spec.s > 0.5, "restriction needs s > 1/2");
  require(axis >= 0 && axis < spec.n, "axis out of range");
  require(static_cast<int>(mode.size()) == spec.n - 1, "restricted mode must have n-1 entries");
  for (int v : mode) require(std::abs(v) <= spec.cutoff, "restricted mode outside the cutoff");
  std::vector<cplx> out(samples);
  for (int i = 0; i < samples; ++i) out[i] = restricted_draw(spec, Stream(seed, i), axis, offset, mode);
  return out;
}

std::vector<RestrictionRow> restrict_hyperplane(const FieldSpec& spec, int axis, double offset,
                                                const std::vector<Mode>& modes, int samples, std::uint64_t seed) {
  require(samples >= 3, "need at least three samples");
  std::vector<RestrictionRow> rows;
  const double c = hurst_constant(spec.s);
  for (const auto& ap : modes) {
    RestrictionRow r;
    r.alpha = ap;
    double a2 = 0;
    for (int v : ap) a2 += double(v) * v;
    require(a2 > 0, "restricted mode must be nonzero");
    r.exact = restricted_mode_variance(a2, spec.s, spec.cutoff) / spec.beta;
    r.untruncated = restricted_mode_variance(a2, spec.s) / spec.beta;
    r.hurst_proxy = c * std::pow(a2, 0.5 - spec.s) / spec.beta;
    auto b = restricted_coefficients(spec, axis, offset, ap, samples, seed);
    std::vector<double> p(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) p[i] = std::norm(b[i]);
    auto e = estimate_mean(p);
    r.empirical = e.value;
    r.stderr_ = e.stderr_;
    rows.push_back(r);
  }
  return rows;
}

FsheReport fshe_stationary_check(double s, const std::vector<double>& mode_norms, double dt, int steps, int chains,
                                 int lag_steps, std::uint64_t seed) {
  require(s > 0, "fractional heat equation needs s > 0");
  require(steps > 0 && dt > 0, "empty time grid");
  require(chains >= 2, "need at least two chains");
  require(lag_steps >= 0 && lag_steps < steps, "lag must fit in the time grid");
  FsheReport rep;
  rep.lag = lag_steps * dt;
  for (std::size_t q = 0; q < mode_norms.size(); ++q) {
    const double a = mode_norms[q];
    require(a > 0, "mode norm must be positive");
    const double kappa = std::pow(a, 2 * s), decay = std::exp(-kappa * dt);
    const double noise = std::sqrt((1 - std::exp(-2 * kappa * dt)) / (2 * kappa));
    std::vector<double> eq(chains), lc(chains);
    for (int c = 0; c < chains; ++c) {
      Stream rng(seed, q * 1000003ULL + c);
      std::vector<cplx> path(steps);
      cplx x = rng.cnormal(0) / std::sqrt(2 * kappa);
      for (int t = 0; t < steps; ++t) {
        path[t] = x;
        x = decay * x + noise * rng.cnormal(t + 1);
      }
      double e = 0, l = 0;
      for (int t = 0; t < steps; ++t) e += std::norm(path[t]);
      for (int t = 0; t + lag_steps < steps; ++t) l += (path[t + lag_steps] * std::conj(path[t])).real();
      eq[c] = 2 * e / steps;
      lc[c] = l / (steps - lag_steps);
    }
    auto me = estimate_mean(eq), ml = estimate_mean(lc);
    rep.mode_norm.push_back(a);
    rep.equal_time.push_back(me.value);
    rep.equal_time_se.push_back(me.stderr_);
    rep.lag_cov.push_back(ml.value);
    rep.lag_cov_se.push_back(ml.stderr_);
  }
  return rep;
}

CovEstimate estimate_mean(const std::vector<double>& x) {
  require(x.size() >= 2, "need at least two samples");
  const double n = static_cast<double>(x.size());
  double m = 0;
  for (double v : x) m += v;
  m /= n;
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / (n - 1) / n)};
}

CovEstimate estimate_covariance(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "sample vectors differ in length");
  require(x.size() >= 3, "need at least three samples");
  const std::size_t N = x.size();
  const double n = static_cast<double>(N);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < N; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sx = 0, sy = 0, sxy = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double a = x[i] - mx, b = y[i] - my;
    sx += a;
    sy += b;
    sxy += a * b;
  }
  const double cov = (sxy - sx * sy / n) / (n - 1);
  std::vector<double> loo(N);
  double mean_loo = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double a = x[i] - mx, b = y[i] - my;
    loo[i] = (sxy - a * b - (sx - a) * (sy - b) / (n - 1)) / (n - 2);
    mean_loo += loo[i];
  }
  mean_loo /= n;
  double var = 0;
  for (double v : loo) var += (v - mean_loo) * (v - mean_loo);
  const double se = std::sqrt((n - 1) / n * var);
  require(std::isfinite(se), "degenerate covariance inputs");
  return {cov, se};
}

}  // namespace fgf

namespace fgf {

DerivedLawReport derived_law_check(const FieldSpec& spec, DerivedOp op,
                                   const std::vector<std::pair<TorusSpectrum, TorusSpectrum>>& tests, int samples,
                                   std::uint64_t seed) {
  spec.validate();
  require(spec.torus && spec.matrix_size == 0, "derived-law check needs a scalar torus field");
  require(samples >= 3, "need at least three samples");
  require(!tests.empty(), "no test forms");
  const int n = spec.n, k = spec.k;
  int out_k = k;
  switch (op) {
    case DerivedOp::D: require(k < n, "d needs k < n"); out_k = k + 1; break;
    case DerivedOp::DStar: require(k > 0, "d* needs k > 0"); out_k = k - 1; break;
    case DerivedOp::Star: out_k = n - k; break;
    case DerivedOp::Curl: require(n == 3 && k == 1, "curl needs n = 3, k = 1"); out_k = 1; break;
  }
  for (const auto& [phi, psi] : tests) {
    require(phi.same_shape(psi) && !phi.is_matrix(), "test forms must be scalar spectra of equal shape");
    require(phi.dim() == n && phi.degree() == out_k && phi.cutoff() == spec.cutoff, "test form shape does not match");
  }
  auto apply = [&](const TorusSpectrum& a) {
    switch (op) {
      case DerivedOp::D: return spectral_d(a);
      case DerivedOp::DStar: return spectral_dstar(a);
      case DerivedOp::Star: return spectral_star(a);
      case DerivedOp::Curl: return spectral_star(spectral_d(a));
    }
    return a;
  };
  DerivedLawReport rep;
  rep.op = op;
  rep.samples = samples;
  for (const auto& [phi, psi] : tests) {
    DerivedLawRow row;
    switch (op) {
      case DerivedOp::D:
        row.analytic = spectral_inner_hminus(spectral_project(phi, Projection::Exact), psi, spec.s - 1);
        break;
      case DerivedOp::DStar:
      case DerivedOp::Curl:
        row.analytic = spectral_inner_hminus(spectral_project(phi, Projection::Coexact), psi, spec.s - 1);
        break;
      case DerivedOp::Star: row.analytic = spectral_inner_hminus(phi, psi, spec.s); break;
    }
    row.analytic /= spec.beta;
    rep.rows.push_back(row);
  }
  TorusSampler sampler(spec);
  std::vector<std::vector<double>> xs(tests.size(), std::vector<double>(samples)), ys = xs;
  for (int t = 0; t < samples; ++t) {
    auto a = apply(sampler.sample(seed, t));
    if (op == DerivedOp::D || op == DerivedOp::DStar) {
      auto twice = op == DerivedOp::D ? (out_k < n ? spectral_d(a) : TorusSpectrum()) : (out_k > 0 ? spectral_dstar(a) : TorusSpectrum());
      for (const auto& v : twice.data()) rep.max_dd = std::max(rep.max_dd, std::abs(v));
    }
    for (std::size_t q = 0; q < tests.size(); ++q) {
      xs[q][t] = spectral_inner(a, tests[q].first);
      ys[q][t] = spectral_inner(a, tests[q].second);
    }
  }
  for (std::size_t q = 0; q < tests.size(); ++q) {
    auto e = estimate_covariance(xs[q], ys[q]);
    auto& row = rep.rows[q];
    row.empirical = e.value;
    row.stderr_ = e.stderr_;
    row.z = e.stderr_ > 0 ? (e.value - row.analytic) / e.stderr_ : 0.0;
    rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
  }
  return rep;
}

namespace {

// φ_I(x) = Σ_j c_{j,I} cos(2π m_j·x) on the unit torus
struct TrigForm {
  std::vector<std::vector<int>> modes;
  std::vector<std::vector<double>> coef;
};

TrigForm scaling_test_form(int n, int k) {
  TrigForm f;
  const int C = static_cast<int>(binomial(n, k));
  std::vector<std::vector<int>> modes{{1, 0, 0, 0, 0, 0}, {0, 1, 1, 0, 0, 0}, {1, -1, 2, 0, 0, 0}};
  for (std::size_t j = 0; j < modes.size(); ++j) {
    modes[j].resize(n);
    if (std::all_of(modes[j].begin(), modes[j].end(), [](int v) { return v == 0; })) continue;
    std::vector<double> c(C);
    for (int i = 0; i < C; ++i) c[i] = std::cos(1.3 * (i + 1) + 0.7 * j) + 0.25;
    f.modes.push_back(modes[j]);
    f.coef.push_back(c);
  }
  return f;
}

}  // namespace

std::vector<ScalingRow> scaling_check(int n, int k, Variant variant, const std::vector<int>& Ls) {
  require(n >= 2 && n <= 4 && k >= 0 && k < n, "scaling check needs 2 <= n <= 4, 0 <= k < n");
  require(variant == Variant::Plain || variant == Variant::CoexactProjected,
          "scaling check supports the plain and coexact-projected variants");
  const auto form = scaling_test_form(n, k);
  const double two_pi = 2 * std::numbers::pi;
  // continuum: cos = (e^{+} + e^{-})/2 contributes |P c|²/(2 |2π m|²)
  double cont = 0;
  for (std::size_t j = 0; j < form.modes.size(); ++j) {
    std::vector<double> a(n);
    for (int i = 0; i < n; ++i) a[i] = two_pi * form.modes[j][i];
    Block b(form.coef[j].begin(), form.coef[j].end());
    if (variant == Variant::CoexactProjected) b = block_coexact(n, k, a, b);
    cont += 0.5 * block_norm(b) * block_norm(b) / norm2(a);
  }
  std::vector<ScalingRow> out;
  for (int L : Ls) {
    require(L >= 3, "box side must be at least 3");
    ScalingRow row;
    row.L = L;
    row.eps = 1.0 / L;
    row.beta = std::pow(row.eps, n - 2 * k - 2);
    FieldSpec spec;
    spec.n = n;
    spec.k = k;
    spec.s = 1.0;
    spec.beta = row.beta;
    spec.variant = variant;
    spec.torus = false;
    spec.extents.assign(n, L);
    spec.topology = Topology::Periodic;
    auto cx = std::make_shared<const LatticeComplex>(n, spec.extents, spec.topology);
    LatticeForm phi(cx, k);
    const auto& alg = algebra(n);
    for (const auto& c : cx->enumerate_cells(k)) {
      std::vector<double> mid(n);
      for (int i = 0; i < n; ++i) mid[i] = row.eps * (c.x[i] + ((c.mask >> i) & 1u ? 0.5 : 0.0));
      double v = 0;
      for (std::size_t j = 0; j < form.modes.size(); ++j) {
        double ph = 0;
        for (int i = 0; i < n; ++i) ph += form.modes[j][i] * mid[i];
        v += form.coef[j][alg.position(c.mask)] * std::cos(two_pi * ph);
      }
      phi[cx->index(k, c.mask, c.x)] = std::pow(row.eps, k) * v;
    }
    row.variance = lattice_covariance(spec, phi, phi);
    row.rescaled = std::pow(row.eps, 2 * (n - 2 * k)) * row.variance;
    row.continuum = cont;
    row.rel_err = std::abs(row.rescaled - cont) / cont;
    out.push_back(row);
  }
  return out;
}

}  // namespace fgf
