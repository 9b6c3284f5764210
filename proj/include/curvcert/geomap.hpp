#pragma once

// Geodesically related pairs (g, ḡ, ψ) on a common chart: the two-dimensional
// pair ḡ = diag(p𝔞/(1+q𝔟)², p𝔟/(1+q𝔟)), the warped family built on it, and
// residual checks for every geodesic-mapping relation.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "curvcert/curvops.hpp"
#include "curvcert/expr.hpp"
#include "curvcert/geometry.hpp"
#include "curvcert/roter.hpp"
#include "curvcert/tensor.hpp"
#include "curvcert/warped.hpp"

namespace curvcert {

class GeomapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the family parameters satisfy the conformal-flatness condition
/// κ̃/((n−3)(n−2)) = (B′)² − CB².
class ConformallyDegenerateError : public GeomapError {
 public:
  using GeomapError::GeomapError;
  static constexpr const char* code = "CONFORMALLY_DEGENERATE";
};

/// Metric pair on one chart with the covector ψ of the mapping.
struct GeodesicPair {
  MetricSpec source;
  MetricSpec image;
  std::vector<Expr> psi;  // ψ_i, constants bound
};

/// 𝔞 with constant Gauss curvature K: (𝔟′)²/(𝔟(E − 4K𝔟)).
inline Expr gauss_curvature_metric(const Expr& b, double E, double K) {
  return pow(diff(b, 0), 2) / (b * (E - 4.0 * K * b));
}

/// 𝔞 = (𝔟′)²/(𝔟(D𝔟 − 4C)).
inline Expr family_base_metric(const Expr& b, double C, double D) { return pow(diff(b, 0), 2) / (b * (D * b - 4.0 * C)); }

/// ds² = 𝔞(x)dx² + 𝔟(x)dy² and its image under the mapping with parameters
/// mapScale p and mapShift q.
class GeodesicPair2D {
 public:
  GeodesicPair2D(Expr a, Expr b, double map_scale, double map_shift, Bindings consts = {})
      : a_(bind(a, consts)), b_(bind(b, consts)), p_(map_scale), q_(map_shift) {
    if (p_ == 0.0) throw GeomapError("mapScale p must be nonzero");
    if (q_ == 0.0) throw GeomapError("mapShift q must be nonzero (q = 0 is the trivial mapping)");
    for (const Expr* e : {&a_, &b_}) {
      std::set<std::string> names;
      std::set<int> vars;
      collect_symbols(*e, names, vars);
      if (!names.empty()) throw GeomapError("unbound constant " + *names.begin());
      if (vars.count(1)) throw GeomapError("metric functions must depend on x only");
    }
    const Expr w = 1.0 + q_ * b_;
    a_bar_ = p_ * a_ / pow(w, 2);
    b_bar_ = p_ * b_ / w;
    psi1_ = -0.5 * q_ * diff(b_, 0) / w;
  }

  const Expr& a() const noexcept { return a_; }
  const Expr& b() const noexcept { return b_; }
  const Expr& a_bar() const noexcept { return a_bar_; }
  const Expr& b_bar() const noexcept { return b_bar_; }
  const Expr& psi1() const noexcept { return psi1_; }
  double map_scale() const noexcept { return p_; }
  double map_shift() const noexcept { return q_; }

  std::vector<Constraint> constraints() const {
    return {{1.0 + q_ * b_, Constraint::Kind::nonzero, "1+q*b != 0"},
            {diff(b_, 0), Constraint::Kind::nonzero, "b' != 0"}};
  }

  MetricSpec source() const { return MetricSpec::diagonal({"x", "y"}, {a_, b_}, {}, constraints()); }
  MetricSpec image() const { return MetricSpec::diagonal({"x", "y"}, {a_bar_, b_bar_}, {}, constraints()); }
  GeodesicPair pair() const { return {source(), image(), {psi1_, Expr::number(0.0)}}; }

 private:
  Expr a_, b_;
  double p_, q_;
  Expr a_bar_, b_bar_, psi1_;
};

/// Everything a pair check needs at one point.
struct PairPoint {
  PointFrame source;
  PointFrame image;
  std::vector<double> psi;
  Tensor dpsi;    // (k,i) = ∂_k ψ_i
  Tensor psi_ij;  // ∇_j ψ_i − ψ_i ψ_j
};

inline PairPoint evaluate_pair(const GeodesicPair& pair, std::span<const double> pt) {
  const int n = pair.source.dim();
  if (pair.image.dim() != n || static_cast<int>(pair.psi.size()) != n)
    throw std::invalid_argument("pair components have mismatched dimensions");
  std::string why;
  if (!pair.source.admissible(pt, &why)) throw InadmissiblePointError("source: " + why);
  if (!pair.image.admissible(pt, &why)) throw InadmissiblePointError("image: " + why);
  PairPoint pp;
  pp.source = compute_frame(pair.source, pt);
  pp.image = compute_frame(pair.image, pt);
  pp.psi.resize(n);
  pp.dpsi = Tensor(n, 2);
  for (int i = 0; i < n; ++i) {
    pp.psi[i] = eval(pair.psi[i], pt);
    for (int k = 0; k < n; ++k) pp.dpsi(k, i) = eval(diff(pair.psi[i], k), pt);
  }
  pp.psi_ij = Tensor(n, 2, Symmetry::sym2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = pp.dpsi(j, i);
      for (int s = 0; s < n; ++s) v -= pp.source.gamma(s, j, i) * pp.psi[s];
      pp.psi_ij(i, j) = v - pp.psi[i] * pp.psi[j];
    }
  return pp;
}

namespace detail {

inline IdentityResidual make_check(std::string name, double residual, double tol) {
  return {std::move(name), residual, tol, residual <= tol};
}

inline double vector_mismatch(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / (1.0 + scale);
}

inline double scalar_check(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace detail

/// ∇_k ḡ_ij = 2ψ_k ḡ_ij + ψ_i ḡ_jk + ψ_j ḡ_ik with ∇ of the source metric.
inline IdentityResidual verify_geo_compatibility(const PairPoint& pp, double tol = 1e-9) {
  const int n = pp.source.dim;
  const Tensor& gb = pp.image.g;
  Tensor lhs(n, 3), rhs(n, 3);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = pp.image.dg(k, i, j);
        for (int s = 0; s < n; ++s) v -= pp.source.gamma(s, k, i) * gb(s, j) + pp.source.gamma(s, k, j) * gb(i, s);
        lhs(k, i, j) = v;
        rhs(k, i, j) = 2 * pp.psi[k] * gb(i, j) + pp.psi[i] * gb(j, k) + pp.psi[j] * gb(i, k);
      }
  return detail::make_check("geodesic compatibility", max_abs_difference(lhs, rhs), tol);
}

inline IdentityResidual verify_geo_compatibility(const GeodesicPair& pair, std::span<const double> pt, double tol = 1e-9) {
  return verify_geo_compatibility(evaluate_pair(pair, pt), tol);
}

/// Γ̄^h_ij = Γ^h_ij + δ^h_i ψ_j + δ^h_j ψ_i.
inline IdentityResidual verify_christoffel_shift(const PairPoint& pp, double tol = 1e-9) {
  const int n = pp.source.dim;
  Tensor predicted = pp.source.gamma;
  for (int h = 0; h < n; ++h)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) predicted(h, i, j) += (h == i ? pp.psi[j] : 0.0) + (h == j ? pp.psi[i] : 0.0);
  return detail::make_check("christoffel shift", max_abs_difference(pp.image.gamma, predicted), tol);
}

/// S̄_ij = S_ij − (n−1)ψ_ij.
inline IdentityResidual verify_ricci_shift(const PairPoint& pp, double tol = 1e-8) {
  const double n = pp.source.dim;
  const Tensor predicted = pp.source.ricci - (n - 1) * pp.psi_ij;
  return detail::make_check("ricci shift", max_abs_difference(pp.image.ricci, predicted), tol);
}

/// ∂_k ψ_i = ∂_i ψ_k (ψ is locally a gradient).
inline IdentityResidual verify_gradient(const PairPoint& pp, double tol = 1e-9) {
  const int n = pp.source.dim;
  Tensor t(n, 2);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) t(k, i) = pp.dpsi(i, k);
  return detail::make_check("psi gradient", max_abs_difference(pp.dpsi, t), tol);
}

/// Closed forms of Γ̄ for the two-dimensional pair:
/// Γ̄¹₁₁ = 𝔞′/(2𝔞) − q𝔟′/(1+q𝔟), Γ̄²₁₂ = 𝔟′/(2𝔟(1+q𝔟)), Γ̄¹₂₂ = −𝔟′/(2𝔞).
inline IdentityResidual verify_pair2d_christoffel(const GeodesicPair2D& pair, const PairPoint& pp, double tol = 1e-9) {
  const auto& x = pp.source.point;
  const double a = eval(pair.a(), x), da = eval(diff(pair.a(), 0), x);
  const double b = eval(pair.b(), x), db = eval(diff(pair.b(), 0), x);
  const double w = 1.0 + pair.map_shift() * b;
  const auto& gb = pp.image.gamma;
  return detail::make_check(
      "barred christoffel closed forms",
      detail::vector_mismatch({gb(0, 0, 0), gb(1, 0, 1), gb(0, 1, 1)},
                              {da / (2 * a) - pair.map_shift() * db / w, db / (2 * b * w), -db / (2 * a)}),
      tol);
}

/// Which metric takes the traces tr(ψ) and tr(B).
enum class TraceMetric { image, source };

struct PsiField {
  std::vector<double> psi;
  Tensor psi_ij;
  Tensor B;  // B_mk = ψ_mr ḡ^rs S̄_sk
  double trace_psi = 0.0;
  double trace_B = 0.0;
  TraceMetric metric = TraceMetric::image;
};

inline PsiField psi_field(const PairPoint& pp, TraceMetric metric = TraceMetric::image) {
  const int n = pp.source.dim;
  PsiField f;
  f.psi = pp.psi;
  f.psi_ij = pp.psi_ij;
  f.metric = metric;
  f.B = Tensor(n, 2);
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k) {
      double v = 0.0;
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) v += pp.psi_ij(m, r) * pp.image.ginv(r, s) * pp.image.ricci(s, k);
      f.B(m, k) = v;
    }
  const Tensor& gi = metric == TraceMetric::image ? pp.image.ginv : pp.source.ginv;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      f.trace_psi += gi(i, j) * f.psi_ij(i, j);
      f.trace_B += gi(i, j) * f.B(i, j);
    }
  return f;
}

/// (κ̄φ̄ + nμ̄)B − (tr(B)φ̄ + tr(ψ)μ̄)S̄ + (κ̄μ̄ − n(L_R̄ − η̄))ψ + (tr(ψ)(L_R̄ − η̄) − tr(B)μ̄)ḡ = 0.
/// The source must not be semisymmetric and the image fit must be accepted.
inline IdentityResidual verify_remark44(const PointFrame& source, const PointFrame& image, const RoterFit& image_fit,
                                        const PsiField& psi, double tol = 1e-7) {
  if (!image_fit.accepted()) throw GeomapError("image Roter fit not accepted");
  const Tensor rr = derivation_apply(source.riemann, source.riemann, source.ginv);
  if (rr.norm() <= 1e-12 * (1.0 + source.riemann.norm() * source.riemann.norm()))
    throw GeomapError("source is semisymmetric (R.R = 0)");
  const double n = image.dim, k = image.scalar;
  const double phi = image_fit.phi, mu = image_fit.mu, eta = image_fit.eta, lr = image_fit.L_R;
  return detail::make_check(
      "psi-ricci trace identity",
      detail::identity_residual({{k * phi + n * mu, &psi.B},
                                 {-(psi.trace_B * phi + psi.trace_psi * mu), &image.ricci},
                                 {k * mu - n * (lr - eta), &psi.psi_ij},
                                 {psi.trace_psi * (lr - eta) - psi.trace_B * mu, &image.g}},
                                {}),
      tol);
}

// ---------------------------------------------------------------------------
// Warped family

enum class CflatPolicy { reject, allow };

/// Parameters of the warped family on the base chart (x, t):
/// 𝔞 = (𝔟′)²/(𝔟(D𝔟−4C)), F = 𝔟B², F̄ = pF/(1+q𝔟), B″ = CB.
struct FamilyConfig {
  double C = 0.0;
  double D = 4.0;
  double C1 = 2.0;  // B = C1 t + C2 when C = 0
  double C2 = 1.0;
  std::string b = "x";
  Bindings constants;  // extra constants referenced by b
  int dim = 4;         // n; the fiber has dimension n − 2
  double fiber_scalar = 2.0;
  double map_scale = 2.0;  // p
  double map_shift = 1.0;  // q
  CflatPolicy cflat = CflatPolicy::reject;
};

enum class BBranch { exponential, trigonometric, affine };

inline BBranch b_branch(double C) { return C > 0 ? BBranch::exponential : C < 0 ? BBranch::trigonometric : BBranch::affine; }

inline const char* to_string(BBranch b) {
  switch (b) {
    case BBranch::exponential: return "exponential";
    case BBranch::trigonometric: return "trigonometric";
    case BBranch::affine: return "affine";
  }
  return "?";
}

/// Solution of B″ = CB in the variable `t`.
inline Expr make_B(double C, double C1, double C2, const Expr& t) {
  switch (b_branch(C)) {
    case BBranch::exponential: {
      const double w = std::sqrt(C);
      return C1 * exp(w * t) + C2 * exp(-w * t);
    }
    case BBranch::trigonometric: {
      const double w = std::sqrt(-C);
      return C1 * cos(w * t) + C2 * sin(w * t);
    }
    case BBranch::affine: break;
  }
  return C1 * t + C2;
}

/// The constant (B′)² − CB² in closed form.
inline double b_invariant(double C, double C1, double C2) {
  switch (b_branch(C)) {
    case BBranch::exponential: return -4.0 * C * C1 * C2;
    case BBranch::trigonometric: return -C * (C1 * C1 + C2 * C2);
    case BBranch::affine: break;
  }
  return C1 * C1;
}

/// κ̃ that makes the family conformally flat.
inline double cflat_fiber_scalar(const FamilyConfig& c) {
  return (c.dim - 3.0) * (c.dim - 2.0) * b_invariant(c.C, c.C1, c.C2);
}

inline bool cflat_holds(const FamilyConfig& c) {
  const double target = cflat_fiber_scalar(c);
  return std::abs(c.fiber_scalar - target) <= 1e-12 * std::max({1.0, std::abs(target), std::abs(c.fiber_scalar)});
}

struct RemarkInvariant {
  double mean = 0.0;
  double stdev = 0.0;
  double residual = 0.0;  // stdev / (1 + |mean|)
};

/// Spread of (B′)² − CB² over `samples` evenly spaced t in [t0, t1].
inline RemarkInvariant remark41_invariant(double C, double C1, double C2, double t0 = -1.0, double t1 = 1.0,
                                          int samples = 25) {
  const Expr t = Expr::variable(0, "t");
  const Expr B = make_B(C, C1, C2, t);
  const Expr inv = pow(diff(B, 0), 2) - C * pow(B, 2);
  std::vector<double> v;
  for (int i = 0; i < samples; ++i) {
    const double x = t0 + (t1 - t0) * i / (samples - 1.0);
    v.push_back(eval(inv, std::span<const double>(&x, 1)));
  }
  RemarkInvariant r;
  for (double x : v) r.mean += x;
  r.mean /= v.size();
  for (double x : v) r.stdev += (x - r.mean) * (x - r.mean);
  r.stdev = std::sqrt(r.stdev / v.size());
  r.residual = r.stdev / (1.0 + std::abs(r.mean));
  return r;
}

struct GeodesicFamily {
  FamilyConfig config;
  Expr a, b, B, F, F_bar, psi1;  // over the base chart (x, t)
  WarpedSpec source;
  WarpedSpec image;
  GeodesicPair pair;

  int dim() const noexcept { return config.dim; }
  double L_R_closed() const { return -config.D / 4.0; }
  double L_R_bar_closed() const {
    return -(config.D + 4.0 * config.map_shift * config.C) / (4.0 * config.map_scale);
  }
};

inline GeodesicFamily build_family(const FamilyConfig& cfg) {
  if (cfg.dim < 4) throw GeomapError("family needs n >= 4");
  if (cfg.map_scale == 0.0) throw GeomapError("mapScale p must be nonzero");
  if (cfg.map_shift == 0.0) throw GeomapError("mapShift q must be nonzero (q = 0 is the trivial mapping)");
  if (cflat_holds(cfg) && cfg.cflat == CflatPolicy::reject)
    throw ConformallyDegenerateError(
        std::string(ConformallyDegenerateError::code) + ": fiber scalar " + detail::format_number(cfg.fiber_scalar) +
        " equals (n-3)(n-2)((B')^2 - C B^2); source and image are Einstein and conformally flat, so U_S and U_C are empty");
  const Expr b = bind(parse(cfg.b, SymbolTable{{"x", "t"}, cfg.constants.names()}), cfg.constants);
  if (depends_on(b, 1)) throw GeomapError("b must depend on x only");
  const double C = cfg.C, D = cfg.D, p = cfg.map_scale, q = cfg.map_shift;
  const Expr t = Expr::variable(1, "t");
  const Expr a = family_base_metric(b, C, D);
  const Expr B = make_B(C, cfg.C1, cfg.C2, t);
  const Expr w = 1.0 + q * b;
  const Expr F = b * pow(B, 2);
  const Expr F_bar = p * F / w;
  const Expr psi1 = -0.5 * q * diff(b, 0) / w;
  const std::vector<Constraint> cons = {{w, Constraint::Kind::nonzero, "1+q*b != 0"},
                                        {D * b - 4.0 * C, Constraint::Kind::nonzero, "D*b-4C != 0"},
                                        {diff(b, 0), Constraint::Kind::nonzero, "b' != 0"}};
  const MetricSpec base = MetricSpec::diagonal({"x", "t"}, {a, b}, {}, cons);
  const MetricSpec base_bar = MetricSpec::diagonal({"x", "t"}, {p * a / pow(w, 2), p * b / w}, {}, cons);
  const MetricSpec fiber = constant_curvature_fiber(cfg.dim - 2, cfg.fiber_scalar);
  WarpedSpec src(base, fiber, F);
  WarpedSpec img(base_bar, fiber, F_bar);
  std::vector<Expr> psi(cfg.dim, Expr::number(0.0));
  psi[0] = psi1;
  GeodesicPair pair{src.product(), img.product(), psi};
  return GeodesicFamily{cfg, a, b, B, F, F_bar, psi1, std::move(src), std::move(img), std::move(pair)};
}

/// Product-chart box [lo, hi] per coordinate.
using SampleBox = std::vector<std::pair<double, double>>;

/// Default box: x ∈ [0.6, 1.8], t ∈ [−0.4, 0.4], fiber coordinates in [−0.3, 0.3].
inline SampleBox default_family_box(int dim) {
  SampleBox box = {{0.6, 1.8}, {-0.4, 0.4}};
  for (int i = 2; i < dim; ++i) box.push_back({-0.3, 0.3});
  return box;
}

/// Uniform samples with rejection near the loci 1+q𝔟 = 0 and D𝔟 − 4C = 0 and
/// wherever either metric is inadmissible.
inline std::vector<std::vector<double>> sample_family_points(const GeodesicFamily& fam, const SampleBox& box, int count,
                                                             std::mt19937_64& rng, int max_tries = 10000) {
  if (static_cast<int>(box.size()) != fam.dim()) throw std::invalid_argument("sample box has wrong dimension");
  std::vector<std::vector<double>> out;
  const double q = fam.config.map_shift, C = fam.config.C, D = fam.config.D;
  for (int tries = 0; static_cast<int>(out.size()) < count; ++tries) {
    if (tries >= max_tries) throw GeomapError("could not find enough admissible sample points in the box");
    std::vector<double> pt;
    for (const auto& [lo, hi] : box) pt.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
    try {
      const double bv = eval(fam.b, pt);
      if (std::abs(1.0 + q * bv) < 1e-6 || std::abs(D * bv - 4.0 * C) < 1e-6) continue;
    } catch (const EvalError&) {
      continue;
    }
    if (!fam.source.product().admissible(pt) || !fam.image.product().admissible(pt)) continue;
    out.push_back(std::move(pt));
  }
  return out;
}

/// Both warped-product conditions for the mapping, on the base chart:
///   −F̄/(2F) F_a + ½ F^c ḡ_ca = F̄ ψ_a   and   ∂_a log(F̄/F) = 2ψ_a.
/// `F_bar_override` replaces F̄ (negative controls).
inline std::pair<IdentityResidual, IdentityResidual> verify_r4_r5(const GeodesicFamily& fam, std::span<const double> pt,
                                                                  const std::optional<Expr>& F_bar_override = {},
                                                                  double tol = 1e-9) {
  const Expr Fb = F_bar_override ? *F_bar_override : fam.F_bar;
  const std::vector<double> bp(pt.begin(), pt.begin() + 2);
  const PointFrame base = compute_frame(fam.source.base(), bp);
  const PointFrame base_bar = compute_frame(fam.image.base(), bp);
  const double F = eval(fam.F, bp), Fbv = eval(Fb, bp);
  std::vector<double> dF(2), dFb(2), psi(2), l4(2), r4(2), l5(2), r5(2);
  for (int a = 0; a < 2; ++a) {
    dF[a] = eval(diff(fam.F, a), bp);
    dFb[a] = eval(diff(Fb, a), bp);
    psi[a] = a == 0 ? eval(fam.psi1, bp) : 0.0;
  }
  for (int a = 0; a < 2; ++a) {
    double raised = 0.0;
    for (int c = 0; c < 2; ++c)
      for (int d = 0; d < 2; ++d) raised += base.ginv(c, d) * dF[d] * base_bar.g(c, a);
    l4[a] = -Fbv / (2 * F) * dF[a] + 0.5 * raised;
    r4[a] = Fbv * psi[a];
    l5[a] = dFb[a] / Fbv - dF[a] / F;
    r5[a] = 2 * psi[a];
  }
  return {detail::make_check("warp compatibility (F^c form)", detail::vector_mismatch(l4, r4), tol),
          detail::make_check("warp compatibility (log form)", detail::vector_mismatch(l5, r5), tol)};
}

/// Pointwise family checks that need no Roter fit: the generic mapping
/// relations plus the closed forms for Γ̄, ψ_ij, S̄, T, T̄ and the base
/// curvatures.
inline std::vector<IdentityResidual> family_point_checks(const GeodesicFamily& fam, const PairPoint& pp, double tol = 1e-9) {
  using detail::make_check;
  using detail::scalar_check;
  const FamilyConfig& c = fam.config;
  const int n = c.dim;
  const double C = c.C, D = c.D, p = c.map_scale, q = c.map_shift, kt = c.fiber_scalar;
  const std::vector<double> bp(pp.source.point.begin(), pp.source.point.begin() + 2);
  const double a = eval(fam.a, bp), da = eval(diff(fam.a, 0), bp);
  const double b = eval(fam.b, bp), db = eval(diff(fam.b, 0), bp);
  const double Bv = eval(fam.B, bp), dB = eval(diff(fam.B, 1), bp);
  const double w = 1.0 + q * b, Fb = eval(fam.F_bar, bp), F = eval(fam.F, bp);
  std::vector<IdentityResidual> out;
  out.push_back(verify_geo_compatibility(pp, tol));
  out.push_back(verify_christoffel_shift(pp, tol));
  out.push_back(verify_ricci_shift(pp, tol));
  out.push_back(verify_gradient(pp, tol));

  const auto& gb = pp.image.gamma;
  const double g111 = da / (2 * a) - q * db / w, g212 = db / (2 * b * w), g122 = -db / (2 * a);
  out.push_back(make_check("barred christoffel closed forms",
                           detail::vector_mismatch({gb(0, 0, 0), gb(1, 0, 1), gb(0, 1, 1)}, {g111, g212, g122}), tol));

  // ψ_ij closed forms
  const double psi11 = q * db * db * (4 * C - q * D * b * b - 2 * D * b) / (4 * b * w * w * (D * b - 4 * C));
  const double psi22 = -q * b * (D * b - 4 * C) / (4 * w);
  const double psi_fiber = -q * b * Bv * Bv * (D * b - 4 * C) / (4 * w);
  Tensor psi_pred(n, 2, Symmetry::sym2);
  psi_pred(0, 0) = psi11;
  psi_pred(1, 1) = psi22;
  for (int al = 2; al < n; ++al)
    for (int be = 2; be < n; ++be) psi_pred(al, be) = psi_fiber * pp.source.g(al, be) / F;
  out.push_back(make_check("psi_ij closed forms", max_abs_difference(pp.psi_ij, psi_pred), tol));

  // barred Ricci closed forms
  Tensor sb_pred(n, 2, Symmetry::sym2);
  const double sab = -(n - 1.0) / (4 * p) * (D + 4 * q * C);
  const double salfa = (kt / (n - 2.0) + (n - 3.0) * (C * Bv * Bv - dB * dB) -
                        (n - 1.0) / 4.0 * b * Bv * Bv * (D + 4 * q * C) / w) / Fb;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if ((i < 2) == (j < 2)) sb_pred(i, j) = (i < 2 ? sab : salfa) * pp.image.g(i, j);
  out.push_back(make_check("barred ricci closed forms", max_abs_difference(pp.image.ricci, sb_pred), tol));

  // source T proportional to ĝ, and the PDEs for f = √F
  const WarpedDiagnostics ds = diagnostics(fam.source, pp.source.point);
  out.push_back(make_check("T_12 = 0", std::abs(ds.T(0, 1)) / (1.0 + ds.T.max_abs()), tol));
  out.push_back(make_check("b T_11 = a T_22", scalar_check(b * ds.T(0, 0), a * ds.T(1, 1)), tol));
  const Expr f = sqrt(fam.F);
  auto fe = [&](const Expr& e) { return eval(e, bp); };
  const Expr f1 = diff(f, 0), f2 = diff(f, 1);
  out.push_back(make_check("f_12 = f_2 b'/(2b)", scalar_check(fe(diff(f1, 1)), fe(f2) * db / (2 * b)), tol));
  out.push_back(make_check("f_11 - (a/b) f_22 = f_1 (ab)'/(2ab)",
                           scalar_check(fe(diff(f1, 0)) - a / b * fe(diff(f2, 1)), fe(f1) * (da * b + a * db) / (2 * a * b)),
                           tol));

  // image base: T̄ and scalar curvature; Gauss curvatures of both bases
  const WarpedDiagnostics di = diagnostics(fam.image, pp.source.point);
  Tensor tb_pred(2, 2, Symmetry::sym2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) tb_pred(i, j) = (D + 4 * q * C) / (2 * p) * Fb * di.base.g(i, j);
  out.push_back(make_check("barred T closed form", max_abs_difference(di.T, tb_pred), tol));
  out.push_back(make_check("barred base scalar", scalar_check(di.base_scalar, -(D + 4 * q * C) / (2 * p)), tol));
  out.push_back(make_check("base gauss curvature", scalar_check(ds.base_scalar / 2, fam.L_R_closed()), tol));
  out.push_back(make_check("barred base gauss curvature", scalar_check(di.base_scalar / 2, fam.L_R_bar_closed()), tol));
  return out;
}

/// Pseudosymmetry functions of the pair: closed-form L_R and L_R̄, the relation
/// between them, L_C in terms of L_R, and R·R = Q(S,R) − (n−2)L_R Q(g,C).
inline std::vector<IdentityResidual> verify_prop42(const GeodesicFamily& fam, const PairPoint& pp, const RoterFit& src,
                                                   const RoterFit& img, double tol = 1e-8) {
  if (!src.accepted() || !img.accepted()) throw GeomapError("Roter fits of both manifolds must be accepted");
  using detail::make_check;
  using detail::scalar_check;
  const double n = fam.dim(), nn = n * (n - 1);
  const std::vector<double> bp(pp.source.point.begin(), pp.source.point.begin() + 2);
  const double ratio = fam.config.map_scale / (1.0 + fam.config.map_shift * eval(fam.b, bp));
  std::vector<IdentityResidual> out;
  out.push_back(make_check("L_R closed form", scalar_check(src.L_R, fam.L_R_closed()), tol));
  out.push_back(make_check("barred L_R closed form", scalar_check(img.L_R, fam.L_R_bar_closed()), tol));
  out.push_back(make_check("L_R - k/(n(n-1)) relation",
                           scalar_check(src.L_R - src.kappa / nn, ratio * (img.L_R - img.kappa / nn)), tol));
  out.push_back(make_check("(n-2)^2/n L_C = L_R - k/(n(n-1))",
                           scalar_check((n - 2) * (n - 2) / n * src.L_C, src.L_R - src.kappa / nn), tol));
  out.push_back(make_check("barred (n-2)^2/n L_C = L_R - k/(n(n-1))",
                           scalar_check((n - 2) * (n - 2) / n * img.L_C, img.L_R - img.kappa / nn), tol));
  out.push_back(make_check("L_C = p/(1+qb) barred L_C", scalar_check(src.L_C, ratio * img.L_C), tol));
  out.push_back(make_check("L = -(n-2) L_R", scalar_check(src.L, -(n - 2) * src.L_R), tol));
  out.push_back(make_check("barred L = -(n-2) L_R", scalar_check(img.L, -(n - 2) * img.L_R), tol));
  const std::pair<const PointFrame*, const RoterFit*> sides[2] = {{&pp.source, &src}, {&pp.image, &img}};
  for (int s = 0; s < 2; ++s) {
    const PointFrame& f = *sides[s].first;
    const Tensor rr = derivation_apply(f.riemann, f.riemann, f.ginv);
    const Tensor qsr = tachibana(f.ricci, f.riemann);
    const Tensor qgc = tachibana(f.g, f.weyl);
    const double r = detail::identity_residual({{1.0, &rr}}, {{1.0, &qsr}, {-(n - 2) * sides[s].second->L_R, &qgc}});
    out.push_back(make_check(std::string(s ? "barred " : "") + "R.R = Q(S,R) - (n-2) L_R Q(g,C)", r, tol));
  }
  return out;
}

}  // namespace curvcert
