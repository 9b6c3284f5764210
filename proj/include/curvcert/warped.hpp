#pragma once

// Warped products M̂ ×_F Ñ on a product chart (base coordinates first) and
// closed-form diagnostics built from base and fiber data.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvcert/curvops.hpp"
#include "curvcert/expr.hpp"
#include "curvcert/geometry.hpp"
#include "curvcert/tensor.hpp"

namespace curvcert {

class WarpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Glues base and fiber metrics with the warping function F into one chart.
inline MetricSpec assemble(const MetricSpec& base, const MetricSpec& fiber, const Expr& warp);

/// Base metric ĝ (dim p), fiber g̃ (dim n − p) and warping function F over the
/// base coordinates, plus the assembled product metric.
class WarpedSpec {
 public:
  WarpedSpec(MetricSpec base, MetricSpec fiber, Expr warp)
      : base_(std::move(base)), fiber_(std::move(fiber)), warp_(bind(warp, base_.bindings())),
        product_(assemble(base_, fiber_, warp_)) {
    std::set<std::string> names;
    std::set<int> vars;
    collect_symbols(warp_, names, vars);
    if (!names.empty()) throw std::invalid_argument("warping function references unbound constant " + *names.begin());
    for (int v : vars)
      if (v >= base_.dim()) throw std::invalid_argument("warping function must depend on base coordinates only");
  }

  const MetricSpec& base() const noexcept { return base_; }
  const MetricSpec& fiber() const noexcept { return fiber_; }
  const Expr& warp() const noexcept { return warp_; }
  const MetricSpec& product() const noexcept { return product_; }
  int base_dim() const noexcept { return base_.dim(); }
  int dim() const noexcept { return product_.dim(); }

  std::vector<double> base_point(std::span<const double> pt) const {
    return {pt.begin(), pt.begin() + base_dim()};
  }
  std::vector<double> fiber_point(std::span<const double> pt) const { return {pt.begin() + base_dim(), pt.end()}; }

 private:
  MetricSpec base_;
  MetricSpec fiber_;
  Expr warp_;
  MetricSpec product_;
};

inline MetricSpec assemble(const MetricSpec& base, const MetricSpec& fiber, const Expr& warp) {
  const int p = base.dim();
  const int m = fiber.dim();
  const int n = p + m;
  std::vector<std::string> coords = base.coordinates();
  for (const auto& c : fiber.coordinates()) {
    if (std::find(coords.begin(), coords.end(), c) != coords.end())
      throw std::invalid_argument("base and fiber share coordinate name '" + c + "'");
    coords.push_back(c);
  }
  const Expr f = bind(warp, base.bindings());
  ExprMatrix g(n, std::vector<Expr>(n));
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) g[a][b] = base.bound_component(a, b);
  for (int al = 0; al < m; ++al)
    for (int be = 0; be < m; ++be) g[p + al][p + be] = f * shift_variables(fiber.bound_component(al, be), p);
  std::vector<Constraint> cons;
  for (const auto& c : base.constraints()) cons.push_back({bind(c.expr, base.bindings()), c.kind, c.label});
  for (const auto& c : fiber.constraints())
    cons.push_back({shift_variables(bind(c.expr, fiber.bindings()), p), c.kind, c.label});
  cons.push_back({f, Constraint::Kind::positive, "F > 0"});
  return MetricSpec(std::move(coords), g, {}, std::move(cons));
}

/// Throws WarpError unless F > 0 at every given product-chart point.
inline void require_positive_warp(const WarpedSpec& ws, const std::vector<std::vector<double>>& points) {
  for (const auto& pt : points) {
    const double f = eval(ws.warp(), ws.base_point(pt));
    if (!(f > 0.0)) throw WarpError("warping function is not positive (F = " + std::to_string(f) + ")");
  }
}

/// Fiber of constant scalar curvature κ̃ in dimension m, conformally flat
/// model g̃ = δ/(1 + (k/4)|y|²)² with k = κ̃/(m(m−1)), coordinates y1..ym.
inline MetricSpec constant_curvature_fiber(int m, double scalar, const std::string& prefix = "y") {
  if (m < 2) throw std::invalid_argument("constant curvature fiber needs dimension >= 2");
  const double k = scalar / (m * (m - 1));
  std::vector<std::string> names;
  Expr r2 = Expr::number(0.0);
  for (int i = 0; i < m; ++i) {
    names.push_back(prefix + std::to_string(i + 1));
    r2 = r2 + pow(Expr::variable(i, names.back()), 2);
  }
  const Expr conf = 1.0 / pow(1.0 + (k / 4.0) * r2, 2);
  std::vector<Constraint> cons;
  if (k < 0.0) cons.push_back({1.0 + (k / 4.0) * r2, Constraint::Kind::positive, "inside conformal ball"});
  return MetricSpec::diagonal(std::move(names), std::vector<Expr>(m, conf), {}, std::move(cons));
}

/// Closed-form warped quantities at one product-chart point.
struct WarpedDiagnostics {
  int base_dim = 0;
  int dim = 0;
  PointFrame base;
  PointFrame fiber;
  double F = 0.0;
  std::vector<double> dF;  // F_a
  Tensor hessian;          // ∇̂_a F_b
  Tensor T;                // T_ab
  double trace_T = 0.0;
  double delta1F = 0.0;
  double base_scalar = 0.0;
  double fiber_scalar = 0.0;
  double scalar = 0.0;  // κ by the warped scalar formula
  // two-dimensional base only (n ≥ 4); otherwise unset
  std::optional<double> rho0, rho1, rho2, rho3, mu1, mu2;
};

inline WarpedDiagnostics diagnostics(const WarpedSpec& ws, std::span<const double> pt) {
  const int p = ws.base_dim();
  const int n = ws.dim();
  if (n - p < 1) throw std::invalid_argument("warped product needs a fiber of positive dimension");
  WarpedDiagnostics d;
  d.base_dim = p;
  d.dim = n;
  const auto bp = ws.base_point(pt);
  d.base = compute_frame(ws.base(), bp);
  d.fiber = compute_frame(ws.fiber(), ws.fiber_point(pt));
  d.F = eval(ws.warp(), bp);
  if (d.F == 0.0) throw EvalError("division by zero", "F");
  d.dF.resize(p);
  for (int a = 0; a < p; ++a) d.dF[a] = eval(diff(ws.warp(), a), bp);
  d.hessian = Tensor(p, 2, Symmetry::sym2);
  d.T = Tensor(p, 2, Symmetry::sym2);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      double v = eval(diff(diff(ws.warp(), a), b), bp);
      for (int c = 0; c < p; ++c) v -= d.base.gamma(c, a, b) * d.dF[c];
      d.hessian(a, b) = v;
      d.T(a, b) = v - d.dF[a] * d.dF[b] / (2.0 * d.F);
    }
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      d.trace_T += d.base.ginv(a, b) * d.T(a, b);
      d.delta1F += d.base.ginv(a, b) * d.dF[a] * d.dF[b];
    }
  d.base_scalar = d.base.scalar;
  d.fiber_scalar = d.fiber.scalar;
  const double m = n - p;
  d.scalar = d.base_scalar + d.fiber_scalar / d.F - (m / d.F) * (d.trace_T + (m - 1) / (4.0 * d.F) * d.delta1F);
  if (p == 2 && n >= 4) {
    const double F = d.F, kh = d.base_scalar, kt = d.fiber_scalar, tr = d.trace_T, d1 = d.delta1F;
    d.rho0 = kh / 2 + kt / ((n - 3.0) * (n - 2.0) * F) + tr / (2 * F) - d1 / (4 * F * F);
    d.rho1 = kh / 2;
    d.rho2 = -tr / (4 * F);
    d.rho3 = (kt / ((n - 3.0) * (n - 2.0)) - d1 / (4 * F)) / F;
    d.mu1 = (2 * F * kh - (n - 2.0) * tr) / (4 * F);
    d.mu2 = (kt / (n - 2.0) - tr / 2 - (n - 3.0) * d1 / (4 * F)) / F;
  }
  return d;
}

/// Product-chart Christoffel symbols assembled from base, fiber and F.
inline Tensor warped_christoffel(const WarpedDiagnostics& d) {
  const int p = d.base_dim, n = d.dim;
  Tensor gam(n, 3);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c) gam(a, b, c) = d.base.gamma(a, b, c);
  for (int al = p; al < n; ++al)
    for (int be = p; be < n; ++be) {
      for (int ga = p; ga < n; ++ga) gam(al, be, ga) = d.fiber.gamma(al - p, be - p, ga - p);
      for (int a = 0; a < p; ++a) {
        double v = 0.0;
        for (int b = 0; b < p; ++b) v += d.base.ginv(a, b) * d.dF[b];
        gam(a, al, be) = -0.5 * v * d.fiber.g(al - p, be - p);
      }
    }
  for (int a = 0; a < p; ++a)
    for (int al = p; al < n; ++al) gam(al, a, al) = gam(al, al, a) = d.dF[a] / (2.0 * d.F);
  return gam;
}

/// R_hijk assembled block by block; unlisted blocks are zero.
inline Tensor warped_riemann(const WarpedDiagnostics& d) {
  const int p = d.base_dim, n = d.dim;
  Tensor r(n, 4, Symmetry::riemann_like);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c)
        for (int e = 0; e < p; ++e) r(a, b, c, e) = d.base.riemann(a, b, c, e);
  for (int al = p; al < n; ++al)
    for (int be = p; be < n; ++be)
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
          const double v = -0.5 * d.T(a, b) * d.fiber.g(al - p, be - p);
          r(al, a, b, be) = v;
          r(al, a, be, b) = -v;
          r(a, al, b, be) = -v;
          r(a, al, be, b) = v;
        }
  const Tensor gt = metric_g_tensor(d.fiber.g);
  for (int al = p; al < n; ++al)
    for (int be = p; be < n; ++be)
      for (int ga = p; ga < n; ++ga)
        for (int de = p; de < n; ++de) {
          const int i = al - p, j = be - p, k = ga - p, l = de - p;
          r(al, be, ga, de) = d.F * d.fiber.riemann(i, j, k, l) - d.delta1F / 4.0 * gt(i, j, k, l);
        }
  return r;
}

/// S_ij assembled from base/fiber Ricci, T, tr T and Δ₁F.
inline Tensor warped_ricci(const WarpedDiagnostics& d) {
  const int p = d.base_dim, n = d.dim;
  const double m = n - p;
  Tensor s(n, 2, Symmetry::sym2);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) s(a, b) = d.base.ricci(a, b) - m / (2.0 * d.F) * d.T(a, b);
  const double c = 0.5 * (d.trace_T + (m - 1) / (2.0 * d.F) * d.delta1F);
  for (int al = p; al < n; ++al)
    for (int be = p; be < n; ++be) s(al, be) = d.fiber.ricci(al - p, be - p) - c * d.fiber.g(al - p, be - p);
  return s;
}

namespace detail {

// Number of fiber slots among the indices of a rank-4 multi-index.
inline int fiber_slots(const MultiIndex& idx, int p) {
  int c = 0;
  for (int s = 0; s < 4; ++s) c += idx[s] >= p ? 1 : 0;
  return c;
}

}  // namespace detail

/// Weyl tensor from ρ₀ and G of the product metric `g` (two-dimensional base).
inline Tensor warped_weyl(const WarpedDiagnostics& d, const Tensor& g) {
  if (d.base_dim != 2 || !d.rho0) throw std::invalid_argument("Weyl block formula needs a two-dimensional base and n >= 4");
  const double n = d.dim, r0 = *d.rho0;
  const double c[5] = {(n - 3) * r0 / (n - 1), 0.0, -(n - 3) * r0 / ((n - 2) * (n - 1)), 0.0,
                       2 * r0 / ((n - 2) * (n - 1))};
  Tensor w = metric_g_tensor(g);
  for (std::size_t off = 0; off < w.size(); ++off) w.data()[off] *= c[detail::fiber_slots(w.unflatten(off), 2)];
  return w;
}

/// Block-form curvature predicted from ρ₁, ρ₂, ρ₃ and Ricci from μ₁, μ₂.
/// Meaningful when T = (tr T/2) ĝ.
inline Tensor warped_riemann_rho(const WarpedDiagnostics& d, const Tensor& g) {
  if (d.base_dim != 2 || !d.rho1) throw std::invalid_argument("ρ block formula needs a two-dimensional base and n >= 4");
  const double c[5] = {*d.rho1, 0.0, *d.rho2, 0.0, *d.rho3};
  Tensor r = metric_g_tensor(g);
  for (std::size_t off = 0; off < r.size(); ++off) r.data()[off] *= c[detail::fiber_slots(r.unflatten(off), 2)];
  return r;
}

inline Tensor warped_ricci_mu(const WarpedDiagnostics& d, const Tensor& g) {
  if (d.base_dim != 2 || !d.mu1) throw std::invalid_argument("μ block formula needs a two-dimensional base and n >= 4");
  Tensor s = g;
  for (int i = 0; i < d.dim; ++i)
    for (int j = 0; j < d.dim; ++j) s(i, j) *= (i < 2 ? *d.mu1 : *d.mu2);
  return s;
}

/// Roter coefficients from the block data: φ = ν(ρ₁ − 2ρ₂ + ρ₃),
/// μ = ν((ρ₂ − ρ₃)μ₁ + (ρ₂ − ρ₁)μ₂), η = ν(ρ₁μ₂² − 2ρ₂μ₁μ₂ + ρ₃μ₁²), ν = (μ₂ − μ₁)⁻².
struct BlockRoterCoefficients {
  double phi = 0.0, mu = 0.0, eta = 0.0, nu = 0.0;
};

inline BlockRoterCoefficients block_roter_coefficients(const WarpedDiagnostics& d) {
  if (!d.mu1) throw std::invalid_argument("block Roter coefficients need a two-dimensional base and n >= 4");
  const double r1 = *d.rho1, r2 = *d.rho2, r3 = *d.rho3, m1 = *d.mu1, m2 = *d.mu2;
  BlockRoterCoefficients c;
  c.nu = 1.0 / ((m2 - m1) * (m2 - m1));
  c.phi = c.nu * (r1 - 2 * r2 + r3);
  c.mu = c.nu * ((r2 - r3) * m1 + (r2 - r1) * m2);
  c.eta = c.nu * (r1 * m2 * m2 - 2 * r2 * m1 * m2 + r3 * m1 * m1);
  return c;
}

struct ConformalFlatness {
  double rho0 = 0.0;
  bool flat = false;
  double block_residual = 0.0;  // Weyl blocks vs computed C
};

/// ρ₀ and the Weyl block check; flat when |ρ₀| ≤ 1e-9·scale, scale taken from
/// the magnitudes of the terms that make up ρ₀.
inline ConformalFlatness conformal_flatness_test(const WarpedSpec& ws, std::span<const double> pt) {
  if (ws.base_dim() != 2) throw std::invalid_argument("conformal flatness test needs a two-dimensional base");
  if (ws.dim() < 4) throw std::invalid_argument("conformal flatness test needs n >= 4");
  const WarpedDiagnostics d = diagnostics(ws, pt);
  const PointFrame f = compute_frame(ws.product(), pt);
  const int n = ws.dim();
  const double F = d.F;
  const double scale = std::abs(d.base_scalar / 2) + std::abs(d.fiber_scalar / ((n - 3.0) * (n - 2.0) * F)) +
                       std::abs(d.trace_T / (2 * F)) + std::abs(d.delta1F / (4 * F * F));
  ConformalFlatness out;
  out.rho0 = *d.rho0;
  out.flat = std::abs(out.rho0) <= 1e-9 * std::max(scale, 1.0);
  out.block_residual = max_abs_difference(f.weyl, warped_weyl(d, f.g));
  return out;
}

}  // namespace curvcert
