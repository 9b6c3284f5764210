#pragma once

// Metric charts and pointwise curvature: Christoffel symbols, Riemann, Ricci,
// scalar curvature and Weyl tensor built from exact metric derivatives.
//
// Conventions (all downstream formulas rely on them):
//   Γ^h_ij   = ½ g^hs (∂_i g_js + ∂_j g_is − ∂_s g_ij)
//   R^s_ijk  = ∂_k Γ^s_ij − ∂_j Γ^s_ik + Γ^r_ij Γ^s_rk − Γ^r_ik Γ^s_rj
//   R_hijk   = g_hs R^s_ijk
//   S_ij     = g^hk R_hijk,  κ = g^ij S_ij
//   G_hijk   = g_hk g_ij − g_hj g_ik       (R = K·G on a space of curvature K)
//   C        = R − (1/(n−2)) g∧S + κ/((n−1)(n−2)) G

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvcert/curvops.hpp"
#include "curvcert/expr.hpp"
#include "curvcert/tensor.hpp"

namespace curvcert {

class SingularMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InadmissiblePointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user-declared domain condition on the chart.
struct Constraint {
  enum class Kind { nonzero, positive };
  Expr expr;
  Kind kind = Kind::nonzero;
  std::string label;
};

using ExprMatrix = std::vector<std::vector<Expr>>;

/// Metric g_ij on a coordinate chart. Only the upper triangle of the supplied
/// component matrix is read; g_ji refers to the same expression as g_ij.
class MetricSpec {
 public:
  MetricSpec(std::vector<std::string> coordinates, const ExprMatrix& components, Bindings consts = {},
             std::vector<Constraint> constraints = {}, std::string signature = {})
  {
    const int n = static_cast<int>(coordinates.size());
    if (n < 1) throw std::invalid_argument("metric needs at least one coordinate");
    if (static_cast<int>(components.size()) != n)
      throw std::invalid_argument("metric component matrix has wrong size");
    for (const auto& row : components)
      if (static_cast<int>(row.size()) != n) throw std::invalid_argument("metric component matrix is not square");
    auto built = std::make_shared<Data>();
    Data& d = *built;
    d.coordinates = std::move(coordinates);
    d.consts = std::move(consts);
    d.constraints = std::move(constraints);
    d.signature = std::move(signature);
    d.g.assign(n, std::vector<Expr>(n));
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        check_symbols(components[i][j], n, d.consts);
        d.g[i][j] = components[i][j];
        d.g[j][i] = d.g[i][j];
      }
    for (auto& c : d.constraints) check_symbols(c.expr, n, d.consts);
    compile(d);
    data_ = std::move(built);
  }

  static MetricSpec diagonal(std::vector<std::string> coordinates, const std::vector<Expr>& diag, Bindings consts = {},
                             std::vector<Constraint> constraints = {}, std::string signature = {}) {
    const std::size_t n = coordinates.size();
    if (diag.size() != n) throw std::invalid_argument("diagonal metric has wrong length");
    ExprMatrix m(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = diag[i];
    return MetricSpec(std::move(coordinates), m, std::move(consts), std::move(constraints), std::move(signature));
  }

  int dim() const noexcept { return static_cast<int>(data_->coordinates.size()); }
  const std::vector<std::string>& coordinates() const noexcept { return data_->coordinates; }
  const Bindings& bindings() const noexcept { return data_->consts; }
  const std::vector<Constraint>& constraints() const noexcept { return data_->constraints; }
  const std::string& signature() const noexcept { return data_->signature; }

  /// Component as supplied (may reference named constants).
  const Expr& component(int i, int j) const { return data_->g[i][j]; }
  /// Component with constants substituted.
  const Expr& bound_component(int i, int j) const { return data_->bg[i][j]; }
  const Expr& first_derivative(int k, int i, int j) const { return data_->dg[k][i][j]; }
  const Expr& second_derivative(int k, int l, int i, int j) const { return data_->ddg[k][l][i][j]; }

  SymbolTable symbols() const { return SymbolTable{data_->coordinates, data_->consts.names()}; }

  /// Parses a formula in this chart's coordinates and constants, with constants bound.
  Expr parse_bound(std::string_view src) const { return bind(parse(src, symbols()), data_->consts); }

  /// Checks declared constraints and metric nondegeneracy; on failure returns
  /// false and fills `why` when given.
  bool admissible(std::span<const double> pt, std::string* why = nullptr) const;

 private:
  struct Data {
    std::vector<std::string> coordinates;
    Bindings consts;
    std::vector<Constraint> constraints;
    std::string signature;
    ExprMatrix g;
    ExprMatrix bg;
    std::vector<ExprMatrix> dg;                // [k][i][j]
    std::vector<std::vector<ExprMatrix>> ddg;  // [k][l][i][j]
  };

  static void check_symbols(const Expr& e, int n, const Bindings& consts) {
    std::set<std::string> names;
    std::set<int> vars;
    collect_symbols(e, names, vars);
    for (const auto& c : names)
      if (!consts.contains(c)) throw UnboundConstantError(c);
    for (int v : vars)
      if (v < 0 || v >= n) throw std::invalid_argument("expression references coordinate slot outside the chart");
  }

  static void compile(Data& d) {
    const int n = static_cast<int>(d.coordinates.size());
    d.bg.assign(n, std::vector<Expr>(n));
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) d.bg[i][j] = d.bg[j][i] = bind(d.g[i][j], d.consts);
    d.dg.assign(n, ExprMatrix(n, std::vector<Expr>(n)));
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) d.dg[k][i][j] = d.dg[k][j][i] = diff(d.bg[i][j], k);
    d.ddg.assign(n, std::vector<ExprMatrix>(n, ExprMatrix(n, std::vector<Expr>(n))));
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l)
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) {
            Expr e = diff(d.dg[k][i][j], l);
            d.ddg[k][l][i][j] = d.ddg[k][l][j][i] = d.ddg[l][k][i][j] = d.ddg[l][k][j][i] = e;
          }
  }

  std::shared_ptr<const Data> data_;
};

/// All evaluated geometry at one point of a chart.
struct PointFrame {
  std::vector<double> point;
  int dim = 0;
  Tensor g;         // g_ij
  Tensor ginv;      // g^ij
  Tensor dg;        // (k,i,j) = ∂_k g_ij
  Tensor ddg;       // (k,l,i,j) = ∂_k ∂_l g_ij
  Tensor gamma;     // (h,i,j) = Γ^h_ij
  Tensor dgamma;    // (k,h,i,j) = ∂_k Γ^h_ij
  Tensor riemann;   // R_hijk
  Tensor ricci;     // S_ij
  double scalar = 0.0;
  Tensor weyl;      // C_hijk; zero when dim < 4
  bool weyl_defined = false;
  Tensor ricci_squared;  // S²_ij = S_ik g^kl S_lj
};

namespace detail {

inline Tensor invert_metric(const Tensor& g) {
  const int n = g.dim();
  Eigen::MatrixXd m(n, n);
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m(i, j) = g(i, j);
      scale = std::max(scale, std::abs(g(i, j)));
    }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  const double det = lu.determinant();
  if (scale == 0.0 || !(std::abs(det) > 1e-12 * std::pow(scale, n)))
    throw SingularMetricError("metric is singular (det = " + std::to_string(det) + ")");
  Eigen::MatrixXd inv = lu.inverse();
  Tensor out(n, 2, Symmetry::sym2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = 0.5 * (inv(i, j) + inv(j, i));
  return out;
}

inline Tensor evaluate_metric(const MetricSpec& spec, std::span<const double> pt) {
  const int n = spec.dim();
  Tensor g(n, 2, Symmetry::sym2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) g(i, j) = g(j, i) = eval(spec.bound_component(i, j), pt);
  return g;
}

}  // namespace detail

inline bool MetricSpec::admissible(std::span<const double> pt, std::string* why) const {
  if (static_cast<int>(pt.size()) != dim()) {
    if (why) *why = "point has wrong dimension";
    return false;
  }
  try {
    for (const auto& c : data_->constraints) {
      const double v = eval(c.expr, pt, data_->consts);
      const bool ok = c.kind == Constraint::Kind::positive ? v > 0.0 : v != 0.0;
      if (!ok) {
        if (why) *why = "constraint '" + (c.label.empty() ? to_string(c.expr) : c.label) + "' violated";
        return false;
      }
    }
    detail::invert_metric(detail::evaluate_metric(*this, pt));
  } catch (const std::exception& e) {
    if (why) *why = e.what();
    return false;
  }
  return true;
}

/// Builds the complete frame at `pt`. Throws SingularMetricError when the
/// metric is degenerate there and EvalError when a component leaves its domain.
inline PointFrame compute_frame(const MetricSpec& spec, std::span<const double> pt) {
  const int n = spec.dim();
  if (static_cast<int>(pt.size()) != n) throw std::invalid_argument("point has wrong dimension");
  PointFrame f;
  f.point.assign(pt.begin(), pt.end());
  f.dim = n;
  f.g = detail::evaluate_metric(spec, pt);
  f.ginv = detail::invert_metric(f.g);

  f.dg = Tensor(n, 3);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) f.dg(k, i, j) = f.dg(k, j, i) = eval(spec.first_derivative(k, i, j), pt);
  f.ddg = Tensor(n, 4);
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const double v = eval(spec.second_derivative(k, l, i, j), pt);
          f.ddg(k, l, i, j) = f.ddg(k, l, j, i) = f.ddg(l, k, i, j) = f.ddg(l, k, j, i) = v;
        }

  // Christoffel symbols of the first kind and their derivatives.
  Tensor first(n, 3);   // [s][i][j] = ½(∂_i g_js + ∂_j g_is − ∂_s g_ij)
  Tensor dfirst(n, 4);  // [k][s][i][j] = ∂_k of the above
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        first(s, i, j) = 0.5 * (f.dg(i, j, s) + f.dg(j, i, s) - f.dg(s, i, j));
        for (int k = 0; k < n; ++k)
          dfirst(k, s, i, j) = 0.5 * (f.ddg(k, i, j, s) + f.ddg(k, j, i, s) - f.ddg(k, s, i, j));
      }

  // ∂_k g^hs = −g^ha ∂_k g_ab g^bs
  Tensor dginv(n, 3);
  for (int k = 0; k < n; ++k)
    for (int h = 0; h < n; ++h)
      for (int s = 0; s < n; ++s) {
        double acc = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) acc += f.ginv(h, a) * f.dg(k, a, b) * f.ginv(b, s);
        dginv(k, h, s) = -acc;
      }

  f.gamma = Tensor(n, 3);
  f.dgamma = Tensor(n, 4);
  for (int h = 0; h < n; ++h)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int s = 0; s < n; ++s) acc += f.ginv(h, s) * first(s, i, j);
        f.gamma(h, i, j) = acc;
        for (int k = 0; k < n; ++k) {
          double d = 0.0;
          for (int s = 0; s < n; ++s) d += dginv(k, h, s) * first(s, i, j) + f.ginv(h, s) * dfirst(k, s, i, j);
          f.dgamma(k, h, i, j) = d;
        }
      }

  // R^s_ijk, then lower the first index.
  Tensor mixed(n, 4);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double v = f.dgamma(k, s, i, j) - f.dgamma(j, s, i, k);
          for (int r = 0; r < n; ++r) v += f.gamma(r, i, j) * f.gamma(s, r, k) - f.gamma(r, i, k) * f.gamma(s, r, j);
          mixed(s, i, j, k) = v;
        }
  f.riemann = Tensor(n, 4, Symmetry::riemann_like);
  for (int h = 0; h < n; ++h)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          for (int s = 0; s < n; ++s) v += f.g(h, s) * mixed(s, i, j, k);
          f.riemann(h, i, j, k) = v;
        }

  f.ricci = Tensor(n, 2, Symmetry::sym2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int h = 0; h < n; ++h)
        for (int k = 0; k < n; ++k) v += f.ginv(h, k) * f.riemann(h, i, j, k);
      f.ricci(i, j) = v;
    }
  f.scalar = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f.scalar += f.ginv(i, j) * f.ricci(i, j);

  f.ricci_squared = contract_with_inverse(f.ricci, f.ginv, f.ricci);

  f.weyl = Tensor(n, 4, Symmetry::riemann_like);
  f.weyl_defined = n >= 4;
  if (f.weyl_defined) {
    const Tensor gs = kulkarni_nomizu(f.g, f.ricci);
    const Tensor gg = metric_g_tensor(f.g);
    const double c1 = 1.0 / (n - 2);
    const double c2 = f.scalar / ((n - 1.0) * (n - 2.0));
    for (std::size_t off = 0; off < f.weyl.size(); ++off)
      f.weyl.data()[off] = f.riemann.data()[off] - c1 * gs.data()[off] + c2 * gg.data()[off];
  }
  return f;
}

inline Tensor christoffel(const MetricSpec& spec, std::span<const double> pt) { return compute_frame(spec, pt).gamma; }

inline Tensor riemann(const MetricSpec& spec, std::span<const double> pt) { return compute_frame(spec, pt).riemann; }

struct RicciScalarWeyl {
  Tensor ricci;
  double scalar = 0.0;
  Tensor weyl;
  bool weyl_defined = false;  // false for n < 4: weyl is returned as zero
};

inline RicciScalarWeyl ricci_scalar_weyl(const MetricSpec& spec, std::span<const double> pt) {
  PointFrame f = compute_frame(spec, pt);
  return {std::move(f.ricci), f.scalar, std::move(f.weyl), f.weyl_defined};
}

/// κ_G = R_1221 / (g_11 g_22) for a diagonal 2-D metric.
inline double gauss_curvature(const MetricSpec& spec, std::span<const double> pt) {
  if (spec.dim() != 2) throw std::invalid_argument("gauss_curvature needs a 2-dimensional metric");
  if (!spec.bound_component(0, 1).is_zero()) throw std::invalid_argument("gauss_curvature needs a diagonal metric");
  const PointFrame f = compute_frame(spec, pt);
  return f.riemann(0, 1, 1, 0) / (f.g(0, 0) * f.g(1, 1));
}

/// result(k, i) = ∇_k w_i = ∂_k w_i − Γ^s_ki w_s for a covector field given
/// by expressions over the chart (constants must already be bound or absent).
inline Tensor covariant_derivative_01(const PointFrame& frame, const std::vector<Expr>& w, const Bindings& consts = {}) {
  const int n = frame.dim;
  if (static_cast<int>(w.size()) != n) throw std::invalid_argument("covector has wrong length");
  std::vector<double> wv(n);
  for (int i = 0; i < n; ++i) wv[i] = eval(w[i], frame.point, consts);
  Tensor out(n, 2);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      double v = eval(diff(w[i], k), frame.point, consts);
      for (int s = 0; s < n; ++s) v -= frame.gamma(s, k, i) * wv[s];
      out(k, i) = v;
    }
  return out;
}

/// result(k, i, j) = ∇_k T_ij = ∂_k T_ij − Γ^s_ki T_sj − Γ^s_kj T_is, with Γ
/// taken from `frame`.
inline Tensor covariant_derivative_02(const PointFrame& frame, const ExprMatrix& t, const Bindings& consts = {}) {
  const int n = frame.dim;
  if (static_cast<int>(t.size()) != n) throw std::invalid_argument("(0,2) field has wrong size");
  Tensor tv(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) tv(i, j) = eval(t[i][j], frame.point, consts);
  Tensor out(n, 3);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = eval(diff(t[i][j], k), frame.point, consts);
        for (int s = 0; s < n; ++s) v -= frame.gamma(s, k, i) * tv(s, j) + frame.gamma(s, k, j) * tv(i, s);
        out(k, i, j) = v;
      }
  return out;
}

inline Tensor covariant_derivative_02(const MetricSpec& spec, const ExprMatrix& t, std::span<const double> pt) {
  return covariant_derivative_02(compute_frame(spec, pt), t, spec.bindings());
}

/// Metric components of `spec` as an expression matrix (constants bound).
inline ExprMatrix metric_components(const MetricSpec& spec) {
  const int n = spec.dim();
  ExprMatrix m(n, std::vector<Expr>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = spec.bound_component(i, j);
  return m;
}

}  // namespace curvcert
