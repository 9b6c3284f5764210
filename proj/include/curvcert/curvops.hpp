#pragma once

// Algebraic curvature operators at a point: Kulkarni-Nomizu products, the
// derivation B·T induced by a (0,4) tensor, Tachibana tensors Q(A,T),
// least-squares proportionality factors and shifted-Ricci rank tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "curvcert/tensor.hpp"

namespace curvcert {

/// Generalized-curvature-shaped KN product used by several modules:
/// (A∧B)_hijk = A_hk B_ij + A_ij B_hk − A_hj B_ik − A_ik B_hj.
inline Tensor kulkarni_nomizu(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("Kulkarni-Nomizu product needs (0,2) tensors");
  a.require_same_shape(b);
  const int n = a.dim();
  Tensor out(n, 4, Symmetry::riemann_like);
  for (int h = 0; h < n; ++h)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          out(h, i, j, k) = a(h, k) * b(i, j) + a(i, j) * b(h, k) - a(h, j) * b(i, k) - a(i, k) * b(h, j);
  return out;
}

/// G = ½ g∧g, i.e. G_hijk = g_hk g_ij − g_hj g_ik.
inline Tensor metric_g_tensor(const Tensor& g) {
  const int n = g.dim();
  Tensor out(n, 4, Symmetry::riemann_like);
  for (int h = 0; h < n; ++h)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) out(h, i, j, k) = g(h, k) * g(i, j) - g(h, j) * g(i, k);
  return out;
}

/// A_ik g^kl B_lj.
inline Tensor contract_with_inverse(const Tensor& a, const Tensor& ginv, const Tensor& b) {
  const int n = a.dim();
  Tensor out(n, 2, Symmetry::sym2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += a(i, k) * ginv(k, l) * b(l, j);
      out(i, j) = s;
    }
  return out;
}

namespace detail {

inline void require_sym2(const Tensor& a, const char* what) {
  if (a.rank() != 2) throw std::invalid_argument(std::string(what) + " must be a (0,2) tensor");
}

// Applies the derivation of an endomorphism field E(X,Y), given by components
// endo(x, y, z, w) = (E(e_x, e_y) e_z)^w, to a covariant tensor t:
//   (E·T)(i_1..i_k, x, y) = −Σ_s T(i_1, .., E(x,y) i_s, .., i_k).
inline Tensor apply_endomorphism(const Tensor& endo, const Tensor& t) {
  const int n = t.dim();
  const int k = t.rank();
  if (endo.dim() != n) throw std::invalid_argument("dimension mismatch");
  if (k + 2 > kMaxRank) throw std::invalid_argument("result rank too large");
  Tensor out(n, k + 2, Symmetry::derivation_image);
  std::vector<std::size_t> stride(k, 1);
  for (int s = k - 2; s >= 0; --s) stride[s] = stride[s + 1] * static_cast<std::size_t>(n);
  const std::size_t block = t.size();
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      for (std::size_t off = 0; off < block; ++off) {
        const MultiIndex idx = t.unflatten(off);
        double acc = 0.0;
        for (int s = 0; s < k; ++s) {
          const std::size_t base = off - static_cast<std::size_t>(idx[s]) * stride[s];
          for (int w = 0; w < n; ++w) {
            const double e = endo(x, y, idx[s], w);
            if (e != 0.0) acc += e * t.data()[base + static_cast<std::size_t>(w) * stride[s]];
          }
        }
        out.data()[(off * n + x) * n + y] = -acc;
      }
    }
  return out;
}

}  // namespace detail

/// B·T for a generalized curvature tensor `b4` (0,4) and any (0,k) tensor `t`.
/// The endomorphism B(X,Y) is obtained by raising the last index with `ginv`:
/// (B(e_x,e_y) e_z)^w = B_xyzm g^mw.
inline Tensor derivation_apply(const Tensor& b4, const Tensor& t, const Tensor& ginv) {
  if (b4.rank() != 4) throw std::invalid_argument("derivation_apply needs a (0,4) tensor");
  if (b4.dim() != t.dim() || ginv.dim() != t.dim()) throw std::invalid_argument("dimension mismatch");
  const int n = b4.dim();
  Tensor endo(n, 4);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z)
        for (int w = 0; w < n; ++w) {
          double v = 0.0;
          for (int m = 0; m < n; ++m) v += b4(x, y, z, m) * ginv(m, w);
          endo(x, y, z, w) = v;
        }
  return detail::apply_endomorphism(endo, t);
}

/// Tachibana tensor Q(A,T)(i_1..i_k, x, y) = (X ∧_A Y · T)(i_1..i_k), with
/// (X ∧_A Y)Z = A(Y,Z)X − A(X,Z)Y, evaluated directly from its definition.
inline Tensor tachibana(const Tensor& a, const Tensor& t) {
  detail::require_sym2(a, "A");
  if (a.dim() != t.dim()) throw std::invalid_argument("dimension mismatch");
  const int n = t.dim();
  const int k = t.rank();
  if (k + 2 > kMaxRank) throw std::invalid_argument("result rank too large");
  Tensor out(n, k + 2, Symmetry::derivation_image);
  for (std::size_t off = 0; off < out.size(); ++off) {
    const MultiIndex idx = out.unflatten(off);
    const int x = idx[k];
    const int y = idx[k + 1];
    MultiIndex sub = idx;
    double acc = 0.0;
    for (int s = 0; s < k; ++s) {
      const int is = idx[s];
      sub[s] = x;
      const double tx = t.at(sub);
      sub[s] = y;
      const double ty = t.at(sub);
      sub[s] = is;
      acc += a(y, is) * tx - a(x, is) * ty;
    }
    out.data()[off] = -acc;
  }
  return out;
}

/// Outcome of fitting LHS ≈ λ·RHS.
struct ProportionalityResult {
  std::optional<double> factor;  // empty when RHS is degenerate
  double residual = 0.0;
  bool degenerate = false;  // ‖RHS‖ ≈ 0
  bool vacuous = false;     // degenerate and ‖LHS‖ ≈ 0 as well
};

/// λ = ⟨LHS,RHS⟩/⟨RHS,RHS⟩ with residual ‖LHS − λ RHS‖/(‖LHS‖ + ‖RHS‖ + ε).
/// RHS counts as zero when ‖RHS‖ ≤ 1e-12·n².
inline ProportionalityResult proportionality(const Tensor& lhs, const Tensor& rhs) {
  lhs.require_same_shape(rhs);
  const double n = lhs.dim();
  const double zero = 1e-12 * n * n;
  const double rn = rhs.norm();
  const double ln = lhs.norm();
  ProportionalityResult res;
  if (rn <= zero) {
    res.degenerate = true;
    if (ln <= zero) {
      res.vacuous = true;
      res.residual = 0.0;
    } else {
      res.residual = 1.0;
    }
    return res;
  }
  const double lambda = lhs.dot(rhs) / (rn * rn);
  Tensor diff = lhs;
  for (std::size_t i = 0; i < diff.size(); ++i) diff.data()[i] -= lambda * rhs.data()[i];
  res.factor = lambda;
  res.residual = diff.norm() / (ln + rn + std::numeric_limits<double>::min());
  return res;
}

/// Numerical rank of S − αg: singular values above 1e-9·σ_max.
inline int rank_shift(const Tensor& s, const Tensor& g, double alpha) {
  detail::require_sym2(s, "S");
  s.require_same_shape(g);
  const int n = s.dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = s(i, j) - alpha * g(i, j);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  if (smax == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-9 * smax) ++rank;
  return rank;
}

struct MinimalShiftRank {
  int rank = 0;
  double alpha = 0.0;
};

/// Smallest rank of S − αg over all real α. The rank can only drop at the
/// real eigenvalues of g⁻¹S, so those are the candidates (plus α = 0).
inline MinimalShiftRank minimal_shift_rank(const Tensor& s, const Tensor& g, const Tensor& ginv) {
  const int n = s.dim();
  Eigen::MatrixXd op(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v += ginv(i, k) * s(k, j);
      op(i, j) = v;
    }
  Eigen::EigenSolver<Eigen::MatrixXd> es(op, false);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(es.eigenvalues()(i)));
  MinimalShiftRank best{rank_shift(s, g, 0.0), 0.0};
  for (int i = 0; i < n; ++i) {
    const auto ev = es.eigenvalues()(i);
    if (std::abs(ev.imag()) > 1e-9 * (scale + 1.0)) continue;
    const int r = rank_shift(s, g, ev.real());
    if (r < best.rank) best = {r, ev.real()};
  }
  return best;
}

}  // namespace curvcert
