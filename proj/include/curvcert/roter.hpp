#pragma once

// Roter decomposition R = (φ/2) S∧S + μ g∧S + (η/2) g∧g at a point, the
// pseudosymmetry functions it implies, the identity suite those functions
// must satisfy, and pointwise classification.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "curvcert/curvops.hpp"
#include "curvcert/geometry.hpp"
#include "curvcert/tensor.hpp"

namespace curvcert {

enum class FitStatus { accepted, not_in_us, not_in_uc, ill_conditioned, residual_too_large };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::accepted: return "ACCEPTED";
    case FitStatus::not_in_us: return "NOT_IN_US";
    case FitStatus::not_in_uc: return "NOT_IN_UC";
    case FitStatus::ill_conditioned: return "ILL_CONDITIONED";
    case FitStatus::residual_too_large: return "RESIDUAL_TOO_LARGE";
  }
  return "?";
}

struct RoterOptions {
  double accept_residual = 1e-8;
  double membership = 1e-9;  // relative threshold for S ∝ g and C = 0
  double max_condition = 1e12;
};

struct RoterFit {
  FitStatus status = FitStatus::not_in_us;
  int dim = 0;
  double kappa = 0.0;
  double phi = 0.0, mu = 0.0, eta = 0.0;
  double residual = 1.0;  // ‖R − reconstruction‖/‖R‖
  double condition = 0.0;
  bool in_US = false;
  bool in_UC = false;
  double alpha1 = 0.0, alpha2 = 0.0;
  double L_R = 0.0, L = 0.0, L_C = 0.0;
  std::optional<double> nu;

  bool accepted() const noexcept { return status == FitStatus::accepted; }

  /// Fills α₁, α₂, L_R, L, L_C from φ, μ, η, κ and n.
  void derive() {
    const double n = dim;
    alpha1 = kappa + ((n - 2) * mu - 1) / phi;
    alpha2 = (mu * kappa + (n - 1) * eta) / phi;
    L_R = ((n - 2) * (mu * mu - phi * eta) - mu) / phi;
    L = L_R + mu / phi;
    L_C = L_R + (kappa / (n - 1) - alpha1) / (n - 2);
  }
};

/// Norm of the traceless Ricci part relative to ‖S‖.
inline double einstein_defect(const PointFrame& f) {
  const Tensor traceless = f.ricci - (f.scalar / f.dim) * f.g;
  return traceless.norm();
}

inline bool in_US(const PointFrame& f, double tol = 1e-9) {
  return einstein_defect(f) > tol * f.ricci.norm() + 1e-12;
}

inline bool in_UC(const PointFrame& f, double tol = 1e-9) {
  return f.weyl_defined && f.weyl.norm() > tol * f.riemann.norm() + 1e-300;
}

/// The reconstruction (φ/2)S∧S + μ g∧S + (η/2) g∧g.
inline Tensor roter_tensor(const Tensor& g, const Tensor& s, double phi, double mu, double eta) {
  return (phi / 2) * kulkarni_nomizu(s, s) + mu * kulkarni_nomizu(g, s) + (eta / 2) * kulkarni_nomizu(g, g);
}

/// Least-squares fit of (φ, μ, η) over the span {½S∧S, g∧S, ½g∧g}. The
/// Gram matrix of the normalized basis guards against near-dependence.
inline RoterFit fit_roter(const PointFrame& f, const RoterOptions& opt = {}) {
  RoterFit fit;
  fit.dim = f.dim;
  fit.kappa = f.scalar;
  fit.in_US = in_US(f, opt.membership);
  fit.in_UC = in_UC(f, opt.membership);
  if (f.dim < 4 || !fit.in_US) {
    fit.status = FitStatus::not_in_us;
    return fit;
  }
  if (!fit.in_UC) {
    fit.status = FitStatus::not_in_uc;
    return fit;
  }
  const Tensor basis[3] = {0.5 * kulkarni_nomizu(f.ricci, f.ricci), kulkarni_nomizu(f.g, f.ricci),
                           0.5 * kulkarni_nomizu(f.g, f.g)};
  const Eigen::Index rows = static_cast<Eigen::Index>(f.riemann.size());
  Eigen::MatrixXd a(rows, 3);
  double norms[3];
  for (int k = 0; k < 3; ++k) {
    norms[k] = basis[k].norm();
    for (Eigen::Index r = 0; r < rows; ++r) a(r, k) = basis[k].data()[r] / norms[k];
  }
  const Eigen::Matrix3d gram = a.transpose() * a;
  const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  fit.condition = ev(0) > 0.0 ? ev(2) / ev(0) : std::numeric_limits<double>::infinity();
  if (fit.condition > opt.max_condition) {
    fit.status = FitStatus::ill_conditioned;
    return fit;
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(f.riemann.data().data(), rows);
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(rhs);
  fit.phi = c(0) / norms[0];
  fit.mu = c(1) / norms[1];
  fit.eta = c(2) / norms[2];
  const Tensor recon = roter_tensor(f.g, f.ricci, fit.phi, fit.mu, fit.eta);
  fit.residual = (f.riemann - recon).norm() / f.riemann.norm();
  fit.derive();
  fit.status = fit.residual <= opt.accept_residual ? FitStatus::accepted : FitStatus::residual_too_large;
  return fit;
}

/// Residual of one identity LHS = RHS where each side is a sum of terms:
/// ‖ΣLHS − ΣRHS‖ over the sum of the norms of all terms.
struct IdentityResidual {
  std::string name;
  double residual = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

namespace detail {

struct Term {
  double coefficient;
  const Tensor* tensor;
};

inline double identity_residual(std::initializer_list<Term> lhs, std::initializer_list<Term> rhs) {
  const Tensor& shape = *lhs.begin()->tensor;
  Tensor diff(shape.dim(), shape.rank());
  double scale = 0.0;
  for (const Term& t : lhs) {
    diff += t.coefficient * *t.tensor;
    scale += std::abs(t.coefficient) * t.tensor->norm();
  }
  for (const Term& t : rhs) {
    diff -= t.coefficient * *t.tensor;
    scale += std::abs(t.coefficient) * t.tensor->norm();
  }
  return diff.norm() / (scale + 1e-300);
}

}  // namespace detail

/// Everything the identity suite consumes, evaluated once per point.
struct CurvatureProducts {
  Tensor G, RR, RC, RS, CC, CR, CS, QgR, QgC, QgS, QSR, QSC, QSG;
};

inline CurvatureProducts curvature_products(const PointFrame& f) {
  CurvatureProducts p;
  p.G = metric_g_tensor(f.g);
  p.RR = derivation_apply(f.riemann, f.riemann, f.ginv);
  p.RC = derivation_apply(f.riemann, f.weyl, f.ginv);
  p.RS = derivation_apply(f.riemann, f.ricci, f.ginv);
  p.CC = derivation_apply(f.weyl, f.weyl, f.ginv);
  p.CR = derivation_apply(f.weyl, f.riemann, f.ginv);
  p.CS = derivation_apply(f.weyl, f.ricci, f.ginv);
  p.QgR = tachibana(f.g, f.riemann);
  p.QgC = tachibana(f.g, f.weyl);
  p.QgS = tachibana(f.g, f.ricci);
  p.QSR = tachibana(f.ricci, f.riemann);
  p.QSC = tachibana(f.ricci, f.weyl);
  p.QSG = tachibana(f.ricci, p.G);
  return p;
}

/// The ten pseudosymmetry-type identities implied by a Roter decomposition.
inline std::vector<IdentityResidual> theorem21_suite(const PointFrame& f, const RoterFit& fit, double tol = 1e-8) {
  const CurvatureProducts p = curvature_products(f);
  const double n = f.dim, k = f.scalar, phi = fit.phi, mu = fit.mu, eta = fit.eta;
  using detail::identity_residual;
  std::vector<IdentityResidual> out;
  auto add = [&](std::string name, double r) { out.push_back({std::move(name), r, tol, r <= tol}); };

  const Tensor& S = f.ricci;
  add("S2 = a1 S + a2 g", identity_residual({{1.0, &f.ricci_squared}}, {{fit.alpha1, &S}, {fit.alpha2, &f.g}}));
  add("R.R = L_R Q(g,R)", identity_residual({{1.0, &p.RR}}, {{fit.L_R, &p.QgR}}));
  add("R.C = L_R Q(g,C)", identity_residual({{1.0, &p.RC}}, {{fit.L_R, &p.QgC}}));
  add("R.S = L_R Q(g,S)", identity_residual({{1.0, &p.RS}}, {{fit.L_R, &p.QgS}}));
  add("R.R = Q(S,R) + L Q(g,C)", identity_residual({{1.0, &p.RR}}, {{1.0, &p.QSR}, {fit.L, &p.QgC}}));
  add("C.C = L_C Q(g,C)", identity_residual({{1.0, &p.CC}}, {{fit.L_C, &p.QgC}}));
  add("C.R = L_C Q(g,R)", identity_residual({{1.0, &p.CR}}, {{fit.L_C, &p.QgR}}));
  add("C.S = L_C Q(g,S)", identity_residual({{1.0, &p.CS}}, {{fit.L_C, &p.QgS}}));
  const double c1 = (mu - 1 / (n - 2)) / phi + k / (n - 1);
  const double c2 = (mu / phi) * (mu - 1 / (n - 2)) - eta;
  add("R.C - C.R = c1 Q(g,R) + c2 Q(S,G)",
      identity_residual({{1.0, &p.RC}, {-1.0, &p.CR}}, {{c1, &p.QgR}, {c2, &p.QSG}}));
  add("C.R - R.C = Q(S,C) - k/(n-1) Q(g,C)",
      identity_residual({{1.0, &p.CR}, {-1.0, &p.RC}}, {{1.0, &p.QSC}, {-k / (n - 1), &p.QgC}}));
  return out;
}

/// Characteristic curvature magnitude ‖R‖/‖G‖, used to scale scalar comparisons.
inline double curvature_scale(const PointFrame& f) {
  const double gn = metric_g_tensor(f.g).norm();
  return gn > 0.0 ? f.riemann.norm() / gn : 0.0;
}

/// |a − b| / max(|a|, |b|, scale).
inline double scalar_mismatch(double a, double b, double scale) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), scale, 1e-300});
}

/// Standalone Ricci-pseudosymmetry test R·S = L_S Q(g,S).
inline ProportionalityResult ricci_pseudosymmetry(const PointFrame& f) {
  return proportionality(derivation_apply(f.riemann, f.ricci, f.ginv), tachibana(f.g, f.ricci));
}

/// Standard α grid for rank tests: 41 points over [−10|κ|, 10|κ|] plus extras.
inline std::vector<double> alpha_grid(double kappa, std::initializer_list<double> extra = {}) {
  const double r = 10.0 * std::max(std::abs(kappa), 1e-3);
  std::vector<double> out;
  for (int i = 0; i <= 40; ++i) out.push_back(-r + 2.0 * r * i / 40.0);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

/// Minimum of rank(S − αg) over a grid of α.
inline int min_rank_over(const PointFrame& f, const std::vector<double>& alphas) {
  int best = f.dim;
  for (double a : alphas) best = std::min(best, rank_shift(f.ricci, f.g, a));
  return best;
}

enum class Verdict { einstein, quasi_einstein, roter, other };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::einstein: return "EINSTEIN";
    case Verdict::quasi_einstein: return "QUASI_EINSTEIN";
    case Verdict::roter: return "ROTER";
    case Verdict::other: return "OTHER";
  }
  return "?";
}

struct Classification {
  Verdict verdict = Verdict::other;
  std::optional<double> alpha;  // for quasi-Einstein points
  double einstein_residual = 0.0;
  int min_shift_rank = 0;
  RoterFit fit;
};

inline Classification classify(const PointFrame& f, const RoterOptions& opt = {}) {
  Classification c;
  const double defect = einstein_defect(f);
  c.einstein_residual = defect / (f.ricci.norm() + 1e-300);
  const auto msr = minimal_shift_rank(f.ricci, f.g, f.ginv);
  c.min_shift_rank = msr.rank;
  if (defect <= 1e-9 * f.ricci.norm() + 1e-12) {
    c.verdict = Verdict::einstein;
    c.min_shift_rank = 0;
    return c;
  }
  if (msr.rank == 1) {
    c.verdict = Verdict::quasi_einstein;
    c.alpha = msr.alpha;
    return c;
  }
  c.fit = fit_roter(f, opt);
  c.verdict = c.fit.accepted() ? Verdict::roter : Verdict::other;
  return c;
}

}  // namespace curvcert
