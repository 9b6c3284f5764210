#include <gtest/gtest.h>

#include <random>

#include "curvcert/curvops.hpp"
#include "curvcert/geometry.hpp"
#include "random_metrics.hpp"

using namespace curvcert;
using testing_support::random_metric;
using testing_support::random_point;

namespace {

Tensor random_sym2(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(n, 2, Symmetry::sym2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) t(i, j) = t(j, i) = u(rng);
  return t;
}

Tensor random_tensor(std::mt19937_64& rng, int n, int k) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(n, k);
  for (double& v : t.data()) v = u(rng);
  return t;
}

// Conformally flat model of constant sectional curvature k in dimension n.
MetricSpec space_form(int n, double k) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("y" + std::to_string(i + 1));
  Expr r2 = Expr::number(0);
  for (int i = 0; i < n; ++i) r2 = r2 + pow(Expr::variable(i, names[i]), 2);
  const Expr conf = 1.0 / pow(1.0 + (k / 4.0) * r2, 2);
  return MetricSpec::diagonal(names, std::vector<Expr>(n, conf));
}

// Q(A,T) for a (0,2) tensor T, expanded by hand.
Tensor q_oracle(const Tensor& a, const Tensor& t) {
  const int n = a.dim();
  Tensor out(n, 4);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          out(i, j, x, y) = -(a(y, i) * t(x, j) - a(x, i) * t(y, j) + a(y, j) * t(i, x) - a(x, j) * t(i, y));
  return out;
}

Tensor rs_oracle(const Tensor& r, const Tensor& s, const Tensor& ginv) {
  const int n = s.dim();
  Tensor out(n, 4);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
          double v = 0.0;
          for (int m = 0; m < n; ++m)
            for (int w = 0; w < n; ++w) v += r(x, y, i, m) * ginv(m, w) * s(w, j) + r(x, y, j, m) * ginv(m, w) * s(i, w);
          out(i, j, x, y) = -v;
        }
  return out;
}

}  // namespace

TEST(KulkarniNomizu, MetricSquareIsTwiceG) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + t % 5;
    const Tensor g = random_sym2(rng, n);
    ASSERT_LE(relative_difference(kulkarni_nomizu(g, g), 2.0 * metric_g_tensor(g)), 1e-15);
  }
}

TEST(KulkarniNomizu, CommutesAndHasCurvatureSymmetries) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const int n = 3 + t % 3;
    const Tensor a = random_sym2(rng, n), b = random_sym2(rng, n);
    const Tensor ab = kulkarni_nomizu(a, b);
    ASSERT_LE(max_abs_difference(ab, kulkarni_nomizu(b, a)), 1e-12);
    ASSERT_LE(symmetry_defect(ab), 1e-12);
  }
  EXPECT_THROW(kulkarni_nomizu(random_sym2(rng, 3), random_sym2(rng, 4)), std::invalid_argument);
}

TEST(Tachibana, MatchesHandExpansion) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 4;
    const Tensor a = random_sym2(rng, n);
    const Tensor s = random_tensor(rng, n, 2);
    ASSERT_LE(max_abs_difference(tachibana(a, s), q_oracle(a, s)), 1e-14);
  }
}

TEST(Tachibana, QgGVanishesOnRandomMetrics) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 1000; ++t) {
    const int n = 3 + t % 3;
    const MetricSpec m = random_metric(rng, n);
    const Tensor g = compute_frame(m, random_point(rng, n)).g;
    ASSERT_LE(tachibana(g, metric_g_tensor(g)).max_abs(), 1e-12);
  }
}

TEST(Tachibana, NegativeControlNonMetricTensorFails) {
  std::mt19937_64 rng(5);
  const Tensor g = random_sym2(rng, 4);
  Tensor bent = metric_g_tensor(g);
  bent(0, 1, 1, 0) += 1e-3;
  bent(1, 0, 0, 1) += 1e-3;
  EXPECT_GT(tachibana(g, bent).max_abs(), 1e-6);
}

TEST(Derivation, MetricEndomorphismReproducesTachibana) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + t % 4;
    const int k = t % 2 == 0 ? 2 : 4;
    const MetricSpec m = random_metric(rng, n);
    const PointFrame f = compute_frame(m, random_point(rng, n));
    const Tensor tt = random_tensor(rng, n, k);
    ASSERT_LE(max_abs_difference(derivation_apply(metric_g_tensor(f.g), tt, f.ginv), tachibana(f.g, tt)), 1e-10);
  }
}

TEST(Derivation, RicciCaseMatchesHandExpansion) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 30; ++t) {
    const int n = 3 + t % 2;
    const PointFrame f = compute_frame(random_metric(rng, n), random_point(rng, n));
    ASSERT_LE(max_abs_difference(derivation_apply(f.riemann, f.ricci, f.ginv), rs_oracle(f.riemann, f.ricci, f.ginv)),
              1e-13);
  }
}

TEST(Derivation, CurvatureImagesAreSkewInLastPair) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const PointFrame f = compute_frame(random_metric(rng, 4), random_point(rng, 4));
    const Tensor rr = derivation_apply(f.riemann, f.riemann, f.ginv);
    EXPECT_EQ(rr.rank(), 6);
    EXPECT_LE(symmetry_defect(rr), 1e-9);
    EXPECT_LE(symmetry_defect(tachibana(f.g, f.riemann)), 1e-12);
  }
}

TEST(Derivation, ConstantCurvatureIsSemisymmetric) {
  for (auto [n, k] : {std::pair{3, 1.0}, std::pair{4, -0.5}, std::pair{5, 2.0}}) {
    const std::vector<double> pt(n, 0.2);
    const PointFrame f = compute_frame(space_form(n, k), pt);
    EXPECT_LE(derivation_apply(f.riemann, f.riemann, f.ginv).max_abs(), 1e-12);
    EXPECT_LE(tachibana(f.g, f.riemann).max_abs(), 1e-12);
    EXPECT_LE(max_abs_difference(f.riemann, k * metric_g_tensor(f.g)), 1e-12);
  }
}

TEST(Proportionality, Basics) {
  std::mt19937_64 rng(9);
  const Tensor q = random_tensor(rng, 3, 4);
  const auto zero = proportionality(Tensor(3, 4), q);
  ASSERT_TRUE(zero.factor.has_value());
  EXPECT_EQ(*zero.factor, 0.0);
  EXPECT_EQ(zero.residual, 0.0);

  const auto scaled = proportionality(-2.5 * q, q);
  EXPECT_NEAR(*scaled.factor, -2.5, 1e-14);
  EXPECT_LE(scaled.residual, 1e-15);

  const auto vac = proportionality(Tensor(3, 4), Tensor(3, 4));
  EXPECT_TRUE(vac.degenerate);
  EXPECT_TRUE(vac.vacuous);
  EXPECT_FALSE(vac.factor.has_value());
  EXPECT_EQ(vac.residual, 0.0);

  const auto bad = proportionality(q, Tensor(3, 4));
  EXPECT_TRUE(bad.degenerate);
  EXPECT_FALSE(bad.vacuous);
  EXPECT_GT(bad.residual, 0.5);

  const auto off = proportionality(q + 0.1 * random_tensor(rng, 3, 4), q);
  EXPECT_GT(off.residual, 1e-3);
  EXPECT_THROW(proportionality(q, Tensor(3, 2)), std::invalid_argument);
}

TEST(Proportionality, FlatSpaceIsVacuous) {
  const PointFrame f = compute_frame(space_form(4, 0.0), std::vector<double>(4, 0.1));
  const auto r = proportionality(derivation_apply(f.riemann, f.riemann, f.ginv), tachibana(f.g, f.riemann));
  EXPECT_TRUE(r.vacuous);
}

TEST(RankShift, Examples) {
  Tensor g = identity_matrix(4);
  Tensor s = 3.0 * g;
  EXPECT_EQ(rank_shift(s, g, 3.0), 0);
  Tensor d = identity_matrix(4);
  d(0, 0) = 2.0;
  EXPECT_EQ(rank_shift(d, g, 1.0), 1);
  EXPECT_EQ(rank_shift(d, g, 0.0), 4);
  const auto best = minimal_shift_rank(d, g, g);
  EXPECT_EQ(best.rank, 1);
  EXPECT_DOUBLE_EQ(best.alpha, 1.0);
}

TEST(RankShift, LorentzianEinsteinPoint) {
  Tensor g(4, 2, Symmetry::sym2);
  g(0, 0) = -1;
  g(1, 1) = g(2, 2) = g(3, 3) = 1;
  const Tensor s = -0.7 * g;
  EXPECT_EQ(minimal_shift_rank(s, g, g).rank, 0);
}
