#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "curvcert/geomap.hpp"
#include "oracles.hpp"

using namespace curvcert;

namespace {

const SymbolTable kX{{"x", "y"}, {}};

FamilyConfig branch_config(double C, int n) {
  FamilyConfig c;
  c.C = C;
  c.dim = n;
  if (C != 0.0) {
    c.C1 = 1.0;
    c.C2 = 0.3;
  }
  return c;
}

std::vector<double> worked_point(int n) {
  std::vector<double> pt(n, 0.0);
  pt[0] = 1.0;
  return pt;
}

void expect_all_pass(const std::vector<IdentityResidual>& checks) {
  for (const auto& c : checks) EXPECT_TRUE(c.pass) << c.name << " residual " << c.residual;
}

}  // namespace

TEST(GeodesicPair2D, WorkedValues) {
  const Expr b = parse("x", kX);
  const GeodesicPair2D pair(family_base_metric(b, 0.0, 4.0), b, 2.0, 1.0);
  const std::vector<double> pt = {1.0, 0.3};
  const PairPoint pp = evaluate_pair(pair.pair(), pt);
  EXPECT_NEAR(pp.psi[0], -0.25, 1e-15);
  EXPECT_EQ(pp.psi[1], 0.0);
  EXPECT_NEAR(pp.image.gamma(1, 0, 1), 0.25, 1e-14);
  EXPECT_TRUE(verify_geo_compatibility(pp).pass);
  EXPECT_TRUE(verify_christoffel_shift(pp).pass);
  EXPECT_TRUE(verify_ricci_shift(pp).pass);
  EXPECT_TRUE(verify_gradient(pp).pass);
  EXPECT_TRUE(verify_pair2d_christoffel(pair, pp).pass);
}

TEST(GeodesicPair2D, GenericProfilesSatisfyMappingRelations) {
  const char* profiles[][2] = {{"1 + x^2", "exp(x)"}, {"2 - sin(x)", "x^3"}, {"-1/(1+x^2)", "x^2 + 1"}};
  for (const auto& pr : profiles) {
    for (double q : {1.0, -0.3}) {
      const GeodesicPair2D pair(parse(pr[0], kX), parse(pr[1], kX), 1.5, q);
      for (double x : {0.4, 0.9, 1.3}) {
        const std::vector<double> pt = {x, -0.2};
        if (!pair.source().admissible(pt) || !pair.image().admissible(pt)) continue;
        const PairPoint pp = evaluate_pair(pair.pair(), pt);
        EXPECT_LE(verify_geo_compatibility(pp).residual, 1e-12) << pr[0] << " " << pr[1];
        EXPECT_LE(verify_christoffel_shift(pp).residual, 1e-12);
        EXPECT_LE(verify_ricci_shift(pp).residual, 1e-12);
        EXPECT_LE(verify_pair2d_christoffel(pair, pp).residual, 1e-12);
      }
    }
  }
}

TEST(GeodesicPair2D, RejectsTrivialParameters) {
  const Expr b = parse("x", kX);
  EXPECT_THROW(GeodesicPair2D(b, b, 1.0, 0.0), GeomapError);
  EXPECT_THROW(GeodesicPair2D(b, b, 0.0, 1.0), GeomapError);
  EXPECT_THROW(GeodesicPair2D(b, parse("x*y", kX), 1.0, 1.0), GeomapError);
}

TEST(GeodesicPair, TrivialMappingHasZeroResiduals) {
  const MetricSpec g = MetricSpec::diagonal({"x", "y"}, {parse("1 + x^2", kX), parse("exp(x*y)", kX)});
  const GeodesicPair pair{g, g, {Expr::number(0.0), Expr::number(0.0)}};
  const std::vector<double> pt = {0.3, 0.7};
  const PairPoint pp = evaluate_pair(pair, pt);
  EXPECT_LE(verify_geo_compatibility(pp).residual, 1e-15);
  EXPECT_EQ(verify_christoffel_shift(pp).residual, 0.0);
  EXPECT_EQ(verify_ricci_shift(pp).residual, 0.0);
}

TEST(GeodesicPair, WrongCovectorFails) {
  const Expr b = parse("x", kX);
  GeodesicPair pair = GeodesicPair2D(family_base_metric(b, 0.0, 4.0), b, 2.0, 1.0).pair();
  pair.psi[0] = 1.1 * pair.psi[0];
  const PairPoint pp = evaluate_pair(pair, std::vector<double>{1.0, 0.0});
  EXPECT_FALSE(verify_geo_compatibility(pp).pass);
  EXPECT_FALSE(verify_christoffel_shift(pp).pass);
}

// ψ_i = ∂_i log|det ḡ / det g| / (2(n+1)), differenced numerically.
TEST(Family, PsiMatchesDeterminantOracle) {
  for (int n : {4, 5}) {
    const GeodesicFamily fam = build_family(branch_config(0.5, n));
    std::mt19937_64 rng(11);
    for (const auto& pt : sample_family_points(fam, default_family_box(n), 5, rng)) {
      auto logratio = [&](const std::vector<double>& x) {
        const PointFrame s = compute_frame(fam.pair.source, x), i = compute_frame(fam.pair.image, x);
        Eigen::MatrixXd gs(n, n), gi(n, n);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) {
            gs(r, c) = s.g(r, c);
            gi(r, c) = i.g(r, c);
          }
        return std::log(std::abs(gi.determinant() / gs.determinant()));
      };
      const PairPoint pp = evaluate_pair(fam.pair, pt);
      for (int k = 0; k < n; ++k) {
        const double fd = oracle::central_difference(logratio, pt, k, 1e-5) / (2.0 * (n + 1));
        EXPECT_NEAR(pp.psi[k], fd, 1e-7 * (1.0 + std::abs(fd)));
      }
    }
  }
}

TEST(Family, WorkedExamplePseudosymmetryFunctions) {
  FamilyConfig c;  // n = 4, D = 4, C = 0, b = x, B = 2t + 1, p = 2, q = 1, κ̃ = 2
  const GeodesicFamily fam = build_family(c);
  const auto pt = worked_point(4);
  const PairPoint pp = evaluate_pair(fam.pair, pt);
  const RoterFit src = fit_roter(pp.source), img = fit_roter(pp.image);
  ASSERT_TRUE(src.accepted());
  ASSERT_TRUE(img.accepted());
  EXPECT_NEAR(src.L_R, -1.0, 1e-10);
  EXPECT_NEAR(img.L_R, -0.5, 1e-10);
  const WarpedDiagnostics di = diagnostics(fam.image, pt);
  EXPECT_NEAR(di.base_scalar, -(4.0 + 0.0) / 4.0, 1e-12);
  expect_all_pass(verify_prop42(fam, pp, src, img));
  // L_R − κ/12 against (p/(1+q𝔟))(L_R̄ − κ̄/12) with 𝔟 = 1
  EXPECT_NEAR(src.L_R - src.kappa / 12.0, 1.0 * (img.L_R - img.kappa / 12.0), 1e-10);
}

TEST(Family, AllBranchesAllDimensions) {
  for (double C : {0.0, 0.5, -0.5})
    for (int n : {4, 5, 6}) {
      const GeodesicFamily fam = build_family(branch_config(C, n));
      std::mt19937_64 rng(static_cast<unsigned>(100 * n + 10 * C + 7));
      for (const auto& pt : sample_family_points(fam, default_family_box(n), 4, rng)) {
        SCOPED_TRACE("C=" + std::to_string(C) + " n=" + std::to_string(n));
        const PairPoint pp = evaluate_pair(fam.pair, pt);
        expect_all_pass(family_point_checks(fam, pp));
        const auto [r4, r5] = verify_r4_r5(fam, pt);
        EXPECT_TRUE(r4.pass) << r4.residual;
        EXPECT_TRUE(r5.pass) << r5.residual;
        const RoterFit src = fit_roter(pp.source), img = fit_roter(pp.image);
        ASSERT_TRUE(src.accepted()) << to_string(src.status);
        ASSERT_TRUE(img.accepted()) << to_string(img.status);
        expect_all_pass(verify_prop42(fam, pp, src, img));
      }
    }
}

TEST(Family, PseudosymmetryFunctionIsConstant) {
  for (double C : {0.0, 0.5, -0.5}) {
    FamilyConfig c = branch_config(C, 5);
    c.D = 3.0;
    c.map_scale = -1.5;
    c.map_shift = -2.0;  // 1 + q𝔟 < 0 on the box, so F̄ > 0
    const GeodesicFamily fam = build_family(c);
    std::mt19937_64 rng(5);
    std::vector<double> lr, lrb;
    for (const auto& pt : sample_family_points(fam, default_family_box(5), 20, rng)) {
      const PairPoint pp = evaluate_pair(fam.pair, pt);
      lr.push_back(fit_roter(pp.source).L_R);
      lrb.push_back(fit_roter(pp.image).L_R);
    }
    EXPECT_LE(oracle::stdev(lr), 1e-8);
    EXPECT_LE(oracle::stdev(lrb), 1e-8);
    EXPECT_NEAR(oracle::mean(lr), -3.0 / 4.0, 1e-9);
    EXPECT_NEAR(oracle::mean(lrb), -(3.0 + 4 * -2.0 * C) / (4 * -1.5), 1e-9);
  }
}

TEST(Family, R5HoldsButR4FailsForScaledImageWarp) {
  const GeodesicFamily fam = build_family(branch_config(0.0, 4));
  const auto pt = worked_point(4);
  const auto [r4, r5] = verify_r4_r5(fam, pt, 2.0 * fam.F_bar);
  EXPECT_TRUE(r5.pass) << r5.residual;
  EXPECT_FALSE(r4.pass) << r4.residual;
}

TEST(Family, RejectsTrivialAndDegenerateConfigs) {
  FamilyConfig c;
  c.map_shift = 0.0;
  EXPECT_THROW(build_family(c), GeomapError);
  c = FamilyConfig{};
  c.map_scale = 0.0;
  EXPECT_THROW(build_family(c), GeomapError);
  c = FamilyConfig{};
  c.dim = 3;
  EXPECT_THROW(build_family(c), GeomapError);
  c = FamilyConfig{};
  c.b = "x*t";
  EXPECT_THROW(build_family(c), GeomapError);
}

TEST(Family, SamplingAvoidsSingularLoci) {
  FamilyConfig c;
  c.map_shift = -1.0;  // 1 + q𝔟 = 0 at x = 1
  const GeodesicFamily fam = build_family(c);
  SampleBox box = default_family_box(4);
  box[0] = {1.0, 1.0};
  std::mt19937_64 rng(3);
  EXPECT_THROW(sample_family_points(fam, box, 1, rng, 200), GeomapError);
  box[0] = {0.5, 1.5};
  for (const auto& pt : sample_family_points(fam, box, 30, rng)) EXPECT_GE(std::abs(1.0 - pt[0]), 1e-6);
}

TEST(Family, EinsteinExactlyWhenConformallyFlat) {
  for (double C : {0.0, 0.5, -0.5})
    for (int n : {4, 5}) {
      FamilyConfig c = branch_config(C, n);
      c.fiber_scalar = cflat_fiber_scalar(c);
      EXPECT_THROW(build_family(c), ConformallyDegenerateError);
      c.cflat = CflatPolicy::allow;
      const GeodesicFamily flat = build_family(c);
      FamilyConfig v = c;
      v.fiber_scalar += 1.0;
      const GeodesicFamily generic = build_family(v);
      std::mt19937_64 rng(9);
      for (const auto& pt : sample_family_points(flat, default_family_box(n), 3, rng)) {
        EXPECT_EQ(classify(compute_frame(flat.source.product(), pt)).verdict, Verdict::einstein);
        EXPECT_EQ(classify(compute_frame(flat.image.product(), pt)).verdict, Verdict::einstein);
        EXPECT_TRUE(conformal_flatness_test(flat.source, pt).flat);
        EXPECT_TRUE(conformal_flatness_test(flat.image, pt).flat);
        for (const WarpedSpec* ws : {&generic.source, &generic.image}) {
          const PointFrame f = compute_frame(ws->product(), pt);
          const Classification cl = classify(f);
          EXPECT_EQ(cl.verdict, Verdict::roter);
          EXPECT_GE(min_rank_over(f, alpha_grid(f.scalar)), 2);
          EXPECT_FALSE(conformal_flatness_test(*ws, pt).flat);
        }
      }
    }
}

TEST(Family, PsiRicciIdentityUsesImageTraces) {
  const GeodesicFamily fam = build_family(branch_config(0.5, 4));
  std::mt19937_64 rng(21);
  for (const auto& pt : sample_family_points(fam, default_family_box(4), 5, rng)) {
    const PairPoint pp = evaluate_pair(fam.pair, pt);
    const RoterFit img = fit_roter(pp.image);
    ASSERT_TRUE(img.accepted());
    EXPECT_LE(verify_remark44(pp.source, pp.image, img, psi_field(pp)).residual, 1e-7);
    EXPECT_GT(verify_remark44(pp.source, pp.image, img, psi_field(pp, TraceMetric::source)).residual, 1e-4);
    RoterFit perturbed = img;
    perturbed.phi *= 1.01;
    EXPECT_GT(verify_remark44(pp.source, pp.image, perturbed, psi_field(pp)).residual, 1e-4);
  }
}

TEST(Family, PsiRicciIdentityRequiresAcceptedImageFit) {
  const GeodesicFamily fam = build_family(FamilyConfig{});
  const PairPoint pp = evaluate_pair(fam.pair, worked_point(4));
  RoterFit img = fit_roter(pp.image);
  img.status = FitStatus::not_in_uc;
  EXPECT_THROW(verify_remark44(pp.source, pp.image, img, psi_field(pp)), GeomapError);
}

TEST(BInvariant, InvariantPerBranch) {
  const auto c0 = remark41_invariant(0.0, 2.0, 1.0);
  EXPECT_NEAR(c0.mean, 4.0, 1e-12);
  EXPECT_LE(c0.residual, 1e-10);
  const auto cp = remark41_invariant(1.0, 1.0, 0.0);
  EXPECT_NEAR(cp.mean, 0.0, 1e-12);
  EXPECT_LE(cp.residual, 1e-10);
  const auto cm = remark41_invariant(-1.0, 1.0, 0.0);
  EXPECT_NEAR(cm.mean, 1.0, 1e-12);
  EXPECT_LE(cm.residual, 1e-10);
  for (double C : {2.0, -3.0, 0.0}) {
    const auto r = remark41_invariant(C, 0.7, -1.2, -2.0, 2.0, 40);
    EXPECT_LE(r.residual, 1e-10);
    EXPECT_NEAR(r.mean, b_invariant(C, 0.7, -1.2), 1e-10 * (1.0 + std::abs(r.mean)));
  }
}

TEST(BInvariant, BranchSolvesLinearOde) {
  const Expr t = Expr::variable(0, "t");
  for (double C : {0.8, -0.8, 0.0}) {
    const Expr B = make_B(C, 1.3, 0.4, t);
    for (double x : {-1.0, 0.2, 1.7}) {
      const std::vector<double> pt = {x};
      EXPECT_NEAR(eval(diff(diff(B, 0), 0), pt), C * eval(B, pt), 1e-12);
    }
  }
  EXPECT_EQ(b_branch(1.0), BBranch::exponential);
  EXPECT_EQ(b_branch(-1.0), BBranch::trigonometric);
  EXPECT_EQ(b_branch(0.0), BBranch::affine);
}

TEST(GaussCurvatureFactory, AgreesWithFamilyBase) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), xs(0.3, 1.5);
  const char* profiles[] = {"x", "x^2", "exp(x)", "sin(x)^2"};
  for (int trial = 0; trial < 10; ++trial) {
    const double C = coef(rng), D = coef(rng);
    for (const char* prof : profiles) {
      const Expr b = parse(prof, kX);
      const Expr a1 = gauss_curvature_metric(b, -4.0 * C, -D / 4.0);
      const Expr a2 = family_base_metric(b, C, D);
      for (int k = 0; k < 5; ++k) {
        const std::vector<double> pt = {xs(rng), 0.0};
        const double v1 = eval(a1, pt), v2 = eval(a2, pt);
        EXPECT_LE(std::abs(v1 - v2), 1e-12 * (1.0 + std::abs(v2)));
        const MetricSpec m = MetricSpec::diagonal({"x", "y"}, {a2, b});
        if (!m.admissible(pt) || std::abs(D * eval(b, pt) - 4 * C) < 1e-3) continue;
        EXPECT_NEAR(gauss_curvature(m, pt), -D / 4.0, 1e-9 * (1.0 + std::abs(v2)));
      }
    }
  }
}
