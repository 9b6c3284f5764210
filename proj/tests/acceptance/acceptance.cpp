// Acceptance runner: one PASS/FAIL line per criterion, with the worst residual
// and the runtime. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "curvcert/cli/manifest.hpp"
#include "curvcert/cli/runner.hpp"
#include "curvcert/curvops.hpp"
#include "curvcert/geomap.hpp"
#include "curvcert/geometry.hpp"
#include "curvcert/roter.hpp"
#include "curvcert/warped.hpp"
#include "random_metrics.hpp"

using namespace curvcert;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  double worst = 0.0;
  std::string note;
  std::vector<std::string> info;

  void record(double residual, double tol) {
    worst = std::max(worst, std::isnan(residual) ? INFINITY : residual);
    if (!(residual <= tol)) pass = false;
  }
  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      if (note.empty()) note = why;
    }
  }
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body, double budget_s = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = body();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0.0 && secs > budget_s) o.require(false, "runtime budget exceeded");
  if (!o.pass) ++failures;
  std::printf("%s  criterion %d: %s  worst residual %.3e  runtime %.2fs%s%s\n", o.pass ? "PASS" : "FAIL", id, title,
              o.worst, secs, o.note.empty() ? "" : "  ", o.note.c_str());
  for (const auto& line : o.info) std::printf("      info: %s\n", line.c_str());
}

MetricSpec rn_metric(double M, double Q, double L) {
  const Bindings c{{"M", M}, {"Q", Q}, {"L", L}};
  const std::vector<std::string> xs = {"t", "r", "th", "ph"};
  auto p = [&](const char* s) { return parse(s, SymbolTable{xs, c.names()}); };
  const Expr h = p("1 - 2*M/r + Q^2/r^2 - L*r^2/3");
  return MetricSpec::diagonal(xs, {-h, 1.0 / h, p("r^2"), p("r^2*sin(th)^2")}, c);
}

struct RnClosedForm {
  double phi, mu, eta;
};

RnClosedForm rn_closed_form(double M, double Q, double L, double r) {
  const double Q2 = Q * Q, Q4 = Q2 * Q2, r4 = std::pow(r, 4);
  return {1.5 * (Q2 - M * r) * r4 / Q4, 0.5 * (Q4 + 3 * Q2 * L * r4 - 3 * L * M * r4 * r) / Q4,
          (3 * Q4 * Q2 + 4 * Q4 * L * r4 - 3 * Q4 * M * r + 9 * Q2 * L * L * r4 * r4 - 9 * L * L * M * r4 * r4 * r) /
              (12 * r4 * Q4)};
}

double rel(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

FamilyConfig branch(double C, int n) {
  FamilyConfig c;
  c.C = C;
  c.dim = n;
  if (C != 0.0) {
    c.C1 = 1.0;
    c.C2 = 0.3;
  }
  return c;
}

std::vector<fs::path> corpus() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(CURVCERT_CORPUS_DIR))
    if (e.path().extension() == ".manifest") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main() {
  std::printf("curvcert acceptance\n");

  report(1, "Gauss curvature of the family base is -D/4", [] {
    Outcome o;
    const std::vector<std::string> xy = {"x", "y"};
    struct Profile {
      const char* b;
      double lo, hi;
    };
    const Profile profiles[] = {{"x", 0.3, 1.8}, {"x^2", 0.3, 1.5}, {"exp(x)", -0.5, 0.8}, {"sin(x)^2", 0.3, 1.3}};
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uc(-1.0, 1.0), ud(0.5, 5.0), sign(-1.0, 1.0);
    int instances = 0;
    for (int k = 0; k < 10; ++k) {
      const double C = uc(rng), D = (sign(rng) < 0 ? -1.0 : 1.0) * ud(rng);
      for (const auto& pr : profiles) {
        const Expr b = parse(pr.b, xy);
        const MetricSpec m = MetricSpec::diagonal(xy, {family_base_metric(b, C, D), b});
        std::uniform_real_distribution<double> ux(pr.lo, pr.hi);
        int got = 0;
        for (int tries = 0; got < 20 && tries < 2000; ++tries) {
          const std::vector<double> pt = {ux(rng), sign(rng)};
          const double bv = eval(b, pt), db = eval(diff(b, 0), pt);
          if (std::abs(D * bv - 4 * C) < 1e-3 || std::abs(db) < 1e-3 || !m.admissible(pt)) continue;
          o.record(std::abs(gauss_curvature(m, pt) + D / 4.0), 1e-9);
          ++got;
        }
        o.require(got == 20, std::string("too few admissible points for b = ") + pr.b);
        ++instances;
      }
    }
    o.info.push_back(std::to_string(instances) + " (C, D, b) instances x 20 points");
    return o;
  }, 5.0);

  report(2, "RN and RN-(a)dS fitted phi, mu, eta match the closed forms", [] {
    Outcome o;
    struct Case {
      double M, Q, L;
      std::vector<double> radii;
    };
    const Case cases[] = {{1, 1, 0, {1.5, 2, 3, 4, 5}}, {1, 0.5, 0.1, {0.8, 1.2, 1.5, 2, 2.5}}, {2, 1, -0.05, {0.8, 1.2, 1.5, 2, 3}}};
    double mapped = 0.0;
    for (const auto& c : cases) {
      const MetricSpec m = rn_metric(c.M, c.Q, c.L);
      for (double r : c.radii) {
        const RoterFit fit = fit_roter(compute_frame(m, std::vector<double>{0.0, r, 1.0, 0.3}));
        o.require(fit.accepted(), "fit not accepted");
        const RnClosedForm cf = rn_closed_form(c.M, c.Q, c.L, r);
        o.record(rel(fit.phi, cf.phi), 1e-7);
        o.record(rel(fit.mu, cf.mu), 1e-7);
        o.record(rel(fit.eta, cf.eta), 1e-7);
        mapped = std::max({mapped, rel(-fit.phi, cf.phi), rel(fit.mu, cf.mu), rel(-fit.eta / 2, cf.eta)});
        if (c.M == 1 && c.Q == 1 && c.L == 0 && r == 3) {
          o.record(rel(fit.phi, -243.0), 1e-7);
          o.info.push_back("M=Q=1, Lambda=0, r=3: fitted phi = " + detail::format_number(fit.phi) +
                           ", mu = " + detail::format_number(fit.mu) + ", eta = " + detail::format_number(fit.eta) +
                           "; closed form phi = -243");
        }
      }
    }
    o.info.push_back("fitted (phi, mu, eta) = (-phi*, mu*, -2 eta*) against the closed forms (phi*, mu*, eta*): "
                     "worst relative residual " + detail::format_number(mapped));
    o.info.push_back("sign of phi and eta differs from the closed forms under the curvature conventions in use; "
                     "see README");
    return o;
  });

  report(3, "curvature identities at every Roter point of the corpus", [] {
    Outcome o;
    const std::set<std::string> names = {
        "S2 = a1 S + a2 g", "R.R = L_R Q(g,R)", "R.C = L_R Q(g,C)", "R.S = L_R Q(g,S)",
        "R.R = Q(S,R) + L Q(g,C)", "C.C = L_C Q(g,C)", "C.R = L_C Q(g,R)", "C.S = L_C Q(g,S)",
        "R.C - C.R = c1 Q(g,R) + c2 Q(S,G)", "C.R - R.C = Q(S,C) - k/(n-1) Q(g,C)", "L_R = R.R / Q(g,R)"};
    std::size_t points = 0, checks = 0, controls = 0;
    for (const auto& p : corpus()) {
      cli::RunOptions opt;
      opt.suites = std::vector<std::string>{"theorem21"};
      const auto r = cli::run_manifest(cli::load_manifest(p), opt);
      for (const auto& pr : r.points)
        for (const auto& [role, info] : pr.roles.items())
          if (info.contains("verdict") && info["verdict"] == "ROTER") ++points;
      for (const auto& c : r.checks) {
        if (!names.count(c.check)) continue;
        if (!c.expected_pass) {
          ++controls;
          o.require(!c.pass, "negative control passed: " + c.manifold + " " + c.check);
          continue;
        }
        ++checks;
        o.record(c.residual, 1e-8);
      }
    }
    o.require(points > 0, "no Roter points");
    o.info.push_back(std::to_string(points) + " Roter-certified points, " + std::to_string(checks) +
                     " identity checks; " + std::to_string(controls) + " perturbed-Ricci controls failed as designed");
    return o;
  });

  report(4, "geodesic families on all branches, n = 4, 5, 6", [] {
    Outcome o;
    const std::set<std::string> mapping = {"geodesic compatibility", "christoffel shift", "ricci shift"};
    for (double C : {0.5, -0.5, 0.0})
      for (int n : {4, 5, 6}) {
        const GeodesicFamily fam = build_family(branch(C, n));
        std::mt19937_64 rng(static_cast<unsigned>(1000 + 10 * n + (C > 0 ? 1 : C < 0 ? 2 : 3)));
        std::vector<double> lr, lrb;
        for (const auto& pt : sample_family_points(fam, default_family_box(n), 20, rng)) {
          const PairPoint pp = evaluate_pair(fam.pair, pt);
          for (const auto& c : family_point_checks(fam, pp, 1e-9))
            if (mapping.count(c.name)) o.record(c.residual, 1e-9);
          const auto [r4, r5] = verify_r4_r5(fam, pt);
          o.record(r4.residual, 1e-9);
          o.record(r5.residual, 1e-9);
          const RoterFit src = fit_roter(pp.source), img = fit_roter(pp.image);
          o.require(src.accepted() && img.accepted(), "Roter fit not accepted");
          if (!src.accepted() || !img.accepted()) continue;
          for (const auto& c : verify_prop42(fam, pp, src, img, 1e-8)) o.record(c.residual, 1e-8);
          lr.push_back(src.L_R);
          lrb.push_back(img.L_R);
        }
        auto stdev = [](const std::vector<double>& v) {
          double m = 0.0, s = 0.0;
          for (double x : v) m += x;
          m /= v.size();
          for (double x : v) s += (x - m) * (x - m);
          return std::sqrt(s / v.size());
        };
        o.require(lr.size() == 20, "fewer than 20 points");
        o.record(stdev(lr), 1e-8);
        o.record(stdev(lrb), 1e-8);
        o.record(std::abs(lr.front() - fam.L_R_closed()), 1e-8);
        o.record(std::abs(lrb.front() - fam.L_R_bar_closed()), 1e-8);
      }
    o.info.push_back("9 families x 20 points");
    return o;
  }, 60.0);

  report(5, "Einstein exactly when conformally flat", [] {
    Outcome o;
    for (double C : {0.5, -0.5, 0.0})
      for (int n : {4, 5, 6}) {
        FamilyConfig flat_cfg = branch(C, n);
        flat_cfg.fiber_scalar = cflat_fiber_scalar(flat_cfg);
        flat_cfg.cflat = CflatPolicy::allow;
        const FamilyConfig& flat = flat_cfg;
        const FamilyConfig generic = branch(C, n);
        for (const FamilyConfig* cfg : {&flat, &generic}) {
          const bool cf = cfg == &flat;
          const GeodesicFamily fam = build_family(*cfg);
          std::mt19937_64 rng(static_cast<unsigned>(77 + n));
          for (const auto& pt : sample_family_points(fam, default_family_box(n), 5, rng)) {
            for (const WarpedSpec* ws : {&fam.source, &fam.image}) {
              const PointFrame f = compute_frame(ws->product(), pt);
              const Classification c = classify(f);
              if (cf) {
                o.require(c.verdict == Verdict::einstein, "conformally flat member not Einstein");
                o.record(std::abs(*diagnostics(*ws, pt).rho0), 1e-9);
              } else {
                o.require(c.verdict == Verdict::roter, "generic member not Roter");
                const int rank = min_rank_over(f, alpha_grid(f.scalar, {c.fit.alpha1, f.scalar / n}));
                o.require(rank >= 2, "rank(S - alpha g) < 2");
              }
            }
          }
        }
      }
    return o;
  });

  report(6, "property suites on 1000 random metrics; negative controls", [] {
    Outcome o;
    std::mt19937_64 rng(6);
    for (int k = 0; k < 1000; ++k) {
      const int n = 2 + k % 4;
      const MetricSpec m = testing_support::random_metric(rng, n);
      const auto pt = testing_support::random_point(rng, n);
      const PointFrame f = compute_frame(m, pt);
      const double scale = 1.0 + f.riemann.max_abs();
      o.record(symmetry_defect(f.riemann) / scale, 1e-10);
      if (f.weyl_defined) o.record(symmetry_defect(f.weyl) / scale, 1e-10);
      o.record(symmetry_defect(f.ricci) / scale, 1e-10);
      const Tensor G = metric_g_tensor(f.g);
      o.record(relative_difference(kulkarni_nomizu(f.g, f.g), 2.0 * G), 1e-12);
      o.record(tachibana(f.g, G).max_abs() / (1.0 + G.max_abs()), 1e-12);
      o.record(covariant_derivative_02(f, metric_components(m)).max_abs() / (1.0 + f.g.max_abs()), 1e-10);
      o.record(cli::detail::christoffel_fd_defect(m, f), 1e-4);
      // derivative oracle on the metric components themselves
      const double h = 1e-5;
      for (int kk = 0; kk < n; ++kk) {
        std::vector<double> p = pt, q = pt;
        p[kk] += h;
        q[kk] -= h;
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) {
            const double fd = (eval(m.bound_component(i, j), p) - eval(m.bound_component(i, j), q)) / (2 * h);
            o.record(std::abs(fd - f.dg(kk, i, j)), 1e-4);
          }
      }
    }
    const auto r = cli::run_manifest(cli::load_manifest(fs::path(CURVCERT_CORPUS_DIR) / "negative_controls.manifest"));
    std::size_t designed = 0;
    for (const auto& c : r.checks)
      if (!c.expected_pass) {
        ++designed;
        o.require(!c.pass, "negative control passed: " + c.manifold + " " + c.check);
      }
    o.require(r.ok(), "negative-control manifest has unexpected outcomes");
    o.require(designed > 0, "no designated failures");
    o.info.push_back("negative controls: " + std::to_string(designed) + " designated checks failed as designed");
    return o;
  });

  report(7, "psi-ricci trace identity on 3 family instances; phi-bar perturbation detected", [] {
    Outcome o;
    struct Instance {
      double C;
      int n;
    };
    double weakest = INFINITY;
    for (const Instance in : {Instance{0.0, 4}, Instance{0.5, 5}, Instance{-0.5, 6}}) {
      const GeodesicFamily fam = build_family(branch(in.C, in.n));
      std::vector<double> pt(in.n, 0.1);
      pt[0] = 1.2;
      pt[1] = 0.2;
      const PairPoint pp = evaluate_pair(fam.pair, pt);
      const RoterFit img = fit_roter(pp.image);
      o.require(img.accepted(), "image fit not accepted");
      if (!img.accepted()) continue;
      o.record(verify_remark44(pp.source, pp.image, img, psi_field(pp)).residual, 1e-7);
      RoterFit bumped = img;
      bumped.phi *= 1.01;
      const double control = verify_remark44(pp.source, pp.image, bumped, psi_field(pp)).residual;
      weakest = std::min(weakest, control);
      o.require(control > 1e-4, "perturbation not detected");
    }
    o.info.push_back("smallest perturbed residual " + detail::format_number(weakest) + " (must exceed 1e-4)");
    return o;
  });

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
