#pragma once

// Manifest schema: a JSON document naming manifolds, sampling boxes, suites,
// tolerances, expected verdicts and negative-control perturbations.

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace curvcert::cli {

/// Any schema violation. The CLI maps it to exit code 2.
class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> s = {"geometry-symmetries", "theorem21", "warped-diagnostics", "geodesic"};
  return s;
}

struct Tolerances {
  double exact = 1e-8;        // identities between exactly differentiated quantities
  double geodesic = 1e-9;     // mapping relations and barred closed forms
  double fitted = 1e-7;       // identities compounding fitted scalars
  double smoke = 1e-4;        // finite-difference cross-checks
  double closed_form = 1e-7;  // fitted scalars against supplied closed forms
  double constancy = 1e-8;    // spread of L_R across points

  void scale(double s) {
    for (double* t : {&exact, &geodesic, &fitted, &smoke, &closed_form, &constancy}) *t *= s;
  }
};

struct ConstraintDef {
  std::string expr;
  std::string kind = "nonzero";
  std::string label;
};

/// Explicit chart metric: full matrix or diagonal, expressions as text.
struct MetricDef {
  std::vector<std::string> coordinates;
  std::vector<std::vector<std::string>> components;  // n×n; empty entries mean 0
  std::vector<ConstraintDef> constraints;
  std::string signature;
  // constant-curvature model instead of explicit components
  std::optional<int> cc_dim;
  double cc_scalar = 0.0;
};

struct FamilyDef {
  double C = 0.0, D = 4.0, C1 = 2.0, C2 = 1.0;
  std::string b = "x";
  int dim = 4;
  std::optional<double> fiber_scalar;  // unset: forced onto the conformally flat value
  double map_scale = 2.0, map_shift = 1.0;
  bool allow_cflat = false;
};

struct PairDef {
  std::string a, b;
  double map_scale = 1.0, map_shift = 1.0;
};

struct Expectation {
  std::map<std::string, std::string> verdict;  // role ("*" for all) → verdict
  std::set<std::string> fail;                  // checks designed to fail
  std::optional<double> gauss_curvature;
  std::optional<bool> ricci_pseudosymmetric;
  std::optional<bool> conformally_flat;
};

struct Perturbation {
  double ricci_scale = 1.0;
  double psi_scale = 1.0;
  double warp_bar_scale = 1.0;
  double phi_bar_scale = 1.0;

  bool any() const { return ricci_scale != 1.0 || psi_scale != 1.0 || warp_bar_scale != 1.0 || phi_bar_scale != 1.0; }
};

struct ManifoldDef {
  std::string name;
  std::string kind;  // metric | warped | family | geodesic-pair
  std::map<std::string, double> constants;
  std::map<std::string, std::pair<double, double>> box;
  std::vector<std::vector<double>> at;
  std::optional<int> points;
  MetricDef metric;  // kind metric
  MetricDef base, fiber;
  std::string warp;
  FamilyDef family;
  PairDef pair;
  std::map<std::string, std::string> closed_form;  // phi/mu/eta expressions
  Expectation expect;
  Perturbation perturb;
};

struct Manifest {
  std::string name;
  std::string description;
  std::string path;
  unsigned long long seed = 1;
  int points = 5;
  std::vector<std::string> suites;
  Tolerances tol;
  std::vector<ManifoldDef> manifolds;
};

namespace detail {

using nlohmann::json;

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ManifestError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw ManifestError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ManifestError(where + "." + key + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

inline std::string expr_text(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    return os.str();
  }
  throw ManifestError(where + ": expected an expression string or number");
}

inline MetricDef parse_metric(const json& j, const std::string& where) {
  MetricDef m;
  if (j.contains("constant_curvature")) {
    allow_keys(j, where, {"constant_curvature"});
    const json& c = j.at("constant_curvature");
    allow_keys(c, where + ".constant_curvature", {"dim", "scalar"});
    m.cc_dim = get<int>(c, "dim", where);
    m.cc_scalar = get<double>(c, "scalar", where);
    if (*m.cc_dim < 2) throw ManifestError(where + ": constant curvature dimension must be >= 2");
    return m;
  }
  allow_keys(j, where, {"coordinates", "metric", "diagonal", "constraints", "signature"});
  m.coordinates = get<std::vector<std::string>>(j, "coordinates", where);
  const int n = static_cast<int>(m.coordinates.size());
  if (n == 0) throw ManifestError(where + ": no coordinates");
  if (j.contains("metric") == j.contains("diagonal"))
    throw ManifestError(where + ": give exactly one of 'metric' or 'diagonal'");
  m.components.assign(n, std::vector<std::string>(n, "0"));
  if (j.contains("diagonal")) {
    const json& d = j.at("diagonal");
    if (!d.is_array() || static_cast<int>(d.size()) != n) throw ManifestError(where + ".diagonal: need one entry per coordinate");
    for (int i = 0; i < n; ++i) m.components[i][i] = expr_text(d[i], where + ".diagonal");
  } else {
    const json& g = j.at("metric");
    if (!g.is_array() || static_cast<int>(g.size()) != n) throw ManifestError(where + ".metric: need an n×n array");
    for (int i = 0; i < n; ++i) {
      if (!g[i].is_array() || static_cast<int>(g[i].size()) != n) throw ManifestError(where + ".metric: need an n×n array");
      for (int k = 0; k < n; ++k) m.components[i][k] = expr_text(g[i][k], where + ".metric");
    }
  }
  if (j.contains("constraints")) {
    for (const json& c : j.at("constraints")) {
      allow_keys(c, where + ".constraints", {"expr", "kind", "label"});
      ConstraintDef cd{get<std::string>(c, "expr", where), get_or<std::string>(c, "kind", "nonzero", where),
                       get_or<std::string>(c, "label", "", where)};
      if (cd.kind != "nonzero" && cd.kind != "positive")
        throw ManifestError(where + ".constraints: kind must be 'nonzero' or 'positive'");
      m.constraints.push_back(cd);
    }
  }
  m.signature = get_or<std::string>(j, "signature", "", where);
  return m;
}

inline Expectation parse_expect(const json& j, const std::string& where) {
  allow_keys(j, where, {"verdict", "fail", "gauss_curvature", "ricci_pseudosymmetric", "conformally_flat"});
  static const std::set<std::string> verdicts = {"EINSTEIN", "QUASI_EINSTEIN", "ROTER", "OTHER"};
  Expectation e;
  if (j.contains("verdict")) {
    const json& v = j.at("verdict");
    if (v.is_string()) {
      e.verdict["*"] = v.get<std::string>();
    } else if (v.is_object()) {
      for (const auto& [role, val] : v.items()) e.verdict[role] = expr_text(val, where + ".verdict");
    } else {
      throw ManifestError(where + ".verdict: expected a string or an object");
    }
    for (const auto& [role, val] : e.verdict)
      if (!verdicts.count(val)) throw ManifestError(where + ".verdict: unknown verdict '" + val + "'");
  }
  if (j.contains("fail")) {
    for (const auto& s : get<std::vector<std::string>>(j, "fail", where)) e.fail.insert(s);
  }
  if (j.contains("gauss_curvature")) e.gauss_curvature = get<double>(j, "gauss_curvature", where);
  if (j.contains("ricci_pseudosymmetric")) e.ricci_pseudosymmetric = get<bool>(j, "ricci_pseudosymmetric", where);
  if (j.contains("conformally_flat")) e.conformally_flat = get<bool>(j, "conformally_flat", where);
  return e;
}

inline ManifoldDef parse_manifold(const json& j, const std::string& where) {
  ManifoldDef m;
  if (!j.is_object()) throw ManifestError(where + ": expected an object");
  m.kind = get<std::string>(j, "kind", where);
  const char* common[] = {"name", "kind", "constants", "box", "at", "points", "expect", "perturb"};
  std::vector<const char*> allowed(std::begin(common), std::end(common));
  if (m.kind == "metric") {
    for (const char* k : {"coordinates", "metric", "diagonal", "constraints", "signature", "roter_closed_form"})
      allowed.push_back(k);
  } else if (m.kind == "warped") {
    for (const char* k : {"base", "fiber", "warp"}) allowed.push_back(k);
  } else if (m.kind == "family") {
    for (const char* k : {"C", "D", "C1", "C2", "b", "dim", "fiber_scalar", "map_scale", "map_shift", "cflat"})
      allowed.push_back(k);
  } else if (m.kind == "geodesic-pair") {
    for (const char* k : {"a", "b", "map_scale", "map_shift"}) allowed.push_back(k);
  } else {
    throw ManifestError(where + ": unknown manifold kind '" + m.kind + "'");
  }
  for (const auto& [k, v] : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw ManifestError(where + ": unknown key '" + k + "' for kind " + m.kind);

  m.name = get<std::string>(j, "name", where);
  const std::string w = where + "(" + m.name + ")";
  if (j.contains("constants")) m.constants = get<std::map<std::string, double>>(j, "constants", w);
  if (j.contains("box")) {
    for (const auto& [k, v] : j.at("box").items()) {
      const auto r = v.get<std::vector<double>>();
      if (r.size() != 2 || !(r[0] <= r[1])) throw ManifestError(w + ".box." + k + ": expected [lo, hi]");
      m.box[k] = {r[0], r[1]};
    }
  }
  if (j.contains("at")) m.at = get<std::vector<std::vector<double>>>(j, "at", w);
  if (j.contains("points")) {
    m.points = get<int>(j, "points", w);
    if (*m.points < 1) throw ManifestError(w + ".points: must be positive");
  }
  if (j.contains("expect")) m.expect = parse_expect(j.at("expect"), w + ".expect");
  if (j.contains("perturb")) {
    const json& p = j.at("perturb");
    allow_keys(p, w + ".perturb", {"ricci_scale", "psi_scale", "warp_bar_scale", "phi_bar_scale"});
    m.perturb.ricci_scale = get_or<double>(p, "ricci_scale", 1.0, w);
    m.perturb.psi_scale = get_or<double>(p, "psi_scale", 1.0, w);
    m.perturb.warp_bar_scale = get_or<double>(p, "warp_bar_scale", 1.0, w);
    m.perturb.phi_bar_scale = get_or<double>(p, "phi_bar_scale", 1.0, w);
  }

  if (m.kind == "metric") {
    json mj = json::object();
    for (const char* k : {"coordinates", "metric", "diagonal", "constraints", "signature"})
      if (j.contains(k)) mj[k] = j.at(k);
    m.metric = parse_metric(mj, w);
    if (j.contains("roter_closed_form")) {
      const json& c = j.at("roter_closed_form");
      allow_keys(c, w + ".roter_closed_form", {"phi", "mu", "eta"});
      for (const auto& [k, v] : c.items()) m.closed_form[k] = expr_text(v, w + ".roter_closed_form");
    }
  } else if (m.kind == "warped") {
    m.base = parse_metric(get<json>(j, "base", w), w + ".base");
    if (m.base.cc_dim) throw ManifestError(w + ".base: base must be an explicit metric");
    m.fiber = parse_metric(get<json>(j, "fiber", w), w + ".fiber");
    m.warp = expr_text(get<json>(j, "warp", w), w + ".warp");
  } else if (m.kind == "family") {
    FamilyDef& f = m.family;
    f.C = get_or<double>(j, "C", f.C, w);
    f.D = get_or<double>(j, "D", f.D, w);
    f.C1 = get_or<double>(j, "C1", f.C1, w);
    f.C2 = get_or<double>(j, "C2", f.C2, w);
    f.b = get_or<std::string>(j, "b", f.b, w);
    f.dim = get_or<int>(j, "dim", f.dim, w);
    if (j.contains("fiber_scalar")) {
      const json& fs = j.at("fiber_scalar");
      if (fs.is_string()) {
        if (fs.get<std::string>() != "cflat") throw ManifestError(w + ".fiber_scalar: expected a number or \"cflat\"");
      } else {
        f.fiber_scalar = get<double>(j, "fiber_scalar", w);
      }
    } else {
      f.fiber_scalar = 2.0;
    }
    f.map_scale = get_or<double>(j, "map_scale", f.map_scale, w);
    f.map_shift = get_or<double>(j, "map_shift", f.map_shift, w);
    const std::string cf = get_or<std::string>(j, "cflat", "reject", w);
    if (cf != "reject" && cf != "allow") throw ManifestError(w + ".cflat: expected 'reject' or 'allow'");
    f.allow_cflat = cf == "allow";
  } else {
    m.pair.a = expr_text(get<json>(j, "a", w), w + ".a");
    m.pair.b = expr_text(get<json>(j, "b", w), w + ".b");
    m.pair.map_scale = get_or<double>(j, "map_scale", 1.0, w);
    m.pair.map_shift = get_or<double>(j, "map_shift", 1.0, w);
  }
  return m;
}

inline std::vector<std::string> parse_suites(const json& j, const std::string& where) {
  std::vector<std::string> raw;
  if (j.is_string()) {
    raw.push_back(j.get<std::string>());
  } else if (j.is_array()) {
    raw = j.get<std::vector<std::string>>();
  } else {
    throw ManifestError(where + ": expected a suite name or a list of names");
  }
  return raw;
}

}  // namespace detail

/// Expands "all" and rejects unknown names.
inline std::vector<std::string> resolve_suites(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& s : names) {
    if (s == "all") {
      out = known_suites();
      return out;
    }
    if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
      throw ManifestError("unknown suite '" + s + "'");
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) throw ManifestError("no suites selected");
  return out;
}

inline Manifest parse_manifest(const nlohmann::json& j, const std::string& path = {}) {
  using namespace detail;
  allow_keys(j, "manifest", {"name", "description", "seed", "points", "suite", "tolerances", "manifolds"});
  Manifest m;
  m.path = path;
  m.name = get<std::string>(j, "name", "manifest");
  m.description = get_or<std::string>(j, "description", "", "manifest");
  m.seed = get_or<unsigned long long>(j, "seed", 1ULL, "manifest");
  m.points = get_or<int>(j, "points", 5, "manifest");
  if (m.points < 1) throw ManifestError("manifest.points: must be positive");
  m.suites = resolve_suites(j.contains("suite") ? parse_suites(j.at("suite"), "manifest.suite") : std::vector<std::string>{"all"});
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    allow_keys(t, "manifest.tolerances", {"exact", "geodesic", "fitted", "smoke", "closed_form", "constancy"});
    Tolerances& tol = m.tol;
    tol.exact = get_or<double>(t, "exact", tol.exact, "tolerances");
    tol.geodesic = get_or<double>(t, "geodesic", tol.geodesic, "tolerances");
    tol.fitted = get_or<double>(t, "fitted", tol.fitted, "tolerances");
    tol.smoke = get_or<double>(t, "smoke", tol.smoke, "tolerances");
    tol.closed_form = get_or<double>(t, "closed_form", tol.closed_form, "tolerances");
    tol.constancy = get_or<double>(t, "constancy", tol.constancy, "tolerances");
  }
  const json& ms = get<json>(j, "manifolds", "manifest");
  if (!ms.is_array() || ms.empty()) throw ManifestError("manifest.manifolds: expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    m.manifolds.push_back(parse_manifold(ms[i], "manifolds[" + std::to_string(i) + "]"));
    if (!names.insert(m.manifolds.back().name).second)
      throw ManifestError("duplicate manifold name '" + m.manifolds.back().name + "'");
  }
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.string());
}

}  // namespace curvcert::cli
