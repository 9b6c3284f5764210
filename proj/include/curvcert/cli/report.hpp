#pragma once

// JSON-lines report and text summary for a run.

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "curvcert/cli/runner.hpp"

namespace curvcert::cli {

inline constexpr const char* kToolVersion = "1.0.0";

inline nlohmann::ordered_json to_json(const PointRecord& p) {
  nlohmann::ordered_json j;
  j["record"] = "point";
  j["manifold"] = p.manifold;
  j["point_index"] = p.point_index;
  j["point"] = p.point;
  j["roles"] = p.roles;
  return j;
}

inline nlohmann::ordered_json to_json(const CheckRecord& c) {
  nlohmann::ordered_json j;
  j["record"] = "check";
  j["manifold"] = c.manifold;
  if (c.point_index >= 0) {
    j["point_index"] = c.point_index;
  } else {
    j["point_index"] = nullptr;
  }
  j["role"] = c.role;
  j["suite"] = c.suite;
  j["check"] = c.check;
  j["residual"] = c.residual;
  j["threshold"] = c.threshold;
  j["pass"] = c.pass;
  j["expected_pass"] = c.expected_pass;
  j["ok"] = c.ok();
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline nlohmann::ordered_json summary_json(const RunResult& r, const std::string& timestamp = utc_timestamp()) {
  std::size_t passed = 0, expected_failures = 0, unexpected = 0;
  for (const auto& c : r.checks) {
    if (c.pass) ++passed;
    if (!c.pass && !c.expected_pass) ++expected_failures;
    if (!c.ok()) ++unexpected;
  }
  nlohmann::ordered_json j;
  j["record"] = "summary";
  j["manifest"] = r.manifest.name;
  j["source"] = r.manifest.path;
  j["suites"] = r.manifest.suites;
  j["seed"] = r.manifest.seed;
  j["points"] = r.manifest.points;
  j["tol_scale"] = r.tol_scale;
  j["manifolds"] = r.manifest.manifolds.size();
  j["sample_points"] = r.points.size();
  j["checks"] = r.checks.size();
  j["passed"] = passed;
  j["failed"] = r.checks.size() - passed;
  j["expected_failures"] = expected_failures;
  j["unexpected"] = unexpected;
  j["ok"] = unexpected == 0;
  nlohmann::ordered_json env;
  env["tool"] = "curvcert";
  env["version"] = kToolVersion;
#if defined(__clang__)
  env["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  env["compiler"] = std::string("gcc ") + __VERSION__;
#else
  env["compiler"] = "unknown";
#endif
  env["timestamp"] = timestamp;
  j["environment"] = env;
  return j;
}

/// One JSON object per line: points and checks in run order, then the summary.
inline void write_jsonl(std::ostream& os, const RunResult& r, const std::string& timestamp = utc_timestamp()) {
  std::size_t ci = 0;
  auto flush_checks = [&](const std::string& manifold, int point_index) {
    while (ci < r.checks.size() && r.checks[ci].manifold == manifold && r.checks[ci].point_index == point_index)
      os << to_json(r.checks[ci++]).dump() << '\n';
  };
  for (const auto& p : r.points) {
    os << to_json(p).dump() << '\n';
    flush_checks(p.manifold, p.point_index);
  }
  for (; ci < r.checks.size(); ++ci) os << to_json(r.checks[ci]).dump() << '\n';
  os << summary_json(r, timestamp).dump() << '\n';
}

inline void write_text_summary(std::ostream& os, const RunResult& r) {
  struct Tally {
    std::size_t total = 0, passed = 0, expected_failures = 0, unexpected = 0;
  };
  std::map<std::string, Tally> per;
  std::vector<std::string> order;
  for (const auto& m : r.manifest.manifolds) order.push_back(m.name);
  for (const auto& c : r.checks) {
    Tally& t = per[c.manifold];
    ++t.total;
    if (c.pass) ++t.passed;
    if (!c.pass && !c.expected_pass) ++t.expected_failures;
    if (!c.ok()) ++t.unexpected;
  }
  os << "manifest " << r.manifest.name << "  seed " << r.manifest.seed << "  suites";
  for (const auto& s : r.manifest.suites) os << ' ' << s;
  os << '\n';
  for (const auto& name : order) {
    const Tally& t = per[name];
    os << "  " << (t.unexpected == 0 ? "ok  " : "FAIL") << "  " << std::left << std::setw(28) << name << std::right
       << " checks " << t.total << "  passed " << t.passed << "  designed failures " << t.expected_failures
       << "  unexpected " << t.unexpected << '\n';
  }
  for (const auto& c : r.checks) {
    if (c.ok()) continue;
    os << "  unexpected: " << c.manifold << " point " << c.point_index << " [" << c.role << "] " << c.check
       << "  residual " << c.residual << "  threshold " << c.threshold
       << (c.expected_pass ? "" : "  (designed to fail but passed)");
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  const std::size_t ok = r.count_ok();
  os << (ok == r.checks.size() ? "PASS" : "FAIL") << ": " << ok << "/" << r.checks.size() << " checks as expected\n";
}

}  // namespace curvcert::cli
