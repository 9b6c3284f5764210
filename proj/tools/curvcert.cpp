// curvcert: batch verification front-end.
//
//   curvcert run <manifest|corpus-name> [--suite S] [--points N] [--seed K] [--out DIR] [--tol-scale X] [--jobs J]
//   curvcert list
//   curvcert describe <corpus-name>
//
// Exit codes: 0 every check behaved as expected, 1 some check did not,
// 2 manifest or usage error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "curvcert/cli/manifest.hpp"
#include "curvcert/cli/report.hpp"
#include "curvcert/cli/runner.hpp"
#include "curvcert/geomap.hpp"

namespace fs = std::filesystem;
using namespace curvcert::cli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitChecks = 1;
constexpr int kExitSchema = 2;

fs::path corpus_dir() {
  if (const char* env = std::getenv("CURVCERT_CORPUS_DIR")) return env;
  return CURVCERT_CORPUS_DIR;
}

std::vector<fs::path> corpus_files() {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(corpus_dir(), ec))
    if (e.path().extension() == ".manifest") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

fs::path resolve_manifest(const std::string& arg) {
  if (fs::is_regular_file(arg)) return arg;
  const fs::path p = corpus_dir() / (arg + ".manifest");
  if (fs::is_regular_file(p)) return p;
  throw ManifestError("no manifest file or corpus entry named '" + arg + "'");
}

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CURVCERT_OUT_DIR")) return env;
  return "curvcert-reports";
}

int cmd_run(const std::string& target, const RunOptions& opt, const std::string& out_flag) {
  const Manifest m = load_manifest(resolve_manifest(target));
  const RunResult r = run_manifest(m, opt);
  const fs::path dir = output_dir(out_flag);
  fs::create_directories(dir);
  const fs::path jsonl = dir / (r.manifest.name + ".jsonl");
  const fs::path text = dir / (r.manifest.name + ".txt");
  {
    std::ofstream os(jsonl);
    write_jsonl(os, r);
  }
  {
    std::ofstream os(text);
    write_text_summary(os, r);
  }
  write_text_summary(std::cout, r);
  std::cout << "report: " << jsonl.string() << '\n';
  return r.ok() ? kExitOk : kExitChecks;
}

int cmd_list() {
  for (const auto& p : corpus_files()) {
    std::string description;
    try {
      description = load_manifest(p).description;
    } catch (const ManifestError& e) {
      description = std::string("(invalid: ") + e.what() + ")";
    }
    std::cout << p.stem().string() << "  " << description << '\n';
  }
  return kExitOk;
}

int cmd_describe(const std::string& name) {
  const Manifest m = load_manifest(resolve_manifest(name));
  std::cout << m.name << ": " << m.description << '\n';
  std::cout << "seed " << m.seed << ", " << m.points << " points per manifold, suites:";
  for (const auto& s : m.suites) std::cout << ' ' << s;
  std::cout << '\n';
  for (const auto& d : m.manifolds) {
    std::cout << "  " << d.name << " (" << d.kind << ")";
    for (const auto& [role, v] : d.expect.verdict) std::cout << "  " << role << ": " << v;
    if (d.expect.conformally_flat) std::cout << "  conformally flat: " << (*d.expect.conformally_flat ? "yes" : "no");
    if (d.expect.ricci_pseudosymmetric)
      std::cout << "  ricci-pseudosymmetric: " << (*d.expect.ricci_pseudosymmetric ? "yes" : "no");
    if (!d.expect.fail.empty()) {
      std::cout << "  designed to fail:";
      for (const auto& f : d.expect.fail) std::cout << " [" << f << "]";
    }
    std::cout << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvature identity certification"};
  app.require_subcommand(1);

  std::string target, out_flag;
  std::vector<std::string> suites;
  int points = 0, jobs = 0;
  unsigned long long seed = 0;
  double tol_scale = 1.0;
  auto* run = app.add_subcommand("run", "run a manifest or corpus entry");
  run->add_option("manifest", target, "manifest path or corpus name")->required();
  auto* suite_opt = run->add_option("--suite", suites, "suite(s) to run (default: manifest setting)");
  auto* points_opt = run->add_option("--points", points, "sample points per manifold");
  auto* seed_opt = run->add_option("--seed", seed, "sampling seed");
  run->add_option("--out", out_flag, "report directory (default: $CURVCERT_OUT_DIR or ./curvcert-reports)");
  run->add_option("--tol-scale", tol_scale, "multiply every tolerance");
  run->add_option("--jobs", jobs, "worker threads (default: hardware concurrency)");

  std::string name;
  auto* list = app.add_subcommand("list", "list built-in corpus manifests");
  auto* describe = app.add_subcommand("describe", "show a corpus manifest");
  describe->add_option("name", name, "corpus name or manifest path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitSchema;
  }

  try {
    if (*list) return cmd_list();
    if (*describe) return cmd_describe(name);
    RunOptions opt;
    if (*suite_opt) opt.suites = suites;
    if (*points_opt) opt.points = points;
    if (*seed_opt) opt.seed = seed;
    opt.tol_scale = tol_scale;
    opt.jobs = jobs;
    return cmd_run(target, opt, out_flag);
  } catch (const ManifestError& e) {
    std::cerr << "manifest error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const curvcert::ConformallyDegenerateError& e) {
    std::cerr << "manifest error: " << curvcert::ConformallyDegenerateError::code << ": " << e.what() << '\n';
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitChecks;
  }
}
