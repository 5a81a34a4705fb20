// lab: run one experiment from a config file, or rerun one from its manifest.
//
//   lab <kind> --config FILE [--seed S] [--out DIR] [--threads T] [--dry-run]
//   lab rerun --manifest FILE [--out DIR] [--threads T]
//
// Exit status: 0 all gating checks passed, 2 a check failed (or a rerun did
// not reproduce its files), 1 anything else went wrong.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sel/lab/config.hpp"
#include "sel/lab/experiment.hpp"
#include "sel/lab/manifest.hpp"

namespace fs = std::filesystem;
using namespace sel::lab;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_error = 1;
constexpr int exit_fail = 2;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path resolve_output(const std::optional<std::string>& flag, const ExperimentConfig& config) {
  if (flag) return *flag;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("LAB_OUTPUT_DIR"); env && *env) return env;
  return "lab-output";
}

void print_checks(const ExperimentResult& r) {
  for (const auto& c : r.checks) {
    const char* tag = c.passed ? "PASS" : (c.gating ? "FAIL" : "WARN");
    std::cout << tag << "  " << c.name << " = " << c.value << "  [" << c.lower << ", " << c.upper << "]"
              << (c.gating ? "" : " (monitor)") << '\n';
  }
  for (const auto& n : r.notes) std::cout << "note  " << n << '\n';
}

struct Outcome {
  ExperimentResult result;
  fs::path manifest;
};

Outcome execute(ExperimentConfig config, const fs::path& out, unsigned threads) {
  config.output_dir = out.string();
  const auto start = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  auto result = run_experiment(config, threads);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto manifest = write_run(out, config, result, {threads, wall, started});
  print_checks(result);
  std::cout << "wrote " << result.files.size() << " data files and " << manifest.string() << '\n';
  return {std::move(result), manifest};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic Euler lab on the flat 2-torus"};
  app.require_subcommand(1);

  std::string config_path, manifest_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned threads = 1;
  bool dry_run = false;

  const ExperimentKind all_kinds[] = {ExperimentKind::simulate_euler, ExperimentKind::simulate_averaged,
                                      ExperimentKind::equivalence,    ExperimentKind::convergence,
                                      ExperimentKind::isometry,       ExperimentKind::energy_growth};
  std::vector<std::pair<CLI::App*, ExperimentKind>> kind_commands;
  for (auto kind : all_kinds) {
    auto* sub = app.add_subcommand(to_string(kind), std::string("run the ") + to_string(kind) + " experiment");
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "master seed, overrides run.seed");
    sub->add_option("--out", out, "output directory (default: output.dir, then $LAB_OUTPUT_DIR)");
    sub->add_option("--threads", threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    sub->add_flag("--dry-run", dry_run, "print the normalized config and exit");
    kind_commands.emplace_back(sub, kind);
  }
  auto* rerun = app.add_subcommand("rerun", "rerun from a manifest and compare data file hashes");
  rerun->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
  rerun->add_option("--out", out, "output directory (default: <manifest dir>/rerun)");
  rerun->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_pass : exit_error;
  }

  try {
    if (rerun->parsed()) {
      const auto record = read_manifest(manifest_path);
      const fs::path dir = out ? fs::path(*out) : fs::path(manifest_path).parent_path() / "rerun";
      const auto outcome = execute(record.config, dir, threads);
      bool same = outcome.result.files.size() == record.files.size();
      for (const auto& f : outcome.result.files) {
        const auto it = std::find_if(record.files.begin(), record.files.end(),
                                     [&](const ManifestFile& m) { return m.name == f.name; });
        const std::string hash = hex64(fnv1a64(f.body));
        const bool match = it != record.files.end() && it->hash == hash;
        same = same && match;
        std::cout << (match ? "SAME  " : "DIFF  ") << f.name << ' ' << hash << '\n';
      }
      if (!same) {
        std::cerr << "lab: rerun did not reproduce the recorded data files\n";
        return exit_fail;
      }
      return outcome.result.passed() ? exit_pass : exit_fail;
    }

    for (const auto& [sub, kind] : kind_commands) {
      if (!sub->parsed()) continue;
      auto config = load_config(config_path);
      if (config.kind_set && config.kind != kind)
        throw ConfigError("kind", std::string("config key 'kind' is '") + to_string(config.kind) +
                                      "' but the subcommand is '" + to_string(kind) + "'");
      config.kind = kind;
      config.kind_set = true;
      if (seed) config.seed = *seed;
      const auto dir = resolve_output(out, config);
      if (dry_run) {
        config.output_dir = dir.string();
        std::cout << serialize(config);
        return exit_pass;
      }
      return execute(config, dir, threads).result.passed() ? exit_pass : exit_fail;
    }
  } catch (const ConfigError& e) {
    std::cerr << "lab: config error: " << e.what() << '\n';
    return exit_error;
  } catch (const std::exception& e) {
    std::cerr << "lab: " << e.what() << '\n';
    return exit_error;
  }
  return exit_error;
}
