// Drives the lab executable end to end through the shell.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("lab_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

Result lab(const std::string& args, const std::string& env = "") {
  const auto log = scratch() / "stdout.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" LAB_EXE "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(raw));
  return {WEXITSTATUS(raw), slurp(log)};
}

const std::string isometry_cfg =
    "kind = isometry\ngrid.n = 1\ntime.dt = 0.25\ntime.t_end = 1\nnoise.amplitude = 1\nrun.ensemble = 400\n";

}  // namespace

TEST_CASE("a passing run exits 0 and writes data plus manifest") {
  const auto cfg = write_config("iso.cfg", isometry_cfg);
  const auto out = scratch() / "iso";
  const auto r = lab("isometry --config " + cfg.string() + " --out " + out.string());
  CHECK(r.status == 0);
  CHECK(r.out.find("PASS  Ito isometry") != std::string::npos);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "isometry.csv"));
  CHECK(fs::exists(out / "modes.csv"));
}

TEST_CASE("a failing gating check exits 2") {
  // strong noise leaves a ball this tight within a few steps
  const auto cfg = write_config("eg.cfg",
                                "grid.n = 3\ntime.dt = 0.05\ntime.t_end = 0.2\nnoise.amplitude = 1\n"
                                "run.ensemble = 4\nrun.radius_factor = 1.05\n");
  const auto r = lab("energy-growth --config " + cfg.string() + " --out " + (scratch() / "eg").string());
  CHECK(r.status == 2);
  CHECK(r.out.find("FAIL  paths stopped before t_end") != std::string::npos);
}

TEST_CASE("operational errors exit 1") {
  CHECK(lab("isometry --config " + (scratch() / "missing.cfg").string()).status == 1);
  CHECK(lab("no-such-experiment --config x").status == 1);
  CHECK(lab("isometry").status == 1);

  const auto bad = write_config("bad.cfg", "time.dt = -1\ntime.t_end = 1\n");
  const auto r = lab("isometry --config " + bad.string() + " --dry-run");
  CHECK(r.status == 1);
  CHECK(r.out.find("time.dt") != std::string::npos);

  const auto typo = write_config("typo.cfg", "time.dt = 0.1\ntime.t_end = 1\nnoise.amplitud = 1\n");
  CHECK(lab("isometry --config " + typo.string() + " --dry-run").out.find("noise.amplitud") != std::string::npos);

  const auto mismatch = write_config("mismatch.cfg", isometry_cfg);
  const auto m = lab("energy-growth --config " + mismatch.string() + " --dry-run");
  CHECK(m.status == 1);
  CHECK(m.out.find("kind") != std::string::npos);

  const auto tight = write_config("tight.cfg", "grid.n = 3\ntime.dt = 0.05\ntime.t_end = 0.2\nnoise.amplitude = 1\n"
                                                "run.radius_factor = 0.5\n");
  CHECK(lab("energy-growth --config " + tight.string() + " --out " + (scratch() / "tight").string()).status == 1);

  const auto silent = write_config("silent.cfg", "grid.n = 2\ntime.dt = 0.5\ntime.t_end = 1\n");
  CHECK(lab("isometry --config " + silent.string() + " --out " + (scratch() / "silent").string()).status == 1);
}

TEST_CASE("dry run prints the normalized config and writes nothing") {
  const auto cfg = write_config("dry.cfg", "time.dt = 0.1\ntime.t_end = 1\n");
  const auto out = scratch() / "dry";
  const auto r = lab("simulate-euler --config " + cfg.string() + " --seed 77 --out " + out.string() + " --dry-run");
  CHECK(r.status == 0);
  CHECK(r.out.find("kind = simulate-euler\n") != std::string::npos);
  CHECK(r.out.find("run.seed = 77\n") != std::string::npos);
  CHECK(r.out.find("output.dir = " + out.string() + "\n") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("output directory falls back to LAB_OUTPUT_DIR") {
  const auto cfg = write_config("env.cfg", isometry_cfg);
  const auto dir = scratch() / "from_env";
  const auto r = lab("isometry --config " + cfg.string(), "LAB_OUTPUT_DIR=\"" + dir.string() + "\"");
  CHECK(r.status == 0);
  CHECK(fs::exists(dir / "manifest.json"));

  // output.dir in the config wins over the environment
  const auto pinned = scratch() / "pinned";
  const auto cfg2 = write_config("env2.cfg", isometry_cfg + "output.dir = " + pinned.string() + "\n");
  CHECK(lab("isometry --config " + cfg2.string(), "LAB_OUTPUT_DIR=\"" + dir.string() + "_unused\"").status == 0);
  CHECK(fs::exists(pinned / "manifest.json"));
  CHECK_FALSE(fs::exists(dir.string() + "_unused"));
}

TEST_CASE("rerun at a different thread count reproduces every byte") {
  const auto cfg = write_config("rr.cfg",
                                "grid.n = 3\ntime.dt = 0.05\ntime.t_end = 0.2\nnoise.amplitude = 0.2\n"
                                "run.ensemble = 16\ninitial.kind = random\n");
  const auto first = scratch() / "rr1";
  REQUIRE(lab("energy-growth --config " + cfg.string() + " --threads 1 --out " + first.string()).status == 0);
  const auto second = scratch() / "rr8";
  const auto r = lab("rerun --manifest " + (first / "manifest.json").string() + " --threads 8 --out " + second.string());
  CHECK(r.status == 0);
  CHECK(r.out.find("DIFF") == std::string::npos);
  for (const char* f : {"energy.csv", "path_slopes.csv", "energy_growth.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(second / f));
    CHECK(slurp(first / f) == slurp(second / f));
  }

  // a tampered data file hash is reported and exits 2
  auto manifest = slurp(first / "manifest.json");
  const auto pos = manifest.find("\"fnv1a64\": \"");
  REQUIRE(pos != std::string::npos);
  auto& digit = manifest[pos + 12];
  digit = digit == '0' ? '1' : '0';
  std::ofstream(first / "manifest.json") << manifest;
  const auto t = lab("rerun --manifest " + (first / "manifest.json").string() + " --out " + (scratch() / "rr_t").string());
  CHECK(t.status == 2);
  CHECK(t.out.find("DIFF") != std::string::npos);
}

TEST_CASE("shipped configs parse") {
  for (const auto& e : fs::directory_iterator(LAB_CONFIGS)) {
    CAPTURE(e.path().string());
    std::istringstream lines(slurp(e.path()));
    std::string line, kind;
    while (std::getline(lines, line))
      if (line.rfind("kind = ", 0) == 0) kind = line.substr(7);
    REQUIRE_FALSE(kind.empty());
    CHECK(lab(kind + " --config " + e.path().string() + " --dry-run").status == 0);
  }
}
