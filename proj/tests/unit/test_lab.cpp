#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sel/eulerian.hpp"
#include "sel/lab/config.hpp"
#include "sel/lab/experiment.hpp"
#include "sel/lab/manifest.hpp"

using namespace sel;
using namespace sel::lab;

namespace {

std::string error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

const Check* find_check(const ExperimentResult& r, const std::string& prefix) {
  for (const auto& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) return &c;
  return nullptr;
}

const DataFile* find_file(const ExperimentResult& r, const std::string& name) {
  for (const auto& f : r.files)
    if (f.name == name) return &f;
  return nullptr;
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const auto c = parse_config("time.dt = 0.01\ntime.t_end = 1  # one unit\n\n# comment only\n");
  CHECK(c.dt == 0.01);
  CHECK(c.t_end == 1.0);
  CHECK(c.steps() == 100);
  CHECK(c.resolution == 16);
  CHECK(c.scheme == sde::Scheme::heun);
  CHECK(c.initial == InitialKind::taylor_green);
  CHECK(c.noise_amplitude == 0.0);
  CHECK(c.ensemble == 1);
  CHECK_FALSE(c.kind_set);
}

TEST_CASE("validation names the offending key") {
  const std::string base = "time.dt = 0.1\ntime.t_end = 1\n";
  CHECK(error_key("time.dt = -1\ntime.t_end = 1\n") == "time.dt");
  try {
    parse_config("time.dt = -1\ntime.t_end = 1\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("dt") != std::string::npos);
  }
  CHECK(error_key(base + "grid.nn = 4\n") == "grid.nn");
  CHECK(error_key(base + "grid.n = 0\n") == "grid.n");
  CHECK(error_key(base + "grid.n = four\n") == "grid.n");
  CHECK(error_key(base + "grid.n = 4\ngrid.n = 5\n") == "grid.n");
  CHECK(error_key("time.dt = 0.1\n") == "time.t_end");
  CHECK(error_key("time.dt = 0.3\ntime.t_end = 1\n") == "time.dt");
  CHECK(error_key(base + "time.scheme = rk4\n") == "time.scheme");
  CHECK(error_key(base + "initial.kind = single-mode\ninitial.mode = 20,0\n") == "initial.mode");
  CHECK(error_key(base + "initial.mode = 1\n") == "initial.mode");
  CHECK(error_key(base + "noise.amplitude = -0.1\n") == "noise.amplitude");
  CHECK(error_key(base + "run.ensemble = 0\n") == "run.ensemble");
  CHECK(error_key(base + "kind = walk\n") == "kind");
  CHECK(error_key(base + "just words\n") == "");
  CHECK(error_key(base + "time.t_end = nan\n") == "time.t_end");
}

TEST_CASE("parse, serialize, parse is the identity") {
  const std::string text =
      "kind = equivalence\n"
      "grid.n = 7\ntime.dt = 0.1\ntime.t_end = 0.30000000000000004\ntime.scheme = euler-maruyama\n"
      "noise.gamma = 2.5\nnoise.amplitude = 0.333333333333333\nnoise.s_prime = 1\nmodel.alpha = 0.7\n"
      "initial.kind = single-mode\ninitial.mode = -2, 3\ninitial.amplitude = 1e-3\ninitial.seed = 18446744073709551615\n"
      "initial.slope = 3\nrun.seed = 99\nrun.ensemble = 12\nrun.radius_factor = 4.5\nrun.sobolev_index = 2\n"
      "run.output_stride = 5\noutput.dir = /tmp/some where\nparticles.per_side = 9\nrefinement.halvings = 3\n"
      "convergence.benchmark = additive-linear\n";
  const auto a = parse_config(text);
  const auto b = parse_config(serialize(a));
  CHECK(serialize(b) == serialize(a));
  CHECK(b.t_end == a.t_end);
  CHECK(b.noise_amplitude == a.noise_amplitude);
  CHECK(b.initial_seed == 18446744073709551615ull);
  CHECK(b.mode_kx == -2);
  CHECK(b.mode_ky == 3);
  CHECK(b.output_dir == "/tmp/some where");
  CHECK(b.kind == ExperimentKind::equivalence);
  CHECK(b.benchmark == Benchmark::additive_linear);
  CHECK(b.scheme == sde::Scheme::euler_maruyama);
}

TEST_CASE("initial conditions") {
  auto c = parse_config("time.dt = 0.1\ntime.t_end = 1\ngrid.n = 6\ninitial.kind = random\ninitial.seed = 4\ninitial.amplitude = 2\n");
  const auto u = initial_field(c);
  CHECK(l2_norm(u) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(divergence_residual(u) < 1e-14);
  CHECK(is_hermitian(u));
  CHECK(l2_norm(initial_field(c) - u) == 0.0);
  c.initial_seed = 5;
  CHECK(l2_norm(initial_field(c) - u) > 0.1);

  c.initial = InitialKind::single_mode;
  c.mode_kx = 1;
  c.mode_ky = 2;
  const auto m = initial_field(c);
  CHECK(divergence_residual(m) < 1e-15);
  CHECK(l2_norm(euler_drift(m)) < 1e-15);
  c.initial = InitialKind::zero;
  CHECK(l2_norm(initial_field(c)) == 0.0);
}

TEST_CASE("CSV cells keep 17 significant digits") {
  auto c = parse_config("kind = convergence\ntime.dt = 0.1\ntime.t_end = 0.4\nrun.ensemble = 20\nrefinement.halvings = 2\n");
  const auto r = run_experiment(c);
  const auto* f = find_file(r, "convergence.csv");
  REQUIRE(f);
  CHECK(f->body.rfind("level,dt,rms_error\n0,0.10000000000000001,", 0) == 0);
}

TEST_CASE("zero-noise Taylor-Green simulation passes its checks") {
  auto c = parse_config("kind = simulate-euler\ngrid.n = 8\ntime.dt = 0.01\ntime.t_end = 0.2\nrun.output_stride = 5\n");
  const auto r = run_experiment(c);
  CHECK(r.passed());
  REQUIRE(find_check(r, "taylor-green relative"));
  CHECK(find_check(r, "taylor-green relative")->value < 1e-8);
  const auto* diag = find_file(r, "diagnostics.csv");
  REQUIRE(diag);
  CHECK(std::count(diag->body.begin(), diag->body.end(), '\n') == 1 + 5);
}

TEST_CASE("averaged model embeds the alpha = 0 identity") {
  auto c = parse_config(
      "kind = simulate-averaged\ngrid.n = 4\ntime.dt = 0.02\ntime.t_end = 0.1\nnoise.amplitude = 0.1\n"
      "initial.kind = random\n");
  const auto r = run_experiment(c);
  REQUIRE(find_check(r, "alpha = 0"));
  CHECK(find_check(r, "alpha = 0")->passed);
  CHECK(r.passed());
}

TEST_CASE("thread count does not change any output") {
  for (const char* text : {
           "kind = isometry\ngrid.n = 1\ntime.dt = 0.25\ntime.t_end = 1\nnoise.amplitude = 1\nrun.ensemble = 300\n",
           "kind = energy-growth\ngrid.n = 3\ntime.dt = 0.05\ntime.t_end = 0.2\nnoise.amplitude = 0.2\nrun.ensemble = 12\n",
           "kind = simulate-euler\ngrid.n = 3\ntime.dt = 0.05\ntime.t_end = 0.2\nnoise.amplitude = 0.2\nrun.ensemble = 5\n",
       }) {
    const auto c = parse_config(text);
    const auto a = run_experiment(c, 1);
    const auto b = run_experiment(c, 8);
    REQUIRE(a.files.size() == b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      CHECK(a.files[i].name == b.files[i].name);
      CHECK(a.files[i].body == b.files[i].body);
    }
  }
}

TEST_CASE("experiments that need noise refuse to run without it") {
  const auto c = parse_config("kind = isometry\ngrid.n = 2\ntime.dt = 0.5\ntime.t_end = 1\n");
  CHECK_THROWS_AS(run_experiment(c), std::invalid_argument);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("manifest round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "sel_manifest_test";
  std::filesystem::remove_all(dir);
  auto c = parse_config("kind = convergence\ntime.dt = 0.1\ntime.t_end = 0.4\nrun.ensemble = 10\nrefinement.halvings = 2\n");
  const auto r = run_experiment(c);
  const auto path = write_run(dir, c, r, {1, 0.5, "2026-01-01T00:00:00Z"});
  const auto m = read_manifest(path);
  CHECK(serialize(m.config) == serialize(c));
  CHECK(m.passed == r.passed());
  REQUIRE(m.files.size() == r.files.size());
  for (std::size_t i = 0; i < r.files.size(); ++i) {
    CHECK(m.files[i].name == r.files[i].name);
    CHECK(m.files[i].hash == hex64(fnv1a64(r.files[i].body)));
    std::ifstream in(dir / r.files[i].name, std::ios::binary);
    const std::string body((std::istreambuf_iterator<char>(in)), {});
    CHECK(body == r.files[i].body);
  }

  // a config edited after the fact no longer matches its hash
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  in.close();
  const auto pos = text.find("run.ensemble = 10");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 17, "run.ensemble = 11");
  std::ofstream(path) << text;
  CHECK_THROWS_AS(read_manifest(path), std::runtime_error);
  std::filesystem::remove_all(dir);
}
