#include "sel/lab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sel::lab {

namespace {

template <class E>
struct Named {
  E value;
  const char* name;
};

constexpr Named<ExperimentKind> kinds[] = {
    {ExperimentKind::simulate_euler, "simulate-euler"}, {ExperimentKind::simulate_averaged, "simulate-averaged"},
    {ExperimentKind::equivalence, "equivalence"},       {ExperimentKind::convergence, "convergence"},
    {ExperimentKind::isometry, "isometry"},             {ExperimentKind::energy_growth, "energy-growth"},
};
constexpr Named<InitialKind> initials[] = {
    {InitialKind::taylor_green, "taylor-green"},
    {InitialKind::single_mode, "single-mode"},
    {InitialKind::random, "random"},
    {InitialKind::zero, "zero"},
};
constexpr Named<Benchmark> benchmarks[] = {
    {Benchmark::stratonovich_scalar, "stratonovich-scalar"},
    {Benchmark::additive_linear, "additive-linear"},
    {Benchmark::euler_additive, "euler-additive"},
};

template <class E, std::size_t N>
const char* name_of(const Named<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
bool lookup(const Named<E> (&table)[N], std::string_view name, E& out) {
  for (const auto& e : table) {
    if (name == e.name) {
      out = e.value;
      return true;
    }
  }
  return false;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void bad_value(const std::string& key, std::string_view value, const char* expected) {
  throw ConfigError(key, "config key '" + key + "': expected " + expected + ", got '" + std::string(value) + "'");
}

double parse_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a finite number");
  return out;
}

template <class Int>
Int parse_integer(const std::string& key, std::string_view v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, "config key '" + key + "': " + what);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, std::string_view)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"kind",
       [](ExperimentConfig& c, const std::string& k, std::string_view v) {
         if (!lookup(kinds, v, c.kind)) bad_value(k, v, "an experiment kind");
         c.kind_set = true;
       }},
      {"grid.n", [](auto& c, const auto& k, auto v) { c.resolution = parse_integer<int>(k, v); }},
      {"time.dt", [](auto& c, const auto& k, auto v) { c.dt = parse_double(k, v); }},
      {"time.t_end", [](auto& c, const auto& k, auto v) { c.t_end = parse_double(k, v); }},
      {"time.scheme",
       [](ExperimentConfig& c, const std::string& k, std::string_view v) {
         try {
           c.scheme = sde::scheme_from_string(std::string(v));
         } catch (const std::invalid_argument&) {
           bad_value(k, v, "heun or euler-maruyama");
         }
       }},
      {"noise.gamma", [](auto& c, const auto& k, auto v) { c.noise_gamma = parse_double(k, v); }},
      {"noise.amplitude", [](auto& c, const auto& k, auto v) { c.noise_amplitude = parse_double(k, v); }},
      {"noise.s_prime", [](auto& c, const auto& k, auto v) { c.noise_s_prime = parse_integer<int>(k, v); }},
      {"model.alpha", [](auto& c, const auto& k, auto v) { c.alpha = parse_double(k, v); }},
      {"initial.kind",
       [](ExperimentConfig& c, const std::string& k, std::string_view v) {
         if (!lookup(initials, v, c.initial)) bad_value(k, v, "taylor-green, single-mode, random or zero");
       }},
      {"initial.mode",
       [](ExperimentConfig& c, const std::string& k, std::string_view v) {
         const auto comma = v.find(',');
         if (comma == std::string_view::npos) bad_value(k, v, "'kx,ky'");
         c.mode_kx = parse_integer<int>(k, trim(v.substr(0, comma)));
         c.mode_ky = parse_integer<int>(k, trim(v.substr(comma + 1)));
       }},
      {"initial.amplitude", [](auto& c, const auto& k, auto v) { c.initial_amplitude = parse_double(k, v); }},
      {"initial.seed", [](auto& c, const auto& k, auto v) { c.initial_seed = parse_integer<std::uint64_t>(k, v); }},
      {"initial.slope", [](auto& c, const auto& k, auto v) { c.initial_slope = parse_double(k, v); }},
      {"run.seed", [](auto& c, const auto& k, auto v) { c.seed = parse_integer<std::uint64_t>(k, v); }},
      {"run.ensemble", [](auto& c, const auto& k, auto v) { c.ensemble = parse_integer<int>(k, v); }},
      {"run.radius_factor", [](auto& c, const auto& k, auto v) { c.radius_factor = parse_double(k, v); }},
      {"run.sobolev_index", [](auto& c, const auto& k, auto v) { c.sobolev_index = parse_double(k, v); }},
      {"run.output_stride", [](auto& c, const auto& k, auto v) { c.output_stride = parse_integer<int>(k, v); }},
      {"output.dir", [](ExperimentConfig& c, const std::string&, std::string_view v) { c.output_dir = v; }},
      {"particles.per_side", [](auto& c, const auto& k, auto v) { c.particles_per_side = parse_integer<int>(k, v); }},
      {"refinement.halvings", [](auto& c, const auto& k, auto v) { c.halvings = parse_integer<int>(k, v); }},
      {"convergence.benchmark",
       [](ExperimentConfig& c, const std::string& k, std::string_view v) {
         if (!lookup(benchmarks, v, c.benchmark)) bad_value(k, v, "stratonovich-scalar, additive-linear or euler-additive");
       }},
  };
  return table;
}

void validate(const ExperimentConfig& c) {
  require(c.resolution > 0, "grid.n", "resolution N must be positive");
  require(c.dt > 0.0, "time.dt", "dt must be positive");
  require(c.t_end > 0.0, "time.t_end", "t_end must be positive");
  const double ratio = c.t_end / c.dt;
  require(std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio, "time.dt", "t_end must be an integer multiple of dt");
  require(c.noise_gamma >= 0.0, "noise.gamma", "gamma must be non-negative");
  require(c.noise_amplitude >= 0.0, "noise.amplitude", "amplitude must be non-negative");
  require(c.noise_s_prime >= 0, "noise.s_prime", "s_prime must be non-negative");
  require(c.alpha >= 0.0, "model.alpha", "alpha must be non-negative");
  if (c.initial == InitialKind::single_mode) {
    const int n = c.resolution;
    require((c.mode_kx != 0 || c.mode_ky != 0) && std::abs(c.mode_kx) <= n && std::abs(c.mode_ky) <= n,
            "initial.mode", "mode must be non-zero and inside |k|_inf <= grid.n");
  }
  require(c.ensemble >= 1, "run.ensemble", "ensemble size must be at least 1");
  require(c.radius_factor > 0.0, "run.radius_factor", "radius factor must be positive");
  require(c.sobolev_index >= 0.0, "run.sobolev_index", "Sobolev index must be non-negative");
  require(c.output_stride >= 1, "run.output_stride", "output stride must be at least 1");
  require(c.particles_per_side >= 2, "particles.per_side", "need at least 2 particles per side");
  require(c.halvings >= 2, "refinement.halvings", "a slope fit needs at least 2 halvings");
}

}  // namespace

const char* to_string(ExperimentKind k) { return name_of(kinds, k); }
const char* to_string(InitialKind k) { return name_of(initials, k); }
const char* to_string(Benchmark b) { return name_of(benchmarks, b); }

ExperimentKind kind_from_string(std::string_view name) {
  ExperimentKind k{};
  if (!lookup(kinds, name, k)) throw std::invalid_argument("unknown experiment kind '" + std::string(name) + "'");
  return k;
}

int ExperimentConfig::steps() const { return static_cast<int>(std::lround(t_end / dt)); }

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("", "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));

    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(key, "unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(key, "config key '" + key + "' given twice");
    if (value.empty() && key != "output.dir") bad_value(key, value, "a value");
    it->second(c, key, value);
  }
  for (const char* required : {"time.dt", "time.t_end"})
    if (!seen.contains(required)) throw ConfigError(required, std::string("missing required config key '") + required + "'");
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize(const ExperimentConfig& c) {
  std::ostringstream o;
  if (c.kind_set) o << "kind = " << to_string(c.kind) << '\n';
  o << "grid.n = " << c.resolution << '\n'
    << "time.dt = " << fmt_double(c.dt) << '\n'
    << "time.t_end = " << fmt_double(c.t_end) << '\n'
    << "time.scheme = " << sde::to_string(c.scheme) << '\n'
    << "noise.gamma = " << fmt_double(c.noise_gamma) << '\n'
    << "noise.amplitude = " << fmt_double(c.noise_amplitude) << '\n'
    << "noise.s_prime = " << c.noise_s_prime << '\n'
    << "model.alpha = " << fmt_double(c.alpha) << '\n'
    << "initial.kind = " << to_string(c.initial) << '\n'
    << "initial.mode = " << c.mode_kx << ',' << c.mode_ky << '\n'
    << "initial.amplitude = " << fmt_double(c.initial_amplitude) << '\n'
    << "initial.seed = " << c.initial_seed << '\n'
    << "initial.slope = " << fmt_double(c.initial_slope) << '\n'
    << "run.seed = " << c.seed << '\n'
    << "run.ensemble = " << c.ensemble << '\n'
    << "run.radius_factor = " << fmt_double(c.radius_factor) << '\n'
    << "run.sobolev_index = " << fmt_double(c.sobolev_index) << '\n'
    << "run.output_stride = " << c.output_stride << '\n'
    << "output.dir = " << c.output_dir << '\n'
    << "particles.per_side = " << c.particles_per_side << '\n'
    << "refinement.halvings = " << c.halvings << '\n'
    << "convergence.benchmark = " << to_string(c.benchmark) << '\n';
  return o.str();
}

}  // namespace sel::lab
