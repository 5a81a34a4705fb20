#include "sel/lab/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef SEL_VERSION
#define SEL_VERSION "unknown"
#endif

namespace sel::lab {

using nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string manifest_json(const ExperimentConfig& config, const ExperimentResult& result, const RunInfo& info) {
  const std::string text = serialize(config);
  ordered_json j;
  j["experiment"] = to_string(config.kind);
  j["code_version"] = SEL_VERSION;
  j["config"] = text;
  j["config_hash"] = hex64(fnv1a64(text));
  j["master_seed"] = config.seed;
  j["threads"] = info.threads;
  j["started"] = info.started;
  j["wall_clock_seconds"] = info.wall_seconds;

  auto& streams = j["streams"] = ordered_json::array();
  for (const auto& s : result.streams)
    streams.push_back({{"trajectory", s.index}, {"purpose", to_string(s.purpose)}, {"key", hex64(s.key)}});

  auto& files = j["files"] = ordered_json::array();
  for (const auto& f : result.files) {
    const auto rows = std::count(f.body.begin(), f.body.end(), '\n');
    files.push_back({{"name", f.name}, {"fnv1a64", hex64(fnv1a64(f.body))}, {"lines", rows}});
  }

  auto& checks = j["checks"] = ordered_json::array();
  for (const auto& c : result.checks)
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"lower", c.lower},
                      {"upper", c.upper},
                      {"gating", c.gating},
                      {"passed", c.passed}});
  j["notes"] = result.notes;
  j["passed"] = result.passed();
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, std::string_view body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

std::filesystem::path write_run(const std::filesystem::path& dir, const ExperimentConfig& config,
                                const ExperimentResult& result, const RunInfo& info) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& f : result.files) write_file(dir / f.name, f.body);
  const auto manifest = dir / "manifest.json";
  write_file(manifest, manifest_json(config, result, info));
  return manifest;
}

ManifestRecord read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read manifest " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
  }
  ManifestRecord r;
  try {
    const auto text = j.at("config").get<std::string>();
    r.config = parse_config(text);
    r.config_hash = j.at("config_hash").get<std::string>();
    if (r.config_hash != hex64(fnv1a64(text)))
      throw std::runtime_error("manifest " + path.string() + ": config hash does not match the config text");
    for (const auto& f : j.at("files")) r.files.push_back({f.at("name").get<std::string>(), f.at("fnv1a64").get<std::string>()});
    r.passed = j.at("passed").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
  }
  return r;
}

}  // namespace sel::lab
