#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sel/lab/config.hpp"
#include "sel/lab/experiment.hpp"

namespace sel::lab {

std::uint64_t fnv1a64(std::string_view bytes);
/// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

struct RunInfo {
  unsigned threads = 1;
  double wall_seconds = 0.0;
  /// ISO-8601 UTC start time.
  std::string started;
};

/// JSON text of the manifest: normalized config and its hash, code version,
/// stream keys, timing, per-file hashes and every check.
std::string manifest_json(const ExperimentConfig& config, const ExperimentResult& result, const RunInfo& info);

/// Writes the data files and manifest.json into dir, creating it. Returns
/// the manifest path.
std::filesystem::path write_run(const std::filesystem::path& dir, const ExperimentConfig& config,
                                const ExperimentResult& result, const RunInfo& info);

struct ManifestFile {
  std::string name;
  std::string hash;
};

struct ManifestRecord {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<ManifestFile> files;
  bool passed = false;
};

/// Throws std::runtime_error on unreadable or malformed manifests and
/// ConfigError when the embedded config no longer parses.
ManifestRecord read_manifest(const std::filesystem::path& path);

}  // namespace sel::lab
