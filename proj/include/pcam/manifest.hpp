#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pcam {

/// Provenance record written atomically next to every CLI command's
/// outputs. Re-running the recorded argv with --threads 1 reproduces the
/// outputs byte-identically.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;  // path -> fnv1a64 hex
  std::vector<std::string> outputs;
  double duration_seconds = 0.0;
  std::string version;
};

std::string toolkit_version();

/// FNV-1a 64-bit hash of a file's bytes, as hex.
std::string fnv1a64_file(const std::string& path);
std::string fnv1a64_bytes(const std::string& bytes);

/// Writes <dir>/manifest.json via a temp file + rename.
void write_manifest(const std::string& dir, const RunManifest& manifest);

}  // namespace pcam
