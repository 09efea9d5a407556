#include "pcam/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pcam/errors.hpp"

namespace pcam {

std::string toolkit_version() { return "0.1.0"; }

std::string fnv1a64_bytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for hashing: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64_bytes(ss.str());
}

void write_manifest(const std::string& dir, const RunManifest& manifest) {
  nlohmann::json j;
  j["command"] = manifest.command;
  j["argv"] = manifest.argv;
  j["config"] = manifest.config;
  j["seed"] = manifest.seed;
  j["input_hashes"] = manifest.input_hashes;
  j["outputs"] = manifest.outputs;
  j["duration_seconds"] = manifest.duration_seconds;
  j["version"] = manifest.version;

  const std::string final_path = dir + "/manifest.json";
  const std::string tmp_path = final_path + ".tmp";
  {
    std::ofstream out(tmp_path);
    if (!out) throw IoError("cannot open for writing: " + tmp_path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + tmp_path);
  }
  if (std::rename(tmp_path.c_str(), final_path.c_str()) != 0)
    throw IoError("cannot move manifest into place: " + final_path);
}

}  // namespace pcam
