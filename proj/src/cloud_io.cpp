#include "pcam/cloud_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "pcam/errors.hpp"

namespace pcam {

namespace {

constexpr char kBinaryMagic[4] = {'P', 'C', 'A', 'M'};
constexpr std::uint32_t kBinaryVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& path, std::int64_t& offset) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4)
    throw IoError(path + ": truncated payload at byte offset " + std::to_string(offset));
  offset += 4;
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in, const std::string& path, std::int64_t& offset) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8)
    throw IoError(path + ": truncated payload at byte offset " + std::to_string(offset));
  offset += 8;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_cloud_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  char buf[96];
  for (int i = 0; i < cloud.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", cloud[i][0], cloud[i][1], cloud[i][2]);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path);
}

PointCloud load_cloud_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  std::int64_t offset = 0;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line))
      throw IoError(path + ": malformed header, missing " + what + " at byte offset " + std::to_string(offset));
    offset += static_cast<std::int64_t>(line.size()) + 1;
  };
  next_line("ply magic");
  if (line != "ply") throw IoError(path + ": malformed header, expected 'ply' at byte offset 0");
  next_line("format");
  if (line != "format ascii 1.0")
    throw IoError(path + ": unsupported format at byte offset " + std::to_string(offset - static_cast<std::int64_t>(line.size()) - 1));
  int n = -1;
  while (true) {
    next_line("end_header");
    if (line.rfind("comment", 0) == 0) continue;
    if (line.rfind("element vertex ", 0) == 0) {
      n = std::stoi(line.substr(15));
      continue;
    }
    if (line.rfind("property", 0) == 0) continue;
    if (line == "end_header") break;
    throw IoError(path + ": malformed header line '" + line + "' at byte offset " +
                  std::to_string(offset - static_cast<std::int64_t>(line.size()) - 1));
  }
  if (n < 0) throw IoError(path + ": header missing 'element vertex' count");
  PointCloud cloud(n);
  for (int i = 0; i < n; ++i) {
    next_line("vertex row");
    std::istringstream row(line);
    if (!(row >> cloud[i][0] >> cloud[i][1] >> cloud[i][2]))
      throw IoError(path + ": malformed vertex row " + std::to_string(i) + " at byte offset " +
                    std::to_string(offset - static_cast<std::int64_t>(line.size()) - 1));
  }
  return cloud;
}

void save_cloud_binary(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kBinaryMagic, 4);
  put_u32(out, kBinaryVersion);
  put_u32(out, static_cast<std::uint32_t>(cloud.size()));
  for (int i = 0; i < cloud.size(); ++i)
    for (double v : cloud[i]) put_f64(out, v);
  if (!out) throw IoError("write failed: " + path);
}

PointCloud load_cloud_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::int64_t offset = 0;
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kBinaryMagic, 4) != 0)
    throw IoError(path + ": malformed header, bad magic at byte offset 0");
  offset = 4;
  const std::uint32_t version = get_u32(in, path, offset);
  if (version != kBinaryVersion)
    throw IoError(path + ": unsupported version " + std::to_string(version) + " at byte offset 4");
  const std::uint32_t n = get_u32(in, path, offset);
  PointCloud cloud(static_cast<int>(n));
  for (std::uint32_t i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) cloud[static_cast<int>(i)][static_cast<std::size_t>(a)] = get_f64(in, path, offset);
  return cloud;
}

void save_cloud(const std::string& path, const PointCloud& cloud) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply")
    save_cloud_ply(path, cloud);
  else
    save_cloud_binary(path, cloud);
}

PointCloud load_cloud(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply") return load_cloud_ply(path);
  return load_cloud_binary(path);
}

}  // namespace pcam
