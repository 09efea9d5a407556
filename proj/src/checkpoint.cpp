#include "pcam/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "pcam/errors.hpp"

namespace pcam {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_i32(std::ostream& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw IoError(path + ": truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::int32_t get_i32(std::istream& in, const std::string& path) {
  return static_cast<std::int32_t>(get_u32(in, path));
}

double get_f64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8) throw IoError(path + ": truncated checkpoint");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_header(std::ostream& out, const std::string& role, const std::vector<std::int32_t>& arch) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(role.size()));
  out.write(role.data(), static_cast<std::streamsize>(role.size()));
  put_u32(out, static_cast<std::uint32_t>(arch.size()));
  for (std::int32_t v : arch) put_i32(out, v);
}

struct Header {
  std::string role;
  std::vector<std::int32_t> arch;
};

Header read_header(std::istream& in, const std::string& path) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError(path + ": not a checkpoint file (bad magic)");
  const std::uint32_t version = get_u32(in, path);
  if (version != kVersion) throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
  Header h;
  const std::uint32_t role_len = get_u32(in, path);
  h.role.resize(role_len);
  in.read(h.role.data(), role_len);
  if (in.gcount() != static_cast<std::streamsize>(role_len)) throw IoError(path + ": truncated checkpoint");
  const std::uint32_t arch_len = get_u32(in, path);
  h.arch.resize(arch_len);
  for (auto& v : h.arch) v = get_i32(in, path);
  return h;
}

void write_params(std::ostream& out, const std::vector<ad::Tensor>& params) {
  for (const auto& t : params)
    for (int i = 0; i < t.size(); ++i) put_f64(out, t[i]);
}

void read_params(std::istream& in, const std::string& path, std::vector<ad::Tensor>& params) {
  for (auto& t : params)
    for (int i = 0; i < t.size(); ++i) t[i] = get_f64(in, path);
  char probe;
  in.read(&probe, 1);
  if (!in.eof()) throw IoError(path + ": trailing bytes after parameters");
}

std::vector<std::int32_t> widths_block(const std::vector<int>& w) {
  std::vector<std::int32_t> out{static_cast<std::int32_t>(w.size())};
  out.insert(out.end(), w.begin(), w.end());
  return out;
}

std::vector<int> read_widths_block(const std::vector<std::int32_t>& arch, std::size_t& pos, const std::string& path) {
  if (pos >= arch.size()) throw IoError(path + ": malformed architecture descriptor");
  const int count = arch[pos++];
  std::vector<int> w;
  for (int i = 0; i < count; ++i) {
    if (pos >= arch.size()) throw IoError(path + ": malformed architecture descriptor");
    w.push_back(arch[pos++]);
  }
  return w;
}

void expect_role(const Header& h, const std::string& want, const std::string& path) {
  if (h.role != want)
    throw ContractError(path + ": checkpoint role is '" + h.role + "', expected '" + want + "'");
}

}  // namespace

void save_classifier(const std::string& path, const ClassifierModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  std::vector<std::int32_t> arch{model.config().class_count};
  const auto mlp = widths_block(model.config().mlp);
  const auto head = widths_block(model.config().head);
  arch.insert(arch.end(), mlp.begin(), mlp.end());
  arch.insert(arch.end(), head.begin(), head.end());
  write_header(out, "classifier", arch);
  write_params(out, model.params());
  if (!out) throw IoError("write failed: " + path);
}

ClassifierModel load_classifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  const Header h = read_header(in, path);
  expect_role(h, "classifier", path);
  std::size_t pos = 0;
  if (h.arch.empty()) throw IoError(path + ": malformed architecture descriptor");
  ClassifierConfig cfg;
  cfg.class_count = h.arch[pos++];
  cfg.mlp = read_widths_block(h.arch, pos, path);
  cfg.head = read_widths_block(h.arch, pos, path);
  if (pos != h.arch.size()) throw IoError(path + ": malformed architecture descriptor");
  ClassifierModel model(cfg, 0);
  read_params(in, path, model.params());
  return model;
}

void save_autoencoder(const std::string& path, const AutoencoderModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  std::vector<std::int32_t> arch{model.config().n_points};
  const auto enc = widths_block(model.config().encoder);
  const auto dec = widths_block(model.config().decoder);
  arch.insert(arch.end(), enc.begin(), enc.end());
  arch.insert(arch.end(), dec.begin(), dec.end());
  write_header(out, "ae", arch);
  write_params(out, model.params());
  if (!out) throw IoError("write failed: " + path);
}

AutoencoderModel load_autoencoder(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  const Header h = read_header(in, path);
  expect_role(h, "ae", path);
  std::size_t pos = 0;
  if (h.arch.empty()) throw IoError(path + ": malformed architecture descriptor");
  AutoencoderConfig cfg;
  cfg.n_points = h.arch[pos++];
  cfg.encoder = read_widths_block(h.arch, pos, path);
  cfg.decoder = read_widths_block(h.arch, pos, path);
  if (pos != h.arch.size()) throw IoError(path + ": malformed architecture descriptor");
  AutoencoderModel model(cfg, 0);
  read_params(in, path, model.params());
  return model;
}

void save_discriminator(const std::string& path, const DiscriminatorModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  std::vector<std::int32_t> arch;
  const auto mlp = widths_block(model.config().mlp);
  const auto head = widths_block(model.config().head);
  arch.insert(arch.end(), mlp.begin(), mlp.end());
  arch.insert(arch.end(), head.begin(), head.end());
  write_header(out, "discriminator", arch);
  write_params(out, model.params());
  if (!out) throw IoError("write failed: " + path);
}

DiscriminatorModel load_discriminator(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  const Header h = read_header(in, path);
  expect_role(h, "discriminator", path);
  std::size_t pos = 0;
  DiscriminatorConfig cfg;
  cfg.mlp = read_widths_block(h.arch, pos, path);
  cfg.head = read_widths_block(h.arch, pos, path);
  if (pos != h.arch.size()) throw IoError(path + ": malformed architecture descriptor");
  DiscriminatorModel model(cfg, 0);
  read_params(in, path, model.params());
  return model;
}

std::string checkpoint_role(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return read_header(in, path).role;
}

}  // namespace pcam
