#include "feslab/dynamo/checkpoint.hpp"

#include "feslab/common/errors.hpp"

#include <cstdint>
#include <fstream>
#include <vector>

namespace feslab::dynamo {

namespace {

constexpr char kMagic[] = "FLCKPT\n";
constexpr std::size_t kMagicLen = 7;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string read_string(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  return s;
}

}  // namespace

void Checkpoint::add_tensor(const std::string& name, const Matrix& value) {
  if (tensors.count(name)) throw ConfigError("checkpoint: duplicate tensor " + name);
  tensors.emplace(name, value);
}

const Matrix& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigError("checkpoint: missing tensor " + name);
  return it->second;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw ConfigError("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, kMagicLen);
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    write_string(out, k);
    write_string(out, v);
  }
  write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_string(out, name);
    write_u64(out, static_cast<std::uint64_t>(t.rows()));
    write_u64(out, static_cast<std::uint64_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      out.write(reinterpret_cast<const char*>(t.row(r).eval().data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(t.cols())));
  }
  if (!out.good()) throw ConfigError("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ConfigError("checkpoint: cannot open " + path);
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (!in.good() || std::string(magic, kMagicLen) != std::string(kMagic, kMagicLen))
    throw ConfigError("checkpoint: bad magic in " + path);
  const std::uint32_t version = read_u32(in);
  if (version != kFormatVersion)
    throw ConfigError("checkpoint: unsupported format version " + std::to_string(version));

  Checkpoint ckpt;
  const std::uint32_t n_meta = read_u32(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = read_string(in);
    std::string v = read_string(in);
    ckpt.meta.emplace(std::move(k), std::move(v));
  }
  const std::uint32_t n_tensors = read_u32(in);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = read_string(in);
    const std::uint64_t rows = read_u64(in);
    const std::uint64_t cols = read_u64(in);
    Matrix t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::vector<double> row(cols);
    for (std::uint64_t r = 0; r < rows; ++r) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * cols));
      for (std::uint64_t c = 0; c < cols; ++c)
        t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    ckpt.tensors.emplace(std::move(name), std::move(t));
  }
  if (!in.good()) throw ConfigError("checkpoint: truncated file " + path);
  return ckpt;
}

}  // namespace feslab::dynamo
