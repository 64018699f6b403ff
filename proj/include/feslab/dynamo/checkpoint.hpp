#pragma once

#include "feslab/dynamo/tape.hpp"

#include <map>
#include <string>

namespace feslab::dynamo {

/// Self-describing parameter checkpoint.
///
/// Binary layout (little-endian):
///   magic  "FLCKPT\n"                     7 bytes
///   format version                        u32
///   meta count                            u32
///     per entry: key length u32, key bytes, value length u32, value bytes
///   tensor count                          u32
///     per tensor: name length u32, name bytes, rows u64, cols u64,
///                 rows*cols doubles in row-major order
///
/// Entries are stored in lexicographic key order, so save -> load -> save is
/// byte-identical.
class Checkpoint {
 public:
  static constexpr int kFormatVersion = 1;

  std::map<std::string, std::string> meta;
  std::map<std::string, Matrix> tensors;

  void add_tensor(const std::string& name, const Matrix& value);
  const Matrix& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const { return tensors.count(name) != 0; }

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace feslab::dynamo
