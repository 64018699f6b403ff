#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace feslab {

/// Locale-independent decimal formatting (always '.' separator, shortest
/// round-trip representation). All CSV output goes through this.
std::string format_double(double v);

/// Minimal CSV writer: one header row, then data rows. Numeric cells are
/// formatted with format_double so reruns produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void write_row(const std::vector<std::string>& cells);
  void write_row(const std::vector<double>& cells);

  bool good() const { return out_.good(); }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace feslab
