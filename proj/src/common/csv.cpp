#include "feslab/common/csv.hpp"

#include <charconv>
#include <stdexcept>

namespace feslab {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_.good()) throw std::runtime_error("csv: cannot open " + path);
  write_row(header);
}

void CsvWriter::write_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::runtime_error("csv: column count mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void CsvWriter::write_row(const std::vector<double>& cells) {
  std::vector<std::string> text;
  text.reserve(cells.size());
  for (double v : cells) text.push_back(format_double(v));
  write_row(text);
}

}  // namespace feslab
