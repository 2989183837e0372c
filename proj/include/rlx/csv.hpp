#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace rlx {

// Small deterministic CSV writer: fixed header, comma separation, '\n' line
// ends, numbers printed as shortest round-trip decimals. Output bytes are a
// pure function of the rows written.
class CsvWriter {
 public:
  // Throws IoError when the file cannot be opened.
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);

  static std::string num(double v);
  static std::string num(long v);
  static std::string num(int v) { return num(static_cast<long>(v)); }

 private:
  std::ofstream out_;
  size_t columns_;
};

}  // namespace rlx
