#pragma once

#include <string>
#include <vector>

namespace fwl {

// 17-significant-digit decimal rendering via std::to_chars; locale-free and
// byte-stable, so CSV reports diff cleanly across runs.
std::string format_number(double x);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  std::string str() const;
  static std::string cell(double x) { return format_number(x); }

 private:
  std::size_t columns_;
  std::string body_;
};

}  // namespace fwl
