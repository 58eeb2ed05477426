#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "pfilin/common.hpp"

namespace pfilin::csv {

/// Numeric table, one row per line. A first line that does not parse as
/// numbers is skipped as a header. Throws kMissingFile / kConfigParse.
Matrix read_numeric_table(const std::string& path);

/// Shortest round-trip formatting, locale independent.
std::string format_number(double value);

std::string join_arms(const ArmSet& arms, char sep = ';');

class Writer {
 public:
  Writer(const std::string& path, std::initializer_list<std::string_view> header);

  Writer& field(std::string_view text);
  Writer& field(double value);
  Writer& field(std::size_t value);
  Writer& field(long long value);
  Writer& field(int value) { return field(static_cast<long long>(value)); }
  Writer& field(bool value) { return field(static_cast<long long>(value ? 1 : 0)); }
  void end_row();

 private:
  void separator();

  std::ofstream out_;
  std::size_t columns_;
  std::size_t written_ = 0;
};

}  // namespace pfilin::csv
