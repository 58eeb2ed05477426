#include "pfilin/csv.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace pfilin::csv {
namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    std::size_t a = start;
    std::size_t b = end;
    while (a < b && std::isspace(static_cast<unsigned char>(line[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(line[b - 1]))) --b;
    double value = 0.0;
    // from_chars rejects a leading '+', strip it.
    if (a < b && line[a] == '+') ++a;
    auto [ptr, ec] = std::from_chars(line.data() + a, line.data() + b, value);
    if (ec != std::errc() || ptr != line.data() + b || a == b) return false;
    out.push_back(value);
    start = end + 1;
  }
  return true;
}

}  // namespace

Matrix read_numeric_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!parse_row(line, row)) {
      if (rows.empty() && line_no == 1) continue;
      throw Error(ErrorCode::kConfigParse, path + ":" + std::to_string(line_no) + ": non-numeric row");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::kConfigParse, path + ":" + std::to_string(line_no) + ": expected " +
                                               std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw Error(ErrorCode::kConfigParse, path + ": no data rows");
  Matrix table(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string join_arms(const ArmSet& arms, char sep) {
  std::string out;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (i > 0) out.push_back(sep);
    out += std::to_string(arms[i]);
  }
  return out;
}

Writer::Writer(const std::string& path, std::initializer_list<std::string_view> header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw Error(ErrorCode::kMissingFile, "cannot write '" + path + "'");
  for (auto name : header) field(name);
  end_row();
}

void Writer::separator() {
  if (written_ > 0) out_.put(',');
  ++written_;
}

Writer& Writer::field(std::string_view text) {
  separator();
  out_ << text;
  return *this;
}

Writer& Writer::field(double value) { return field(std::string_view(format_number(value))); }

Writer& Writer::field(std::size_t value) { return field(std::string_view(std::to_string(value))); }

Writer& Writer::field(long long value) { return field(std::string_view(std::to_string(value))); }

void Writer::end_row() {
  if (written_ != columns_) {
    throw Error(ErrorCode::kInvalidArgument,
                "csv row has " + std::to_string(written_) + " fields, header has " + std::to_string(columns_));
  }
  out_.put('\n');
  written_ = 0;
}

}  // namespace pfilin::csv
