#pragma once

// Observation CSV: one observation per row, comma-separated decimal floats,
// '#'-prefixed header lines ignored. The first row fixes the dimension.

#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "adaptcd/errors.hpp"
#include "adaptcd/lrcore.hpp"

namespace adaptcd {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class csv_observation_reader {
 public:
  explicit csv_observation_reader(std::istream& in, std::optional<std::size_t> dimension = std::nullopt)
      : in_(in), dimension_(dimension) {}

  /// Next observation; false at end of input. Throws data_error naming the
  /// 1-based record index on malformed rows.
  bool operator()(Vector& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      ++record_;
      parse(line, out);
      if (!dimension_) dimension_ = out.size();
      if (out.size() != *dimension_)
        throw data_error("record " + std::to_string(record_) + " (line " + std::to_string(line_) + "): has " +
                         std::to_string(out.size()) + " fields, expected " + std::to_string(*dimension_));
      return true;
    }
    return false;
  }

  std::optional<std::size_t> dimension() const noexcept { return dimension_; }
  std::size_t records() const noexcept { return record_; }

 private:
  void parse(const std::string& line, Vector& out) {
    out.clear();
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      std::string_view field = rest.substr(0, comma);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
      if (!field.empty() && field.front() == '+') field.remove_prefix(1);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size() || !std::isfinite(v))
        throw data_error("record " + std::to_string(record_) + " (line " + std::to_string(line_) +
                         "): bad value '" + std::string(field) + "' in field " + std::to_string(out.size() + 1));
      out.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }

  std::istream& in_;
  std::optional<std::size_t> dimension_;
  std::size_t line_ = 0;
  std::size_t record_ = 0;
};

inline std::vector<Vector> read_observations(std::istream& in, std::optional<std::size_t> dimension = std::nullopt) {
  csv_observation_reader reader(in, dimension);
  std::vector<Vector> rows;
  Vector x;
  while (reader(x)) rows.push_back(x);
  return rows;
}

inline void write_observation(std::ostream& out, std::span<const double> row) {
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j) out << ',';
    out << format_double(row[j]);
  }
  out << '\n';
}

inline void write_observations(std::ostream& out, std::span<const Vector> rows) {
  for (const auto& r : rows) write_observation(out, r);
}

}  // namespace adaptcd
