#pragma once

// Dataset files.
//
// CSV: header `x1,...,xd,y`, one sample per row, shortest round-trip decimal
// values. Sidecar JSON next to it (same stem, .json):
//   {"d": .., "n": .., "has_intercept": .., "seed": .., "true_beta": [..]}

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "mtlr/dataset.hpp"
#include "mtlr/dataset_gen.hpp"

namespace mtlr {

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Strict parse of a full token; nullopt on trailing garbage.
inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline void write_csv(std::ostream& os, const Dataset& ds) {
  for (std::size_t j = 1; j <= ds.d(); ++j) os << 'x' << j << ',';
  os << "y\n";
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) os << format_double(ds.x(i, j)) << ',';
    os << format_double(ds.y(i)) << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream os(path);
  if (!os) throw HarnessIoError("cannot open " + path.string() + " for writing");
  write_csv(os, ds);
  if (!os) throw HarnessIoError("write failed for " + path.string());
}

inline Dataset read_csv(std::istream& is, bool has_intercept = true) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("empty CSV");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      const auto cell = parse_double(rest.substr(0, comma));
      if (!cell) throw InvalidArgument("malformed number on CSV line " + std::to_string(lineno));
      row.push_back(*cell);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("CSV has no samples");
  return Dataset::from_rows(rows, has_intercept);
}

inline Dataset read_csv(const std::filesystem::path& path, bool has_intercept = true) {
  std::ifstream is(path);
  if (!is) throw HarnessIoError("cannot open " + path.string());
  return read_csv(is, has_intercept);
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

inline nlohmann::json sidecar_json(const GeneratedDataset& g) {
  return {{"d", g.ds.d()},
          {"n", g.ds.n()},
          {"has_intercept", g.ds.has_intercept},
          {"seed", g.seed},
          {"true_beta", std::vector<double>(g.true_beta.data(), g.true_beta.data() + g.true_beta.size())}};
}

inline void write_generated(const std::filesystem::path& csv, const GeneratedDataset& g) {
  write_csv(csv, g.ds);
  std::ofstream os(sidecar_path(csv));
  if (!os) throw HarnessIoError("cannot write sidecar for " + csv.string());
  os << sidecar_json(g).dump(2) << '\n';
}

/// Reads the dataset and, when a sidecar exists, its intercept flag.
inline Dataset read_dataset(const std::filesystem::path& csv, std::optional<bool> has_intercept = std::nullopt) {
  bool intercept = true;
  const auto side = sidecar_path(csv);
  if (std::filesystem::exists(side)) {
    std::ifstream is(side);
    const auto j = nlohmann::json::parse(is, nullptr, /*allow_exceptions=*/false);
    if (j.is_object() && j.contains("has_intercept")) intercept = j["has_intercept"].get<bool>();
  }
  if (has_intercept) intercept = *has_intercept;
  return read_csv(csv, intercept);
}

}  // namespace mtlr
