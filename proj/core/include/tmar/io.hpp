#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tmar/diagnostics.hpp"
#include "tmar/model.hpp"

namespace tmar {

enum class Transform { kNone, kFirstDifference };

struct SeriesData {
  std::vector<double> values;
  std::string source;  // file path or "simulated"
  Transform transform = Transform::kNone;

  std::size_t n() const { return values.size(); }
};

inline constexpr std::size_t kMinSeriesLength = 10;

/// Reads one value per line, or column `column` (1-based) of comma, tab or
/// space separated rows. Blank lines and lines starting with '#' are skipped,
/// as is a first row whose selected field is not numeric (a header).
/// Throws DataError naming the offending line, or when fewer than
/// `min_length` values remain after the transform.
SeriesData parse_series(std::istream& in, const std::string& source, std::size_t column = 1,
                        Transform transform = Transform::kNone,
                        std::size_t min_length = kMinSeriesLength);
SeriesData load_series(const std::filesystem::path& path, std::size_t column = 1,
                       Transform transform = Transform::kNone,
                       std::size_t min_length = kMinSeriesLength);

/// One value per line with 17 significant digits, so reading back is exact.
void write_series(std::ostream& out, std::span<const double> values);
void write_series(const std::filesystem::path& path, std::span<const double> values);

std::string format_double(double x);
/// Strict parse of a whole string; false on trailing junk or non-finite text.
bool parse_double(const std::string& text, double& out);

/// Flat `key = value` text with '#' comments. Later duplicates win.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in, const std::string& source);
KeyValues load_key_values(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const KeyValues& values);

std::string join_numbers(std::span<const double> values);
std::vector<double> split_numbers(const std::string& text);

/// Model parameters as key-value pairs (g, orders, weights, means, scales,
/// dofs, phi_k) and back.
KeyValues spec_to_key_values(const TMarSpec& spec);
TMarSpec spec_from_key_values(const KeyValues& values);

/// Comma separated trace with a header row of parameter names.
void write_trace(std::ostream& out, const ParameterTable& table);
void write_trace(const std::filesystem::path& path, const ParameterTable& table);
ParameterTable read_trace(std::istream& in, const std::string& source);
ParameterTable read_trace(const std::filesystem::path& path);

/// Summary lines `<name>.mean = ...` etc. plus acceptance rates.
KeyValues summary_to_key_values(const PosteriorSummary& summary);

}  // namespace tmar
