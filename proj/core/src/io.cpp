#include "tmar/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tmar/errors.hpp"

namespace tmar {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool in_field = false;
  const bool delimited = line.find_first_of(",;\t") != std::string::npos;
  for (char ch : line) {
    const bool sep = delimited ? (ch == ',' || ch == ';' || ch == '\t') : (ch == ' ');
    if (sep) {
      if (delimited || in_field) fields.push_back(trim(current));
      current.clear();
      in_field = false;
    } else {
      current.push_back(ch);
      in_field = true;
    }
  }
  if (delimited || in_field) fields.push_back(trim(current));
  return fields;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  const char* end = t.data() + t.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

SeriesData parse_series(std::istream& in, const std::string& source, std::size_t column,
                        Transform transform, std::size_t min_length) {
  if (column == 0) throw UsageError("column numbers start at 1");
  SeriesData data;
  data.source = source;
  data.transform = transform;
  std::string line;
  std::size_t line_no = 0;
  bool seen_row = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_fields(t);
    if (fields.size() < column) {
      throw DataError(source + ":" + std::to_string(line_no) + ": no column " + std::to_string(column));
    }
    double v = 0.0;
    if (!parse_double(fields[column - 1], v)) {
      if (!seen_row) {
        seen_row = true;
        continue;
      }
      throw DataError(source + ":" + std::to_string(line_no) + ": not a number: '" +
                      fields[column - 1] + "'");
    }
    seen_row = true;
    data.values.push_back(v);
  }
  if (transform == Transform::kFirstDifference) {
    if (data.values.empty()) throw DataError(source + ": no values");
    std::vector<double> diff(data.values.size() - 1);
    for (std::size_t i = 1; i < data.values.size(); ++i) diff[i - 1] = data.values[i] - data.values[i - 1];
    data.values = std::move(diff);
  }
  if (data.values.size() < min_length) {
    throw DataError(source + ": need at least " + std::to_string(min_length) +
                    " values, found " + std::to_string(data.values.size()));
  }
  return data;
}

SeriesData load_series(const std::filesystem::path& path, std::size_t column,
                       Transform transform, std::size_t min_length) {
  auto in = open_input(path);
  return parse_series(in, path.string(), column, transform, min_length);
}

void write_series(std::ostream& out, std::span<const double> values) {
  for (double v : values) out << format_double(v) << '\n';
}

void write_series(const std::filesystem::path& path, std::span<const double> values) {
  auto out = open_output(path);
  write_series(out, values);
}

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(line_no) + ": empty key");
    values[key] = trim(t.substr(eq + 1));
  }
  return values;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  return parse_key_values(in, path.string());
}

void write_key_values(std::ostream& out, const KeyValues& values) {
  for (const auto& [k, v] : values) out << k << " = " << v << '\n';
}

std::string join_numbers(std::span<const double> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    s += format_double(values[i]);
  }
  return s;
}

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> out;
  std::string field;
  std::istringstream in(text);
  while (std::getline(in, field, ',')) {
    if (trim(field).empty()) continue;
    double v = 0.0;
    if (!parse_double(field, v)) throw UsageError("not a number: '" + trim(field) + "'");
    out.push_back(v);
  }
  return out;
}

KeyValues spec_to_key_values(const TMarSpec& spec) {
  KeyValues kv;
  const std::size_t g = spec.components();
  kv["g"] = std::to_string(g);
  std::vector<double> orders;
  for (auto p : spec.orders()) orders.push_back(static_cast<double>(p));
  kv["orders"] = join_numbers(orders);
  kv["weights"] = join_numbers(spec.weights());
  kv["means"] = join_numbers(spec.means());
  kv["scales"] = join_numbers(spec.scales());
  kv["dofs"] = join_numbers(spec.dofs());
  for (std::size_t k = 0; k < g; ++k) kv["phi_" + std::to_string(k + 1)] = join_numbers(spec.ar(k));
  return kv;
}

TMarSpec spec_from_key_values(const KeyValues& values) {
  auto get = [&](const std::string& key) {
    const auto it = values.find(key);
    if (it == values.end()) throw UsageError("missing model key '" + key + "'");
    return it->second;
  };
  const auto weights = split_numbers(get("weights"));
  const std::size_t g = weights.size();
  std::vector<std::vector<double>> ar(g);
  for (std::size_t k = 0; k < g; ++k) {
    const auto it = values.find("phi_" + std::to_string(k + 1));
    if (it != values.end()) ar[k] = split_numbers(it->second);
  }
  std::vector<double> means = values.count("means") ? split_numbers(get("means")) : std::vector<double>(g, 0.0);
  return TMarSpec(weights, std::move(means), std::move(ar), split_numbers(get("scales")),
                  split_numbers(get("dofs")));
}

void write_trace(std::ostream& out, const ParameterTable& table) {
  for (std::size_t c = 0; c < table.names.size(); ++c) {
    if (c) out << ',';
    out << table.names[c];
  }
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out << ',';
      out << format_double(table.columns[c][r]);
    }
    out << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const ParameterTable& table) {
  auto out = open_output(path);
  write_trace(out, table);
}

ParameterTable read_trace(std::istream& in, const std::string& source) {
  ParameterTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(trim(line));
    if (table.names.empty()) {
      table.names = fields;
      table.columns.resize(fields.size());
      continue;
    }
    if (fields.size() != table.names.size()) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(table.names.size()) + " fields");
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_double(fields[c], v)) {
        throw DataError(source + ":" + std::to_string(line_no) + ": not a number: '" + fields[c] + "'");
      }
      table.columns[c].push_back(v);
    }
  }
  if (table.names.empty() || table.rows() == 0) throw DataError(source + ": empty trace");
  return table;
}

ParameterTable read_trace(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_trace(in, path.string());
}

KeyValues summary_to_key_values(const PosteriorSummary& summary) {
  KeyValues kv;
  for (const auto& p : summary.parameters) {
    kv[p.name + ".mean"] = format_double(p.mean);
    kv[p.name + ".sd"] = format_double(p.sd);
    kv[p.name + ".hdi_lower"] = format_double(p.hdi_lower);
    kv[p.name + ".hdi_upper"] = format_double(p.hdi_upper);
    kv[p.name + ".ess"] = format_double(p.ess);
  }
  kv["acceptance.phi"] = join_numbers(summary.ar_acceptance);
  kv["acceptance.nu"] = join_numbers(summary.dof_acceptance);
  kv["acceptance.pi"] = format_double(summary.weight_acceptance);
  kv["relabeled"] = summary.relabeled ? "true" : "false";
  kv["relabel.identity_share"] = format_double(summary.identity_share);
  return kv;
}

}  // namespace tmar
