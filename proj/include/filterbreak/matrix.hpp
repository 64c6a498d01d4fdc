#pragma once

// Row-major feature matrices and their CSV / schema-JSONL encodings.
//
// CSV: header `example_id,label,<feature...>`, label 1 = broken, 0 = working,
// an empty cell is a missing value. Numbers are written with 17 significant
// digits so a round trip is exact.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "filterbreak/errors.hpp"
#include "filterbreak/features.hpp"

namespace filterbreak {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw std::invalid_argument("matrix data size mismatch");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const noexcept { return data_; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  Matrix select_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto src = row(idx[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  Matrix select_cols(std::span<const std::size_t> idx) const {
    Matrix out(rows_, idx.size());
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t j = 0; j < idx.size(); ++j) out(r, j) = (*this)(r, idx[j]);
    }
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
    for (std::size_t i = 0; i < a.data_.size(); ++i) {
      const double x = a.data_[i], y = b.data_[i];
      if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
    }
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Labelled feature table; labels are 0/1 with 1 = broken.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<std::string> example_ids;
  std::vector<int> labels;
  Matrix X;

  std::size_t size() const { return labels.size(); }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset d;
    d.feature_names = feature_names;
    d.X = X.select_rows(rows);
    for (auto r : rows) {
      d.example_ids.push_back(example_ids[r]);
      d.labels.push_back(labels[r]);
    }
    return d;
  }

  Dataset drop_features(std::span<const std::size_t> drop) const {
    std::vector<bool> gone(feature_names.size(), false);
    for (auto c : drop) gone.at(c) = true;
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < feature_names.size(); ++c) {
      if (!gone[c]) keep.push_back(c);
    }
    Dataset d;
    for (auto c : keep) d.feature_names.push_back(feature_names[c]);
    d.example_ids = example_ids;
    d.labels = labels;
    d.X = X.select_cols(keep);
    return d;
  }
};

inline Dataset dataset_from_vectors(std::span<const FeatureVector> rows, const FeatureSchema& s = schema()) {
  Dataset d;
  for (const auto& f : s) d.feature_names.push_back(f.name);
  d.X = Matrix(rows.size(), s.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].values.size() != s.size())
      throw SchemaMismatch("feature vector for " + rows[r].example_id + " has " +
                           std::to_string(rows[r].values.size()) + " values, schema has " +
                           std::to_string(s.size()));
    d.example_ids.push_back(rows[r].example_id);
    d.labels.push_back(rows[r].label == Label::broken ? 1 : 0);
    std::copy(rows[r].values.begin(), rows[r].values.end(), d.X.row(r).begin());
  }
  return d;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline double parse_cell(const std::string& cell, std::size_t line) {
  if (cell.empty()) return kMissing;
  if (cell == "nan" || cell == "NaN") return kMissing;
  double v = 0;
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || p != cell.data() + cell.size())
    throw MalformedRecord(line, "not a number: '" + cell + "'");
  return v;
}

}  // namespace detail

inline void write_csv(const Dataset& d, std::ostream& out) {
  out << "example_id,label";
  for (const auto& n : d.feature_names) out << ',' << detail::csv_field(n);
  out << '\n';
  for (std::size_t r = 0; r < d.size(); ++r) {
    out << detail::csv_field(d.example_ids[r]) << ',' << d.labels[r];
    for (double v : d.X.row(r)) out << ',' << format_number(v);
    out << '\n';
  }
}

inline Dataset read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw MalformedRecord(1, "empty feature CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "example_id" || header[1] != "label")
    throw MalformedRecord(1, "header must start with example_id,label");
  Dataset d;
  d.feature_names.assign(header.begin() + 2, header.end());
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw MalformedRecord(line_no, "expected " + std::to_string(header.size()) + " cells, got " +
                                         std::to_string(cells.size()));
    if (cells[1] != "0" && cells[1] != "1") throw MalformedRecord(line_no, "label must be 0 or 1");
    d.example_ids.push_back(cells[0]);
    d.labels.push_back(cells[1] == "1" ? 1 : 0);
    for (std::size_t c = 2; c < cells.size(); ++c) values.push_back(detail::parse_cell(cells[c], line_no));
  }
  d.X = Matrix(d.example_ids.size(), d.feature_names.size(), std::move(values));
  return d;
}

inline nlohmann::json feature_spec_to_json(const FeatureSpec& f) {
  nlohmann::json j = {{"name", f.name},
                      {"scope", to_string(f.scope)},
                      {"kind", to_string(f.kind)},
                      {"source", to_string(f.source)},
                      {"category", to_string(f.category)},
                      {"description", f.description}};
  if (f.importance_rank > 0) j["importance_rank"] = f.importance_rank;
  return j;
}

inline void write_schema_jsonl(const FeatureSchema& s, std::ostream& out) {
  for (const auto& f : s) out << feature_spec_to_json(f).dump() << '\n';
}

/// Checks that a CSV's columns are exactly the current schema, in order.
inline void check_schema(const Dataset& d, const FeatureSchema& s = schema()) {
  if (d.feature_names.size() != s.size())
    throw SchemaMismatch("feature table has " + std::to_string(d.feature_names.size()) +
                         " columns, schema v" + std::to_string(kFeatureSchemaVersion) + " has " +
                         std::to_string(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (d.feature_names[i] != s[i].name)
      throw SchemaMismatch("column " + std::to_string(i) + " is '" + d.feature_names[i] +
                           "', schema expects '" + s[i].name + "'");
  }
}

}  // namespace filterbreak
