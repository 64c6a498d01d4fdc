#pragma once

// Null-fraction drop, greedy correlation drop, and standardization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "filterbreak/errors.hpp"
#include "filterbreak/matrix.hpp"
#include "filterbreak/parallel.hpp"

namespace filterbreak {

inline constexpr double kDefaultNullThreshold = 0.85;
inline constexpr double kDefaultCorrThreshold = 0.73;

/// Pearson correlation between columns with pairwise exclusion of missing
/// cells. Columns without missing cells are pre-normalized so a pair of them
/// costs one dot product. A pair with fewer than two shared rows or a
/// constant side has r = 0.
class CorrelationEngine {
 public:
  explicit CorrelationEngine(const Matrix& X) : X_(X), cols_(X.cols()) {
    const std::size_t n = X.rows();
    for (std::size_t c = 0; c < X.cols(); ++c) {
      bool complete = true;
      double sum = 0;
      for (std::size_t r = 0; r < n; ++r) {
        const double v = X(r, c);
        if (std::isnan(v)) {
          complete = false;
          break;
        }
        sum += v;
      }
      if (!complete) {
        cols_[c].state = State::partial;
        continue;
      }
      const double mean = n ? sum / static_cast<double>(n) : 0.0;
      double ss = 0;
      for (std::size_t r = 0; r < n; ++r) ss += (X(r, c) - mean) * (X(r, c) - mean);
      if (n < 2 || ss == 0) {
        cols_[c].state = State::constant;
        continue;
      }
      cols_[c].state = State::complete;
      const double norm = std::sqrt(ss);
      cols_[c].z.resize(n);
      for (std::size_t r = 0; r < n; ++r) cols_[c].z[r] = (X(r, c) - mean) / norm;
    }
  }

  double r(std::size_t i, std::size_t j) const {
    const auto& a = cols_[i];
    const auto& b = cols_[j];
    if (a.state == State::constant || b.state == State::constant) return 0.0;
    if (a.state == State::complete && b.state == State::complete) {
      double dot = 0;
      for (std::size_t k = 0; k < a.z.size(); ++k) dot += a.z[k] * b.z[k];
      return std::clamp(dot, -1.0, 1.0);
    }
    return pairwise(i, j);
  }

  double abs_r(std::size_t i, std::size_t j) const { return std::abs(r(i, j)); }
  std::size_t cols() const { return cols_.size(); }

 private:
  enum class State : std::uint8_t { complete, partial, constant };
  struct Column {
    State state = State::complete;
    std::vector<double> z;
  };

  double pairwise(std::size_t i, std::size_t j) const {
    const std::size_t n = X_.rows();
    double sx = 0, sy = 0;
    std::size_t m = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double x = X_(r, i), y = X_(r, j);
      if (std::isnan(x) || std::isnan(y)) continue;
      sx += x;
      sy += y;
      ++m;
    }
    if (m < 2) return 0.0;
    const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double x = X_(r, i), y = X_(r, j);
      if (std::isnan(x) || std::isnan(y)) continue;
      sxx += (x - mx) * (x - mx);
      syy += (y - my) * (y - my);
      sxy += (x - mx) * (y - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  }

  const Matrix& X_;
  std::vector<Column> cols_;
};

/// All pairwise |r| for one matrix, computed once and shared between fits
/// that differ only in thresholds.
class CorrelationTable {
 public:
  CorrelationTable(const Matrix& X, unsigned jobs = 1) : n_(X.cols()), abs_(n_ * n_, 0.0) {
    const CorrelationEngine engine(X);
    parallel_for(n_, jobs, [&](std::size_t i) {
      for (std::size_t j = 0; j < i; ++j) abs_[i * n_ + j] = engine.abs_r(i, j);
    });
    for (std::size_t i = 0; i < n_; ++i) {
      abs_[i * n_ + i] = 1.0;
      for (std::size_t j = 0; j < i; ++j) abs_[j * n_ + i] = abs_[i * n_ + j];
    }
  }
  double abs_r(std::size_t i, std::size_t j) const { return abs_[i * n_ + j]; }
  std::size_t cols() const { return n_; }

 private:
  std::size_t n_;
  std::vector<double> abs_;
};

class PreprocessorModel {
 public:
  double null_threshold = kDefaultNullThreshold;
  double corr_threshold = kDefaultCorrThreshold;
  std::size_t n_input = 0;
  std::vector<std::size_t> kept;
  std::vector<double> mean;
  std::vector<double> stddev;

  Matrix transform(const Matrix& X) const {
    if (X.cols() != n_input)
      throw SchemaMismatch("preprocessor fit on " + std::to_string(n_input) + " columns, got " +
                           std::to_string(X.cols()));
    Matrix out(X.rows(), kept.size());
    for (std::size_t r = 0; r < X.rows(); ++r) {
      for (std::size_t k = 0; k < kept.size(); ++k) {
        const double v = X(r, kept[k]);
        if (std::isnan(v)) {
          out(r, k) = v;
        } else {
          out(r, k) = stddev[k] == 0 ? 0.0 : (v - mean[k]) / stddev[k];
        }
      }
    }
    return out;
  }

  friend bool operator==(const PreprocessorModel&, const PreprocessorModel&) = default;
};

inline double null_fraction(const Matrix& X, std::size_t c) {
  if (X.rows() == 0) return 0.0;
  std::size_t missing = 0;
  for (std::size_t r = 0; r < X.rows(); ++r) missing += std::isnan(X(r, c)) ? 1 : 0;
  return static_cast<double>(missing) / static_cast<double>(X.rows());
}

inline PreprocessorModel fit_preprocessor(const Matrix& X, double null_threshold = kDefaultNullThreshold,
                                          double corr_threshold = kDefaultCorrThreshold,
                                          const CorrelationTable* table = nullptr) {
  if (X.rows() < 2) throw TooFewSamples("preprocessor needs at least 2 rows");
  if (table && table->cols() != X.cols()) throw SchemaMismatch("correlation table does not match matrix");
  PreprocessorModel p;
  p.null_threshold = null_threshold;
  p.corr_threshold = corr_threshold;
  p.n_input = X.cols();

  std::optional<CorrelationEngine> engine;
  if (!table) engine.emplace(X);
  auto abs_r = [&](std::size_t i, std::size_t j) { return table ? table->abs_r(i, j) : engine->abs_r(i, j); };

  for (std::size_t c = 0; c < X.cols(); ++c) {
    if (null_fraction(X, c) > null_threshold) continue;
    bool correlated = false;
    for (auto k : p.kept) {
      if (abs_r(c, k) > corr_threshold) {
        correlated = true;
        break;
      }
    }
    if (!correlated) p.kept.push_back(c);
  }
  if (p.kept.empty()) throw AllFeaturesDropped("every feature was dropped by preprocessing");

  for (auto c : p.kept) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const double v = X(r, c);
      if (std::isnan(v)) continue;
      sum += v;
      ++n;
    }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    double ss = 0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const double v = X(r, c);
      if (!std::isnan(v)) ss += (v - mean) * (v - mean);
    }
    p.mean.push_back(mean);
    p.stddev.push_back(n ? std::sqrt(ss / static_cast<double>(n)) : 0.0);
  }
  return p;
}

inline nlohmann::json preprocessor_to_json(const PreprocessorModel& p) {
  return {{"null_threshold", p.null_threshold},
          {"corr_threshold", p.corr_threshold},
          {"n_input", p.n_input},
          {"kept", p.kept},
          {"mean", p.mean},
          {"std", p.stddev}};
}

inline PreprocessorModel preprocessor_from_json(const nlohmann::json& j) {
  PreprocessorModel p;
  try {
    p.null_threshold = j.at("null_threshold").get<double>();
    p.corr_threshold = j.at("corr_threshold").get<double>();
    p.n_input = j.at("n_input").get<std::size_t>();
    p.kept = j.at("kept").get<std::vector<std::size_t>>();
    p.mean = j.at("mean").get<std::vector<double>>();
    p.stddev = j.at("std").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad preprocessor record: ") + e.what());
  }
  if (p.mean.size() != p.kept.size() || p.stddev.size() != p.kept.size())
    throw SchemaError("preprocessor arrays disagree in length");
  for (auto k : p.kept) {
    if (k >= p.n_input) throw SchemaError("kept index out of range");
  }
  return p;
}

}  // namespace filterbreak
