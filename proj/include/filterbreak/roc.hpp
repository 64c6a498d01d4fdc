#pragma once

// ROC curve and area via the rank-sum form of the Mann-Whitney statistic.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "filterbreak/errors.hpp"

namespace filterbreak {

struct RocResult {
  double auc = 0.5;
  std::vector<double> fpr;  // starts at 0, ends at 1
  std::vector<double> tpr;
};

inline RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw SchemaMismatch("scores and labels differ in length");
  std::size_t P = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw DegenerateLabels("labels must be 0 or 1");
    P += static_cast<std::size_t>(y);
  }
  const std::size_t N = labels.size() - P;
  if (P == 0 || N == 0) throw SingleClass("ROC-AUC needs both classes");
  for (double s : scores) {
    if (std::isnan(s)) throw SchemaMismatch("NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks (1-based) over tie groups; the tie group also yields one curve
  // point when walked from the top.
  double pos_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) pos_rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(P), n = static_cast<double>(N);
  RocResult out;
  out.auc = (pos_rank_sum - p * (p + 1) / 2.0) / (p * n);

  out.fpr.push_back(0.0);
  out.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = order.size(); i > 0;) {
    std::size_t j = i;
    while (j > 0 && scores[order[j - 1]] == scores[order[i - 1]]) --j;
    for (std::size_t k = j; k < i; ++k) (labels[order[k]] == 1 ? tp : fp) += 1;
    out.fpr.push_back(static_cast<double>(fp) / n);
    out.tpr.push_back(static_cast<double>(tp) / p);
    i = j;
  }
  return out;
}

/// Linear interpolation of a ROC curve at fpr `x`; on a vertical segment the
/// highest tpr wins.
inline double interpolate_tpr(const RocResult& r, double x) {
  if (x <= 0) {
    double best = 0;
    for (std::size_t i = 0; i < r.fpr.size() && r.fpr[i] == 0; ++i) best = r.tpr[i];
    return best;
  }
  for (std::size_t i = 1; i < r.fpr.size(); ++i) {
    if (r.fpr[i] == x) {
      while (i + 1 < r.fpr.size() && r.fpr[i + 1] == x) ++i;
      return r.tpr[i];
    }
    if (r.fpr[i] > x) {
      const double x0 = r.fpr[i - 1], x1 = r.fpr[i];
      if (x1 == x0) return r.tpr[i];
      const double t = (x - x0) / (x1 - x0);
      return r.tpr[i - 1] + t * (r.tpr[i] - r.tpr[i - 1]);
    }
  }
  return 1.0;
}

}  // namespace filterbreak
