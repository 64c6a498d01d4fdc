#pragma once

// Independent reference implementations. None of these call into the code
// they check.

#include <cmath>
#include <cstddef>
#include <deque>
#include <map>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "filterbreak/graph.hpp"

namespace oracle {

/// Pairwise Mann-Whitney count: P(score_pos > score_neg) + 0.5 P(tie).
inline double brute_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Pearson r over rows where both values are present; NaN if undefined.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    x.push_back(a[i]);
    y.push_back(b[i]);
  }
  if (x.size() < 2) return std::nan("");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

inline double logistic_loss(double margin, int y) {
  const double p = 1.0 / (1.0 + std::exp(-margin));
  return -(y * std::log(p) + (1 - y) * std::log(1 - p));
}

/// Central differences of the logistic loss in the margin.
inline double fd_grad(double m, int y, double h = 1e-5) {
  return (logistic_loss(m + h, y) - logistic_loss(m - h, y)) / (2 * h);
}

inline double fd_hess(double m, int y, double h = 1e-4) {
  return (logistic_loss(m + h, y) - 2 * logistic_loss(m, y) + logistic_loss(m - h, y)) / (h * h);
}

/// ABP pattern (no `$` options) to an ECMAScript regex over a lowercased URL.
inline std::regex abp_regex(std::string rule) {
  if (rule.rfind("@@", 0) == 0) rule = rule.substr(2);
  std::string re;
  std::size_t i = 0;
  if (rule.rfind("||", 0) == 0) {
    re = "^[a-z][a-z0-9+.-]*://([^/?#:]*\\.)?";
    i = 2;
  } else if (rule.rfind("|", 0) == 0) {
    re = "^";
    i = 1;
  }
  for (; i < rule.size(); ++i) {
    const char c = rule[i];
    if (c == '*') {
      re += ".*";
    } else if (c == '^') {
      re += "(?:[^a-z0-9_.%-]|$)";
    } else if (c == '|' && i + 1 == rule.size()) {
      re += "$";
    } else if (std::string("\\^$.|?*+()[]{}/").find(c) != std::string::npos) {
      re += '\\';
      re += c;
    } else {
      re += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return std::regex(re, std::regex::ECMAScript);
}

inline bool abp_matches(const std::string& rule, std::string url) {
  for (auto& ch : url) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return std::regex_search(url, abp_regex(rule));
}

/// Undirected hop distance from any seed; unreachable nodes are absent.
inline std::map<filterbreak::NodeId, int> undirected_distances(const filterbreak::PageGraph& g,
                                                               const std::set<filterbreak::NodeId>& seeds) {
  std::map<filterbreak::NodeId, std::set<filterbreak::NodeId>> adj;
  for (const auto& e : g.edges()) {
    adj[e.src].insert(e.dst);
    adj[e.dst].insert(e.src);
  }
  std::map<filterbreak::NodeId, int> dist;
  std::deque<filterbreak::NodeId> q;
  for (auto s : seeds) {
    dist[s] = 0;
    q.push_back(s);
  }
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    for (auto v : adj[u]) {
      if (!dist.contains(v)) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace oracle
