#pragma once

// Second-order gradient boosting with logistic loss and exact greedy splits.
//
// Split rule: a row goes left when x < threshold; a missing x follows the
// node's learned default direction. Thresholds are midpoints between adjacent
// distinct training values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "filterbreak/errors.hpp"
#include "filterbreak/matrix.hpp"
#include "filterbreak/parallel.hpp"
#include "filterbreak/rng.hpp"

namespace filterbreak {

struct Hyperparams {
  int n_trees = 200;
  int max_depth = 4;
  double learning_rate = 0.1;
  double min_child_weight = 1.0;
  double l2_lambda = 1.0;
  double subsample = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_trees < 0) throw ConfigError("n_trees must be non-negative");
    if (max_depth < 1) throw ConfigError("max_depth must be positive");
    if (!(learning_rate > 0 && learning_rate <= 1)) throw ConfigError("learning_rate must lie in (0, 1]");
    if (!(min_child_weight >= 0)) throw ConfigError("min_child_weight must be non-negative");
    if (!(l2_lambda > 0)) throw ConfigError("l2_lambda must be positive");
    if (!(subsample > 0 && subsample <= 1)) throw ConfigError("subsample must lie in (0, 1]");
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

inline constexpr double kMinSplitGain = 1e-6;

inline double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

/// Logistic loss of a margin against a 0/1 label, and its first two
/// derivatives with respect to the margin.
inline double logistic_loss(double margin, int y) {
  // log(1 + e^m) - y m, computed without overflow
  const double softplus = margin > 0 ? margin + std::log1p(std::exp(-margin)) : std::log1p(std::exp(margin));
  return softplus - static_cast<double>(y) * margin;
}
inline double logistic_grad(double margin, int y) { return sigmoid(margin) - static_cast<double>(y); }
inline double logistic_hess(double margin) {
  const double p = sigmoid(margin);
  return p * (1.0 - p);
}

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  double weight = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      const double x = row[static_cast<std::size_t>(n.feature)];
      const bool left = std::isnan(x) ? n.default_left : x < n.threshold;
      i = left ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].weight;
  }

  int depth() const { return depth_from(0); }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  int depth_from(int i) const {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }
};

class GBDTModel {
 public:
  double base_score = 0;
  std::size_t n_features = 0;
  Hyperparams hp;
  std::vector<Tree> trees;

  double margin(std::span<const double> row) const {
    double m = base_score;
    for (const auto& t : trees) m += t.predict(row);
    return m;
  }

  std::vector<double> predict_proba(const Matrix& X) const {
    if (X.cols() != n_features)
      throw SchemaMismatch("model expects " + std::to_string(n_features) + " features, got " +
                           std::to_string(X.cols()));
    std::vector<double> out(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] = sigmoid(margin(X.row(r)));
    return out;
  }

  friend bool operator==(const GBDTModel&, const GBDTModel&) = default;
};

namespace detail {

struct SplitCandidate {
  double gain = 0;
  int feature = -1;
  double threshold = 0;
  bool default_left = true;
  double g_left = 0, h_left = 0;
};

inline double leaf_score(double g, double h, double lambda) { return g * g / (h + lambda); }

/// Present rows of one feature in ascending value order, with the values.
struct SortedColumn {
  std::vector<std::uint32_t> rows;
  std::vector<double> values;
};

class TreeGrower {
 public:
  TreeGrower(const Matrix& X, const std::vector<SortedColumn>& sorted,
             const Hyperparams& hp, unsigned jobs)
      : X_(X), sorted_(sorted), hp_(hp), jobs_(jobs) {}

  Tree grow(const std::vector<double>& g, const std::vector<double>& h, const std::vector<char>& in_sample) {
    const std::size_t n = X_.rows();
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<int> row_node(n, -1);
    double G = 0, H = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_sample[i]) continue;
      row_node[i] = 0;
      G += g[i];
      H += h[i];
    }
    std::vector<int> frontier = {0};
    std::vector<double> node_g = {G}, node_h = {H};

    for (int depth = 0; depth < hp_.max_depth && !frontier.empty(); ++depth) {
      // slot of each tree node in the frontier
      std::vector<int> slot(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) slot[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
      std::vector<int> row_slot(n, -1);
      for (std::size_t i = 0; i < n; ++i) {
        if (row_node[i] >= 0) row_slot[i] = slot[static_cast<std::size_t>(row_node[i])];
      }
      std::vector<double> parent_score(frontier.size());
      for (std::size_t s = 0; s < frontier.size(); ++s) parent_score[s] = leaf_score(node_g[s], node_h[s], hp_.l2_lambda);

      const std::size_t F = X_.cols();
      std::vector<std::vector<SplitCandidate>> per_feature(F);
      parallel_for(F, jobs_, [&](std::size_t f) {
        per_feature[f] = best_splits_for_feature(f, row_slot, g, h, node_g, node_h, parent_score);
      });

      std::vector<SplitCandidate> best(frontier.size());
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t s = 0; s < frontier.size(); ++s) {
          if (per_feature[f][s].gain > best[s].gain) best[s] = per_feature[f][s];
        }
      }

      std::vector<int> next;
      std::vector<double> next_g, next_h;
      std::vector<int> left_of(frontier.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        const int id = frontier[s];
        if (best[s].feature < 0 || best[s].gain <= kMinSplitGain) {
          make_leaf(tree, id, node_g[s], node_h[s]);
          continue;
        }
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best[s].feature;
        node.threshold = best[s].threshold;
        node.default_left = best[s].default_left;
        node.left = l;
        node.right = l + 1;
        left_of[s] = l;
        next.push_back(l);
        next.push_back(l + 1);
        next_g.push_back(best[s].g_left);
        next_h.push_back(best[s].h_left);
        next_g.push_back(node_g[s] - best[s].g_left);
        next_h.push_back(node_h[s] - best[s].h_left);
      }

      for (std::size_t i = 0; i < n; ++i) {
        const int id = row_node[i];
        if (id < 0) continue;
        const int s = slot[static_cast<std::size_t>(id)];
        if (s < 0 || left_of[static_cast<std::size_t>(s)] < 0) {
          row_node[i] = -1;
          continue;
        }
        const auto& node = tree.nodes[static_cast<std::size_t>(id)];
        const double x = X_(i, static_cast<std::size_t>(node.feature));
        const bool left = std::isnan(x) ? node.default_left : x < node.threshold;
        row_node[i] = left ? node.left : node.right;
      }
      frontier = std::move(next);
      node_g = std::move(next_g);
      node_h = std::move(next_h);
    }
    for (std::size_t s = 0; s < frontier.size(); ++s) make_leaf(tree, frontier[s], node_g[s], node_h[s]);
    return tree;
  }

 private:
  void make_leaf(Tree& tree, int id, double G, double H) const {
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = -1;
    node.weight = -G / (H + hp_.l2_lambda) * hp_.learning_rate;
  }

  std::vector<SplitCandidate> best_splits_for_feature(std::size_t f, const std::vector<int>& row_slot,
                                                      const std::vector<double>& g,
                                                      const std::vector<double>& h,
                                                      const std::vector<double>& node_g,
                                                      const std::vector<double>& node_h,
                                                      const std::vector<double>& parent_score) const {
    const std::size_t S = node_g.size();
    std::vector<SplitCandidate> best(S);
    const auto& order = sorted_[f].rows;
    const auto& values = sorted_[f].values;
    if (order.size() < 2) return best;

    // Present-value totals per node, so the missing mass is the remainder.
    const bool complete = order.size() == X_.rows();
    std::vector<double> pg(complete ? node_g : std::vector<double>(S, 0));
    std::vector<double> ph(complete ? node_h : std::vector<double>(S, 0));
    if (!complete) {
      for (auto i : order) {
        const int s = row_slot[i];
        if (s < 0) continue;
        pg[static_cast<std::size_t>(s)] += g[i];
        ph[static_cast<std::size_t>(s)] += h[i];
      }
    }

    std::vector<double> gl(S, 0), hl(S, 0), last(S, 0);
    std::vector<char> seen(S, 0);
    const double lambda = hp_.l2_lambda;
    const double mcw = hp_.min_child_weight;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto i = order[k];
      const int si = row_slot[i];
      if (si < 0) continue;
      const auto s = static_cast<std::size_t>(si);
      const double x = values[k];
      if (seen[s] && x > last[s]) {
        const double G = node_g[s], H = node_h[s];
        const double gm = G - pg[s], hm = H - ph[s];
        const double parent = parent_score[s];
        const double thr = last[s] + (x - last[s]) / 2;
        // missing rows to the right
        {
          const double GL = gl[s], HL = hl[s];
          const double GR = G - GL, HR = H - HL;
          if (HL >= mcw && HR >= mcw) {
            const double gain = 0.5 * (leaf_score(GL, HL, lambda) + leaf_score(GR, HR, lambda) - parent);
            if (gain > best[s].gain) best[s] = {gain, static_cast<int>(f), thr, false, GL, HL};
          }
        }
        if (!complete && hm > 0) {
          const double GL = gl[s] + gm, HL = hl[s] + hm;
          const double GR = G - GL, HR = H - HL;
          if (HL >= mcw && HR >= mcw) {
            const double gain = 0.5 * (leaf_score(GL, HL, lambda) + leaf_score(GR, HR, lambda) - parent);
            if (gain > best[s].gain) best[s] = {gain, static_cast<int>(f), thr, true, GL, HL};
          }
        }
      }
      gl[s] += g[i];
      hl[s] += h[i];
      last[s] = x;
      seen[s] = 1;
    }
    return best;
  }

  const Matrix& X_;
  const std::vector<SortedColumn>& sorted_;
  const Hyperparams& hp_;
  unsigned jobs_;
};

}  // namespace detail

/// Fits the booster. `jobs` parallelizes the per-feature split search and
/// never changes the result.
inline GBDTModel train(const Matrix& X, std::span<const int> y, const Hyperparams& hp, unsigned jobs = 1) {
  hp.validate();
  if (y.size() != X.rows()) throw SchemaMismatch("label count does not match row count");
  std::size_t positives = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw DegenerateLabels("labels must be 0 or 1");
    positives += static_cast<std::size_t>(v);
  }
  if (positives == 0 || positives == y.size()) throw DegenerateLabels("training labels contain a single class");

  const std::size_t n = X.rows(), F = X.cols();
  GBDTModel m;
  m.hp = hp;
  m.n_features = F;
  const double rate = static_cast<double>(positives) / static_cast<double>(n);
  m.base_score = std::log(rate / (1.0 - rate));

  // Present rows of each feature in ascending value order; features with fewer
  // than two distinct values cannot split and get an empty order.
  std::vector<detail::SortedColumn> sorted(F);
  parallel_for(F, jobs, [&](std::size_t f) {
    auto& col = sorted[f];
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isnan(X(i, f))) col.rows.push_back(static_cast<std::uint32_t>(i));
    }
    std::stable_sort(col.rows.begin(), col.rows.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
    if (!col.rows.empty() && X(col.rows.front(), f) == X(col.rows.back(), f)) col.rows.clear();
    for (auto i : col.rows) col.values.push_back(X(i, f));
  });

  std::vector<double> margin(n, m.base_score), g(n), h(n);
  std::vector<char> in_sample(n, 1);
  detail::TreeGrower grower(X, sorted, hp, jobs);
  for (int t = 0; t < hp.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = logistic_grad(margin[i], y[i]);
      h[i] = logistic_hess(margin[i]);
    }
    if (hp.subsample < 1.0) {
      Rng rng(derive_seed(hp.seed, static_cast<std::uint64_t>(t)));
      for (std::size_t i = 0; i < n; ++i) in_sample[i] = rng.bernoulli(hp.subsample) ? 1 : 0;
    }
    Tree tree = grower.grow(g, h, in_sample);
    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(X.row(i));
    m.trees.push_back(std::move(tree));
  }
  return m;
}

namespace detail {

inline nlohmann::json tree_node_to_json(const Tree& t, int i) {
  const auto& n = t.nodes[static_cast<std::size_t>(i)];
  if (n.is_leaf()) return {{"leaf", n.weight}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"default_left", n.default_left},
          {"left", tree_node_to_json(t, n.left)},
          {"right", tree_node_to_json(t, n.right)}};
}

inline int tree_node_from_json(const nlohmann::json& j, Tree& t, std::size_t n_features, int depth) {
  if (depth > 64) throw SchemaError("tree is too deep");
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("leaf")) {
    t.nodes[static_cast<std::size_t>(id)].weight = j.at("leaf").get<double>();
    return id;
  }
  TreeNode n;
  n.feature = j.at("feature").get<int>();
  if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features)
    throw SchemaError("split feature index out of range");
  n.threshold = j.at("threshold").get<double>();
  n.default_left = j.at("default_left").get<bool>();
  n.left = tree_node_from_json(j.at("left"), t, n_features, depth + 1);
  n.right = tree_node_from_json(j.at("right"), t, n_features, depth + 1);
  t.nodes[static_cast<std::size_t>(id)] = n;
  return id;
}

}  // namespace detail

inline nlohmann::json hyperparams_to_json(const Hyperparams& hp) {
  return {{"n_trees", hp.n_trees},
          {"max_depth", hp.max_depth},
          {"learning_rate", hp.learning_rate},
          {"min_child_weight", hp.min_child_weight},
          {"l2_lambda", hp.l2_lambda},
          {"subsample", hp.subsample},
          {"seed", hp.seed}};
}

inline Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  Hyperparams hp;
  try {
    hp.n_trees = j.at("n_trees").get<int>();
    hp.max_depth = j.at("max_depth").get<int>();
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.min_child_weight = j.at("min_child_weight").get<double>();
    hp.l2_lambda = j.at("l2_lambda").get<double>();
    hp.subsample = j.at("subsample").get<double>();
    hp.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad hyperparams record: ") + e.what());
  }
  hp.validate();
  return hp;
}

inline nlohmann::json gbdt_to_json(const GBDTModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) trees.push_back(detail::tree_node_to_json(t, 0));
  return {{"base_score", m.base_score},
          {"n_features", m.n_features},
          {"hyperparams", hyperparams_to_json(m.hp)},
          {"trees", std::move(trees)}};
}

inline GBDTModel gbdt_from_json(const nlohmann::json& j) {
  GBDTModel m;
  try {
    m.base_score = j.at("base_score").get<double>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.hp = hyperparams_from_json(j.at("hyperparams"));
    for (const auto& tj : j.at("trees")) {
      Tree t;
      detail::tree_node_from_json(tj, t, m.n_features, 0);
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad model record: ") + e.what());
  }
  return m;
}

}  // namespace filterbreak
