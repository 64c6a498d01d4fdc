#pragma once

// Cross-validation, nested hyperparameter search, leave-one-covariate-out
// importance, and learning curves. Every fit sees only its training split,
// and every random choice comes from a seed derived from (seed, fold, role),
// so results do not depend on the job count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "filterbreak/errors.hpp"
#include "filterbreak/features.hpp"
#include "filterbreak/matrix.hpp"
#include "filterbreak/parallel.hpp"
#include "filterbreak/pipeline.hpp"
#include "filterbreak/rng.hpp"
#include "filterbreak/roc.hpp"

namespace filterbreak {

namespace detail {
// Role tags mixed into derived seeds.
inline constexpr std::uint64_t kSeedFolds = 1, kSeedModel = 2, kSeedInner = 3, kSeedSearch = 4, kSeedSubsample = 5;
}  // namespace detail

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return kMissing;
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Population standard deviation.
inline double std_of(std::span<const double> xs) {
  if (xs.empty()) return kMissing;
  const double m = mean_of(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

/// Fold index per row: each class is shuffled with its own seed and dealt
/// round-robin, so fold class counts differ by at most one.
inline std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("need at least 2 folds");
  std::vector<int> fold(labels.size(), 0);
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) rows.push_back(i);
    }
    if (rows.size() < static_cast<std::size_t>(k))
      throw TooFewSamples("class " + std::to_string(cls) + " has " + std::to_string(rows.size()) +
                          " rows, fewer than " + std::to_string(k) + " folds");
    Rng rng(derive_seed(seed, detail::kSeedFolds, static_cast<std::uint64_t>(cls)));
    rng.shuffle(std::span<std::size_t>(rows));
    for (std::size_t j = 0; j < rows.size(); ++j) fold[rows[j]] = static_cast<int>(j % static_cast<std::size_t>(k));
  }
  return fold;
}

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(const std::vector<int>& fold, int k) {
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == k ? test : train).push_back(i);
  return {train, test};
}

/// Fits on `train_rows` of `d` and nothing else.
inline Classifier train_on_split(const Dataset& d, std::span<const std::size_t> train_rows,
                                 const PipelineParams& params, unsigned jobs = 1,
                                 const CorrelationTable* correlations = nullptr) {
  return fit_classifier(d.subset(train_rows), params, jobs, correlations);
}

inline RocResult score_split(const Classifier& c, const Dataset& d, std::span<const std::size_t> test_rows) {
  const Dataset test = d.subset(test_rows);
  return roc_auc(c.predict_proba(test.X), test.labels);
}

inline constexpr std::size_t kRocGridPoints = 101;

struct FoldResult {
  int fold = 0;
  double auc = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  PipelineParams params;
  double inner_auc = kMissing;  // best mean inner AUC (nested runs only)
};

struct CVReport {
  std::string method;
  std::uint64_t seed = 0;
  int outer_folds = 0;
  int inner_folds = 0;
  int budget = 0;
  std::vector<FoldResult> folds;
  double mean_auc = kMissing;
  double std_auc = kMissing;
  std::vector<double> mean_fpr;
  std::vector<double> mean_tpr;

  std::vector<double> fold_aucs() const {
    std::vector<double> out;
    for (const auto& f : folds) out.push_back(f.auc);
    return out;
  }
};

namespace detail {

inline void finish_report(CVReport& r, const std::vector<RocResult>& rocs) {
  const auto aucs = r.fold_aucs();
  r.mean_auc = mean_of(aucs);
  r.std_auc = std_of(aucs);
  r.mean_fpr.clear();
  r.mean_tpr.clear();
  for (std::size_t i = 0; i < kRocGridPoints; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(kRocGridPoints - 1);
    double t = 0;
    for (const auto& roc : rocs) t += interpolate_tpr(roc, x);
    r.mean_fpr.push_back(x);
    r.mean_tpr.push_back(i == 0 ? 0.0 : t / static_cast<double>(rocs.size()));
  }
  r.mean_tpr.back() = 1.0;
}

inline PipelineParams fold_params(PipelineParams p, std::uint64_t seed, int fold) {
  p.hp.seed = derive_seed(seed, kSeedModel, static_cast<std::uint64_t>(fold));
  return p;
}

}  // namespace detail

/// Plain k-fold CV with fixed parameters.
inline CVReport cross_validate(const Dataset& d, const PipelineParams& params, int folds, std::uint64_t seed,
                               unsigned jobs = 1) {
  const auto fold = stratified_folds(d.labels, folds, seed);
  CVReport r;
  r.method = "cross_validate";
  r.seed = seed;
  r.outer_folds = folds;
  r.folds.resize(static_cast<std::size_t>(folds));
  std::vector<RocResult> rocs(static_cast<std::size_t>(folds));
  parallel_for(static_cast<std::size_t>(folds), jobs, [&](std::size_t k) {
    const auto [train, test] = split_rows(fold, static_cast<int>(k));
    const auto p = detail::fold_params(params, seed, static_cast<int>(k));
    const auto c = train_on_split(d, train, p);
    rocs[k] = score_split(c, d, test);
    r.folds[k] = {static_cast<int>(k), rocs[k].auc, train.size(), test.size(), p, kMissing};
  });
  detail::finish_report(r, rocs);
  return r;
}

struct SearchSpace {
  int n_trees_min = 50, n_trees_max = 400;
  int depth_min = 2, depth_max = 8;
  double lr_min = 0.01, lr_max = 0.3;
  double null_min = 0.7, null_max = 0.95;
  double corr_min = 0.6, corr_max = 0.9;

  PipelineParams sample(Rng& rng) const {
    PipelineParams p;
    p.hp.n_trees = static_cast<int>(rng.uniform_int(n_trees_min, n_trees_max));
    p.hp.max_depth = static_cast<int>(rng.uniform_int(depth_min, depth_max));
    p.hp.learning_rate = rng.log_uniform(lr_min, lr_max);
    p.null_threshold = rng.uniform(null_min, null_max);
    p.corr_threshold = rng.uniform(corr_min, corr_max);
    return p;
  }
};

/// Outer stratified folds; inside each outer training split, `budget` random
/// configurations are scored by mean AUC over `inner` stratified folds, and
/// the best one is refit on the whole outer training split.
inline CVReport nested_cv(const Dataset& d, int outer = 10, int inner = 3, int budget = 10, std::uint64_t seed = 0,
                          unsigned jobs = 1, const SearchSpace& space = {}) {
  if (budget < 1) throw ConfigError("search budget must be positive");
  std::size_t pos = 0;
  for (int y : d.labels) pos += static_cast<std::size_t>(y == 1);
  const std::size_t neg = d.size() - pos;
  const auto need = static_cast<std::size_t>(outer) * 2;
  if (pos < need || neg < need)
    throw TooFewSamples("nested CV needs at least " + std::to_string(need) + " rows per class");

  const auto fold = stratified_folds(d.labels, outer, seed);
  CVReport r;
  r.method = "nested_cv";
  r.seed = seed;
  r.outer_folds = outer;
  r.inner_folds = inner;
  r.budget = budget;
  r.folds.resize(static_cast<std::size_t>(outer));
  std::vector<RocResult> rocs(static_cast<std::size_t>(outer));

  parallel_for(static_cast<std::size_t>(outer), jobs, [&](std::size_t k) {
    const auto [train, test] = split_rows(fold, static_cast<int>(k));
    const Dataset outer_train = d.subset(train);
    const auto inner_seed = derive_seed(seed, detail::kSeedInner, k);
    const auto inner_fold = stratified_folds(outer_train.labels, inner, inner_seed);

    Rng search(derive_seed(seed, detail::kSeedSearch, k));
    std::vector<PipelineParams> configs;
    for (int b = 0; b < budget; ++b) configs.push_back(space.sample(search));

    std::vector<Dataset> inner_train;
    std::vector<Dataset> inner_test;
    std::vector<CorrelationTable> tables;
    for (int f = 0; f < inner; ++f) {
      const auto [itr, ite] = split_rows(inner_fold, f);
      inner_train.push_back(outer_train.subset(itr));
      inner_test.push_back(outer_train.subset(ite));
      tables.emplace_back(inner_train.back().X);
    }

    double best_score = -1;
    std::size_t best = 0;
    for (std::size_t b = 0; b < configs.size(); ++b) {
      std::vector<double> scores;
      for (int f = 0; f < inner; ++f) {
        const auto p = detail::fold_params(configs[b], inner_seed, f);
        const auto fu = static_cast<std::size_t>(f);
        const auto c = fit_classifier(inner_train[fu], p, 1, &tables[fu]);
        scores.push_back(roc_auc(c.predict_proba(inner_test[fu].X), inner_test[fu].labels).auc);
      }
      const double s = mean_of(scores);
      if (s > best_score) {
        best_score = s;
        best = b;
      }
    }

    const auto p = detail::fold_params(configs[best], seed, static_cast<int>(k));
    const auto c = fit_classifier(outer_train, p);
    rocs[k] = score_split(c, d, test);
    r.folds[k] = {static_cast<int>(k), rocs[k].auc, train.size(), test.size(), p, best_score};
  });
  detail::finish_report(r, rocs);
  return r;
}

// ---------------------------------------------------------------------------
// Leave-one-covariate-out

inline constexpr std::array<std::string_view, 6> kLocoGroups = {"page",     "intervention", "absolute",
                                                                "relative", "expert",       "auto"};

/// Features of `d` that belong to a group. Delta features count as absolute.
inline std::vector<std::size_t> group_members(const Dataset& d, std::string_view group) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < d.feature_names.size(); ++c) {
    const auto* f = find_feature(d.feature_names[c]);
    if (!f) continue;
    bool in = false;
    if (group == "page") in = f->scope == FeatureScope::page;
    else if (group == "intervention") in = f->scope == FeatureScope::intervention;
    else if (group == "absolute") in = f->kind != FeatureKind::relative;
    else if (group == "relative") in = f->kind == FeatureKind::relative;
    else if (group == "expert") in = f->source == FeatureSource::expert;
    else if (group == "auto") in = f->source == FeatureSource::auto_generated;
    if (in) out.push_back(c);
  }
  return out;
}

inline std::vector<std::size_t> resolve_target(const Dataset& d, const std::string& target) {
  if (std::find(kLocoGroups.begin(), kLocoGroups.end(), target) != kLocoGroups.end())
    return group_members(d, target);
  for (std::size_t c = 0; c < d.feature_names.size(); ++c) {
    if (d.feature_names[c] == target) return {c};
  }
  throw UnknownTarget("'" + target + "' is neither a feature nor a group");
}

struct LocoEntry {
  std::string target;
  std::size_t removed = 0;
  double mean_auc_loss = 0;
  double std_auc_loss = 0;
  double reduced_mean_auc = 0;
  int rank = 0;
};

struct LocoReport {
  std::uint64_t seed = 0;
  int folds = 0;
  double baseline_mean_auc = 0;
  double baseline_std_auc = 0;
  std::vector<double> baseline_fold_aucs;
  std::vector<LocoEntry> entries;
};

inline LocoReport loco(const Dataset& d, const std::vector<std::string>& targets, int folds = 5,
                       std::uint64_t seed = 0, unsigned jobs = 1) {
  std::vector<std::vector<std::size_t>> removed;
  for (const auto& t : targets) removed.push_back(resolve_target(d, t));

  const PipelineParams defaults;
  LocoReport r;
  r.seed = seed;
  r.folds = folds;
  const auto base = cross_validate(d, defaults, folds, seed, jobs);
  r.baseline_fold_aucs = base.fold_aucs();
  r.baseline_mean_auc = base.mean_auc;
  r.baseline_std_auc = base.std_auc;

  for (std::size_t t = 0; t < targets.size(); ++t) {
    LocoEntry e;
    e.target = targets[t];
    e.removed = removed[t].size();
    const Dataset reduced = d.drop_features(removed[t]);
    if (reduced.feature_names.empty()) throw AllFeaturesDropped("removing '" + targets[t] + "' leaves no features");
    const auto rep = cross_validate(reduced, defaults, folds, seed, jobs);
    const auto reduced_aucs = rep.fold_aucs();
    std::vector<double> losses;
    for (std::size_t k = 0; k < reduced_aucs.size(); ++k) losses.push_back(r.baseline_fold_aucs[k] - reduced_aucs[k]);
    e.mean_auc_loss = r.baseline_mean_auc - rep.mean_auc;
    e.reduced_mean_auc = r.baseline_mean_auc - e.mean_auc_loss;
    e.std_auc_loss = std_of(losses);
    r.entries.push_back(std::move(e));
  }
  std::vector<std::size_t> order(r.entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r.entries[a].mean_auc_loss > r.entries[b].mean_auc_loss;
  });
  for (std::size_t i = 0; i < order.size(); ++i) r.entries[order[i]].rank = static_cast<int>(i) + 1;
  return r;
}

// ---------------------------------------------------------------------------
// Learning curve

inline const std::vector<double>& default_fractions() {
  static const std::vector<double> f = {0.01, 0.25, 0.50, 0.75, 1.00};
  return f;
}

struct CurvePoint {
  double fraction = 0;
  bool available = true;
  double mean_auc = kMissing;
  double std_auc = kMissing;
  std::vector<double> fold_aucs;
};

struct LearningCurve {
  std::uint64_t seed = 0;
  int folds = 0;
  std::vector<CurvePoint> points;
};

/// Per fold and fraction, trains on round(fraction * n_c) rows of each class
/// taken from a seeded permutation of the fold's training rows (so smaller
/// fractions are subsets of larger ones); fraction 1 uses the whole split and
/// reproduces cross_validate with the same seed.
inline LearningCurve learning_curve(const Dataset& d, const std::vector<double>& fractions = default_fractions(),
                                    int folds = 10, std::uint64_t seed = 0, unsigned jobs = 1) {
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0 && fractions[i] <= 1)) throw ConfigError("fractions must lie in (0, 1]");
    if (i > 0 && !(fractions[i] > fractions[i - 1])) throw ConfigError("fractions must be strictly increasing");
  }
  const auto fold = stratified_folds(d.labels, folds, seed);
  const PipelineParams defaults;
  LearningCurve lc;
  lc.seed = seed;
  lc.folds = folds;
  const std::size_t F = fractions.size(), K = static_cast<std::size_t>(folds);
  std::vector<std::optional<double>> auc(F * K);

  parallel_for(K, jobs, [&](std::size_t k) {
    const auto [train, test] = split_rows(fold, static_cast<int>(k));
    std::array<std::vector<std::size_t>, 2> by_class;
    for (auto i : train) by_class[static_cast<std::size_t>(d.labels[i])].push_back(i);
    Rng rng(derive_seed(seed, detail::kSeedSubsample, k));
    for (auto& rows : by_class) rng.shuffle(std::span<std::size_t>(rows));
    const auto p = detail::fold_params(defaults, seed, static_cast<int>(k));
    for (std::size_t fi = 0; fi < F; ++fi) {
      std::vector<std::size_t> rows;
      bool ok = true;
      for (const auto& cls : by_class) {
        const auto take = static_cast<std::size_t>(std::llround(fractions[fi] * static_cast<double>(cls.size())));
        if (take == 0) ok = false;
        rows.insert(rows.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(std::min(take, cls.size())));
      }
      if (!ok || rows.size() < 2) continue;
      std::sort(rows.begin(), rows.end());
      const auto c = train_on_split(d, rows, p);
      auc[fi * K + k] = score_split(c, d, test).auc;
    }
  });

  for (std::size_t fi = 0; fi < F; ++fi) {
    CurvePoint pt;
    pt.fraction = fractions[fi];
    for (std::size_t k = 0; k < K; ++k) {
      if (!auc[fi * K + k]) {
        pt.available = false;
        break;
      }
      pt.fold_aucs.push_back(*auc[fi * K + k]);
    }
    if (pt.available) {
      pt.mean_auc = mean_of(pt.fold_aucs);
      pt.std_auc = std_of(pt.fold_aucs);
    } else {
      pt.fold_aucs.clear();
    }
    lc.points.push_back(std::move(pt));
  }
  return lc;
}

// ---------------------------------------------------------------------------
// Report documents

namespace detail {
inline nlohmann::json number_or_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }
}  // namespace detail

inline nlohmann::json pipeline_params_to_json(const PipelineParams& p) {
  return {{"hyperparams", hyperparams_to_json(p.hp)},
          {"null_threshold", p.null_threshold},
          {"corr_threshold", p.corr_threshold}};
}

inline nlohmann::json cv_report_to_json(const CVReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold},
                     {"auc", f.auc},
                     {"n_train", f.n_train},
                     {"n_test", f.n_test},
                     {"inner_auc", detail::number_or_null(f.inner_auc)},
                     {"params", pipeline_params_to_json(f.params)}});
  }
  return {{"method", r.method},
          {"schema_version", kFeatureSchemaVersion},
          {"seed", r.seed},
          {"outer_folds", r.outer_folds},
          {"inner_folds", r.inner_folds},
          {"budget", r.budget},
          {"mean_auc", r.mean_auc},
          {"std_auc", r.std_auc},
          {"folds", std::move(folds)},
          {"mean_roc", {{"fpr", r.mean_fpr}, {"tpr", r.mean_tpr}}}};
}

inline nlohmann::json loco_report_to_json(const LocoReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"target", e.target},
                       {"removed_features", e.removed},
                       {"mean_auc_loss", e.mean_auc_loss},
                       {"std_auc_loss", e.std_auc_loss},
                       {"reduced_mean_auc", e.reduced_mean_auc},
                       {"rank", e.rank}});
  }
  return {{"method", "loco"},
          {"schema_version", kFeatureSchemaVersion},
          {"seed", r.seed},
          {"folds", r.folds},
          {"baseline_mean_auc", r.baseline_mean_auc},
          {"baseline_std_auc", r.baseline_std_auc},
          {"baseline_fold_aucs", r.baseline_fold_aucs},
          {"entries", std::move(entries)}};
}

inline nlohmann::json learning_curve_to_json(const LearningCurve& lc) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : lc.points) {
    points.push_back({{"fraction", p.fraction},
                      {"available", p.available},
                      {"mean_auc", detail::number_or_null(p.mean_auc)},
                      {"std_auc", detail::number_or_null(p.std_auc)},
                      {"fold_aucs", p.fold_aucs}});
  }
  return {{"method", "learning_curve"},
          {"schema_version", kFeatureSchemaVersion},
          {"seed", lc.seed},
          {"folds", lc.folds},
          {"points", std::move(points)}};
}

inline void write_roc_csv(const CVReport& r, std::ostream& out) {
  out << "fpr,tpr\n";
  for (std::size_t i = 0; i < r.mean_fpr.size(); ++i)
    out << format_number(r.mean_fpr[i]) << ',' << format_number(r.mean_tpr[i]) << '\n';
}

inline void write_learning_curve_csv(const LearningCurve& lc, std::ostream& out) {
  out << "fraction,mean_auc,std_auc,available\n";
  for (const auto& p : lc.points)
    out << format_number(p.fraction) << ',' << format_number(p.mean_auc) << ',' << format_number(p.std_auc) << ','
        << (p.available ? 1 : 0) << '\n';
}

}  // namespace filterbreak
