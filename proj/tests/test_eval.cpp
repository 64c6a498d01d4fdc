#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"

using namespace filterbreak;

namespace {

/// Small dataset over real schema names: one informative column, the rest noise.
Dataset toy(std::size_t n, double signal, std::uint64_t seed) {
  const std::vector<std::string> names = {"net.delta_bytes_after_blocking", "page.count.tag.iframe",
                                          "intv.ratio.request.subdocument", "page.ratio.tag.iframe",
                                          "net.resources_blocked"};
  Rng rng(seed);
  Dataset d;
  d.feature_names = names;
  d.X = Matrix(n, names.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i % 3 == 0 ? 1 : 0;
    d.labels.push_back(y);
    d.example_ids.push_back("ex" + std::to_string(i));
    d.X(i, 0) = rng.uniform(0, 1) + signal * y;
    for (std::size_t c = 1; c < names.size(); ++c) d.X(i, c) = rng.uniform(0, 1);
  }
  return d;
}

PipelineParams fast() {
  PipelineParams p;
  p.hp.n_trees = 20;
  p.hp.max_depth = 2;
  return p;
}

}  // namespace

TEST(StratifiedFolds, BalancedAndDeterministic) {
  std::vector<int> y;
  for (int i = 0; i < 53; ++i) y.push_back(i % 5 < 2 ? 1 : 0);
  const auto f = stratified_folds(y, 4, 9);
  EXPECT_EQ(f, stratified_folds(y, 4, 9));
  EXPECT_NE(f, stratified_folds(y, 4, 10));
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<int> count(4, 0);
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == cls) ++count[static_cast<std::size_t>(f[i])];
    EXPECT_LE(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()), 1);
  }
  EXPECT_THROW(stratified_folds(y, 1, 0), ConfigError);
  EXPECT_THROW(stratified_folds(std::vector<int>{1, 0, 0, 0}, 2, 0), TooFewSamples);
}

TEST(CrossValidate, DeterministicAcrossJobsAndInformative) {
  const auto d = toy(120, 1.0, 1);
  const auto a = cross_validate(d, fast(), 4, 5, 1);
  const auto b = cross_validate(d, fast(), 4, 5, 3);
  EXPECT_EQ(a.fold_aucs(), b.fold_aucs());
  EXPECT_EQ(cv_report_to_json(a).dump(), cv_report_to_json(b).dump());
  EXPECT_GT(a.mean_auc, 0.9);
  EXPECT_EQ(a.mean_fpr.size(), kRocGridPoints);
  EXPECT_EQ(a.mean_tpr.front(), 0);
  EXPECT_EQ(a.mean_tpr.back(), 1);
  std::size_t tested = 0;
  for (const auto& f : a.folds) tested += f.n_test;
  EXPECT_EQ(tested, d.size());
}

TEST(CrossValidate, TestLabelsNeverReachTheFit) {
  const auto d = toy(90, 0.5, 2);
  const auto fold = stratified_folds(d.labels, 3, 1);
  const auto [train, test] = split_rows(fold, 0);
  Dataset corrupted = d;
  for (auto r : test) {
    corrupted.labels[r] = 1 - corrupted.labels[r];
    for (std::size_t c = 0; c < d.X.cols(); ++c) corrupted.X(r, c) = 1e6;
  }
  EXPECT_EQ(classifier_to_json(train_on_split(d, train, fast())).dump(),
            classifier_to_json(train_on_split(corrupted, train, fast())).dump());
}

TEST(NestedCv, RunsAndRecordsChosenParams) {
  const auto d = toy(90, 1.0, 3);
  SearchSpace space;
  space.n_trees_min = 5;
  space.n_trees_max = 20;
  const auto r = nested_cv(d, 3, 2, 2, 7, 1, space);
  EXPECT_EQ(r.method, "nested_cv");
  ASSERT_EQ(r.folds.size(), 3u);
  for (const auto& f : r.folds) {
    EXPECT_GE(f.params.hp.n_trees, 5);
    EXPECT_LE(f.params.hp.n_trees, 20);
    EXPECT_FALSE(std::isnan(f.inner_auc));
  }
  EXPECT_EQ(cv_report_to_json(r).dump(), cv_report_to_json(nested_cv(d, 3, 2, 2, 7, 2, space)).dump());
  EXPECT_THROW(nested_cv(d, 3, 2, 0, 7), ConfigError);
  EXPECT_THROW(nested_cv(toy(20, 1, 1), 10, 3, 1, 7), TooFewSamples);
}

TEST(Loco, LossesAndGroups) {
  const auto d = toy(90, 1.0, 4);
  const auto r = loco(d, {"net.delta_bytes_after_blocking", "page.count.tag.iframe", "relative"}, 3, 1);
  ASSERT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.baseline_fold_aucs.size(), 3u);
  EXPECT_EQ(r.entries[0].rank, 1);
  EXPECT_GT(r.entries[0].mean_auc_loss, r.entries[1].mean_auc_loss);
  EXPECT_EQ(r.entries[2].removed, 2u);
  for (const auto& e : r.entries) EXPECT_DOUBLE_EQ(r.baseline_mean_auc - e.mean_auc_loss, e.reduced_mean_auc);
  EXPECT_EQ(loco_report_to_json(r).dump(), loco_report_to_json(loco(d, {"net.delta_bytes_after_blocking",
                                                                         "page.count.tag.iframe", "relative"},
                                                                     3, 1, 2))
                                                .dump());

  const auto empty = loco(d, {}, 3, 1);
  EXPECT_TRUE(empty.entries.empty());
  EXPECT_EQ(empty.baseline_fold_aucs, r.baseline_fold_aucs);
  EXPECT_THROW(loco(d, {"nonexistent"}, 3, 1), UnknownTarget);
}

TEST(Loco, GroupMembership) {
  const auto d = toy(10, 0, 5);
  EXPECT_EQ(group_members(d, "page"), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(group_members(d, "relative"), (std::vector<std::size_t>{2, 3}));
  const auto absolute = group_members(d, "absolute");
  EXPECT_EQ(absolute, (std::vector<std::size_t>{0, 1, 4}));
  const auto expert = group_members(d, "expert");
  const auto autogen = group_members(d, "auto");
  EXPECT_EQ(expert.size() + autogen.size(), d.feature_names.size());
}

TEST(LearningCurve, FullFractionMatchesCrossValidate) {
  const auto d = toy(120, 1.0, 6);
  const auto lc = learning_curve(d, {0.01, 0.5, 1.0}, 4, 11);
  ASSERT_EQ(lc.points.size(), 3u);
  EXPECT_FALSE(lc.points[0].available);
  EXPECT_TRUE(lc.points[1].available);
  const auto cv = cross_validate(d, PipelineParams{}, 4, 11);
  EXPECT_EQ(lc.points[2].fold_aucs, cv.fold_aucs());
  EXPECT_EQ(default_fractions(), (std::vector<double>{0.01, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_THROW(learning_curve(d, {0.5, 0.25}), ConfigError);
  EXPECT_THROW(learning_curve(d, {0.0, 0.25}), ConfigError);

  std::ostringstream csv;
  write_learning_curve_csv(lc, csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "fraction,mean_auc,std_auc,available");
  const auto j = learning_curve_to_json(lc);
  EXPECT_TRUE(j.at("points")[0].at("mean_auc").is_null());
}

TEST(Reports, RocCsvHasGrid) {
  const auto r = cross_validate(toy(60, 1.0, 7), fast(), 3, 2);
  std::ostringstream csv;
  write_roc_csv(r, csv);
  std::size_t lines = 0;
  for (char c : csv.str()) lines += c == '\n';
  EXPECT_EQ(lines, kRocGridPoints + 1);
  const auto j = cv_report_to_json(r);
  EXPECT_EQ(j.at("folds").size(), 3u);
  EXPECT_DOUBLE_EQ(j.at("mean_auc").get<double>(), r.mean_auc);
}
