#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"

using namespace filterbreak;

TEST(SynthConfig, Validation) {
  EXPECT_NO_THROW(synth_config_from_json(nlohmann::json::object()));
  EXPECT_THROW(synth_config_from_json({{"n_examples", 1}}), ConfigError);
  EXPECT_THROW(synth_config_from_json({{"broken_fraction", 1.5}}), ConfigError);
  EXPECT_THROW(synth_config_from_json({{"signal_strength", -0.1}}), ConfigError);
  EXPECT_THROW(synth_config_from_json({{"size_min", 0}}), ConfigError);
  EXPECT_THROW(synth_config_from_json({{"size_min", 10}, {"size_max", 5}}), ConfigError);
  EXPECT_THROW(synth_config_from_json({{"colour", "blue"}}), ConfigError);
  EXPECT_THROW(synth_config_from_json({{"seed", "x"}}), ConfigError);
  const SynthConfig c = synth_config_from_json({{"seed", 9}, {"n_examples", 12}, {"signal_strength", 0.25}});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.n_examples, 12u);
  EXPECT_EQ(synth_config_to_json(synth_config_from_json(synth_config_to_json(c))), synth_config_to_json(c));
}

TEST(GenerateExample, Deterministic) {
  const auto a = generate_example(42, Label::broken, 0.8, 50, 300);
  const auto b = generate_example(42, Label::broken, 0.8, 50, 300);
  EXPECT_EQ(save_graphml_string(a.pre), save_graphml_string(b.pre));
  EXPECT_EQ(save_graphml_string(a.post), save_graphml_string(b.post));
  EXPECT_EQ(a.diff, b.diff);
}

TEST(GenerateExample, PostBlocksAtLeastOneResourceAndDiffExplainsIt) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto label = seed % 2 ? Label::broken : Label::working;
    const auto p = generate_example(seed, label, 0.5, 50, 200);
    const auto flipped = flipped_resources(p.pre, p.post);
    ASSERT_FALSE(flipped.empty()) << seed;
    EXPECT_FALSE(p.diff.added.empty());
    const auto rules = parse_rules(p.diff.added);
    ASSERT_EQ(rules.size(), p.diff.added.size());
    const auto host = url_host(p.pre.page_url());
    for (auto id : flipped) {
      const auto key = resource_key(p.pre, p.pre.node(id));
      ASSERT_TRUE(key.second);
      EXPECT_EQ(decide(rules, {key.first, *key.second, host}).outcome, Outcome::blocked) << key.first;
    }
    EXPECT_LT(p.post.node_count(), p.pre.node_count());
  }
}

TEST(GenerateExample, FullSignalSeparatesBlockedBytes) {
  double working_max = 0;
  double broken_min = 1e300;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const auto w = generate_example(seed, Label::working, 1.0, 50, 100);
    const auto b = generate_example(seed + 100000, Label::broken, 1.0, 50, 100);
    working_max = std::max(working_max, blocking_totals(w.pre, w.post).first);
    broken_min = std::min(broken_min, blocking_totals(b.pre, b.post).first);
  }
  EXPECT_GT(broken_min, working_max);
}

TEST(GenerateExample, SizeRangeBoundsMainDocument) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto p = generate_example(seed, Label::working, 0.0, 60, 80);
    std::size_t parser_built = 0;
    for (const auto& e : p.pre.edges()) {
      if (e.kind != EdgeKind::node_create) continue;
      const auto& src = p.pre.node(e.src);
      if (src.kind != NodeKind::parser || src.frame() != 0) continue;
      const auto& dst = p.pre.node(e.dst);
      const bool content = dst.kind == NodeKind::text_node ||
                           (dst.attrs.tag && std::find(detail::kStaticTags.begin(), detail::kStaticTags.end(),
                                                       *dst.attrs.tag) != detail::kStaticTags.end());
      if (content) ++parser_built;
    }
    EXPECT_GE(parser_built, 60u);
    EXPECT_LE(parser_built, 80u);
  }
}

TEST(GenerateDataset, LabelSplitAndNoEffectlessTriples) {
  SynthConfig cfg;
  cfg.n_examples = 10;
  cfg.broken_fraction = 0.5;
  cfg.size_max = 120;
  const auto ds = generate_dataset(cfg);
  ASSERT_EQ(ds.size(), 10u);
  EXPECT_EQ(std::count_if(ds.begin(), ds.end(), [](const SynthExample& e) { return e.label == Label::broken; }), 5);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_FALSE(is_effectless(ds[i].triple));
    EXPECT_EQ(ds[i].triple.example_id, synth_example_id(i));
    EXPECT_EQ(ds[i].triple.pre.page_url(), ds[i].triple.post.page_url());
    EXPECT_EQ(ds[i].triple.pre.page_url(), ds[i].triple.intervention.page_url());
  }
}

TEST(GenerateDataset, BrokenFractionWithinOneExample) {
  for (double frac : {0.0, 0.13, 0.51, 0.77, 1.0}) {
    SynthConfig cfg;
    cfg.n_examples = 37;
    cfg.broken_fraction = frac;
    const auto labels = synth_labels(cfg);
    const auto broken = std::count(labels.begin(), labels.end(), Label::broken);
    EXPECT_LE(std::abs(static_cast<double>(broken) - 37 * frac), 1.0);
  }
}

TEST(GenerateDataset, IndependentOfJobs) {
  SynthConfig cfg;
  cfg.n_examples = 8;
  cfg.size_max = 100;
  const auto a = generate_dataset(cfg, 1);
  const auto b = generate_dataset(cfg, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(save_graphml_string(a[i].triple.pre), save_graphml_string(b[i].triple.pre));
    EXPECT_EQ(save_graphml_string(a[i].triple.intervention), save_graphml_string(b[i].triple.intervention));
    EXPECT_EQ(a[i].label, b[i].label);
  }
}
