#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace filterbreak;

namespace {

RequestContext req(std::string url, ResourceType t, std::string frame) { return {std::move(url), t, std::move(frame)}; }

const char* kMealtyException = "@@||mealty.ru/js/ga_events.js$~third-party";

}  // namespace

TEST(ParseRule, HostnameAnchoredBlock) {
  const auto r = parse_rule("||sfzover.com^");
  EXPECT_EQ(r.kind, RuleKind::block);
  EXPECT_EQ(r.anchor, RuleAnchor::hostname);
  ASSERT_EQ(r.pattern.size(), 2u);
  EXPECT_EQ(r.pattern[0].kind, PatternToken::Kind::literal);
  EXPECT_EQ(r.pattern[0].text, "sfzover.com");
  EXPECT_EQ(r.pattern[1].kind, PatternToken::Kind::separator);
  EXPECT_TRUE(r.resource_types.empty());
  EXPECT_EQ(r.party, PartyConstraint::any);
}

TEST(ParseRule, FirstPartyException) {
  const auto r = parse_rule(kMealtyException);
  EXPECT_EQ(r.kind, RuleKind::exception);
  EXPECT_EQ(r.anchor, RuleAnchor::hostname);
  EXPECT_EQ(r.party, PartyConstraint::first_party_only);
  EXPECT_EQ(r.raw, kMealtyException);
}

TEST(ParseRule, RejectsUnsupported) {
  EXPECT_THROW(parse_rule("example.com##.ad"), UnsupportedSyntax);
  EXPECT_THROW(parse_rule("example.com#@#.ad"), UnsupportedSyntax);
  EXPECT_THROW(parse_rule("/banner[0-9]+/"), UnsupportedSyntax);
  EXPECT_THROW(parse_rule("||a.com^$csp=script-src 'none'"), UnsupportedSyntax);
  EXPECT_THROW(parse_rule("||a.com^$redirect=noop.js"), UnsupportedSyntax);
  EXPECT_THROW(parse_rule("! comment"), UnsupportedSyntax);
  EXPECT_THROW(parse_rule("   "), UnsupportedSyntax);
}

TEST(ParseRule, Options) {
  const auto r = parse_rule("||ads.example^$script,image,third-party,domain=a.com|~b.a.com");
  EXPECT_EQ(r.resource_types, (std::set<ResourceType>{ResourceType::script, ResourceType::image}));
  EXPECT_EQ(r.party, PartyConstraint::third_party_only);
  EXPECT_EQ(r.include_domains, std::vector<std::string>{"a.com"});
  EXPECT_EQ(r.exclude_domains, std::vector<std::string>{"b.a.com"});
}

TEST(ParseRule, RawRoundTrips) {
  for (const char* line : {"||sfzover.com^", kMealtyException, "/banner/*$image", "|https://x.org/a|",
                           "ads^", "@@||cdn.example/*.js$script,domain=site.example"}) {
    EXPECT_EQ(parse_rule(line).raw, line);
  }
}

TEST(ParseFilterList, CountsCommentsAndRejections) {
  std::istringstream in(fixtures::read_file(fixtures::samples_dir() / "filters.txt"));
  const auto list = parse_filter_list(in);
  EXPECT_EQ(list.rules.size(), 5u);
  EXPECT_EQ(list.unsupported, std::vector<std::string>{"example.com##.ad-box"});
  EXPECT_EQ(list.comments, 2u);
}

TEST(MatchRule, SpecExamples) {
  EXPECT_TRUE(match_rule(parse_rule("||sfzover.com^"),
                         req("https://sfzover.com/ad.js", ResourceType::script, "tinyzonetv.to")));
  for (auto t : kAllResourceTypes) EXPECT_TRUE(match_rule(parse_rule("||a.com^"), req("https://a.com", t, "x.org")));
  const auto ex = parse_rule(kMealtyException);
  EXPECT_TRUE(match_rule(ex, req("https://mealty.ru/js/ga_events.js", ResourceType::script, "mealty.ru")));
  EXPECT_FALSE(match_rule(ex, req("https://mealty.ru/js/ga_events.js", ResourceType::script, "other.example")));
}

TEST(MatchRule, HostnameAnchorRespectsLabelBoundary) {
  const auto r = parse_rule("||a.com^");
  EXPECT_TRUE(match_rule(r, req("https://sub.a.com/x", ResourceType::other, "z.org")));
  EXPECT_FALSE(match_rule(r, req("https://ba.com/x", ResourceType::other, "z.org")));
  EXPECT_FALSE(match_rule(r, req("https://a.com.evil.org/x", ResourceType::other, "z.org")));
  EXPECT_FALSE(match_rule(r, req("https://z.org/?u=a.com/", ResourceType::other, "z.org")));
}

TEST(MatchRule, TypeDomainAndPartyOptions) {
  const auto r = parse_rule("||ads.example^$script,domain=a.com|~b.a.com");
  EXPECT_TRUE(match_rule(r, req("https://ads.example/x.js", ResourceType::script, "a.com")));
  EXPECT_TRUE(match_rule(r, req("https://ads.example/x.js", ResourceType::script, "c.a.com")));
  EXPECT_FALSE(match_rule(r, req("https://ads.example/x.js", ResourceType::image, "a.com")));
  EXPECT_FALSE(match_rule(r, req("https://ads.example/x.js", ResourceType::script, "b.a.com")));
  EXPECT_FALSE(match_rule(r, req("https://ads.example/x.js", ResourceType::script, "other.org")));

  const auto third = parse_rule("||cdn.co.uk^$third-party");
  EXPECT_FALSE(match_rule(third, req("https://cdn.co.uk/a", ResourceType::other, "www.cdn.co.uk")));
  EXPECT_TRUE(match_rule(third, req("https://cdn.co.uk/a", ResourceType::other, "shop.co.uk")));
}

TEST(Decide, SpecExamples) {
  const std::vector<FilterRule> one = {parse_rule("||sfzover.com^")};
  const auto hit = req("https://sfzover.com/ad.js", ResourceType::script, "tinyzonetv.to");
  EXPECT_EQ(decide(one, hit).outcome, Outcome::blocked);
  EXPECT_EQ(decide(one, hit).matched_rule, std::optional<std::size_t>(0));

  const std::vector<FilterRule> mealty = {parse_rule("||mealty.ru/js^"), parse_rule(kMealtyException)};
  const auto d = decide(mealty, req("https://mealty.ru/js/ga_events.js", ResourceType::script, "mealty.ru"));
  EXPECT_EQ(d.outcome, Outcome::exception_allowed);
  EXPECT_EQ(d.matched_rule, std::optional<std::size_t>(1));

  const auto none = decide({}, hit);
  EXPECT_EQ(none.outcome, Outcome::allowed);
  EXPECT_FALSE(none.matched_rule);
}

TEST(Decide, FirstBlockWins) {
  const std::vector<FilterRule> rules = {parse_rule("||z.org^"), parse_rule("/ads/*"), parse_rule("||a.com^")};
  EXPECT_EQ(decide(rules, req("https://a.com/ads/x", ResourceType::image, "a.com")).matched_rule,
            std::optional<std::size_t>(1));
}

TEST(BlockingDelta, SpecExamples) {
  const std::vector<RequestContext> reqs = {req("https://sfzover.com/ad.js", ResourceType::script, "tinyzonetv.to"),
                                            req("https://unrelated.org/", ResourceType::other, "tinyzonetv.to")};
  const std::vector<FilterRule> post = {parse_rule("||sfzover.com^")};
  EXPECT_EQ(blocking_delta({}, post, reqs), std::vector<std::size_t>{0});
  EXPECT_TRUE(blocking_delta(post, post, reqs).empty());

  const std::vector<FilterRule> pre2 = {parse_rule("||r.example^")};
  const std::vector<FilterRule> post2 = {parse_rule("||r.example^"), parse_rule("@@||r.example/keep")};
  const std::vector<RequestContext> covered = {req("https://r.example/keep", ResourceType::script, "r.example")};
  EXPECT_EQ(blocking_delta(pre2, post2, covered), std::vector<std::size_t>{0});
}

TEST(ApplyDiff, RemovesThenAppends) {
  const std::vector<FilterRule> base = {parse_rule("||a.com^"), parse_rule("||b.com^")};
  const std::vector<std::string> added = {"||c.com^", "x##.y"};
  const std::vector<std::string> removed = {"||a.com^"};
  const auto out = apply_diff(base, added, removed);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].raw, "||b.com^");
  EXPECT_EQ(out[1].raw, "||c.com^");
}

// ---------------------------------------------------------------------------
// Randomized properties

namespace {

const std::vector<std::string> kHosts = {"a.com", "sub.a.com", "ba.com", "sfzover.com", "x.co.uk",
                                         "cdn.x.co.uk", "mealty.ru", "www.mealty.ru", "t.example"};
const std::vector<std::string> kPaths = {"/", "/js/ga_events.js", "/ads/banner.png", "/a-b/c_d.html?x=1&y=2",
                                         "/track%20me", "/img/1.gif", "/js/", "", "/sfzover.com/x"};

std::string random_url(Rng& rng) {
  return std::string(rng.bernoulli(0.5) ? "https://" : "http://") + rng.pick(kHosts) + rng.pick(kPaths);
}

/// A rule pattern cut from a URL with random anchors, wildcards and separators.
std::string random_pattern(Rng& rng) {
  const std::string host = rng.pick(kHosts);
  const std::string path = rng.pick(kPaths);
  std::string body;
  switch (rng.uniform_int(0, 3)) {
    case 0: body = "||" + host; break;
    case 1: body = "|https://" + host; break;
    case 2: body = host.substr(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(host.size()) - 1))); break;
    default: body = path.empty() ? "ads" : path.substr(0, static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(path.size())))); break;
  }
  const int extras = static_cast<int>(rng.uniform_int(0, 2));
  for (int i = 0; i < extras; ++i) {
    switch (rng.uniform_int(0, 3)) {
      case 0: body += "^"; break;
      case 1: body += "*"; break;
      case 2: body += rng.pick(std::vector<std::string>{"js", ".png", "/", "ads", "1"}); break;
      default: body += "*" + std::string(rng.pick(std::vector<std::string>{"gif", "html", "x=1"})); break;
    }
  }
  if (rng.bernoulli(0.15)) body += "|";
  return body;
}

}  // namespace

TEST(MatchRuleProperty, AgreesWithRegexOracle) {
  Rng rng(99);
  int checked = 0;
  for (int i = 0; i < 4000; ++i) {
    const std::string pat = random_pattern(rng);
    FilterRule r;
    try {
      r = parse_rule(pat);
    } catch (const UnsupportedSyntax&) {
      continue;
    }
    const std::string url = random_url(rng);
    ASSERT_EQ(match_rule(r, req(url, ResourceType::other, "q.org")), oracle::abp_matches(pat, url))
        << "rule " << pat << " url " << url;
    ++checked;
  }
  EXPECT_GT(checked, 3000);
}

TEST(DecideProperty, MatchingExceptionNeverYieldsBlocked) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    std::vector<FilterRule> rules;
    const auto n = rng.uniform_int(0, 6);
    for (int k = 0; k < n; ++k) {
      try {
        rules.push_back(parse_rule(random_pattern(rng)));
      } catch (const UnsupportedSyntax&) {
      }
    }
    const auto ctx = req(random_url(rng), ResourceType::script, "q.org");
    const auto host = url_host(ctx.url);
    rules.insert(rules.begin() + static_cast<std::ptrdiff_t>(rng.uniform_int(0, static_cast<std::int64_t>(rules.size()))),
                 parse_rule("@@||" + host + "^"));
    EXPECT_NE(decide(rules, ctx).outcome, Outcome::blocked);
  }
}

TEST(DecideProperty, PureAndRepeatable) {
  Rng rng(8);
  std::vector<FilterRule> rules;
  for (int k = 0; k < 20; ++k) {
    try {
      rules.push_back(parse_rule(random_pattern(rng)));
    } catch (const UnsupportedSyntax&) {
    }
  }
  for (int i = 0; i < 200; ++i) {
    const auto ctx = req(random_url(rng), ResourceType::image, "a.com");
    const auto a = decide(rules, ctx);
    const auto b = decide(rules, ctx);
    EXPECT_EQ(a.outcome, b.outcome);
    EXPECT_EQ(a.matched_rule, b.matched_rule);
  }
}
