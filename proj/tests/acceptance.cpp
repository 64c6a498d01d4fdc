// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Optional arguments select criteria by number, e.g. `acceptance 3 5`.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "checks.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace filterbreak;

namespace {

struct Outcome_ {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

unsigned jobs() { return default_jobs(); }

Dataset synth_dataset(const SynthConfig& cfg) {
  const auto examples = generate_dataset(cfg, jobs());
  std::vector<LabeledTriple> triples;
  triples.reserve(examples.size());
  for (const auto& e : examples) triples.push_back({e.triple, e.label});
  return dataset_from_vectors(extract_dataset(triples, jobs()));
}

SynthConfig e2e_config(double signal) {
  SynthConfig cfg;
  cfg.seed = 20130101;
  cfg.n_examples = 2000;
  cfg.broken_fraction = 0.51;
  cfg.signal_strength = signal;
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome_ end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset d = synth_dataset(e2e_config(0.8));
  const auto r = nested_cv(d, 10, 3, 10, 7, jobs());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = r.mean_auc >= 0.85 && r.std_auc <= 0.05 && secs <= 600;
  return {pass, "n=" + std::to_string(d.size()) + " mean AUC " + fmt(r.mean_auc) + " (>= 0.85), std " +
                    fmt(r.std_auc) + " (<= 0.05), wall " + fmt(secs, 1) + " s (<= 600)"};
}

Outcome_ null_control() {
  const Dataset d = synth_dataset(e2e_config(0.0));
  const auto r = nested_cv(d, 10, 3, 10, 7, jobs());
  return {r.mean_auc >= 0.45 && r.mean_auc <= 0.55, "mean AUC " + fmt(r.mean_auc) + " (in [0.45, 0.55])"};
}

Outcome_ auc_oracle() {
  Rng rng(31);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 200));
    const auto levels = rng.uniform_int(1, 30);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.uniform_int(0, levels)) * 0.37;
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(n)) y[0] = 1 - y[0];
    worst = std::max(worst, std::abs(roc_auc(s, y).auc - oracle::brute_auc(s, y)));
  }
  return {worst <= 1e-9, "1000 instances with ties, max |diff| " + sci(worst)};
}

Outcome_ preprocessing() {
  Rng rng(41);
  int fitted = 0;
  for (int t = 0; t < 60; ++t) {
    const auto rows = static_cast<std::size_t>(rng.uniform_int(10, 200));
    Matrix X(rows, 30);
    for (std::size_t c = 0; c < 30; ++c) {
      const auto mode = rng.uniform_int(0, 5);
      const double miss = mode == 4 ? rng.uniform(0.6, 0.99) : rng.uniform(0.0, 0.3);
      for (std::size_t r = 0; r < rows; ++r) {
        double v;
        if (mode == 0 && c > 0) v = -1.5 * X(r, c - 1) + rng.uniform(-0.5, 0.5);
        else if (mode == 1) v = 3.0;
        else if (mode == 2) v = static_cast<double>(rng.uniform_int(0, 4));
        else v = rng.uniform(-100, 100);
        if (std::isnan(v)) v = rng.uniform(0, 1);
        X(r, c) = rng.bernoulli(miss) ? kMissing : v;
      }
    }
    PreprocessorModel p;
    try {
      p = fit_preprocessor(X, 0.85, 0.73);
    } catch (const AllFeaturesDropped&) {
      continue;
    }
    ++fitted;
    const auto err = checks::preprocessing_invariants(X, p);
    if (!err.empty()) return {false, "trial " + std::to_string(t) + ": " + err};
  }
  return {fitted >= 50, std::to_string(fitted) + " random matrices at thresholds (0.85, 0.73)"};
}

Outcome_ gbdt() {
  std::vector<std::string> bad;

  Hyperparams stump;
  stump.n_trees = 1;
  stump.max_depth = 1;
  stump.learning_rate = 1;
  stump.min_child_weight = 0.5;
  stump.l2_lambda = 1;
  const auto m = train(Matrix(4, 1, std::vector<double>{0, 0, 1, 1}), std::vector<int>{0, 0, 1, 1}, stump);
  const auto& root = m.trees.at(0).nodes.at(0);
  const double w = m.trees[0].nodes.at(static_cast<std::size_t>(root.right)).weight;
  if (!(m.base_score == 0.0 && w == 2.0 / 3.0)) bad.push_back("leaf weight " + std::to_string(w));

  Rng rng(51);
  double worst = 0;
  for (int i = 0; i < 5000; ++i) {
    const double mg = rng.uniform(-6, 6);
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    const double g = logistic_grad(mg, y), h = logistic_hess(mg);
    const double p_hi = 1 / (1 + std::exp(-(mg + 1e-5))), p_lo = 1 / (1 + std::exp(-(mg - 1e-5)));
    worst = std::max(worst, std::abs(g - oracle::fd_grad(mg, y)) / std::abs(g));
    worst = std::max(worst, std::abs(h - (p_hi - p_lo) / 2e-5) / h);
  }
  if (worst > 1e-6) bad.push_back("g/h relative error " + sci(worst));

  Matrix sep(200, 3);
  std::vector<int> ys;
  for (std::size_t i = 0; i < 200; ++i) {
    const int y = i % 2;
    sep(i, 0) = rng.uniform(0, 1) + 1.2 * y;
    sep(i, 1) = rng.uniform(0, 1);
    sep(i, 2) = rng.bernoulli(0.2) ? kMissing : rng.uniform(0, 1);
    ys.push_back(y);
  }
  Hyperparams fifty;
  fifty.n_trees = 50;
  const double train_auc = roc_auc(train(sep, ys, fifty).predict_proba(sep), ys).auc;
  if (train_auc != 1.0) bad.push_back("separable training AUC " + fmt(train_auc));

  Matrix X(500, 20);
  std::vector<int> yn;
  for (std::size_t i = 0; i < 500; ++i) {
    const int y = rng.bernoulli(0.4) ? 1 : 0;
    for (std::size_t c = 0; c < 20; ++c) X(i, c) = rng.bernoulli(0.1) ? kMissing : rng.uniform(0, 1) + 0.3 * y * (c < 4);
    yn.push_back(y);
  }
  Hyperparams hp;
  hp.n_trees = 60;
  hp.subsample = 0.8;
  hp.seed = 12345;
  const auto a = gbdt_to_json(train(X, yn, hp, 1)).dump();
  const auto b = gbdt_to_json(train(X, yn, hp, 1)).dump();
  const auto c = gbdt_to_json(train(X, yn, hp, 4)).dump();
  const auto dj = gbdt_to_json(train(X, yn, hp, default_jobs())).dump();
  if (a != b || a != c || a != dj) bad.push_back("serialized models differ across runs or job counts");

  std::string detail = bad.empty() ? "leaf weight 2/3 exact, g/h rel err " + sci(worst) +
                                         ", separable AUC 1, models byte-identical across runs and job counts"
                                   : bad.front();
  return {bad.empty(), detail};
}

Outcome_ intervention() {
  Rng rng(61);
  int empty_cases = 0;
  for (int i = 0; i < 500; ++i) {
    const auto p = generate_example(rng.next(), rng.bernoulli(0.5) ? Label::broken : Label::working, rng.uniform(),
                                    30, 300);
    const auto g = build_intervention_graph(p.pre, p.post);
    auto err = checks::intervention_properties(p.pre, p.post, g);
    if (!err.empty()) return {false, "pair " + std::to_string(i) + ": " + err};
    if (i % 5 == 0) {
      const auto none = build_intervention_graph(p.post, p.post);
      err = checks::intervention_properties(p.post, p.post, none);
      if (!err.empty()) return {false, "identical pair " + std::to_string(i) + ": " + err};
      ++empty_cases;
    }
  }
  return {true, "500 random pairs plus " + std::to_string(empty_cases) + " unchanged pairs"};
}

Outcome_ fixtures_and_delta() {
  std::istringstream in(fixtures::read_file(fixtures::samples_dir() / "commits.jsonl"));
  const auto log = parse_commit_log(in);
  const auto mined = mine_examples(log);
  std::vector<std::string> bad;
  const std::string exc = "@@||mealty.ru/js/ga_events.js$~third-party";
  if (log.size() < 2 || !log[0].message.starts_with("P: https://www.mealty.ru/catalog/") ||
      log[0].file_changes.size() != 1 || log[0].file_changes[0].added_lines != std::vector<std::string>{exc} ||
      !log[0].file_changes[0].removed_lines.empty())
    bad.push_back("exception-rule commit record");
  if (log.size() < 2 || log[1].message != "A: https://tinyzonetv.to/" || log[1].file_changes.size() != 1 ||
      log[1].file_changes[0].added_lines != std::vector<std::string>{"||sfzover.com^"})
    bad.push_back("coverage commit record");
  if (log.size() >= 2 && (classify_commit(log[0]) != CommitClass::fix || classify_commit(log[1]) != CommitClass::coverage ||
                          extract_urls(log[0].message) != std::vector<std::string>{"https://www.mealty.ru/catalog/"} ||
                          extract_urls(log[1].message) != std::vector<std::string>{"https://tinyzonetv.to/"}))
    bad.push_back("classification or URL extraction");
  if (mined.examples.size() != 2 || mined.examples[0].label != Label::broken ||
      mined.examples[0].diff.removed != std::vector<std::string>{exc} || !mined.examples[0].diff.added.empty() ||
      mined.examples[1].label != Label::working ||
      mined.examples[1].diff.added != std::vector<std::string>{"||sfzover.com^"})
    bad.push_back("mined examples");

  const std::vector<FilterRule> rules = {parse_rule("||mealty.ru/js^"), parse_rule(exc)};
  const RequestContext ga{"https://mealty.ru/js/ga_events.js", ResourceType::script, "www.mealty.ru"};
  const auto with = decide(rules, ga);
  const auto without = decide(std::span(rules).first(1), ga);
  if (with.outcome != Outcome::exception_allowed || with.matched_rule != std::optional<std::size_t>(1) ||
      without.outcome != Outcome::blocked)
    bad.push_back("exception override");

  const std::vector<std::string> hosts = {"a.com", "ads.a.com", "b.org", "cdn.b.org", "mealty.ru", "x.co.uk"};
  const std::vector<std::string> paths = {"/", "/js/ga.js", "/ads/1.png", "/frame.html", "/t?x=1"};
  const std::vector<std::string> opts = {"", "$script", "$image", "$third-party", "$~third-party",
                                         "$domain=a.com", "$subdocument,domain=~b.org"};
  Rng rng(71);
  for (int t = 0; t < 1000; ++t) {
    std::vector<FilterRule> list;
    const auto n_rules = rng.uniform_int(0, 12);
    for (std::int64_t i = 0; i < n_rules; ++i) {
      std::string r = rng.bernoulli(0.3) ? "@@" : "";
      switch (rng.uniform_int(0, 2)) {
        case 0: r += "||" + rng.pick(hosts) + "^"; break;
        case 1: r += "||" + rng.pick(hosts) + rng.pick(paths); break;
        default: r += rng.pick(paths) + "*"; break;
      }
      r += rng.pick(opts);
      list.push_back(parse_rule(r));
    }
    std::vector<RequestContext> reqs;
    const auto n_reqs = rng.uniform_int(1, 15);
    for (std::int64_t i = 0; i < n_reqs; ++i)
      reqs.push_back({"https://" + rng.pick(hosts) + rng.pick(paths),
                      static_cast<ResourceType>(rng.uniform_int(0, static_cast<std::int64_t>(kAllResourceTypes.size()) - 1)),
                      rng.pick(hosts)});
    if (!blocking_delta(list, list, reqs).empty()) return {false, "non-empty delta for identical lists, case " + std::to_string(t)};
  }
  return {bad.empty(), bad.empty() ? "sample commit records exact, exception override reproduced, 1000 identical-list deltas empty"
                                   : bad.front()};
}

Outcome_ loco_sanity() {
  SynthConfig cfg;
  cfg.seed = 4242;
  cfg.n_examples = 600;
  cfg.broken_fraction = 0.5;
  cfg.signal_strength = 1.0;
  Dataset d = synth_dataset(cfg);
  // Append pure-noise columns.
  constexpr std::size_t kNoise = 5;
  Rng rng(81);
  Matrix X(d.size(), d.X.cols() + kNoise);
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t c = 0; c < d.X.cols(); ++c) X(r, c) = d.X(r, c);
    for (std::size_t k = 0; k < kNoise; ++k) X(r, d.X.cols() + k) = rng.uniform(0, 1);
  }
  std::vector<std::string> targets = {"net.directly_blocked_bytes"};
  for (std::size_t k = 0; k < kNoise; ++k) {
    d.feature_names.push_back("noise." + std::to_string(k));
    targets.push_back(d.feature_names.back());
  }
  d.X = std::move(X);
  const auto r = loco(d, targets, 5, 3, jobs());
  const double dominant = r.entries[0].mean_auc_loss;
  double worst_noise = 0, max_noise = -1;
  for (std::size_t i = 1; i < r.entries.size(); ++i) {
    worst_noise = std::max(worst_noise, std::abs(r.entries[i].mean_auc_loss));
    max_noise = std::max(max_noise, r.entries[i].mean_auc_loss);
  }
  const bool pass = dominant > max_noise && worst_noise <= 0.02;
  return {pass, "dominant loss " + fmt(dominant, 5) + ", noise losses max " + fmt(max_noise, 5) + ", max |loss| " +
                    fmt(worst_noise, 5) + " (<= 0.02), baseline AUC " + fmt(r.baseline_mean_auc)};
}

Outcome_ curve_sanity() {
  SynthConfig cfg;
  cfg.seed = 9001;
  cfg.n_examples = 1000;
  cfg.broken_fraction = 0.5;
  cfg.signal_strength = 1.0;
  const Dataset d = synth_dataset(cfg);
  const auto lc = learning_curve(d, default_fractions(), 10, 5, jobs());
  const bool grid = default_fractions() == std::vector<double>{0.01, 0.25, 0.50, 0.75, 1.00};
  const auto& half = lc.points.at(2);
  const auto& full = lc.points.at(4);
  const bool pass = grid && half.available && full.available && half.mean_auc >= full.mean_auc - 0.02;
  std::string detail = "AUC(0.50) " + fmt(half.mean_auc) + ", AUC(1.00) " + fmt(full.mean_auc) + ", grid {";
  for (std::size_t i = 0; i < lc.points.size(); ++i) detail += (i ? ", " : "") + fmt(lc.points[i].fraction, 2);
  return {pass, detail + "}"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome_()>>> criteria = {
      {"end-to-end synthetic nested CV", end_to_end},
      {"null-signal control", null_control},
      {"ROC-AUC oracle equivalence", auc_oracle},
      {"preprocessing invariants", preprocessing},
      {"GBDT correctness and determinism", gbdt},
      {"intervention graph properties", intervention},
      {"filter engine and miner fixtures", fixtures_and_delta},
      {"LOCO sanity", loco_sanity},
      {"learning-curve sanity", curve_sanity},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    Outcome_ o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
