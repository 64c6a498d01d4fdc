#pragma once

// The `filterbreak` command-line front end. run_cli() is the whole program so
// tests can drive it in-process.
//
// Exit codes: 0 success, 2 usage or input error, 1 internal error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "filterbreak.hpp"

namespace filterbreak::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr std::uint64_t kDefaultSeed = 20130101;

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  nlohmann::json counts = nlohmann::json::object();
  nlohmann::json settings = nlohmann::json::object();
  double wall_time_s = 0;

  nlohmann::json to_json() const {
    return {{"command", command},
            {"version", kVersion},
            {"schema_version", kFeatureSchemaVersion},
            {"inputs", inputs},
            {"outputs", outputs},
            {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)},
            {"settings", settings},
            {"counts", counts},
            {"wall_time_s", wall_time_s}};
  }
};

namespace detail {

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

/// `<stem>.<suffix>` next to `file`: report.json -> report.roc.csv
inline fs::path sibling(const fs::path& file, const std::string& suffix) {
  fs::path p = file;
  p.replace_extension();
  return fs::path(p.string() + "." + suffix);
}

inline fs::path manifest_for_file(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

inline Dataset read_features(const std::string& path) {
  auto in = open_in(path);
  return read_csv(in);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = filterbreak::detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace detail

struct Context {
  std::ostream& out;
  std::ostream& err;
  unsigned jobs = 0;
};

// ---------------------------------------------------------------------------
// Commands

inline RunManifest cmd_mine(Context& ctx, const std::string& commits, const std::string& out_path,
                            const std::string& since) {
  RunManifest m{"mine", {commits}, {out_path}};
  MineOptions opts;
  try {
    opts.since = Timestamp::from_date(since);
  } catch (const Error&) {
    opts.since = Timestamp::parse(since);
  }
  auto in = detail::open_in(commits);
  const auto log = parse_commit_log(in);
  const auto result = mine_examples(log, opts);
  auto out = detail::open_out(out_path);
  write_examples(out, result.examples);
  const auto& s = result.stats;
  std::size_t broken = 0;
  for (const auto& e : result.examples) broken += e.label == Label::broken ? 1 : 0;
  m.settings = {{"since", opts.since.str()}};
  m.counts = {{"examples_in", s.commits},
              {"examples_out", result.examples.size()},
              {"parse_failures", 0},
              {"broken", broken},
              {"working", result.examples.size() - broken},
              {"fix_commits", s.fix},
              {"coverage_commits", s.coverage},
              {"other_commits", s.other},
              {"before_cutoff", s.before_cutoff},
              {"no_urls", s.no_urls},
              {"empty_diff", s.empty_diff},
              {"ambiguous_tags", s.ambiguous_tags},
              {"no_network_rules", s.no_network_rules}};
  ctx.out << "mined " << result.examples.size() << " examples from " << s.commits << " commits\n";
  return m;
}

inline RunManifest cmd_simulate(Context& ctx, const std::string& config_path, const std::string& out_dir) {
  RunManifest m{"simulate", {config_path}, {out_dir}};
  nlohmann::json j;
  {
    auto in = detail::open_in(config_path);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  const auto cfg = synth_config_from_json(j);
  m.seed = cfg.seed;
  m.settings = synth_config_to_json(cfg);
  const auto examples = generate_dataset(cfg, ctx.jobs);
  fs::create_directories(out_dir);
  std::vector<ManifestRow> rows;
  for (const auto& e : examples) {
    auto row = manifest_row_for(e.triple.example_id, e.triple.pre.page_url(), e.label, "synthetic", e.diff);
    save_triple(out_dir, row, e.triple);
    rows.push_back(std::move(row));
  }
  auto out = detail::open_out(fs::path(out_dir) / kDatasetManifestName);
  write_manifest(rows, out);
  std::size_t broken = 0;
  for (const auto& e : examples) broken += e.label == Label::broken ? 1 : 0;
  m.counts = {{"examples_in", 0},
              {"examples_out", examples.size()},
              {"parse_failures", 0},
              {"broken", broken},
              {"working", examples.size() - broken}};
  ctx.out << "generated " << examples.size() << " examples in " << out_dir << '\n';
  return m;
}

inline RunManifest cmd_diff(Context& ctx, const std::string& pre_path, const std::string& post_path,
                            const std::string& out_path) {
  RunManifest m{"diff", {pre_path, post_path}, {out_path}};
  const auto pre = load_graphml_file(pre_path);
  const auto post = load_graphml_file(post_path);
  const auto g = build_intervention_graph(pre, post);
  save_graphml_file(g, out_path);
  if (g.empty()) ctx.err << "warning: no resource changed blocking state; intervention graph is empty\n";
  m.counts = {{"examples_in", 1},
              {"examples_out", g.empty() ? 0 : 1},
              {"parse_failures", 0},
              {"nodes", g.node_count()},
              {"edges", g.edge_count()}};
  ctx.out << "intervention graph: " << g.node_count() << " nodes, " << g.edge_count() << " edges\n";
  return m;
}

inline RunManifest cmd_featurize(Context& ctx, const std::string& dataset_dir, const std::string& out_path) {
  const fs::path schema_path = detail::sibling(out_path, "schema.jsonl");
  RunManifest m{"featurize", {dataset_dir}, {out_path, schema_path.string()}};
  std::vector<ManifestRow> rows;
  {
    auto in = detail::open_in((fs::path(dataset_dir) / kDatasetManifestName).string());
    rows = read_manifest(in);
  }
  std::vector<LabeledTriple> triples(rows.size());
  parallel_for(rows.size(), ctx.jobs, [&](std::size_t i) {
    triples[i] = {load_triple(dataset_dir, rows[i]), rows[i].label};
  });
  const auto vectors = extract_dataset(triples, ctx.jobs);
  const Dataset d = dataset_from_vectors(vectors);
  {
    auto out = detail::open_out(out_path);
    write_csv(d, out);
  }
  {
    auto out = detail::open_out(schema_path);
    write_schema_jsonl(schema(), out);
  }
  m.counts = {{"examples_in", rows.size()},
              {"examples_out", d.size()},
              {"parse_failures", 0},
              {"effectless_skipped", rows.size() - d.size()},
              {"features", d.feature_names.size()}};
  ctx.out << "featurized " << d.size() << " of " << rows.size() << " examples, " << d.feature_names.size()
          << " features\n";
  return m;
}

inline RunManifest cmd_train(Context& ctx, const std::string& features, const std::string& model_path,
                             const PipelineParams& params) {
  RunManifest m{"train", {features}, {model_path}};
  m.seed = params.hp.seed;
  const Dataset d = detail::read_features(features);
  const auto c = fit_classifier(d, params, ctx.jobs);
  {
    auto out = detail::open_out(model_path);
    save_classifier(c, out);
  }
  m.settings = pipeline_params_to_json(params);
  m.counts = {{"examples_in", d.size()},
              {"examples_out", d.size()},
              {"parse_failures", 0},
              {"features_in", d.feature_names.size()},
              {"features_kept", c.pre.kept.size()},
              {"trees", c.model.trees.size()}};
  ctx.out << "trained on " << d.size() << " rows, " << c.pre.kept.size() << " of " << d.feature_names.size()
          << " features kept\n";
  return m;
}

inline RunManifest cmd_evaluate(Context& ctx, const std::string& features, const std::string& report_path, int outer,
                                int inner, int budget, std::uint64_t seed) {
  const fs::path roc_path = detail::sibling(report_path, "roc.csv");
  RunManifest m{"evaluate", {features}, {report_path, roc_path.string()}};
  m.seed = seed;
  const Dataset d = detail::read_features(features);
  const auto r = nested_cv(d, outer, inner, budget, seed, ctx.jobs);
  detail::write_json_file(report_path, cv_report_to_json(r));
  {
    auto out = detail::open_out(roc_path);
    write_roc_csv(r, out);
  }
  m.settings = {{"outer", outer}, {"inner", inner}, {"budget", budget}};
  m.counts = {{"examples_in", d.size()}, {"examples_out", d.size()}, {"parse_failures", 0}};
  ctx.out << "mean ROC-AUC " << r.mean_auc << " (std " << r.std_auc << ") over " << outer << " folds\n";
  return m;
}

inline RunManifest cmd_loco(Context& ctx, const std::string& features, const std::string& report_path,
                            const std::string& targets_arg, int folds, std::uint64_t seed) {
  RunManifest m{"loco", {features}, {report_path}};
  m.seed = seed;
  const Dataset d = detail::read_features(features);
  std::vector<std::string> targets;
  for (const auto& t : detail::split_list(targets_arg)) {
    if (t == "@groups") {
      targets.insert(targets.end(), kLocoGroups.begin(), kLocoGroups.end());
    } else {
      targets.push_back(t);
    }
  }
  const auto r = loco(d, targets, folds, seed, ctx.jobs);
  detail::write_json_file(report_path, loco_report_to_json(r));
  m.settings = {{"targets", targets}, {"folds", folds}};
  m.counts = {{"examples_in", d.size()}, {"examples_out", d.size()}, {"parse_failures", 0}};
  ctx.out << "baseline ROC-AUC " << r.baseline_mean_auc << '\n';
  for (const auto& e : r.entries) ctx.out << "  " << e.rank << ". " << e.target << " loss " << e.mean_auc_loss << '\n';
  return m;
}

inline RunManifest cmd_curve(Context& ctx, const std::string& features, const std::string& report_path,
                             const std::vector<double>& fractions, int folds, std::uint64_t seed) {
  const fs::path csv_path = detail::sibling(report_path, "curve.csv");
  RunManifest m{"curve", {features}, {report_path, csv_path.string()}};
  m.seed = seed;
  const Dataset d = detail::read_features(features);
  const auto lc = learning_curve(d, fractions, folds, seed, ctx.jobs);
  detail::write_json_file(report_path, learning_curve_to_json(lc));
  {
    auto out = detail::open_out(csv_path);
    write_learning_curve_csv(lc, out);
  }
  m.settings = {{"fractions", fractions}, {"folds", folds}};
  m.counts = {{"examples_in", d.size()}, {"examples_out", d.size()}, {"parse_failures", 0}};
  for (const auto& p : lc.points) {
    ctx.out << "fraction " << p.fraction << ": ";
    if (p.available) {
      ctx.out << "mean ROC-AUC " << p.mean_auc << " (std " << p.std_auc << ")\n";
    } else {
      ctx.out << "unavailable\n";
    }
  }
  return m;
}

inline RunManifest cmd_match(Context& ctx, const std::string& rules_path, const std::string& url,
                             const std::string& type_name, const std::string& frame) {
  RunManifest m{"match", {rules_path}, {}};
  const auto type = resource_type_from_string(type_name);
  if (!type) throw ConfigError("unknown resource type '" + type_name + "'");
  auto in = detail::open_in(rules_path);
  const auto list = parse_filter_list(in);
  std::string origin = frame;
  if (const auto parsed = parse_url(frame)) origin = parsed->host;
  const RequestContext req{url, *type, origin};
  const auto d = decide(list.rules, req);
  ctx.out << to_string(d.outcome);
  if (d.matched_rule) ctx.out << ' ' << *d.matched_rule << ' ' << list.rules[*d.matched_rule].raw;
  ctx.out << '\n';
  m.counts = {{"examples_in", 1},
              {"examples_out", 1},
              {"parse_failures", list.unsupported.size()},
              {"rules", list.rules.size()}};
  return m;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Filter-list breakage prediction pipeline", "filterbreak"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  int jobs = 0;
  app.add_flag("--version", show_version, "Print library and feature-schema versions");
  app.add_option("--jobs", jobs, "Worker threads (0 = all cores); results do not depend on it")
      ->check(CLI::NonNegativeNumber);

  std::string commits, out_path, since = "2013-01-01", manifest_path;
  auto* mine = app.add_subcommand("mine", "Turn a commit log into labeled examples");
  mine->add_option("--commits", commits, "Commit log (JSONL)")->required();
  mine->add_option("--out", out_path, "Labeled examples (JSONL)")->required();
  mine->add_option("--since", since, "Ignore commits before this date (YYYY-MM-DD)")->capture_default_str();

  std::string config, out_dir;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic graph dataset");
  simulate->add_option("--config", config, "Generator config (JSON)")->required();
  simulate->add_option("--out", out_dir, "Output dataset directory")->required();

  std::string pre_path, post_path;
  auto* diff = app.add_subcommand("diff", "Build the intervention-only graph of a pre/post pair");
  diff->add_option("--pre", pre_path, "Pre-intervention GraphML")->required();
  diff->add_option("--post", post_path, "Post-intervention GraphML")->required();
  diff->add_option("--out", out_path, "Intervention GraphML")->required();

  std::string dataset_dir;
  auto* featurize = app.add_subcommand("featurize", "Extract the feature table of a dataset directory");
  featurize->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  featurize->add_option("--out", out_path, "Feature CSV")->required();

  std::string features, model_path, report_path;
  std::uint64_t seed = kDefaultSeed;
  PipelineParams params;
  auto* train_cmd = app.add_subcommand("train", "Fit preprocessing and the booster");
  train_cmd->add_option("--features", features, "Feature CSV")->required();
  train_cmd->add_option("--model", model_path, "Model JSON")->required();
  train_cmd->add_option("--seed", seed, "Seed")->capture_default_str();
  train_cmd->add_option("--n-trees", params.hp.n_trees, "Boosting rounds")->capture_default_str();
  train_cmd->add_option("--max-depth", params.hp.max_depth, "Tree depth")->capture_default_str();
  train_cmd->add_option("--learning-rate", params.hp.learning_rate, "Shrinkage")->capture_default_str();
  train_cmd->add_option("--min-child-weight", params.hp.min_child_weight, "Minimum hessian per leaf")->capture_default_str();
  train_cmd->add_option("--lambda", params.hp.l2_lambda, "L2 regularization")->capture_default_str();
  train_cmd->add_option("--subsample", params.hp.subsample, "Row subsample per tree")->capture_default_str();
  train_cmd->add_option("--null-threshold", params.null_threshold, "Drop features missing more often")->capture_default_str();
  train_cmd->add_option("--corr-threshold", params.corr_threshold, "Drop features correlated above")->capture_default_str();

  int outer = 10, inner = 3, budget = 10;
  auto* evaluate = app.add_subcommand("evaluate", "Nested cross-validation with random search");
  evaluate->add_option("--features", features, "Feature CSV")->required();
  evaluate->add_option("--report", report_path, "Report JSON (ROC CSV written alongside)")->required();
  evaluate->add_option("--outer", outer, "Outer folds")->capture_default_str();
  evaluate->add_option("--inner", inner, "Inner folds")->capture_default_str();
  evaluate->add_option("--budget", budget, "Configurations per outer fold")->capture_default_str();
  evaluate->add_option("--seed", seed, "Seed")->capture_default_str();

  std::string targets = "@groups";
  int folds = 5;
  auto* loco_cmd = app.add_subcommand("loco", "Leave-one-covariate-out importance");
  loco_cmd->add_option("--features", features, "Feature CSV")->required();
  loco_cmd->add_option("--report", report_path, "Report JSON")->required();
  loco_cmd->add_option("--targets", targets, "Comma-separated features or groups; @groups = all six groups")->capture_default_str();
  loco_cmd->add_option("--folds", folds, "Folds")->capture_default_str();
  loco_cmd->add_option("--seed", seed, "Seed")->capture_default_str();

  std::vector<double> fractions = default_fractions();
  int curve_folds = 10;
  auto* curve = app.add_subcommand("curve", "Learning curve over training-set fractions");
  curve->add_option("--features", features, "Feature CSV")->required();
  curve->add_option("--report", report_path, "Report JSON (curve CSV written alongside)")->required();
  curve->add_option("--fractions", fractions, "Training fractions")->capture_default_str()->delimiter(',');
  curve->add_option("--folds", curve_folds, "Folds")->capture_default_str();
  curve->add_option("--seed", seed, "Seed")->capture_default_str();

  std::string rules_path, url, type_name = "other", frame;
  auto* match = app.add_subcommand("match", "Decide one request against a filter list");
  match->add_option("--rules", rules_path, "Filter list")->required();
  match->add_option("--url", url, "Request URL")->required();
  match->add_option("--type", type_name, "Resource type")->capture_default_str();
  match->add_option("--frame", frame, "Frame origin (host or URL)")->required();
  match->add_option("--manifest", manifest_path, "Write a run manifest here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  if (show_version) {
    out << "filterbreak " << kVersion << " (feature schema v" << kFeatureSchemaVersion << ", "
        << schema().size() << " features)\n";
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    out << app.help();
    return kExitInput;
  }

  Context ctx{out, err, static_cast<unsigned>(jobs)};
  const auto start = std::chrono::steady_clock::now();
  try {
    RunManifest m;
    fs::path manifest_out;
    if (mine->parsed()) {
      m = cmd_mine(ctx, commits, out_path, since);
      manifest_out = detail::manifest_for_file(out_path);
    } else if (simulate->parsed()) {
      m = cmd_simulate(ctx, config, out_dir);
      manifest_out = fs::path(out_dir) / "run_manifest.json";
    } else if (diff->parsed()) {
      m = cmd_diff(ctx, pre_path, post_path, out_path);
      manifest_out = detail::manifest_for_file(out_path);
    } else if (featurize->parsed()) {
      m = cmd_featurize(ctx, dataset_dir, out_path);
      manifest_out = detail::manifest_for_file(out_path);
    } else if (train_cmd->parsed()) {
      params.hp.seed = seed;
      m = cmd_train(ctx, features, model_path, params);
      manifest_out = detail::manifest_for_file(model_path);
    } else if (evaluate->parsed()) {
      m = cmd_evaluate(ctx, features, report_path, outer, inner, budget, seed);
      manifest_out = detail::manifest_for_file(report_path);
    } else if (loco_cmd->parsed()) {
      m = cmd_loco(ctx, features, report_path, targets, folds, seed);
      manifest_out = detail::manifest_for_file(report_path);
    } else if (curve->parsed()) {
      m = cmd_curve(ctx, features, report_path, fractions, curve_folds, seed);
      manifest_out = detail::manifest_for_file(report_path);
    } else if (match->parsed()) {
      m = cmd_match(ctx, rules_path, url, type_name, frame);
      if (!manifest_path.empty()) manifest_out = manifest_path;
    }
    m.settings["jobs"] = jobs;
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!manifest_out.empty()) detail::write_json_file(manifest_out, m.to_json());
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace filterbreak::cli
