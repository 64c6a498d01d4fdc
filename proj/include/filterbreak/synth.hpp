#pragma once

// Deterministic generator of labeled (pre, post) page-graph pairs.
//
// Each example is a page whose recording contains one third-party script T
// that the filter-list change blocks, sometimes with one extra image or frame.
// The label only enters through three shifted draws, all scaled by the
// signal strength s:
//   total bytes of directly blocked resources   U[1000, 20000] + s * 20000
//   scripts fetched by T                          U{0..3} + Bin(2, 0.6 s)
//   DOM nodes created by T                        U{0..8} + Bin(6, 0.5 s)
// so s = 0 makes the label independent of the graphs, and at s = 1 the blocked
// byte totals of the two classes do not overlap.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "filterbreak/commit_miner.hpp"
#include "filterbreak/errors.hpp"
#include "filterbreak/graph.hpp"
#include "filterbreak/intervention.hpp"
#include "filterbreak/parallel.hpp"
#include "filterbreak/rng.hpp"

namespace filterbreak {

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_examples = 100;
  double broken_fraction = 0.5;
  double signal_strength = 0.8;
  std::size_t size_min = 50;   // parser-built nodes in the main document
  std::size_t size_max = 500;

  void validate() const {
    if (n_examples < 2) throw ConfigError("n_examples must be at least 2");
    if (!(broken_fraction >= 0.0 && broken_fraction <= 1.0))
      throw ConfigError("broken_fraction must lie in [0, 1]");
    if (!(signal_strength >= 0.0 && signal_strength <= 1.0))
      throw ConfigError("signal_strength must lie in [0, 1]");
    if (size_min == 0 || size_max == 0) throw ConfigError("size bounds must be positive");
    if (size_min > size_max) throw ConfigError("size_min exceeds size_max");
  }
};

inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"seed",           "n_examples", "broken_fraction",
                                              "signal_strength", "size_min",   "size_max"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ConfigError("unknown config field '" + k + "'");
  }
  SynthConfig c;
  auto count = [&](const char* key, std::size_t& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError(std::string(key) + " must be a non-negative integer");
    out = v.get<std::size_t>();
  };
  auto real = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
    out = v.get<double>();
  };
  if (j.contains("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_integer()) throw ConfigError("seed must be an integer");
    c.seed = v.is_number_unsigned() ? v.get<std::uint64_t>()
                                    : static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  count("n_examples", c.n_examples);
  real("broken_fraction", c.broken_fraction);
  real("signal_strength", c.signal_strength);
  count("size_min", c.size_min);
  count("size_max", c.size_max);
  c.validate();
  return c;
}

inline nlohmann::json synth_config_to_json(const SynthConfig& c) {
  return {{"seed", c.seed},
          {"n_examples", c.n_examples},
          {"broken_fraction", c.broken_fraction},
          {"signal_strength", c.signal_strength},
          {"size_min", c.size_min},
          {"size_max", c.size_max}};
}

struct SynthPair {
  PageGraph pre;
  PageGraph post;
  FilterListDiff diff;  // the rule change that produces the blocking
};

struct SynthExample {
  GraphTriple triple;
  Label label = Label::working;
  FilterListDiff diff;
};

namespace detail {

inline constexpr std::array<std::string_view, 17> kSynthApis = {
    "window.navigator.userAgent",        "window.navigator.language",
    "window.navigator.plugins",          "window.screen.width",
    "window.screen.height",              "window.location.href",
    "window.fetch",                      "window.postMessage",
    "document.createElement",            "document.write",
    "document.querySelector",            "WebGLRenderingContext.getParameter",
    "CanvasRenderingContext2D.fillText", "XMLHttpRequest.open",
    "HTMLElement.getBoundingClientRect", "Date.now",
    "Math.random"};

inline constexpr std::array<std::string_view, 12> kStaticTags = {
    "div", "p", "a", "li", "ul", "span", "h1", "h2", "nav", "footer", "table", "td"};
inline constexpr std::array<std::string_view, 5> kScriptTags = {"div", "span", "img", "section",
                                                                "button"};
inline constexpr std::array<std::string_view, 3> kStorageKinds = {"cookie", "localStorage",
                                                                  "sessionStorage"};

class SynthBuilder {
 public:
  explicit SynthBuilder(Rng& rng, std::string page_url) : rng_(rng), g_(std::move(page_url)) {}

  NodeId node(NodeKind kind, NodeAttrs attrs = {}, NodeId cause = 0) {
    const NodeId id = next_node_++;
    g_.add_node({id, kind, std::move(attrs)});
    cause_[id] = cause;
    if (kind == NodeKind::dom_node && cause_[id] == 0) static_elements_.push_back(id);
    return id;
  }

  void edge(NodeId src, NodeId dst, EdgeKind kind, EdgeAttrs attrs = {}) {
    g_.add_edge({next_edge_++, src, dst, kind, std::move(attrs)});
  }

  NodeId element(NodeId creator, NodeId parent, std::string_view tag, std::int64_t frame, NodeId cause) {
    NodeAttrs a;
    a.tag = std::string(tag);
    if (frame != 0) a.frame_id = frame;
    const NodeId id = node(NodeKind::dom_node, std::move(a), cause);
    edge(creator, id, EdgeKind::node_create);
    if (parent != 0) edge(parent, id, EdgeKind::structure);
    return id;
  }

  NodeId text(NodeId creator, NodeId parent, std::int64_t frame, NodeId cause) {
    NodeAttrs a;
    a.text_len = rng_.uniform_int(1, 400);
    if (frame != 0) a.frame_id = frame;
    const NodeId id = node(NodeKind::text_node, std::move(a), cause);
    edge(creator, id, EdgeKind::node_create);
    if (parent != 0) edge(parent, id, EdgeKind::structure);
    return id;
  }

  NodeId resource(std::string url, NodeId cause) {
    NodeAttrs a;
    a.url = std::move(url);
    return node(NodeKind::network_resource, std::move(a), cause);
  }

  void request(NodeId requester, NodeId res, ResourceType type, std::optional<std::int64_t> size) {
    EdgeAttrs req;
    req.request_type = type;
    edge(requester, res, EdgeKind::http_request, req);
    if (size) {
      EdgeAttrs resp;
      resp.status = 200;
      resp.size_bytes = *size;
      edge(res, requester, EdgeKind::http_response, resp);
    }
  }

  NodeId api(std::string_view name) {
    auto it = apis_.find(std::string(name));
    if (it != apis_.end()) return it->second;
    NodeAttrs a;
    a.api_name = std::string(name);
    const NodeId id = node(NodeKind::web_api, std::move(a));
    apis_.emplace(std::string(name), id);
    return id;
  }

  NodeId storage(std::string_view kind) {
    auto it = storage_.find(std::string(kind));
    if (it != storage_.end()) return it->second;
    NodeAttrs a;
    a.storage_kind = std::string(kind);
    const NodeId id = node(NodeKind::storage_area, std::move(a));
    storage_.emplace(std::string(kind), id);
    return id;
  }

  NodeId random_static() { return rng_.pick(static_elements_); }

  std::string next_url(std::string_view host, std::string_view ext) {
    return "https://" + std::string(host) + "/r" + std::to_string(url_counter_++) + std::string(ext);
  }

  PageGraph& graph() { return g_; }
  NodeId cause(NodeId id) const { return cause_.at(id); }
  Rng& rng() { return rng_; }

 private:
  Rng& rng_;
  PageGraph g_;
  NodeId next_node_ = 1;
  EdgeId next_edge_ = 1;
  std::map<NodeId, NodeId> cause_;
  std::vector<NodeId> static_elements_;
  std::map<std::string, NodeId> apis_;
  std::map<std::string, NodeId> storage_;
  int url_counter_ = 0;
};

struct ActorPlan {
  std::int64_t api_calls = 0;
  std::int64_t storage_ops = 0;
  std::int64_t listener_adds = 0;
  std::int64_t listener_removes = 0;
  std::int64_t creations = 0;
  std::int64_t modifications = 0;
  std::int64_t deletions = 0;
  std::int64_t xhrs = 0;
  std::vector<std::int64_t> child_script_sizes;
  bool cross_frame_allowed = false;
};

inline ActorPlan noise_plan(Rng& rng, bool cross_frame_allowed) {
  ActorPlan p;
  p.api_calls = rng.uniform_int(0, 10);
  p.storage_ops = rng.uniform_int(0, 4);
  p.listener_adds = rng.uniform_int(0, 3);
  p.listener_removes = rng.uniform_int(0, 1);
  p.creations = rng.uniform_int(0, 6);
  p.modifications = rng.uniform_int(0, 2);
  p.deletions = rng.uniform_int(0, 1);
  p.xhrs = rng.uniform_int(0, 2);
  p.cross_frame_allowed = cross_frame_allowed;
  return p;
}

inline void run_actor(SynthBuilder& b, NodeId actor, const ActorPlan& plan, std::string_view host,
                      int depth);

inline void run_actor(SynthBuilder& b, NodeId actor, const ActorPlan& plan, std::string_view host,
                      int depth) {
  Rng& rng = b.rng();
  for (std::int64_t i = 0; i < plan.api_calls; ++i) {
    EdgeAttrs a;
    if (plan.cross_frame_allowed && rng.bernoulli(0.1)) a.cross_frame = true;
    b.edge(actor, b.api(rng.pick(kSynthApis)), EdgeKind::api_call, a);
  }
  for (std::int64_t i = 0; i < plan.storage_ops; ++i) {
    EdgeAttrs a;
    a.key = "k" + std::to_string(rng.uniform_int(0, 9));
    static constexpr std::array<EdgeKind, 3> ops = {EdgeKind::storage_set, EdgeKind::storage_read,
                                                    EdgeKind::storage_delete};
    b.edge(actor, b.storage(rng.pick(kStorageKinds)), rng.pick(ops), a);
  }
  for (std::int64_t i = 0; i < plan.listener_adds; ++i)
    b.edge(actor, b.random_static(), EdgeKind::event_listener_add);
  for (std::int64_t i = 0; i < plan.listener_removes; ++i)
    b.edge(actor, b.random_static(), EdgeKind::event_listener_remove);
  for (std::int64_t i = 0; i < plan.creations; ++i) {
    const NodeId parent = b.random_static();
    NodeId created = 0;
    if (rng.bernoulli(0.2)) {
      created = b.text(actor, parent, 0, actor);
    } else {
      created = b.element(actor, parent, rng.pick(kScriptTags), 0, actor);
    }
    b.edge(actor, created, EdgeKind::node_insert);
  }
  for (std::int64_t i = 0; i < plan.modifications; ++i)
    b.edge(actor, b.random_static(), EdgeKind::node_modify);
  for (std::int64_t i = 0; i < plan.deletions; ++i)
    b.edge(actor, b.random_static(), EdgeKind::node_delete);
  for (std::int64_t i = 0; i < plan.xhrs; ++i) {
    const NodeId r = b.resource(b.next_url(host, ".json"), actor);
    b.request(actor, r, ResourceType::xhr, rng.uniform_int(100, 5000));
  }
  for (auto size : plan.child_script_sizes) {
    const NodeId r = b.resource(b.next_url(host, ".js"), actor);
    b.request(actor, r, ResourceType::script, size);
    const NodeId child = b.node(NodeKind::script_actor, {}, r);
    b.edge(actor, child, EdgeKind::script_execute);
    if (depth < 1) {
      ActorPlan light;
      light.api_calls = rng.uniform_int(0, 3);
      light.creations = rng.uniform_int(0, 2);
      light.storage_ops = rng.uniform_int(0, 1);
      run_actor(b, child, light, host, depth + 1);
    }
  }
}

inline std::int64_t binomial(Rng& rng, int trials, double p) {
  std::int64_t k = 0;
  for (int i = 0; i < trials; ++i) k += rng.bernoulli(p) ? 1 : 0;
  return k;
}

}  // namespace detail

/// One (pre, post) pair. Identical arguments give identical graphs.
inline SynthPair generate_example(std::uint64_t seed, Label label, double signal_strength,
                                  std::size_t size_min = 50, std::size_t size_max = 500) {
  using namespace detail;
  Rng rng(seed);
  const double s = label == Label::broken ? signal_strength : 0.0;
  const std::string site = "site" + std::to_string(rng.uniform_int(0, 999999)) + ".example";
  const std::string page_url = "https://www." + site + "/";

  // Layout draws come first so the label-dependent draws never shift them.
  const auto content = static_cast<std::int64_t>(rng.uniform_int(
      static_cast<std::int64_t>(size_min), static_cast<std::int64_t>(size_max)));
  const auto n_first_party = rng.uniform_int(0, 4);
  const auto n_third_party = rng.uniform_int(0, 4);
  const auto n_images = rng.uniform_int(0, 6);
  const auto n_frames = rng.uniform_int(0, 2);
  const auto n_preblocked = rng.uniform_int(0, 2);
  const bool extra_block = (n_images + n_frames > 0) && rng.bernoulli(0.3);
  const auto extra_index = extra_block ? rng.uniform_int(0, n_images + n_frames - 1) : -1;
  const double extra_share = rng.uniform(0.1, 0.4);
  const std::string tracker_host = "cdn" + std::to_string(rng.uniform_int(0, 99)) + ".adnet" +
                                   std::to_string(rng.uniform_int(0, 9999)) + ".com";

  // Label-dependent draws.
  const auto blocked_bytes = static_cast<std::int64_t>(std::llround(rng.uniform(1000.0, 20000.0) + s * 20000.0));
  const auto n_children = rng.uniform_int(0, 3) + binomial(rng, 2, 0.6 * s);
  const auto n_creations = rng.uniform_int(0, 8) + binomial(rng, 6, 0.5 * s);

  SynthBuilder b(rng, page_url);
  const NodeId parser = b.node(NodeKind::parser);
  const NodeId html = b.element(parser, 0, "html", 0, 0);
  const NodeId head = b.element(parser, html, "head", 0, 0);
  const NodeId body = b.element(parser, html, "body", 0, 0);

  std::vector<NodeId> containers = {body};
  for (std::int64_t i = 0; i < content; ++i) {
    const NodeId parent = rng.pick(containers);
    if (rng.bernoulli(0.35)) {
      b.text(parser, parent, 0, 0);
    } else {
      containers.push_back(b.element(parser, parent, rng.pick(kStaticTags), 0, 0));
    }
  }

  const bool multi_frame = n_frames > 0;
  auto script = [&](std::string_view host, std::int64_t size) {
    const NodeId tag = b.element(parser, rng.bernoulli(0.5) ? head : body, "script", 0, 0);
    const NodeId res = b.resource(b.next_url(host, ".js"), 0);
    b.request(tag, res, ResourceType::script, size);
    const NodeId actor = b.node(NodeKind::script_actor, {}, res);
    b.edge(tag, actor, EdgeKind::script_execute);
    return std::pair{res, actor};
  };

  for (std::int64_t i = 0; i < n_first_party; ++i) {
    const auto [res, actor] = script("www." + site, rng.uniform_int(1000, 40000));
    run_actor(b, actor, noise_plan(rng, multi_frame), "www." + site, 0);
  }
  for (std::int64_t i = 0; i < n_third_party; ++i) {
    const std::string host = "static" + std::to_string(rng.uniform_int(0, 999)) + ".cdn.net";
    const auto [res, actor] = script(host, rng.uniform_int(1000, 40000));
    run_actor(b, actor, noise_plan(rng, multi_frame), host, 0);
  }

  std::vector<NodeId> blocked;
  const auto extra_bytes =
      extra_block ? std::max<std::int64_t>(1, std::llround(static_cast<double>(blocked_bytes) * extra_share)) : 0;

  // The script the change blocks.
  {
    const auto [res, actor] = script(tracker_host, blocked_bytes - extra_bytes);
    blocked.push_back(res);
    ActorPlan plan = noise_plan(rng, multi_frame);
    plan.creations = n_creations;
    for (std::int64_t i = 0; i < n_children; ++i) plan.child_script_sizes.push_back(rng.uniform_int(5000, 60000));
    run_actor(b, actor, plan, tracker_host, 0);
  }

  std::int64_t slot = 0;
  for (std::int64_t i = 0; i < n_images; ++i, ++slot) {
    const NodeId img = b.element(parser, rng.pick(containers), "img", 0, 0);
    const bool third = rng.bernoulli(0.5);
    const NodeId res = b.resource(b.next_url(third ? "img.adnet.com" : "www." + site, ".png"), 0);
    const bool is_extra = slot == extra_index;
    b.request(img, res, ResourceType::image, is_extra ? extra_bytes : rng.uniform_int(500, 30000));
    if (is_extra) blocked.push_back(res);
  }
  for (std::int64_t f = 1; f <= n_frames; ++f, ++slot) {
    const NodeId iframe = b.element(parser, rng.pick(containers), "iframe", 0, 0);
    const NodeId res = b.resource(b.next_url("frames" + std::to_string(f) + ".widget.org", ".html"), 0);
    const bool is_extra = slot == extra_index;
    b.request(iframe, res, ResourceType::subdocument, is_extra ? extra_bytes : rng.uniform_int(2000, 20000));
    if (is_extra) blocked.push_back(res);
    NodeAttrs pa;
    pa.frame_id = f;
    const NodeId sub_parser = b.node(NodeKind::parser, pa, res);
    const NodeId sub_html = b.element(sub_parser, 0, "html", f, res);
    b.edge(iframe, sub_html, EdgeKind::structure);
    const NodeId sub_body = b.element(sub_parser, sub_html, "body", f, res);
    const auto sub_content = rng.uniform_int(2, 20);
    for (std::int64_t i = 0; i < sub_content; ++i) {
      if (rng.bernoulli(0.4)) {
        b.text(sub_parser, sub_body, f, res);
      } else {
        b.element(sub_parser, sub_body, rng.pick(kStaticTags), f, res);
      }
    }
  }

  if (n_preblocked > 0) {
    b.node(NodeKind::content_blocker);
    for (std::int64_t i = 0; i < n_preblocked; ++i) {
      const NodeId img = b.element(parser, rng.pick(containers), "img", 0, 0);
      const NodeId res = b.resource(b.next_url("pixel.trackers.net", ".gif"), 0);
      b.request(img, res, ResourceType::image, std::nullopt);
      const NodeId rule = b.node(NodeKind::filter_rule);
      b.edge(rule, res, EdgeKind::resource_block);
    }
  }

  PageGraph pre = std::move(b.graph());

  // Post: drop everything whose creation depends on a newly blocked resource.
  std::set<NodeId> blocked_set(blocked.begin(), blocked.end());
  std::set<NodeId> removed;
  for (const auto& n : pre.nodes()) {
    const NodeId c = b.cause(n.id);
    if (c != 0 && (blocked_set.contains(c) || removed.contains(c))) removed.insert(n.id);
  }
  PageGraph post(page_url);
  std::map<NodeId, NodeId> renumber;
  NodeId next = 1;
  for (const auto& n : pre.nodes()) {
    if (removed.contains(n.id)) continue;
    GraphNode copy = n;
    copy.id = next++;
    renumber[n.id] = copy.id;
    post.add_node(std::move(copy));
  }
  EdgeId next_edge = 1;
  for (const auto& e : pre.edges()) {
    if (removed.contains(e.src) || removed.contains(e.dst)) continue;
    if (e.kind == EdgeKind::http_response && blocked_set.contains(e.src)) continue;
    GraphEdge copy = e;
    copy.id = next_edge++;
    copy.src = renumber.at(e.src);
    copy.dst = renumber.at(e.dst);
    post.add_edge(std::move(copy));
  }
  for (auto r : blocked) {
    const NodeId rule = next++;
    post.add_node({rule, NodeKind::filter_rule, {}});
    post.add_edge({next_edge++, rule, renumber.at(r), EdgeKind::resource_block, {}});
  }

  SynthPair out{std::move(pre), std::move(post), {}};
  out.diff.added.push_back("||" + tracker_host + "^");
  for (std::size_t i = 1; i < blocked.size(); ++i) {
    const auto url = *out.pre.node(blocked[i]).attrs.url;
    out.diff.added.push_back("|" + url + "|");
  }
  return out;
}

inline std::string synth_example_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ex%06zu", index + 1);
  return buf;
}

/// Labels by index: exactly round(n * broken_fraction) broken, positions
/// chosen by a seeded shuffle.
inline std::vector<Label> synth_labels(const SynthConfig& cfg) {
  const auto n_broken = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.n_examples) * cfg.broken_fraction));
  std::vector<Label> labels(cfg.n_examples, Label::working);
  std::fill_n(labels.begin(), std::min(n_broken, labels.size()), Label::broken);
  Rng rng(derive_seed(cfg.seed, 0x6c6162656c73ULL));
  rng.shuffle(std::span<Label>(labels));
  return labels;
}

inline std::vector<SynthExample> generate_dataset(const SynthConfig& cfg, unsigned jobs = 1) {
  cfg.validate();
  const auto labels = synth_labels(cfg);
  std::vector<SynthExample> out(cfg.n_examples);
  parallel_for(cfg.n_examples, jobs, [&](std::size_t i) {
    auto pair = generate_example(derive_seed(cfg.seed, i + 1), labels[i], cfg.signal_strength,
                                 cfg.size_min, cfg.size_max);
    out[i].label = labels[i];
    out[i].diff = std::move(pair.diff);
    out[i].triple = make_triple(std::move(pair.pre), std::move(pair.post), synth_example_id(i));
  });
  return out;
}

}  // namespace filterbreak
