#pragma once

// Feature extraction over (pre, post, intervention) graph triples.
//
// Every feature has a scope (page = pre graph, intervention = intervention-only
// graph), a kind (absolute count, relative ratio, or delta between pre and
// post), a source (expert-curated or auto-generated) and a behavior category.
// Relative intervention features divide an intervention count by the matching
// page count and are missing when that denominator is zero.
//
// The schema is the named expert set followed by an auto-generated grid:
//   {node kind, edge kind, HTML tag, Web API prefix} counts
//   x {page count, intervention count, intervention/page ratio}

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "filterbreak/commit_miner.hpp"
#include "filterbreak/graph.hpp"
#include "filterbreak/intervention.hpp"
#include "filterbreak/parallel.hpp"

namespace filterbreak {

inline constexpr int kFeatureSchemaVersion = 1;

enum class FeatureScope : std::uint8_t { page, intervention };
enum class FeatureKind : std::uint8_t { absolute, relative, delta };
enum class FeatureSource : std::uint8_t { expert, auto_generated };
enum class FeatureCategory : std::uint8_t {
  html_structure,
  js_dom_modification,
  js_other,
  network,
  generic_graph,
};

inline std::string_view to_string(FeatureScope s) { return s == FeatureScope::page ? "page" : "intervention"; }
inline std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::absolute: return "absolute";
    case FeatureKind::relative: return "relative";
    case FeatureKind::delta: return "delta";
  }
  return "absolute";
}
inline std::string_view to_string(FeatureSource s) { return s == FeatureSource::expert ? "expert" : "auto"; }
inline std::string_view to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::html_structure: return "html_structure";
    case FeatureCategory::js_dom_modification: return "js_dom_modification";
    case FeatureCategory::js_other: return "js_other";
    case FeatureCategory::network: return "network";
    case FeatureCategory::generic_graph: return "generic_graph";
  }
  return "generic_graph";
}

struct FeatureSpec {
  std::string name;
  FeatureScope scope = FeatureScope::page;
  FeatureKind kind = FeatureKind::absolute;
  FeatureSource source = FeatureSource::auto_generated;
  FeatureCategory category = FeatureCategory::generic_graph;
  std::string description;
  int importance_rank = 0;  // 1..40 for the published predictive set, else 0

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

using FeatureSchema = std::vector<FeatureSpec>;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

struct FeatureVector {
  std::string example_id;
  Label label = Label::working;
  std::vector<double> values;  // NaN = missing
};

/// Web API name prefixes counted by the auto grid.
inline constexpr std::array<std::string_view, 14> kApiPrefixes = {
    "window.navigator",      "window.screen",         "window.location",
    "window.fetch",          "window.postMessage",    "document.createElement",
    "document.write",        "document.querySelector", "WebGLRenderingContext",
    "CanvasRenderingContext2D", "XMLHttpRequest",     "HTMLElement",
    "Date",                  "Math.random"};

inline std::string api_feature_token(std::string_view prefix) {
  std::string t = to_lower(prefix);
  std::replace(t.begin(), t.end(), '.', '_');
  return t;
}

// ---------------------------------------------------------------------------
// Per-graph statistics

enum class StorageOp : std::uint8_t { set, read, remove };

struct GraphStats {
  std::array<double, kNodeKindCount> node_kinds{};
  std::array<double, kEdgeKindCount> edge_kinds{};
  std::array<double, kHtmlTags.size()> tags{};
  std::array<double, kApiPrefixes.size()> api_prefix_calls{};
  std::array<double, kAllResourceTypes.size()> requests_by_type{};
  // [storage kind][op]; kinds: cookie, localStorage, sessionStorage
  std::array<std::array<double, 3>, 3> storage{};
  double documents = 0;
  double response_bytes = 0;
  double parser_creates = 0;
  double script_creates = 0;
  double cross_frame_api_calls = 0;
  double text_len = 0;
  double initial_html_nodes = 0;
  std::size_t unique_node_edge_kinds = 0;
  std::size_t unique_edge_kinds = 0;

  // Activity of "blocked" script actors: actors started by a <script> DOM
  // node inside the same graph. In an intervention-only graph these are
  // exactly the actors whose script resource was blocked.
  struct Blocked {
    double actors = 0;
    double node_creates = 0;
    double html_creates = 0;
    double text_creates = 0;
    double node_inserts = 0;
    double node_deletes = 0;
    double api_calls = 0;
    double navigator_calls = 0;
    double scripts_executed = 0;
    double listener_adds = 0;
    double listener_removes = 0;
    std::array<std::array<double, 3>, 3> storage{};
    std::size_t unique_action_kinds = 0;
  } blocked;
};

namespace detail {

inline int storage_index(std::string_view kind) {
  if (kind == "cookie") return 0;
  if (kind == "localStorage") return 1;
  if (kind == "sessionStorage") return 2;
  return -1;
}

inline int storage_op(EdgeKind k) {
  switch (k) {
    case EdgeKind::storage_set: return 0;
    case EdgeKind::storage_read: return 1;
    case EdgeKind::storage_delete: return 2;
    default: return -1;
  }
}

inline int api_prefix_index(std::string_view api_name) {
  for (std::size_t i = 0; i < kApiPrefixes.size(); ++i) {
    if (api_name.starts_with(kApiPrefixes[i])) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace detail

inline GraphStats compute_stats(const PageGraph& g) {
  GraphStats s;
  std::set<std::int64_t> frames;
  std::set<NodeId> blocked_actors;
  std::set<int> node_kinds_seen, edge_kinds_seen;

  for (const auto& n : g.nodes()) {
    s.node_kinds[static_cast<std::size_t>(n.kind)] += 1;
    node_kinds_seen.insert(static_cast<int>(n.kind));
    if (n.kind == NodeKind::dom_node && n.attrs.tag) {
      if (auto idx = tag_index(*n.attrs.tag)) s.tags[*idx] += 1;
    }
    if (n.kind == NodeKind::parser) frames.insert(n.frame());
    if (n.kind == NodeKind::text_node) s.text_len += static_cast<double>(n.attrs.text_len.value_or(0));
    if (n.kind == NodeKind::script_actor) {
      for (auto pos : g.in_edges(n.id)) {
        const auto& e = g.edges()[pos];
        if (e.kind == EdgeKind::script_execute && g.node(e.src).kind == NodeKind::dom_node) {
          blocked_actors.insert(n.id);
          break;
        }
      }
    }
  }
  s.documents = static_cast<double>(frames.size());
  s.blocked.actors = static_cast<double>(blocked_actors.size());

  std::set<int> blocked_kinds;
  for (const auto& e : g.edges()) {
    s.edge_kinds[static_cast<std::size_t>(e.kind)] += 1;
    edge_kinds_seen.insert(static_cast<int>(e.kind));
    const auto& src = g.node(e.src);
    const auto& dst = g.node(e.dst);
    const bool from_blocked = blocked_actors.contains(e.src);
    if (from_blocked) blocked_kinds.insert(static_cast<int>(e.kind));

    switch (e.kind) {
      case EdgeKind::http_request:
        if (e.attrs.request_type) s.requests_by_type[static_cast<std::size_t>(*e.attrs.request_type)] += 1;
        break;
      case EdgeKind::http_response:
        s.response_bytes += static_cast<double>(e.attrs.size_bytes.value_or(0));
        break;
      case EdgeKind::node_create:
        if (src.kind == NodeKind::parser) {
          s.parser_creates += 1;
          if (dst.kind == NodeKind::dom_node || dst.kind == NodeKind::text_node)
            s.initial_html_nodes += 1;
        }
        if (src.kind == NodeKind::script_actor) s.script_creates += 1;
        if (from_blocked) {
          s.blocked.node_creates += 1;
          if (dst.kind == NodeKind::dom_node && dst.attrs.tag == "html") s.blocked.html_creates += 1;
          if (dst.kind == NodeKind::text_node) s.blocked.text_creates += 1;
        }
        break;
      case EdgeKind::node_insert:
        if (from_blocked) s.blocked.node_inserts += 1;
        break;
      case EdgeKind::node_delete:
        if (from_blocked) s.blocked.node_deletes += 1;
        break;
      case EdgeKind::api_call:
        if (dst.attrs.api_name) {
          const int p = detail::api_prefix_index(*dst.attrs.api_name);
          if (p >= 0) s.api_prefix_calls[static_cast<std::size_t>(p)] += 1;
          if (from_blocked && dst.attrs.api_name->starts_with("window.navigator"))
            s.blocked.navigator_calls += 1;
        }
        if (e.attrs.cross_frame.value_or(false)) s.cross_frame_api_calls += 1;
        if (from_blocked) s.blocked.api_calls += 1;
        break;
      case EdgeKind::script_execute:
        if (from_blocked && dst.kind == NodeKind::script_actor) s.blocked.scripts_executed += 1;
        break;
      case EdgeKind::event_listener_add:
        if (from_blocked) s.blocked.listener_adds += 1;
        break;
      case EdgeKind::event_listener_remove:
        if (from_blocked) s.blocked.listener_removes += 1;
        break;
      case EdgeKind::storage_set:
      case EdgeKind::storage_read:
      case EdgeKind::storage_delete: {
        const int k = dst.attrs.storage_kind ? detail::storage_index(*dst.attrs.storage_kind) : -1;
        const int op = detail::storage_op(e.kind);
        if (k >= 0) {
          s.storage[static_cast<std::size_t>(k)][static_cast<std::size_t>(op)] += 1;
          if (from_blocked) s.blocked.storage[static_cast<std::size_t>(k)][static_cast<std::size_t>(op)] += 1;
        }
        break;
      }
      default:
        break;
    }
  }
  s.unique_node_edge_kinds = node_kinds_seen.size() + edge_kinds_seen.size();
  s.unique_edge_kinds = edge_kinds_seen.size();
  s.blocked.unique_action_kinds = blocked_kinds.size();
  return s;
}

/// Inputs to feature functions. `flip` holds the pre/post comparison used by
/// delta features.
struct FeatureContext {
  const GraphStats& page;
  const GraphStats& post;
  const GraphStats& intv;
  double directly_blocked_bytes = 0;
  double resources_blocked = 0;
};

namespace detail {

inline double ratio(double num, double den) { return den == 0 ? kMissing : num / den; }

inline double storage_total(const std::array<double, 3>& ops) { return ops[0] + ops[1] + ops[2]; }

struct FeatureDef {
  FeatureSpec spec;
  std::function<double(const FeatureContext&)> fn;
};

inline FeatureDef def(std::string name, FeatureScope scope, FeatureKind kind, FeatureSource source,
                      FeatureCategory cat, int rank, std::string desc,
                      std::function<double(const FeatureContext&)> fn) {
  return {{std::move(name), scope, kind, source, cat, std::move(desc), rank}, std::move(fn)};
}

inline std::vector<FeatureDef> build_feature_defs() {
  using S = FeatureScope;
  using K = FeatureKind;
  using Src = FeatureSource;
  using C = FeatureCategory;
  constexpr auto kPage = S::page;
  constexpr auto kIntv = S::intervention;
  constexpr auto kAuto = Src::auto_generated;
  constexpr auto kExpert = Src::expert;
  const auto tag = [](std::string_view t) { return *tag_index(t); };
  const auto api = [](std::string_view prefix) {
    return static_cast<std::size_t>(api_prefix_index(prefix));
  };
  constexpr std::size_t kCookie = 0, kLocal = 1, kSession = 2;
  constexpr std::size_t kSet = 0, kRead = 1, kDelete = 2;
  const auto sub = static_cast<std::size_t>(ResourceType::subdocument);

  std::vector<FeatureDef> d;

  // Page structure
  d.push_back(def("intv.ratio.request.subdocument", kIntv, K::relative, kAuto, C::html_structure, 3,
                  "% of sub-document requests blocked",
                  [=](const FeatureContext& c) { return ratio(c.intv.requests_by_type[sub], c.page.requests_by_type[sub]); }));
  d.push_back(def("page.count.initial_html_nodes", kPage, K::absolute, kAuto, C::html_structure, 6,
                  "# of tags and text nodes in initial HTML",
                  [](const FeatureContext& c) { return c.page.initial_html_nodes; }));
  d.push_back(def("intv.delta.subdocuments", kIntv, K::delta, kAuto, C::html_structure, 13,
                  "change in # of sub-documents after blocking",
                  [](const FeatureContext& c) { return c.page.documents - c.post.documents; }));
  d.push_back(def("page.count.tag.iframe", kPage, K::absolute, kAuto, C::html_structure, 19,
                  "# of <iframe> in page",
                  [=](const FeatureContext& c) { return c.page.tags[tag("iframe")]; }));
  d.push_back(def("page.ratio.tag.html", kPage, K::relative, kAuto, C::html_structure, 33,
                  "% of DOM nodes that are <html>", [=](const FeatureContext& c) {
                    return ratio(c.page.tags[tag("html")], c.page.node_kinds[static_cast<std::size_t>(NodeKind::dom_node)]);
                  }));
  d.push_back(def("page.ratio.tag.iframe", kPage, K::relative, kAuto, C::html_structure, 36,
                  "% of DOM nodes that are <iframe>", [=](const FeatureContext& c) {
                    return ratio(c.page.tags[tag("iframe")], c.page.node_kinds[static_cast<std::size_t>(NodeKind::dom_node)]);
                  }));
  d.push_back(def("intv.ratio.tag.html", kIntv, K::relative, kExpert, C::html_structure, 40,
                  "% of <html> elements blocked",
                  [=](const FeatureContext& c) { return ratio(c.intv.tags[tag("html")], c.page.tags[tag("html")]); }));

  // Generic graph
  d.push_back(def("page.count.unique_node_edge_kinds", kPage, K::absolute, kAuto, C::generic_graph, 11,
                  "# of unique node and edge types",
                  [](const FeatureContext& c) { return static_cast<double>(c.page.unique_node_edge_kinds); }));
  d.push_back(def("intv.count.unique_blocked_action_kinds", kIntv, K::absolute, kAuto, C::generic_graph, 22,
                  "# of unique types of actions taken by blocked scripts",
                  [](const FeatureContext& c) { return static_cast<double>(c.intv.blocked.unique_action_kinds); }));
  d.push_back(def("page.count.unique_action_kinds", kPage, K::absolute, kAuto, C::generic_graph, 35,
                  "# of unique types of actions in entire page",
                  [](const FeatureContext& c) { return static_cast<double>(c.page.unique_edge_kinds); }));

  // JavaScript modifying page structure
  d.push_back(def("intv.delta.parser_created_nodes", kIntv, K::delta, kAuto, C::js_dom_modification, 7,
                  "# of DOM nodes created by HTML parser prevented by blocking",
                  [](const FeatureContext& c) { return c.page.parser_creates - c.post.parser_creates; }));
  d.push_back(def("intv.ratio.js_nodes_created_by_blocked", kIntv, K::relative, kAuto, C::js_dom_modification, 12,
                  "% of JS DOM nodes created by blocked scripts",
                  [](const FeatureContext& c) { return ratio(c.intv.blocked.node_creates, c.page.script_creates); }));
  d.push_back(def("intv.count.node_inserts_by_blocked", kIntv, K::absolute, kAuto, C::js_dom_modification, 16,
                  "# of DOM node insertions done by blocked scripts",
                  [](const FeatureContext& c) { return c.intv.blocked.node_inserts; }));
  d.push_back(def("intv.count.html_created_by_blocked", kIntv, K::absolute, kExpert, C::js_dom_modification, 21,
                  "# of <html> elements created by blocked scripts",
                  [](const FeatureContext& c) { return c.intv.blocked.html_creates; }));
  d.push_back(def("intv.count.nodes_created_by_blocked", kIntv, K::absolute, kExpert, C::js_dom_modification, 25,
                  "# of DOM nodes created by blocked scripts",
                  [](const FeatureContext& c) { return c.intv.blocked.node_creates; }));
  d.push_back(def("page.count.nodes_created_by_scripts", kPage, K::absolute, kAuto, C::js_dom_modification, 30,
                  "# of DOM nodes created by scripts in entire page",
                  [](const FeatureContext& c) { return c.page.script_creates; }));
  d.push_back(def("intv.ratio.node_deletes_by_blocked", kIntv, K::relative, kAuto, C::js_dom_modification, 34,
                  "% of DOM node deletions done by blocked scripts", [](const FeatureContext& c) {
                    return ratio(c.intv.blocked.node_deletes, c.page.edge_kinds[static_cast<std::size_t>(EdgeKind::node_delete)]);
                  }));

  // Other JavaScript behavior
  d.push_back(def("page.count.api.window_navigator", kPage, K::absolute, kExpert, C::js_other, 4,
                  "# of times any script accessed properties on window.navigator",
                  [=](const FeatureContext& c) { return c.page.api_prefix_calls[api("window.navigator")]; }));
  d.push_back(def("intv.count.scripts_fetched_by_blocked", kIntv, K::absolute, kAuto, C::js_other, 5,
                  "# of scripts fetched or eval'ed by blocked scripts",
                  [](const FeatureContext& c) { return c.intv.blocked.scripts_executed; }));
  d.push_back(def("page.count.session_storage_deletes", kPage, K::absolute, kExpert, C::js_other, 8,
                  "# of times any script deleted a value from sessionStorage",
                  [=](const FeatureContext& c) { return c.page.storage[kSession][kDelete]; }));
  d.push_back(def("intv.ratio.cookie_sets_by_blocked", kIntv, K::relative, kExpert, C::js_other, 9,
                  "% of document.cookie sets occurring in blocked scripts",
                  [=](const FeatureContext& c) { return ratio(c.intv.blocked.storage[kCookie][kSet], c.page.storage[kCookie][kSet]); }));
  d.push_back(def("intv.ratio.local_storage_ops_by_blocked", kIntv, K::relative, kAuto, C::js_other, 10,
                  "% of localStorage operations occurring in blocked scripts", [=](const FeatureContext& c) {
                    return ratio(storage_total(c.intv.blocked.storage[kLocal]), storage_total(c.page.storage[kLocal]));
                  }));
  d.push_back(def("page.count.scripts_fetched_or_evaled", kPage, K::absolute, kAuto, C::js_other, 14,
                  "# of scripts fetched or eval'ed in entire page", [](const FeatureContext& c) {
                    return c.page.edge_kinds[static_cast<std::size_t>(EdgeKind::script_execute)];
                  }));
  d.push_back(def("intv.count.cookie_reads_by_blocked", kIntv, K::absolute, kExpert, C::js_other, 15,
                  "# of times blocked scripts read from document.cookie",
                  [=](const FeatureContext& c) { return c.intv.blocked.storage[kCookie][kRead]; }));
  d.push_back(def("page.count.cookie_ops", kPage, K::absolute, kAuto, C::js_other, 17,
                  "# of document.cookie operations in entire page",
                  [=](const FeatureContext& c) { return storage_total(c.page.storage[kCookie]); }));
  d.push_back(def("intv.ratio.session_storage_ops_by_blocked", kIntv, K::relative, kAuto, C::js_other, 18,
                  "% of sessionStorage operations done by blocked scripts", [=](const FeatureContext& c) {
                    return ratio(storage_total(c.intv.blocked.storage[kSession]), storage_total(c.page.storage[kSession]));
                  }));
  d.push_back(def("page.count.api.webglrenderingcontext", kPage, K::absolute, kExpert, C::js_other, 20,
                  "# of WebGL calls over the entire page",
                  [=](const FeatureContext& c) { return c.page.api_prefix_calls[api("WebGLRenderingContext")]; }));
  d.push_back(def("intv.count.api_calls_by_blocked", kIntv, K::absolute, kAuto, C::js_other, 23,
                  "# of Web API calls made by blocked scripts",
                  [](const FeatureContext& c) { return c.intv.blocked.api_calls; }));
  d.push_back(def("intv.ratio.listener_removes_by_blocked", kIntv, K::relative, kAuto, C::js_other, 26,
                  "% of eventListener removals done by blocked scripts", [](const FeatureContext& c) {
                    return ratio(c.intv.blocked.listener_removes,
                                 c.page.edge_kinds[static_cast<std::size_t>(EdgeKind::event_listener_remove)]);
                  }));
  d.push_back(def("page.count.listener_adds", kPage, K::absolute, kAuto, C::js_other, 28,
                  "# of eventListener registrations in entire page", [](const FeatureContext& c) {
                    return c.page.edge_kinds[static_cast<std::size_t>(EdgeKind::event_listener_add)];
                  }));
  d.push_back(def("intv.ratio.navigator_reads_by_blocked", kIntv, K::relative, kExpert, C::js_other, 29,
                  "% of window.navigator reads made by blocked scripts", [=](const FeatureContext& c) {
                    return ratio(c.intv.blocked.navigator_calls, c.page.api_prefix_calls[api("window.navigator")]);
                  }));
  d.push_back(def("page.count.tag.script", kPage, K::absolute, kAuto, C::js_other, 31, "# of <script> tags in page",
                  [=](const FeatureContext& c) { return c.page.tags[tag("script")]; }));
  d.push_back(def("page.count.api.window_screen", kPage, K::absolute, kExpert, C::js_other, 37,
                  "# of window.screen reads over entire page",
                  [=](const FeatureContext& c) { return c.page.api_prefix_calls[api("window.screen")]; }));
  d.push_back(def("page.count.cross_document_script_reads", kPage, K::absolute, kAuto, C::js_other, 38,
                  "# of cross-document script reads in entire page",
                  [](const FeatureContext& c) { return c.page.cross_frame_api_calls; }));
  d.push_back(def("page.count.local_storage_reads", kPage, K::absolute, kExpert, C::js_other, 39,
                  "# of localStorage reads over entire page",
                  [=](const FeatureContext& c) { return c.page.storage[kLocal][kRead]; }));

  // Network
  d.push_back(def("net.delta_bytes_after_blocking", kIntv, K::delta, kExpert, C::network, 1,
                  "change in bytes sent over network after blocking",
                  [](const FeatureContext& c) { return c.page.response_bytes - c.post.response_bytes; }));
  d.push_back(def("net.directly_blocked_bytes", kIntv, K::delta, kExpert, C::network, 2,
                  "size of resources directly blocked",
                  [](const FeatureContext& c) { return c.directly_blocked_bytes; }));
  d.push_back(def("net.resources_blocked", kIntv, K::delta, kExpert, C::network, 24,
                  "# of resources blocked (direct or indirect)",
                  [](const FeatureContext& c) { return c.resources_blocked; }));
  d.push_back(def("page.ratio.network_actions", kPage, K::relative, kAuto, C::network, 27,
                  "% of page actions that were network requests", [](const FeatureContext& c) {
                    double total = 0;
                    for (double v : c.page.edge_kinds) total += v;
                    return ratio(c.page.edge_kinds[static_cast<std::size_t>(EdgeKind::http_request)], total);
                  }));
  d.push_back(def("intv.ratio.node.network_resource", kIntv, K::relative, kExpert, C::network, 32,
                  "% of network resources that were blocked", [](const FeatureContext& c) {
                    const auto k = static_cast<std::size_t>(NodeKind::network_resource);
                    return ratio(c.intv.node_kinds[k], c.page.node_kinds[k]);
                  }));

  // Further curated behaviors
  d.push_back(def("intv.flag.blocked_script_fetches_scripts", kIntv, K::absolute, kExpert, C::js_other, 0,
                  "whether a blocked script fetches additional scripts",
                  [](const FeatureContext& c) { return c.intv.blocked.scripts_executed > 0 ? 1.0 : 0.0; }));
  d.push_back(def("intv.count.listener_adds_by_blocked", kIntv, K::absolute, kExpert, C::js_other, 0,
                  "# of event handlers registered by blocked scripts",
                  [](const FeatureContext& c) { return c.intv.blocked.listener_adds; }));
  d.push_back(def("intv.count.text_nodes_by_blocked", kIntv, K::absolute, kExpert, C::js_dom_modification, 0,
                  "# of text nodes inserted by blocked scripts",
                  [](const FeatureContext& c) { return c.intv.blocked.text_creates; }));
  d.push_back(def("page.count.documents", kPage, K::absolute, kExpert, C::html_structure, 0,
                  "# of documents (main frame plus sub-documents)",
                  [](const FeatureContext& c) { return c.page.documents; }));
  d.push_back(def("page.sum.text_len", kPage, K::absolute, kAuto, C::html_structure, 0,
                  "amount of text on the page", [](const FeatureContext& c) { return c.page.text_len; }));
  d.push_back(def("page.bytes.total", kPage, K::absolute, kExpert, C::network, 0,
                  "bytes fetched by the page", [](const FeatureContext& c) { return c.page.response_bytes; }));

  // Auto-generated grid.
  std::set<std::string> taken;
  for (const auto& f : d) taken.insert(f.spec.name);
  auto grid = [&](const std::string& token, FeatureCategory cat, auto count) {
    const std::array<std::pair<std::string, FeatureScope>, 3> variants = {
        std::pair{"page.count." + token, kPage}, std::pair{"intv.count." + token, kIntv},
        std::pair{"intv.ratio." + token, kIntv}};
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const auto& [name, scope] = variants[v];
      if (taken.contains(name)) continue;
      taken.insert(name);
      std::function<double(const FeatureContext&)> fn;
      if (v == 0) fn = [count](const FeatureContext& c) { return count(c.page); };
      if (v == 1) fn = [count](const FeatureContext& c) { return count(c.intv); };
      if (v == 2) fn = [count](const FeatureContext& c) { return ratio(count(c.intv), count(c.page)); };
      d.push_back(def(name, scope, v == 2 ? K::relative : K::absolute, kAuto, cat, 0,
                      "count of " + token, std::move(fn)));
    }
  };
  for (std::size_t k = 0; k < kNodeKindCount; ++k) {
    const auto kind = static_cast<NodeKind>(k);
    const auto cat = kind == NodeKind::dom_node || kind == NodeKind::text_node ? C::html_structure
                     : kind == NodeKind::network_resource                    ? C::network
                                                                             : C::generic_graph;
    grid("node." + std::string(kNodeKindNames[k]), cat, [k](const GraphStats& s) { return s.node_kinds[k]; });
  }
  for (std::size_t k = 0; k < kEdgeKindCount; ++k) {
    const auto kind = static_cast<EdgeKind>(k);
    C cat = C::js_other;
    switch (kind) {
      case EdgeKind::node_create:
      case EdgeKind::node_insert:
      case EdgeKind::node_delete:
      case EdgeKind::node_modify: cat = C::js_dom_modification; break;
      case EdgeKind::structure: cat = C::html_structure; break;
      case EdgeKind::http_request:
      case EdgeKind::http_response:
      case EdgeKind::resource_block: cat = C::network; break;
      default: break;
    }
    grid("edge." + std::string(kEdgeKindNames[k]), cat, [k](const GraphStats& s) { return s.edge_kinds[k]; });
  }
  for (std::size_t t = 0; t < kHtmlTags.size(); ++t) {
    grid("tag." + std::string(kHtmlTags[t]), C::html_structure, [t](const GraphStats& s) { return s.tags[t]; });
  }
  for (std::size_t a = 0; a < kApiPrefixes.size(); ++a) {
    grid("api." + api_feature_token(kApiPrefixes[a]), C::js_other,
         [a](const GraphStats& s) { return s.api_prefix_calls[a]; });
  }
  return d;
}

inline const std::vector<FeatureDef>& feature_defs() {
  static const std::vector<FeatureDef> defs = build_feature_defs();
  return defs;
}

}  // namespace detail

inline const FeatureSchema& schema() {
  static const FeatureSchema s = [] {
    FeatureSchema out;
    for (const auto& d : detail::feature_defs()) out.push_back(d.spec);
    return out;
  }();
  return s;
}

inline std::optional<std::size_t> feature_index(std::string_view name) {
  const auto& s = schema();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].name == name) return i;
  }
  return std::nullopt;
}

inline const FeatureSpec* find_feature(std::string_view name) {
  const auto idx = feature_index(name);
  return idx ? &schema()[*idx] : nullptr;
}

/// Bytes of directly blocked resources, and the number of pre resources that
/// are blocked or no longer requested after the change.
inline std::pair<double, double> blocking_totals(const PageGraph& pre, const PageGraph& post) {
  double bytes = 0;
  for (auto id : flipped_resources(pre, post)) {
    for (auto pos : pre.out_edges(id)) {
      const auto& e = pre.edges()[pos];
      if (e.kind == EdgeKind::http_response) bytes += static_cast<double>(e.attrs.size_bytes.value_or(0));
    }
  }
  std::map<ResourceKey, std::int64_t> unblocked;
  for (const auto& n : pre.nodes()) {
    if (n.kind == NodeKind::network_resource && !is_blocked(pre, n.id)) ++unblocked[resource_key(pre, n)];
  }
  for (const auto& n : post.nodes()) {
    if (n.kind != NodeKind::network_resource || is_blocked(post, n.id)) continue;
    auto it = unblocked.find(resource_key(post, n));
    if (it != unblocked.end()) --it->second;
  }
  double lost = 0;
  for (const auto& [key, count] : unblocked) lost += static_cast<double>(std::max<std::int64_t>(count, 0));
  return {bytes, lost};
}

inline std::vector<double> extract(const PageGraph& pre, const PageGraph& post,
                                   const PageGraph& intervention) {
  const GraphStats page = compute_stats(pre);
  const GraphStats after = compute_stats(post);
  const GraphStats intv = compute_stats(intervention);
  const auto [bytes, lost] = blocking_totals(pre, post);
  const FeatureContext ctx{page, after, intv, bytes, lost};
  const auto& defs = detail::feature_defs();
  std::vector<double> values(defs.size());
  for (std::size_t i = 0; i < defs.size(); ++i) values[i] = defs[i].fn(ctx);
  return values;
}

inline FeatureVector extract(const GraphTriple& t, Label label) {
  return {t.example_id, label, extract(t.pre, t.post, t.intervention)};
}

struct LabeledTriple {
  GraphTriple triple;
  Label label = Label::working;
};

/// Extracts every non-effectless triple; rows are ordered by example_id.
inline std::vector<FeatureVector> extract_dataset(std::span<const LabeledTriple> triples,
                                                  unsigned jobs = 1) {
  std::vector<std::optional<FeatureVector>> slots(triples.size());
  parallel_for(triples.size(), jobs, [&](std::size_t i) {
    if (is_effectless(triples[i].triple)) return;
    slots[i] = extract(triples[i].triple, triples[i].label);
  });
  std::vector<FeatureVector> rows;
  for (auto& s : slots) {
    if (s) rows.push_back(std::move(*s));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const FeatureVector& a, const FeatureVector& b) { return a.example_id < b.example_id; });
  return rows;
}

}  // namespace filterbreak
