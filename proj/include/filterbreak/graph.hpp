#pragma once

// Typed directed multigraph of recorded page behavior.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "filterbreak/errors.hpp"
#include "filterbreak/filter_engine.hpp"

namespace filterbreak {

using NodeId = std::int64_t;
using EdgeId = std::int64_t;

enum class NodeKind : std::uint8_t {
  parser,
  dom_node,
  text_node,
  script_actor,
  network_resource,
  web_api,
  storage_area,
  filter_rule,
  content_blocker,
};

enum class EdgeKind : std::uint8_t {
  node_create,
  node_insert,
  node_delete,
  node_modify,
  structure,
  http_request,
  http_response,
  resource_block,
  script_execute,
  api_call,
  event_listener_add,
  event_listener_remove,
  storage_set,
  storage_read,
  storage_delete,
};

inline constexpr std::array<std::string_view, 9> kNodeKindNames = {
    "parser",           "dom_node", "text_node",    "script_actor",   "network_resource",
    "web_api",          "storage_area", "filter_rule", "content_blocker"};

inline constexpr std::array<std::string_view, 15> kEdgeKindNames = {
    "node_create",    "node_insert",   "node_delete",        "node_modify",
    "structure",      "http_request",  "http_response",      "resource_block",
    "script_execute", "api_call",      "event_listener_add", "event_listener_remove",
    "storage_set",    "storage_read",  "storage_delete"};

inline constexpr std::size_t kNodeKindCount = kNodeKindNames.size();
inline constexpr std::size_t kEdgeKindCount = kEdgeKindNames.size();

inline std::string_view to_string(NodeKind k) { return kNodeKindNames[static_cast<std::size_t>(k)]; }
inline std::string_view to_string(EdgeKind k) { return kEdgeKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<NodeKind> node_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kNodeKindNames.size(); ++i)
    if (kNodeKindNames[i] == s) return static_cast<NodeKind>(i);
  return std::nullopt;
}

inline std::optional<EdgeKind> edge_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kEdgeKindNames.size(); ++i)
    if (kEdgeKindNames[i] == s) return static_cast<EdgeKind>(i);
  return std::nullopt;
}

/// Standard HTML element names; anything else normalizes to "unknown".
inline constexpr std::array<std::string_view, 114> kHtmlTags = {
    "a",        "abbr",     "address",  "area",     "article",  "aside",    "audio",
    "b",        "base",     "bdi",      "bdo",      "blockquote", "body",   "br",
    "button",   "canvas",   "caption",  "cite",     "code",     "col",      "colgroup",
    "data",     "datalist", "dd",       "del",      "details",  "dfn",      "dialog",
    "div",      "dl",       "dt",       "em",       "embed",    "fieldset", "figcaption",
    "figure",   "footer",   "form",     "h1",       "h2",       "h3",       "h4",
    "h5",       "h6",       "head",     "header",   "hgroup",   "hr",       "html",
    "i",        "iframe",   "img",      "input",    "ins",      "kbd",      "label",
    "legend",   "li",       "link",     "main",     "map",      "mark",     "menu",
    "meta",     "meter",    "nav",      "noscript", "object",   "ol",       "optgroup",
    "option",   "output",   "p",        "param",    "picture",  "pre",      "progress",
    "q",        "rp",       "rt",       "ruby",     "s",        "samp",     "script",
    "search",   "section",  "select",   "slot",     "small",    "source",   "span",
    "strong",   "style",    "sub",      "summary",  "sup",      "svg",      "table",
    "tbody",    "td",       "template", "textarea", "tfoot",    "th",       "thead",
    "time",     "title",    "tr",       "track",    "u",        "ul",       "var",
    "video",    "unknown"};

inline std::string normalize_tag(std::string_view tag) {
  std::string t = to_lower(tag);
  return std::find(kHtmlTags.begin(), kHtmlTags.end(), t) != kHtmlTags.end() ? t : "unknown";
}

inline std::optional<std::size_t> tag_index(std::string_view tag) {
  const auto it = std::find(kHtmlTags.begin(), kHtmlTags.end(), tag);
  if (it == kHtmlTags.end()) return std::nullopt;
  return static_cast<std::size_t>(it - kHtmlTags.begin());
}

struct NodeAttrs {
  std::optional<std::string> tag;
  std::optional<std::string> url;
  std::optional<std::string> api_name;
  std::optional<std::string> storage_kind;  // cookie | localStorage | sessionStorage
  std::optional<std::int64_t> text_len;
  std::optional<std::int64_t> frame_id;

  friend bool operator==(const NodeAttrs&, const NodeAttrs&) = default;
};

struct EdgeAttrs {
  std::optional<ResourceType> request_type;
  std::optional<std::int64_t> status;
  std::optional<std::int64_t> size_bytes;
  std::optional<std::string> key;
  std::optional<bool> cross_frame;

  friend bool operator==(const EdgeAttrs&, const EdgeAttrs&) = default;
};

struct GraphNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::dom_node;
  NodeAttrs attrs;

  std::int64_t frame() const { return attrs.frame_id.value_or(0); }
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  EdgeId id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  EdgeKind kind = EdgeKind::structure;
  EdgeAttrs attrs;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

inline bool valid_storage_kind(std::string_view s) {
  return s == "cookie" || s == "localStorage" || s == "sessionStorage";
}

/// Nodes and edges in insertion order plus id indexes and adjacency lists.
/// Every mutation validates the type invariants; a parser node may appear at
/// most once per frame (sub-graphs can omit a frame's parser entirely).
class PageGraph {
 public:
  PageGraph() = default;
  explicit PageGraph(std::string page_url) : page_url_(std::move(page_url)) {}

  const std::string& page_url() const noexcept { return page_url_; }
  void set_page_url(std::string url) { page_url_ = std::move(url); }

  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  bool has_node(NodeId id) const { return node_index_.contains(id); }
  bool has_edge(EdgeId id) const { return edge_index_.contains(id); }

  const GraphNode& node(NodeId id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw SchemaError("no node n" + std::to_string(id));
    return nodes_[it->second];
  }
  const GraphEdge& edge(EdgeId id) const {
    auto it = edge_index_.find(id);
    if (it == edge_index_.end()) throw SchemaError("no edge e" + std::to_string(id));
    return edges_[it->second];
  }

  /// Positions into edges() of the edges leaving / entering `id`.
  const std::vector<std::size_t>& out_edges(NodeId id) const { return out_.at(node_index_.at(id)); }
  const std::vector<std::size_t>& in_edges(NodeId id) const { return in_.at(node_index_.at(id)); }

  NodeId max_node_id() const { return max_node_id_; }
  EdgeId max_edge_id() const { return max_edge_id_; }

  const GraphNode& add_node(GraphNode n) {
    if (node_index_.contains(n.id)) throw SchemaError("duplicate node id n" + std::to_string(n.id));
    if (n.attrs.tag) n.attrs.tag = normalize_tag(*n.attrs.tag);
    validate_node(n);
    if (n.kind == NodeKind::parser && !parser_frames_.insert(n.frame()).second)
      throw SchemaError("second parser node for frame " + std::to_string(n.frame()));
    node_index_.emplace(n.id, nodes_.size());
    max_node_id_ = nodes_.empty() ? n.id : std::max(max_node_id_, n.id);
    nodes_.push_back(std::move(n));
    out_.emplace_back();
    in_.emplace_back();
    return nodes_.back();
  }

  const GraphEdge& add_edge(GraphEdge e) {
    if (edge_index_.contains(e.id)) throw SchemaError("duplicate edge id e" + std::to_string(e.id));
    const auto s = node_index_.find(e.src);
    const auto d = node_index_.find(e.dst);
    if (s == node_index_.end() || d == node_index_.end())
      throw DanglingEdge("edge e" + std::to_string(e.id) + " references an absent node");
    if (e.kind == EdgeKind::http_request && !e.attrs.request_type)
      throw SchemaError("http_request edge e" + std::to_string(e.id) + " lacks request_type");
    if (e.kind == EdgeKind::http_response && !e.attrs.size_bytes)
      throw SchemaError("http_response edge e" + std::to_string(e.id) + " lacks size_bytes");
    if (e.attrs.size_bytes && *e.attrs.size_bytes < 0)
      throw SchemaError("negative size_bytes on e" + std::to_string(e.id));
    edge_index_.emplace(e.id, edges_.size());
    out_[s->second].push_back(edges_.size());
    in_[d->second].push_back(edges_.size());
    max_edge_id_ = edges_.empty() ? e.id : std::max(max_edge_id_, e.id);
    edges_.push_back(std::move(e));
    return edges_.back();
  }

  static void validate_node(const GraphNode& n) {
    const std::string where = "node n" + std::to_string(n.id);
    switch (n.kind) {
      case NodeKind::dom_node:
        if (!n.attrs.tag) throw SchemaError(where + ": dom_node requires tag");
        break;
      case NodeKind::network_resource:
        if (!n.attrs.url) throw SchemaError(where + ": network_resource requires url");
        break;
      case NodeKind::web_api:
        if (!n.attrs.api_name) throw SchemaError(where + ": web_api requires api_name");
        break;
      case NodeKind::storage_area:
        if (!n.attrs.storage_kind) throw SchemaError(where + ": storage_area requires storage_kind");
        break;
      default:
        break;
    }
    if (n.attrs.storage_kind && !valid_storage_kind(*n.attrs.storage_kind))
      throw SchemaError(where + ": unknown storage_kind '" + *n.attrs.storage_kind + "'");
    if (n.attrs.text_len && *n.attrs.text_len < 0)
      throw SchemaError(where + ": negative text_len");
  }

 private:
  std::string page_url_;
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::unordered_map<NodeId, std::size_t> node_index_;
  std::unordered_map<EdgeId, std::size_t> edge_index_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
  std::set<std::int64_t> parser_frames_;
  NodeId max_node_id_ = 0;
  EdgeId max_edge_id_ = 0;
};

/// Same ids, kinds and attributes, irrespective of insertion order.
inline bool same_graph(const PageGraph& a, const PageGraph& b) {
  if (a.page_url() != b.page_url() || a.node_count() != b.node_count() ||
      a.edge_count() != b.edge_count())
    return false;
  for (const auto& n : a.nodes()) {
    if (!b.has_node(n.id) || !(b.node(n.id) == n)) return false;
  }
  for (const auto& e : a.edges()) {
    if (!b.has_edge(e.id) || !(b.edge(e.id) == e)) return false;
  }
  return true;
}

/// Exactly the given nodes and edges of `g`, with original ids and attributes,
/// in the parent's order.
inline PageGraph induced_subgraph(const PageGraph& g, const std::set<NodeId>& node_ids,
                                  const std::set<EdgeId>& edge_ids) {
  for (auto id : node_ids) {
    if (!g.has_node(id)) throw SchemaError("node n" + std::to_string(id) + " not in parent graph");
  }
  for (auto id : edge_ids) {
    const auto& e = g.edge(id);
    if (!node_ids.contains(e.src) || !node_ids.contains(e.dst))
      throw DanglingEdge("edge e" + std::to_string(id) + " has an endpoint outside the node set");
  }
  PageGraph out(g.page_url());
  for (const auto& n : g.nodes()) {
    if (node_ids.contains(n.id)) out.add_node(n);
  }
  for (const auto& e : g.edges()) {
    if (edge_ids.contains(e.id)) out.add_edge(e);
  }
  return out;
}

}  // namespace filterbreak
