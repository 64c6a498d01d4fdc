#pragma once

// Intervention-only graphs: the part of a pre-intervention recording that the
// filter-list change removes or alters.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "filterbreak/graph.hpp"

namespace filterbreak {

struct GraphTriple {
  PageGraph pre;
  PageGraph post;
  PageGraph intervention;
  std::string example_id;
};

/// Cross-recording identity of a network resource: node ids differ between
/// crawls, so resources are matched on url plus the request type of their
/// incoming http_request edge.
using ResourceKey = std::pair<std::string, std::optional<ResourceType>>;

inline ResourceKey resource_key(const PageGraph& g, const GraphNode& n) {
  std::optional<ResourceType> type;
  for (auto pos : g.in_edges(n.id)) {
    const auto& e = g.edges()[pos];
    if (e.kind == EdgeKind::http_request) {
      type = e.attrs.request_type;
      break;
    }
  }
  return {n.attrs.url.value_or(""), type};
}

inline bool is_blocked(const PageGraph& g, NodeId resource) {
  for (auto pos : g.in_edges(resource)) {
    if (g.edges()[pos].kind == EdgeKind::resource_block) return true;
  }
  return false;
}

/// Pre resources that were let through but whose post counterpart is blocked.
/// Every pre resource sharing a blocked key is returned.
inline std::set<NodeId> flipped_resources(const PageGraph& pre, const PageGraph& post) {
  std::set<ResourceKey> blocked_after;
  for (const auto& n : post.nodes()) {
    if (n.kind == NodeKind::network_resource && is_blocked(post, n.id))
      blocked_after.insert(resource_key(post, n));
  }
  std::set<NodeId> out;
  if (blocked_after.empty()) return out;
  for (const auto& n : pre.nodes()) {
    if (n.kind != NodeKind::network_resource || is_blocked(pre, n.id)) continue;
    if (blocked_after.contains(resource_key(pre, n))) out.insert(n.id);
  }
  return out;
}

/// Marks, in `pre`:
///   (a) flipped resources;
///   (b) their requesters (sources of incoming http_request edges) with the
///       request/response edge pair;
///   (c) script actors executed by any marked <script> DOM node;
///   (d) every node one step away from anything marked in (a)-(c), with the
///       connecting edges.
/// Each step runs once; there is no fixpoint.
inline PageGraph build_intervention_graph(const PageGraph& pre, const PageGraph& post) {
  const auto& edges = pre.edges();
  std::set<NodeId> nodes = flipped_resources(pre, post);
  std::set<EdgeId> marked_edges;

  const std::set<NodeId> flipped = nodes;
  for (auto r : flipped) {
    for (auto pos : pre.in_edges(r)) {
      const auto& e = edges[pos];
      if (e.kind != EdgeKind::http_request) continue;
      nodes.insert(e.src);
      marked_edges.insert(e.id);
      for (auto out_pos : pre.out_edges(r)) {
        const auto& resp = edges[out_pos];
        if (resp.kind == EdgeKind::http_response && resp.dst == e.src) marked_edges.insert(resp.id);
      }
    }
  }

  std::set<NodeId> actors;
  for (auto id : nodes) {
    const auto& n = pre.node(id);
    if (n.kind != NodeKind::dom_node || n.attrs.tag != "script") continue;
    for (auto pos : pre.out_edges(id)) {
      const auto& e = edges[pos];
      if (e.kind == EdgeKind::script_execute && pre.node(e.dst).kind == NodeKind::script_actor) {
        actors.insert(e.dst);
        marked_edges.insert(e.id);
      }
    }
  }
  nodes.insert(actors.begin(), actors.end());

  const std::set<NodeId> core = nodes;
  for (auto id : core) {
    for (auto pos : pre.out_edges(id)) {
      nodes.insert(edges[pos].dst);
      marked_edges.insert(edges[pos].id);
    }
    for (auto pos : pre.in_edges(id)) {
      nodes.insert(edges[pos].src);
      marked_edges.insert(edges[pos].id);
    }
  }
  return induced_subgraph(pre, nodes, marked_edges);
}

inline bool is_effectless(const GraphTriple& t) { return t.intervention.empty(); }

inline GraphTriple make_triple(PageGraph pre, PageGraph post, std::string example_id) {
  GraphTriple t;
  t.intervention = build_intervention_graph(pre, post);
  t.pre = std::move(pre);
  t.post = std::move(post);
  t.example_id = std::move(example_id);
  return t;
}

}  // namespace filterbreak
