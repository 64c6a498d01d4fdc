#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "filterbreak.hpp"

namespace fixtures {

using namespace filterbreak;

inline std::filesystem::path samples_dir() { return FILTERBREAK_SAMPLES_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline GraphNode node(NodeId id, NodeKind kind) { return {id, kind, {}}; }

inline GraphNode dom(NodeId id, std::string tag) {
  GraphNode n{id, NodeKind::dom_node, {}};
  n.attrs.tag = std::move(tag);
  return n;
}

inline GraphNode resource(NodeId id, std::string url) {
  GraphNode n{id, NodeKind::network_resource, {}};
  n.attrs.url = std::move(url);
  return n;
}

inline GraphEdge edge(EdgeId id, NodeId s, NodeId d, EdgeKind k) { return {id, s, d, k, {}}; }

inline GraphEdge request(EdgeId id, NodeId s, NodeId d, ResourceType t, std::int64_t size = 0) {
  GraphEdge e{id, s, d, EdgeKind::http_request, {}};
  e.attrs.request_type = t;
  e.attrs.size_bytes = size;
  return e;
}

inline GraphEdge response(EdgeId id, NodeId s, NodeId d, std::int64_t size, std::int64_t status = 200) {
  GraphEdge e{id, s, d, EdgeKind::http_response, {}};
  e.attrs.status = status;
  e.attrs.size_bytes = size;
  return e;
}

/// parser(1) -node_create-> img(197) -http_request-> resource(198) -http_response-> img
inline PageGraph image_request_graph() {
  PageGraph g("https://a.com/");
  auto p = node(1, NodeKind::parser);
  p.attrs.frame_id = 0;
  g.add_node(p);
  g.add_node(dom(197, "img"));
  g.add_node(resource(198, "https://a.com/b.png"));
  g.add_edge(edge(1, 1, 197, EdgeKind::node_create));
  g.add_edge(request(2, 197, 198, ResourceType::image, 1880));
  g.add_edge(response(3, 198, 197, 13191));
  return g;
}

/// The post-blocking counterpart: the image request is blocked by a rule.
inline PageGraph image_request_blocked() {
  PageGraph g("https://a.com/");
  auto p = node(1, NodeKind::parser);
  p.attrs.frame_id = 0;
  g.add_node(p);
  g.add_node(dom(2, "img"));
  g.add_node(resource(3, "https://a.com/b.png"));
  g.add_node(node(4, NodeKind::filter_rule));
  g.add_edge(edge(1, 1, 2, EdgeKind::node_create));
  g.add_edge(request(2, 2, 3, ResourceType::image, 1880));
  g.add_edge(edge(3, 4, 3, EdgeKind::resource_block));
  return g;
}

}  // namespace fixtures
