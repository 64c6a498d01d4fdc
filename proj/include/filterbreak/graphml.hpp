#pragma once

// GraphML import/export for PageGraph.
//
// Declared keys (matched on attr.name + for, so any key ids are accepted):
//   node: kind, tag, url, api_name, storage_kind, text_len, frame_id
//   edge: kind, request_type, status, size_bytes, key, cross_frame
//   graph: page_url
// Node and edge element ids are `n<id>` / `e<id>`.

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "filterbreak/errors.hpp"
#include "filterbreak/graph.hpp"

namespace filterbreak {

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end)
    throw SchemaError("invalid integer '" + std::string(s) + "' for " + std::string(what));
  return v;
}

inline std::int64_t parse_prefixed_id(std::string_view s, char prefix) {
  if (s.size() < 2 || s.front() != prefix)
    throw SchemaError("element id '" + std::string(s) + "' must look like " + prefix + "<int>");
  return parse_int(s.substr(1), "element id");
}

inline std::string_view trim_ws(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace detail

inline PageGraph load_graphml(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw XmlError(e.what());
  }
  const auto root = doc.get_child_optional("graphml");
  if (!root) throw XmlError("missing <graphml> root element");

  // key id -> (domain, attr.name)
  std::map<std::string, std::pair<std::string, std::string>> keys;
  const pt::ptree* graph_el = nullptr;
  for (const auto& [tag, child] : *root) {
    if (tag == "key") {
      const auto id = child.get<std::string>("<xmlattr>.id", "");
      const auto name = child.get<std::string>(pt::ptree::path_type("<xmlattr>/attr.name", '/'), id);
      const auto domain = child.get<std::string>("<xmlattr>.for", "all");
      if (id.empty()) throw XmlError("<key> without id");
      keys[id] = {domain, name};
    } else if (tag == "graph") {
      if (graph_el) throw SchemaError("more than one <graph> element");
      graph_el = &child;
    }
  }
  PageGraph g;
  if (!graph_el) return g;

  const auto default_dir = graph_el->get<std::string>("<xmlattr>.edgedefault", "directed");
  if (default_dir != "directed") throw SchemaError("graph must be directed");

  auto attr_name = [&](const pt::ptree& data, std::string_view domain) -> std::string {
    const auto key = data.get<std::string>("<xmlattr>.key", "");
    auto it = keys.find(key);
    if (it == keys.end()) throw SchemaError("undeclared data key '" + key + "'");
    const auto& [dom, name] = it->second;
    if (dom != domain && dom != "all")
      throw SchemaError("key '" + key + "' is declared for " + dom + ", used on " + std::string(domain));
    return name;
  };

  for (const auto& [tag, child] : *graph_el) {
    if (tag == "data" && attr_name(child, "graph") == "page_url")
      g.set_page_url(std::string(detail::trim_ws(child.data())));
  }

  for (const auto& [tag, child] : *graph_el) {
    if (tag != "node") continue;
    GraphNode n;
    n.id = detail::parse_prefixed_id(child.get<std::string>("<xmlattr>.id", ""), 'n');
    std::optional<NodeKind> kind;
    for (const auto& [dtag, data] : child) {
      if (dtag != "data") continue;
      const std::string name = attr_name(data, "node");
      const std::string value(detail::trim_ws(data.data()));
      if (name == "kind") {
        kind = node_kind_from_string(value);
        if (!kind) throw SchemaError("unknown node kind '" + value + "'");
      } else if (name == "tag") {
        n.attrs.tag = value;
      } else if (name == "url") {
        n.attrs.url = value;
      } else if (name == "api_name") {
        n.attrs.api_name = value;
      } else if (name == "storage_kind") {
        n.attrs.storage_kind = value;
      } else if (name == "text_len") {
        n.attrs.text_len = detail::parse_int(value, "text_len");
      } else if (name == "frame_id") {
        n.attrs.frame_id = detail::parse_int(value, "frame_id");
      }
    }
    if (!kind) throw SchemaError("node n" + std::to_string(n.id) + " has no kind");
    n.kind = *kind;
    g.add_node(std::move(n));
  }

  for (const auto& [tag, child] : *graph_el) {
    if (tag != "edge") continue;
    GraphEdge e;
    e.id = detail::parse_prefixed_id(child.get<std::string>("<xmlattr>.id", ""), 'e');
    e.src = detail::parse_prefixed_id(child.get<std::string>("<xmlattr>.source", ""), 'n');
    e.dst = detail::parse_prefixed_id(child.get<std::string>("<xmlattr>.target", ""), 'n');
    std::optional<EdgeKind> kind;
    for (const auto& [dtag, data] : child) {
      if (dtag != "data") continue;
      const std::string name = attr_name(data, "edge");
      const std::string value(detail::trim_ws(data.data()));
      if (name == "kind") {
        kind = edge_kind_from_string(value);
        if (!kind) throw SchemaError("unknown edge kind '" + value + "'");
      } else if (name == "request_type") {
        e.attrs.request_type = resource_type_from_string(value);
        if (!e.attrs.request_type) throw SchemaError("unknown request_type '" + value + "'");
      } else if (name == "status") {
        e.attrs.status = detail::parse_int(value, "status");
      } else if (name == "size_bytes") {
        e.attrs.size_bytes = detail::parse_int(value, "size_bytes");
      } else if (name == "key") {
        e.attrs.key = value;
      } else if (name == "cross_frame") {
        if (value != "true" && value != "false")
          throw SchemaError("cross_frame must be true or false, got '" + value + "'");
        e.attrs.cross_frame = value == "true";
      }
    }
    if (!kind) throw SchemaError("edge e" + std::to_string(e.id) + " has no kind");
    e.kind = *kind;
    g.add_edge(std::move(e));
  }
  return g;
}

inline PageGraph load_graphml_string(const std::string& text) {
  std::istringstream in(text);
  return load_graphml(in);
}

/// Canonical form: fixed key declarations, elements in graph order, data
/// children in key-declaration order.
inline void save_graphml(const PageGraph& g, std::ostream& out) {
  using detail::xml_escape;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
         "  <key id=\"g_page_url\" for=\"graph\" attr.name=\"page_url\" attr.type=\"string\"/>\n"
         "  <key id=\"n_kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n"
         "  <key id=\"n_tag\" for=\"node\" attr.name=\"tag\" attr.type=\"string\"/>\n"
         "  <key id=\"n_url\" for=\"node\" attr.name=\"url\" attr.type=\"string\"/>\n"
         "  <key id=\"n_api_name\" for=\"node\" attr.name=\"api_name\" attr.type=\"string\"/>\n"
         "  <key id=\"n_storage_kind\" for=\"node\" attr.name=\"storage_kind\" attr.type=\"string\"/>\n"
         "  <key id=\"n_text_len\" for=\"node\" attr.name=\"text_len\" attr.type=\"long\"/>\n"
         "  <key id=\"n_frame_id\" for=\"node\" attr.name=\"frame_id\" attr.type=\"long\"/>\n"
         "  <key id=\"e_kind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n"
         "  <key id=\"e_request_type\" for=\"edge\" attr.name=\"request_type\" attr.type=\"string\"/>\n"
         "  <key id=\"e_status\" for=\"edge\" attr.name=\"status\" attr.type=\"long\"/>\n"
         "  <key id=\"e_size_bytes\" for=\"edge\" attr.name=\"size_bytes\" attr.type=\"long\"/>\n"
         "  <key id=\"e_key\" for=\"edge\" attr.name=\"key\" attr.type=\"string\"/>\n"
         "  <key id=\"e_cross_frame\" for=\"edge\" attr.name=\"cross_frame\" attr.type=\"boolean\"/>\n"
         "  <graph id=\"G\" edgedefault=\"directed\">\n";
  out << "    <data key=\"g_page_url\">" << xml_escape(g.page_url()) << "</data>\n";
  for (const auto& n : g.nodes()) {
    out << "    <node id=\"n" << n.id << "\">";
    out << "<data key=\"n_kind\">" << to_string(n.kind) << "</data>";
    const auto& a = n.attrs;
    if (a.tag) out << "<data key=\"n_tag\">" << xml_escape(*a.tag) << "</data>";
    if (a.url) out << "<data key=\"n_url\">" << xml_escape(*a.url) << "</data>";
    if (a.api_name) out << "<data key=\"n_api_name\">" << xml_escape(*a.api_name) << "</data>";
    if (a.storage_kind)
      out << "<data key=\"n_storage_kind\">" << xml_escape(*a.storage_kind) << "</data>";
    if (a.text_len) out << "<data key=\"n_text_len\">" << *a.text_len << "</data>";
    if (a.frame_id) out << "<data key=\"n_frame_id\">" << *a.frame_id << "</data>";
    out << "</node>\n";
  }
  for (const auto& e : g.edges()) {
    out << "    <edge id=\"e" << e.id << "\" source=\"n" << e.src << "\" target=\"n" << e.dst
        << "\">";
    out << "<data key=\"e_kind\">" << to_string(e.kind) << "</data>";
    const auto& a = e.attrs;
    if (a.request_type) out << "<data key=\"e_request_type\">" << to_string(*a.request_type) << "</data>";
    if (a.status) out << "<data key=\"e_status\">" << *a.status << "</data>";
    if (a.size_bytes) out << "<data key=\"e_size_bytes\">" << *a.size_bytes << "</data>";
    if (a.key) out << "<data key=\"e_key\">" << xml_escape(*a.key) << "</data>";
    if (a.cross_frame)
      out << "<data key=\"e_cross_frame\">" << (*a.cross_frame ? "true" : "false") << "</data>";
    out << "</edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
}

inline std::string save_graphml_string(const PageGraph& g) {
  std::ostringstream out;
  save_graphml(g, out);
  return out.str();
}

}  // namespace filterbreak
