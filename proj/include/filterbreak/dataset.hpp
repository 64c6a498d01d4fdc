#pragma once

// On-disk graph datasets: a directory holding `dataset.jsonl` plus
// `<example_id>.{pre,post,intervention}.graphml` for every row.

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "filterbreak/commit_miner.hpp"
#include "filterbreak/errors.hpp"
#include "filterbreak/graphml.hpp"
#include "filterbreak/intervention.hpp"

namespace filterbreak {

inline constexpr std::string_view kDatasetManifestName = "dataset.jsonl";

struct ManifestRow {
  std::string example_id;
  std::string page_url;
  Label label = Label::working;
  std::string provenance;  // "synthetic" for generated rows, else "crawl"
  FilterListDiff diff;
  std::string pre_file;
  std::string post_file;
  std::string intervention_file;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

inline ManifestRow manifest_row_for(const std::string& example_id, std::string page_url, Label label,
                                    std::string provenance, FilterListDiff diff) {
  return {example_id,
          std::move(page_url),
          label,
          std::move(provenance),
          std::move(diff),
          example_id + ".pre.graphml",
          example_id + ".post.graphml",
          example_id + ".intervention.graphml"};
}

inline nlohmann::json manifest_row_to_json(const ManifestRow& r) {
  return {{"example_id", r.example_id},
          {"page_url", r.page_url},
          {"label", to_string(r.label)},
          {"provenance", r.provenance},
          {"diff", {{"added", r.diff.added}, {"removed", r.diff.removed}}},
          {"pre", r.pre_file},
          {"post", r.post_file},
          {"intervention", r.intervention_file}};
}

inline ManifestRow manifest_row_from_json(const nlohmann::json& j, std::size_t line) {
  ManifestRow r;
  try {
    r.example_id = j.at("example_id").get<std::string>();
    r.page_url = j.value("page_url", std::string());
    const auto label = j.at("label").get<std::string>();
    if (label != "broken" && label != "working") throw MalformedRecord(line, "label must be broken or working");
    r.label = label_from_string(label);
    r.provenance = j.value("provenance", std::string("crawl"));
    if (j.contains("diff")) {
      r.diff.added = j.at("diff").value("added", std::vector<std::string>{});
      r.diff.removed = j.at("diff").value("removed", std::vector<std::string>{});
    }
    r.pre_file = j.value("pre", r.example_id + ".pre.graphml");
    r.post_file = j.value("post", r.example_id + ".post.graphml");
    r.intervention_file = j.value("intervention", r.example_id + ".intervention.graphml");
  } catch (const nlohmann::json::exception& e) {
    throw MalformedRecord(line, e.what());
  }
  if (r.example_id.empty()) throw MalformedRecord(line, "empty example_id");
  return r;
}

inline std::vector<ManifestRow> read_manifest(std::istream& in) {
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedRecord(n, e.what());
    }
    rows.push_back(manifest_row_from_json(j, n));
  }
  return rows;
}

inline void write_manifest(const std::vector<ManifestRow>& rows, std::ostream& out) {
  for (const auto& r : rows) out << manifest_row_to_json(r).dump() << '\n';
}

inline PageGraph load_graphml_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return load_graphml(in);
}

inline void save_graphml_file(const PageGraph& g, const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  save_graphml(g, out);
}

/// Loads the stored triple. A missing intervention file is recomputed from
/// pre and post.
inline GraphTriple load_triple(const std::filesystem::path& dir, const ManifestRow& r) {
  GraphTriple t;
  t.example_id = r.example_id;
  t.pre = load_graphml_file(dir / r.pre_file);
  t.post = load_graphml_file(dir / r.post_file);
  const auto ipath = dir / r.intervention_file;
  t.intervention = std::filesystem::exists(ipath) ? load_graphml_file(ipath) : build_intervention_graph(t.pre, t.post);
  return t;
}

inline void save_triple(const std::filesystem::path& dir, const ManifestRow& r, const GraphTriple& t) {
  save_graphml_file(t.pre, dir / r.pre_file);
  save_graphml_file(t.post, dir / r.post_file);
  save_graphml_file(t.intervention, dir / r.intervention_file);
}

}  // namespace filterbreak
