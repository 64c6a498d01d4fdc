#pragma once

// Filter-list commit mining: turns an exported commit log into labeled
// (page URL, filter-list change) examples. Compatibility fixes ("P:") are
// inverted so that the emitted change re-introduces the breakage; coverage
// additions ("A:") are emitted as-is.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "filterbreak/errors.hpp"
#include "filterbreak/filter_engine.hpp"

namespace filterbreak {

/// UTC instant in the fixed `YYYY-MM-DDTHH:MM:SSZ` form. The representation
/// sorts lexicographically in time order, which is all mining needs.
class Timestamp {
 public:
  Timestamp() = default;

  static bool valid(std::string_view s) {
    static constexpr std::string_view shape = "dddd-dd-ddTdd:dd:ddZ";
    if (s.size() != shape.size()) return false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (shape[i] == 'd' ? !std::isdigit(static_cast<unsigned char>(s[i])) : s[i] != shape[i])
        return false;
    }
    auto num = [&](std::size_t pos, std::size_t len) {
      return std::stoi(std::string(s.substr(pos, len)));
    };
    const int month = num(5, 2), day = num(8, 2);
    return month >= 1 && month <= 12 && day >= 1 && day <= 31 && num(11, 2) < 24 &&
           num(14, 2) < 60 && num(17, 2) < 61;
  }

  static Timestamp parse(std::string_view s) {
    if (!valid(s)) throw Error("invalid timestamp '" + std::string(s) + "'");
    Timestamp t;
    t.text_ = std::string(s);
    return t;
  }

  /// Accepts `YYYY-MM-DD` as midnight UTC, or a full timestamp.
  static Timestamp from_date(std::string_view date) {
    if (date.size() == 10) return parse(std::string(date) + "T00:00:00Z");
    return parse(date);
  }

  const std::string& str() const noexcept { return text_; }
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

 private:
  std::string text_ = "1970-01-01T00:00:00Z";
};

struct FileChange {
  std::string path;
  std::vector<std::string> added_lines;
  std::vector<std::string> removed_lines;
};

struct CommitRecord {
  std::string id;
  Timestamp timestamp;
  std::string message;
  std::vector<FileChange> file_changes;
};

struct FilterListDiff {
  std::vector<std::string> added;
  std::vector<std::string> removed;

  bool empty() const noexcept { return added.empty() && removed.empty(); }
  friend bool operator==(const FilterListDiff&, const FilterListDiff&) = default;
};

enum class Label { working = 0, broken = 1 };

inline std::string_view to_string(Label l) { return l == Label::broken ? "broken" : "working"; }

inline Label label_from_string(std::string_view s) {
  if (s == "broken") return Label::broken;
  if (s == "working") return Label::working;
  throw Error("unknown label '" + std::string(s) + "'");
}

struct LabeledExample {
  std::string example_id;
  std::string page_url;
  FilterListDiff diff;
  Label label = Label::working;
  std::string source_commit;
};

enum class CommitClass { fix, coverage, other };

// ---------------------------------------------------------------------------
// Commit log I/O

namespace detail {

inline std::vector<std::string> string_array(const nlohmann::json& j, std::size_t line,
                                             const char* field) {
  if (!j.is_array()) throw MalformedRecord(line, std::string("'") + field + "' must be an array");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string())
      throw MalformedRecord(line, std::string("'") + field + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline CommitRecord commit_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw MalformedRecord(line, "record is not a JSON object");
  auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) throw MalformedRecord(line, std::string("missing '") + key + "'");
    return *it;
  };
  CommitRecord c;
  const auto& id = require("id");
  const auto& ts = require("timestamp");
  const auto& msg = require("message");
  const auto& files = require("files");
  if (!id.is_string()) throw MalformedRecord(line, "'id' must be a string");
  if (!ts.is_string() || !Timestamp::valid(ts.get<std::string>()))
    throw MalformedRecord(line, "'timestamp' must be YYYY-MM-DDTHH:MM:SSZ");
  if (!msg.is_string()) throw MalformedRecord(line, "'message' must be a string");
  if (!files.is_array()) throw MalformedRecord(line, "'files' must be an array");
  c.id = id.get<std::string>();
  c.timestamp = Timestamp::parse(ts.get<std::string>());
  c.message = msg.get<std::string>();
  for (const auto& f : files) {
    if (!f.is_object() || !f.contains("path") || !f["path"].is_string())
      throw MalformedRecord(line, "file entry needs a string 'path'");
    FileChange fc;
    fc.path = f["path"].get<std::string>();
    if (f.contains("added")) fc.added_lines = detail::string_array(f["added"], line, "added");
    if (f.contains("removed"))
      fc.removed_lines = detail::string_array(f["removed"], line, "removed");
    c.file_changes.push_back(std::move(fc));
  }
  return c;
}

inline nlohmann::json commit_to_json(const CommitRecord& c) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : c.file_changes)
    files.push_back({{"path", f.path}, {"added", f.added_lines}, {"removed", f.removed_lines}});
  return {{"id", c.id}, {"timestamp", c.timestamp.str()}, {"message", c.message}, {"files", files}};
}

/// One record per non-blank line, order preserved.
inline std::vector<CommitRecord> parse_commit_log(std::istream& in) {
  std::vector<CommitRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedRecord(lineno, e.what());
    }
    out.push_back(commit_from_json(j, lineno));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classification and extraction

inline CommitClass classify_commit(const CommitRecord& c) {
  std::string_view m = c.message;
  const auto start = m.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos) return CommitClass::other;
  m.remove_prefix(start);
  if (m.starts_with("P:")) return CommitClass::fix;
  if (m.starts_with("A:")) return CommitClass::coverage;
  return CommitClass::other;
}

/// Absolute http(s) URLs on the first message line, minus any inside a
/// parenthesized "(Fixes ...)" forum reference.
inline std::vector<std::string> extract_urls(std::string_view message) {
  const auto start = message.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos) return {};
  std::string_view first = message.substr(start);
  first = first.substr(0, first.find('\n'));

  std::string line;
  for (std::size_t i = 0; i < first.size();) {
    if (first[i] == '(' && to_lower(first.substr(i + 1, 5)) == "fixes") {
      const auto close = first.find(')', i);
      if (close == std::string_view::npos) break;
      i = close + 1;
      continue;
    }
    line.push_back(first[i++]);
  }

  std::vector<std::string> urls;
  const std::string lower = to_lower(line);
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto a = lower.find("http://", pos);
    const auto b = lower.find("https://", pos);
    const auto hit = std::min(a, b);
    if (hit == std::string::npos) break;
    auto end = hit;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end])) &&
           std::string_view("()<>\"'").find(line[end]) == std::string_view::npos)
      ++end;
    std::string url = line.substr(hit, end - hit);
    while (!url.empty() && std::string_view(",.;:!?").find(url.back()) != std::string_view::npos)
      url.pop_back();
    if (parse_url(url)) urls.push_back(std::move(url));
    pos = end;
  }
  return urls;
}

/// Concatenates all file changes; a line both added and removed cancels out.
inline FilterListDiff commit_diff(const CommitRecord& c) {
  FilterListDiff d;
  for (const auto& f : c.file_changes) {
    d.added.insert(d.added.end(), f.added_lines.begin(), f.added_lines.end());
    d.removed.insert(d.removed.end(), f.removed_lines.begin(), f.removed_lines.end());
  }
  std::vector<std::string> both;
  for (const auto& a : d.added) {
    if (std::find(d.removed.begin(), d.removed.end(), a) != d.removed.end()) both.push_back(a);
  }
  auto drop = [&](std::vector<std::string>& v) {
    std::erase_if(v, [&](const std::string& s) {
      return std::find(both.begin(), both.end(), s) != both.end();
    });
  };
  drop(d.added);
  drop(d.removed);
  return d;
}

inline FilterListDiff invert(const FilterListDiff& d) { return {d.removed, d.added}; }

struct MineStats {
  std::size_t commits = 0;
  std::size_t fix = 0;
  std::size_t coverage = 0;
  std::size_t other = 0;
  std::size_t before_cutoff = 0;
  std::size_t no_urls = 0;
  std::size_t empty_diff = 0;
  std::size_t ambiguous_tags = 0;     // message carries both P: and A: lines
  std::size_t no_network_rules = 0;   // diff touches only cosmetic/unsupported lines
};

struct MineResult {
  std::vector<LabeledExample> examples;
  MineStats stats;
};

struct MineOptions {
  Timestamp since = Timestamp::from_date("2013-01-01");
};

namespace detail {

inline bool has_line_tag(std::string_view message, std::string_view tag) {
  std::size_t pos = 0;
  while (pos <= message.size()) {
    auto nl = message.find('\n', pos);
    if (nl == std::string_view::npos) nl = message.size();
    std::string_view l = trim(message.substr(pos, nl - pos));
    if (l.starts_with(tag)) return true;
    pos = nl + 1;
  }
  return false;
}

inline bool touches_network_rules(const FilterListDiff& d) {
  auto supported = [](const std::string& l) {
    try {
      parse_rule(l);
      return true;
    } catch (const UnsupportedSyntax&) {
      return false;
    }
  };
  return std::any_of(d.added.begin(), d.added.end(), supported) ||
         std::any_of(d.removed.begin(), d.removed.end(), supported);
}

}  // namespace detail

inline MineResult mine_examples(std::span<const CommitRecord> commits,
                                const MineOptions& opts = {}) {
  MineResult r;
  for (const auto& c : commits) {
    ++r.stats.commits;
    const auto cls = classify_commit(c);
    if (cls == CommitClass::other) {
      ++r.stats.other;
      continue;
    }
    if (detail::has_line_tag(c.message, "P:") && detail::has_line_tag(c.message, "A:")) {
      ++r.stats.ambiguous_tags;
      ++r.stats.other;
      continue;
    }
    if (c.timestamp < opts.since) {
      ++r.stats.before_cutoff;
      continue;
    }
    const FilterListDiff diff = commit_diff(c);
    if (diff.empty()) {
      ++r.stats.empty_diff;
      continue;
    }
    if (!detail::touches_network_rules(diff)) {
      ++r.stats.no_network_rules;
      ++r.stats.other;
      continue;
    }
    const auto urls = extract_urls(c.message);
    if (urls.empty()) {
      ++r.stats.no_urls;
      continue;
    }
    cls == CommitClass::fix ? ++r.stats.fix : ++r.stats.coverage;
    const bool broken = cls == CommitClass::fix;
    for (std::size_t i = 0; i < urls.size(); ++i) {
      LabeledExample ex;
      ex.example_id = c.id + "-" + std::to_string(i);
      ex.page_url = urls[i];
      ex.diff = broken ? invert(diff) : diff;
      ex.label = broken ? Label::broken : Label::working;
      ex.source_commit = c.id;
      r.examples.push_back(std::move(ex));
    }
  }
  return r;
}

inline nlohmann::json example_to_json(const LabeledExample& e) {
  return {{"example_id", e.example_id},
          {"page_url", e.page_url},
          {"label", to_string(e.label)},
          {"diff", {{"added", e.diff.added}, {"removed", e.diff.removed}}},
          {"source_commit", e.source_commit}};
}

inline LabeledExample example_from_json(const nlohmann::json& j) {
  LabeledExample e;
  e.example_id = j.at("example_id").get<std::string>();
  e.page_url = j.at("page_url").get<std::string>();
  e.label = label_from_string(j.at("label").get<std::string>());
  e.diff.added = j.at("diff").at("added").get<std::vector<std::string>>();
  e.diff.removed = j.at("diff").at("removed").get<std::vector<std::string>>();
  e.source_commit = j.at("source_commit").get<std::string>();
  return e;
}

inline void write_examples(std::ostream& out, std::span<const LabeledExample> examples) {
  for (const auto& e : examples) out << example_to_json(e).dump() << '\n';
}

}  // namespace filterbreak
