#pragma once

// ABP-syntax network filters: parsing, request matching, and the
// with/without-change comparison used to validate that an intervention has
// any effect on a page's recorded requests.
//
// Accepted grammar (everything else raises UnsupportedSyntax):
//   rule     := ["@@"] ["||" | "|"] pattern ["$" option {"," option}]
//   pattern  := { literal | "*" | "^" } ["|"]
//   option   := ["~"] type | "third-party" | "~third-party" | "3p" | "1p"
//             | "domain=" ["~"] host {"|" ["~"] host}
//   type     := script | image | subdocument | stylesheet | xmlhttprequest
//             | other   (aliases: frame, css, xhr)
// Comments ("!", "[Adblock ...]"), cosmetic rules ("##", "#@#", "#?#", "#$#")
// and regex rules ("/.../") are rejected.

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "filterbreak/errors.hpp"
#include "filterbreak/url.hpp"

namespace filterbreak {

enum class ResourceType : std::uint8_t { script, image, subdocument, stylesheet, xhr, other };

inline constexpr std::array<ResourceType, 6> kAllResourceTypes = {
    ResourceType::script, ResourceType::image, ResourceType::subdocument,
    ResourceType::stylesheet, ResourceType::xhr, ResourceType::other};

inline std::string_view to_string(ResourceType t) {
  switch (t) {
    case ResourceType::script: return "script";
    case ResourceType::image: return "image";
    case ResourceType::subdocument: return "subdocument";
    case ResourceType::stylesheet: return "stylesheet";
    case ResourceType::xhr: return "xhr";
    case ResourceType::other: return "other";
  }
  return "other";
}

/// Case-insensitive; accepts the ABP option spellings and common aliases.
inline std::optional<ResourceType> resource_type_from_string(std::string_view s) {
  const std::string t = to_lower(s);
  if (t == "script") return ResourceType::script;
  if (t == "image" || t == "img") return ResourceType::image;
  if (t == "subdocument" || t == "frame" || t == "sub_frame") return ResourceType::subdocument;
  if (t == "stylesheet" || t == "css") return ResourceType::stylesheet;
  if (t == "xhr" || t == "xmlhttprequest" || t == "fetch") return ResourceType::xhr;
  if (t == "other") return ResourceType::other;
  return std::nullopt;
}

enum class RuleKind : std::uint8_t { block, exception };
enum class RuleAnchor : std::uint8_t { none, hostname, start };
enum class PartyConstraint : std::uint8_t { any, first_party_only, third_party_only };

struct PatternToken {
  enum class Kind : std::uint8_t { literal, wildcard, separator, end_anchor };
  Kind kind = Kind::literal;
  std::string text;  // literal only, lowercased

  friend bool operator==(const PatternToken&, const PatternToken&) = default;
};

struct FilterRule {
  std::string raw;
  RuleKind kind = RuleKind::block;
  RuleAnchor anchor = RuleAnchor::none;
  std::vector<PatternToken> pattern;
  std::set<ResourceType> resource_types;  // empty admits every type
  PartyConstraint party = PartyConstraint::any;
  std::vector<std::string> include_domains;
  std::vector<std::string> exclude_domains;

  bool is_exception() const noexcept { return kind == RuleKind::exception; }
};

struct RequestContext {
  std::string url;
  ResourceType resource_type = ResourceType::other;
  std::string frame_origin;  // hostname of the embedding page
};

enum class Outcome : std::uint8_t { allowed, blocked, exception_allowed };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::allowed: return "allowed";
    case Outcome::blocked: return "blocked";
    case Outcome::exception_allowed: return "exception_allowed";
  }
  return "allowed";
}

struct BlockDecision {
  Outcome outcome = Outcome::allowed;
  std::optional<std::size_t> matched_rule;

  friend bool operator==(const BlockDecision&, const BlockDecision&) = default;
};

inline bool is_comment_line(std::string_view line) {
  return line.starts_with('!') || line.starts_with('[');
}

inline bool is_cosmetic_line(std::string_view line) {
  for (std::string_view marker : {"##", "#@#", "#?#", "#$#", "#%#"}) {
    if (line.find(marker) != std::string_view::npos) return true;
  }
  return false;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline void parse_options(std::string_view opts, FilterRule& rule) {
  bool saw_negated_type = false;
  std::set<ResourceType> negated;
  std::size_t pos = 0;
  while (pos <= opts.size()) {
    auto comma = opts.find(',', pos);
    if (comma == std::string_view::npos) comma = opts.size();
    const std::string opt = to_lower(trim(opts.substr(pos, comma - pos)));
    pos = comma + 1;
    if (opt.empty()) throw UnsupportedSyntax("empty filter option");
    if (opt == "third-party" || opt == "3p") {
      rule.party = PartyConstraint::third_party_only;
    } else if (opt == "~third-party" || opt == "1p" || opt == "first-party") {
      rule.party = PartyConstraint::first_party_only;
    } else if (opt.starts_with("domain=")) {
      std::string_view list = std::string_view(opt).substr(7);
      if (list.empty()) throw UnsupportedSyntax("empty $domain= list");
      std::size_t p = 0;
      while (p <= list.size()) {
        auto bar = list.find('|', p);
        if (bar == std::string_view::npos) bar = list.size();
        std::string_view d = list.substr(p, bar - p);
        p = bar + 1;
        if (d.empty()) throw UnsupportedSyntax("empty entry in $domain=");
        if (d.front() == '~') {
          if (d.size() == 1) throw UnsupportedSyntax("empty entry in $domain=");
          rule.exclude_domains.emplace_back(d.substr(1));
        } else {
          rule.include_domains.emplace_back(d);
        }
      }
    } else if (opt.front() == '~') {
      auto t = resource_type_from_string(std::string_view(opt).substr(1));
      if (!t) throw UnsupportedSyntax("unknown filter option '" + opt + "'");
      negated.insert(*t);
      saw_negated_type = true;
    } else if (auto t = resource_type_from_string(opt)) {
      rule.resource_types.insert(*t);
    } else {
      throw UnsupportedSyntax("unknown filter option '" + opt + "'");
    }
    if (comma == opts.size()) break;
  }
  if (saw_negated_type) {
    if (rule.resource_types.empty()) {
      for (auto t : kAllResourceTypes) rule.resource_types.insert(t);
    }
    for (auto t : negated) rule.resource_types.erase(t);
    if (rule.resource_types.empty()) throw UnsupportedSyntax("option set admits no resource type");
  }
}

inline std::vector<PatternToken> tokenize_pattern(std::string_view body) {
  std::vector<PatternToken> tokens;
  std::string lit;
  auto flush = [&] {
    if (!lit.empty()) tokens.push_back({PatternToken::Kind::literal, to_lower(lit)});
    lit.clear();
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '*') {
      flush();
      if (tokens.empty() || tokens.back().kind != PatternToken::Kind::wildcard)
        tokens.push_back({PatternToken::Kind::wildcard, {}});
    } else if (c == '^') {
      flush();
      tokens.push_back({PatternToken::Kind::separator, {}});
    } else if (c == '|') {
      if (i + 1 != body.size()) throw UnsupportedSyntax("'|' is only valid as an anchor");
      flush();
      tokens.push_back({PatternToken::Kind::end_anchor, {}});
    } else {
      lit.push_back(c);
    }
  }
  flush();
  return tokens;
}

inline bool is_separator_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return !(std::isalnum(u) || c == '_' || c == '-' || c == '.' || c == '%');
}

inline bool match_from(std::span<const PatternToken> toks, std::string_view s, std::size_t si) {
  for (std::size_t ti = 0; ti < toks.size(); ++ti) {
    const auto& tok = toks[ti];
    switch (tok.kind) {
      case PatternToken::Kind::literal:
        if (s.substr(si, tok.text.size()) != tok.text) return false;
        si += tok.text.size();
        break;
      case PatternToken::Kind::separator:
        if (si == s.size()) break;  // end of URL counts as a separator
        if (!is_separator_char(s[si])) return false;
        ++si;
        break;
      case PatternToken::Kind::end_anchor:
        return si == s.size();
      case PatternToken::Kind::wildcard: {
        const auto rest = toks.subspan(ti + 1);
        if (rest.empty()) return true;
        for (std::size_t k = si; k <= s.size(); ++k) {
          if (match_from(rest, s, k)) return true;
        }
        return false;
      }
    }
  }
  return true;
}

inline bool domain_matches(std::string_view host, std::string_view domain) {
  if (host == domain) return true;
  return host.size() > domain.size() && host.ends_with(domain) &&
         host[host.size() - domain.size() - 1] == '.';
}

}  // namespace detail

/// Parses one filter line. The returned rule keeps the input verbatim in
/// `raw`; surrounding whitespace is the only thing tolerated and stripped.
inline FilterRule parse_rule(std::string_view line) {
  const std::string_view text = detail::trim(line);
  if (text.empty()) throw UnsupportedSyntax("blank line");
  if (is_comment_line(text)) throw UnsupportedSyntax("comment line");
  if (is_cosmetic_line(text)) throw UnsupportedSyntax("cosmetic rule: " + std::string(text));

  FilterRule rule;
  rule.raw = std::string(text);
  std::string_view body = text;
  if (body.starts_with("@@")) {
    rule.kind = RuleKind::exception;
    body.remove_prefix(2);
  }
  if (body.size() >= 2 && body.front() == '/' && body.back() == '/')
    throw UnsupportedSyntax("regex rule: " + std::string(text));
  if (const auto dollar = body.rfind('$'); dollar != std::string_view::npos) {
    detail::parse_options(body.substr(dollar + 1), rule);
    body = body.substr(0, dollar);
  }
  if (body.starts_with("||")) {
    rule.anchor = RuleAnchor::hostname;
    body.remove_prefix(2);
  } else if (body.starts_with('|')) {
    rule.anchor = RuleAnchor::start;
    body.remove_prefix(1);
  }
  if (rule.anchor == RuleAnchor::none && body.size() >= 2 && body.front() == '/' &&
      body.back() == '/')
    throw UnsupportedSyntax("regex rule: " + std::string(text));
  rule.pattern = detail::tokenize_pattern(body);
  if (rule.pattern.empty()) throw UnsupportedSyntax("empty pattern: " + std::string(text));
  return rule;
}

struct ParsedList {
  std::vector<FilterRule> rules;
  std::vector<std::string> unsupported;  // rejected lines, verbatim
  std::size_t comments = 0;
};

/// Parses a newline-delimited filter list, skipping blanks and comments and
/// recording every rejected line.
inline ParsedList parse_filter_list(std::istream& in) {
  ParsedList out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (is_comment_line(t)) {
      ++out.comments;
      continue;
    }
    try {
      out.rules.push_back(parse_rule(t));
    } catch (const UnsupportedSyntax&) {
      out.unsupported.emplace_back(t);
    }
  }
  return out;
}

/// Parses a list of rule texts (e.g. one side of a commit diff), skipping
/// unsupported lines.
inline std::vector<FilterRule> parse_rules(std::span<const std::string> lines,
                                           std::size_t* rejected = nullptr) {
  std::vector<FilterRule> rules;
  std::size_t bad = 0;
  for (const auto& l : lines) {
    try {
      rules.push_back(parse_rule(l));
    } catch (const UnsupportedSyntax&) {
      ++bad;
    }
  }
  if (rejected) *rejected = bad;
  return rules;
}

inline bool is_third_party(std::string_view url_host_name, std::string_view frame_origin) {
  return registrable_domain(url_host_name) != registrable_domain(frame_origin);
}

inline bool match_rule(const FilterRule& rule, const RequestContext& ctx) {
  if (!rule.resource_types.empty() && !rule.resource_types.contains(ctx.resource_type))
    return false;

  const auto url = parse_url(ctx.url);
  if (!url) return false;
  const std::string frame = to_lower(ctx.frame_origin);

  if (rule.party != PartyConstraint::any) {
    const bool third = is_third_party(url->host, frame);
    if (rule.party == PartyConstraint::third_party_only && !third) return false;
    if (rule.party == PartyConstraint::first_party_only && third) return false;
  }
  if (!rule.include_domains.empty() &&
      std::none_of(rule.include_domains.begin(), rule.include_domains.end(),
                   [&](const std::string& d) { return detail::domain_matches(frame, d); }))
    return false;
  if (std::any_of(rule.exclude_domains.begin(), rule.exclude_domains.end(),
                  [&](const std::string& d) { return detail::domain_matches(frame, d); }))
    return false;

  const std::string_view s = url->text;
  switch (rule.anchor) {
    case RuleAnchor::start:
      return detail::match_from(rule.pattern, s, 0);
    case RuleAnchor::hostname:
      for (std::size_t i = url->host_begin; i < url->host_end; ++i) {
        if ((i == url->host_begin || s[i - 1] == '.') && detail::match_from(rule.pattern, s, i))
          return true;
      }
      return false;
    case RuleAnchor::none:
      for (std::size_t i = 0; i <= s.size(); ++i) {
        if (detail::match_from(rule.pattern, s, i)) return true;
      }
      return false;
  }
  return false;
}

/// Exceptions dominate; otherwise the first matching block rule in list order.
inline BlockDecision decide(std::span<const FilterRule> rules, const RequestContext& ctx) {
  std::optional<std::size_t> first_block;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (r.is_exception()) {
      if (match_rule(r, ctx)) return {Outcome::exception_allowed, i};
    } else if (!first_block && match_rule(r, ctx)) {
      first_block = i;
    }
  }
  if (first_block) return {Outcome::blocked, first_block};
  return {};
}

/// Indices of requests whose blocked/not-blocked outcome differs between the
/// two rule lists.
inline std::vector<std::size_t> blocking_delta(std::span<const FilterRule> pre_rules,
                                               std::span<const FilterRule> post_rules,
                                               std::span<const RequestContext> requests) {
  std::vector<std::size_t> flipped;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const bool before = decide(pre_rules, requests[i]).outcome == Outcome::blocked;
    const bool after = decide(post_rules, requests[i]).outcome == Outcome::blocked;
    if (before != after) flipped.push_back(i);
  }
  return flipped;
}

/// Applies a diff to a rule list: drops rules whose raw text is in `removed`,
/// then appends `added` (unsupported lines are skipped).
inline std::vector<FilterRule> apply_diff(std::span<const FilterRule> base,
                                          std::span<const std::string> added,
                                          std::span<const std::string> removed) {
  std::vector<FilterRule> out;
  for (const auto& r : base) {
    if (std::find(removed.begin(), removed.end(), r.raw) == removed.end()) out.push_back(r);
  }
  for (auto& r : parse_rules(added)) out.push_back(std::move(r));
  return out;
}

}  // namespace filterbreak
