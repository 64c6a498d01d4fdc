#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace filterbreak {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// The pieces of an absolute URL the matcher needs. Offsets index into the
/// lowercased `text`.
struct ParsedUrl {
  std::string text;  // lowercased full URL
  std::string scheme;
  std::string host;
  std::size_t host_begin = 0;
  std::size_t host_end = 0;
};

/// Parses `scheme://[userinfo@]host[:port][/path...]`. Returns nullopt when
/// there is no scheme separator or the host is empty.
inline std::optional<ParsedUrl> parse_url(std::string_view url) {
  ParsedUrl out;
  out.text = to_lower(url);
  const auto sep = out.text.find("://");
  if (sep == std::string::npos || sep == 0) return std::nullopt;
  out.scheme = out.text.substr(0, sep);
  for (char c : out.scheme) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.')
      return std::nullopt;
  }
  std::size_t begin = sep + 3;
  std::size_t end = out.text.find_first_of("/?#", begin);
  if (end == std::string::npos) end = out.text.size();
  const auto at = out.text.rfind('@', end);
  if (at != std::string::npos && at >= begin) begin = at + 1;
  std::size_t host_end = end;
  if (begin < end && out.text[begin] == '[') {
    const auto close = out.text.find(']', begin);
    if (close == std::string::npos || close > end) return std::nullopt;
    host_end = close + 1;
  } else {
    const auto colon = out.text.find(':', begin);
    if (colon != std::string::npos && colon < end) host_end = colon;
  }
  if (host_end <= begin) return std::nullopt;
  out.host_begin = begin;
  out.host_end = host_end;
  out.host = out.text.substr(begin, host_end - begin);
  return out;
}

inline std::string url_host(std::string_view url) {
  auto parsed = parse_url(url);
  return parsed ? parsed->host : std::string{};
}

namespace detail {

// Versioned in-repo subset of the public suffix list. Any host whose suffix is
// not listed falls back to the implicit "*" rule (last label is the suffix).
inline constexpr std::array<std::string_view, 96> kPublicSuffixes = {
    "ac.jp",       "ac.uk",       "appspot.com", "azurewebsites.net",
    "blogspot.com", "cloudfront.net", "co.id",   "co.il",
    "co.in",       "co.jp",       "co.kr",       "co.nz",
    "co.th",       "co.uk",       "co.za",       "com.ar",
    "com.au",      "com.br",      "com.cn",      "com.co",
    "com.eg",      "com.hk",      "com.mx",      "com.my",
    "com.ng",      "com.pe",      "com.ph",      "com.pk",
    "com.sa",      "com.sg",      "com.tr",      "com.tw",
    "com.ua",      "com.vn",      "edu.au",      "firebaseapp.com",
    "github.io",   "gitlab.io",   "gov.uk",      "herokuapp.com",
    "in.ua",       "ltd.uk",      "msk.ru",      "ne.jp",
    "net.au",      "net.br",      "net.cn",      "netlify.app",
    "or.jp",       "org.au",      "org.br",      "org.uk",
    "pages.dev",   "plc.uk",      "s3.amazonaws.com", "spb.ru",
    "vercel.app",  "web.app",     "ac",          "ae",
    "app",         "at",          "au",          "be",
    "biz",         "br",          "ca",          "ch",
    "cn",          "co",          "com",         "cz",
    "de",          "dev",         "dk",          "edu",
    "es",          "eu",          "fi",          "fr",
    "gov",         "info",        "io",          "it",
    "jp",          "kr",          "me",          "net",
    "nl",          "org",         "pl",          "ru",
    "se",          "to",          "tv",          "uk",
};

inline bool is_ip_literal(std::string_view host) {
  if (!host.empty() && host.front() == '[') return true;
  return !host.empty() &&
         std::all_of(host.begin(), host.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.'; });
}

}  // namespace detail

/// Schema version of the bundled suffix table; bump when the table changes.
inline constexpr int kSuffixTableVersion = 1;

/// Public suffix of `host` under the bundled table (longest match wins).
inline std::string public_suffix(std::string_view host) {
  std::string h = to_lower(host);
  while (!h.empty() && h.back() == '.') h.pop_back();
  if (detail::is_ip_literal(h)) return h;
  for (std::size_t pos = 0;;) {
    std::string_view candidate(h.data() + pos, h.size() - pos);
    for (auto s : detail::kPublicSuffixes) {
      if (candidate == s) return std::string(candidate);
    }
    const auto dot = h.find('.', pos);
    if (dot == std::string::npos) return std::string(candidate);
    pos = dot + 1;
  }
}

/// eTLD+1 of `host`; the host itself when it is an IP literal or a bare suffix.
inline std::string registrable_domain(std::string_view host) {
  std::string h = to_lower(host);
  while (!h.empty() && h.back() == '.') h.pop_back();
  if (detail::is_ip_literal(h)) return h;
  const std::string suffix = public_suffix(h);
  if (suffix.size() >= h.size()) return h;
  const std::size_t head_end = h.size() - suffix.size() - 1;  // index of the dot
  const auto label_start = h.rfind('.', head_end - 1);
  return label_start == std::string::npos || head_end == 0 ? h : h.substr(label_start + 1);
}

}  // namespace filterbreak
