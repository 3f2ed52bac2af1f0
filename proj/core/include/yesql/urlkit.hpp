#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace yesql::urlkit {

/// Normalized absolute http(s) URL. The only way to obtain one is through
/// canonicalize(), so every instance satisfies the canonical-form rules:
/// lowercase scheme and host (IDNA A-labels), no default port, no fragment,
/// dot-segments resolved, percent-escapes normalized.
class CanonicalUrl {
 public:
  const std::string& scheme() const noexcept { return scheme_; }
  const std::string& host() const noexcept { return host_; }
  std::optional<std::uint16_t> port() const noexcept { return port_; }
  const std::string& path() const noexcept { return path_; }
  const std::string& query() const noexcept { return query_; }

  /// Port to connect to, including the scheme default.
  std::uint16_t effective_port() const noexcept;

  /// Serialized form; this is the frontier identity key.
  const std::string& str() const noexcept { return serialized_; }

  /// Path plus "?query" when the query is non-empty (HTTP request target).
  std::string request_target() const;

  friend bool operator==(const CanonicalUrl& a, const CanonicalUrl& b) noexcept {
    return a.serialized_ == b.serialized_;
  }
  friend std::strong_ordering operator<=>(const CanonicalUrl& a,
                                          const CanonicalUrl& b) noexcept {
    return a.serialized_ <=> b.serialized_;
  }

 private:
  friend class UrlBuilder;

  std::string scheme_;
  std::string host_;
  std::optional<std::uint16_t> port_;
  std::string path_;
  std::string query_;
  std::string serialized_;
};

struct DomainName {
  std::string registrable_domain;
  std::string tld;

  friend bool operator==(const DomainName&, const DomainName&) = default;
};

/// Parses and normalizes an absolute URL.
/// Throws Error{malformed_url} or Error{unsupported_scheme}.
CanonicalUrl canonicalize(std::string_view raw);

/// Resolves `raw` against `base` (RFC 3986 reference resolution) and
/// normalizes the result. Absolute inputs ignore the base.
CanonicalUrl canonicalize(std::string_view raw, const CanonicalUrl& base);

/// Non-throwing variants for hot paths that drop bad links silently.
std::optional<CanonicalUrl> try_canonicalize(std::string_view raw) noexcept;
std::optional<CanonicalUrl> try_canonicalize(std::string_view raw,
                                             const CanonicalUrl& base) noexcept;

/// Final dot-separated label of the host ("fr" for www.lemonde.fr).
std::string url_top(const CanonicalUrl& url);

/// Domain grouping used for politeness and domain-level coverage: the last
/// two host labels (no public-suffix list), or the whole host for IP literals
/// and single-label hosts.
DomainName domain_of(const CanonicalUrl& url);
DomainName domain_of_host(std::string_view host);

/// Lowercase (Unicode case folding, compatibility decomposition), strip
/// nonspacing marks, collapse whitespace runs to one space and trim.
/// Invalid UTF-8 sequences become U+FFFD.
std::string normalize_text(std::string_view text);

}  // namespace yesql::urlkit

template <>
struct std::hash<yesql::urlkit::CanonicalUrl> {
  std::size_t operator()(const yesql::urlkit::CanonicalUrl& u) const noexcept {
    return std::hash<std::string>{}(u.str());
  }
};
