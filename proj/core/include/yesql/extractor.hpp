#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "yesql/urlkit.hpp"

namespace yesql::extractor {

inline constexpr std::size_t kMaxContextChars = 512;
inline constexpr std::size_t kContextWindowWords = 10;

struct ExtractedLink {
  std::string target_raw;  // href exactly as written (entity-decoded, trimmed)
  std::string context;     // anchor text plus surrounding words

  friend bool operator==(const ExtractedLink&, const ExtractedLink&) = default;
};

/// True for text/html, application/xhtml+xml and (for an empty content type)
/// bodies that look like HTML.
bool is_html(std::string_view content_type, std::span<const char> body);

/// Charset from a Content-Type header value, lowercased; empty when absent.
std::string charset_from_content_type(std::string_view content_type);

/// Converts `body` to UTF-8 using the header charset, then a <meta> charset,
/// then UTF-8 with replacement characters.
std::string decode_body(std::span<const char> body, std::string_view content_type);

/// One entry per <a href> in document order. Never throws on any input.
std::vector<ExtractedLink> extract_links(std::span<const char> body, std::string_view content_type,
                                         const urlkit::CanonicalUrl& base);

/// Tag-stripped, entity-decoded, whitespace-normalized text.
std::string page_text(std::span<const char> body, std::string_view content_type);

}  // namespace yesql::extractor
