#include "yesql/urlkit.hpp"

#include <unicode/uidna.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <memory>
#include <vector>

#include "yesql/error.hpp"

namespace yesql::urlkit {
namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex(char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}
char to_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }
int hex_value(char c) {
  if (is_digit(c)) return c - '0';
  return to_lower(c) - 'a' + 10;
}
bool is_unreserved(unsigned char c) {
  return is_alpha(static_cast<char>(c)) || is_digit(static_cast<char>(c)) || c == '-' ||
         c == '.' || c == '_' || c == '~';
}

// Characters that may appear literally in a normalized path or query. Anything
// else (controls, space, non-ASCII bytes, and a few unsafe ASCII symbols) is
// percent-encoded.
bool is_literal_safe(unsigned char c, bool query) {
  if (c <= 0x20 || c >= 0x7f) return false;
  switch (c) {
    case '"': case '<': case '>': case '`': case '{': case '}': case '|':
    case '^': case '\\': case '#':
      return false;
    case '?':
      return query;
    default:
      return true;
  }
}

constexpr char kHexDigits[] = "0123456789ABCDEF";

void append_escape(std::string& out, unsigned char c) {
  out.push_back('%');
  out.push_back(kHexDigits[c >> 4]);
  out.push_back(kHexDigits[c & 0xF]);
}

std::string percent_normalize(std::string_view in, bool query) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto c = static_cast<unsigned char>(in[i]);
    if (c == '%') {
      if (i + 2 < in.size() && is_hex(in[i + 1]) && is_hex(in[i + 2])) {
        const auto decoded =
            static_cast<unsigned char>(hex_value(in[i + 1]) * 16 + hex_value(in[i + 2]));
        if (is_unreserved(decoded)) {
          out.push_back(static_cast<char>(decoded));
        } else {
          append_escape(out, decoded);
        }
        i += 2;
      } else {
        append_escape(out, '%');
      }
    } else if (is_literal_safe(c, query)) {
      out.push_back(static_cast<char>(c));
    } else {
      append_escape(out, c);
    }
  }
  return out;
}

// RFC 3986 section 5.2.4.
std::string remove_dot_segments(std::string_view input) {
  std::vector<std::string_view> segments;
  const bool absolute = !input.empty() && input.front() == '/';
  std::size_t pos = absolute ? 1 : 0;
  bool trailing_slash = false;
  while (pos <= input.size()) {
    const std::size_t next = input.find('/', pos);
    const std::string_view seg =
        input.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    const bool last = next == std::string_view::npos;
    if (seg == ".") {
      trailing_slash = true;
    } else if (seg == "..") {
      if (!segments.empty()) segments.pop_back();
      trailing_slash = true;
    } else {
      segments.push_back(seg);
      trailing_slash = false;
    }
    if (last) break;
    pos = next + 1;
  }
  std::string out;
  if (absolute) out.push_back('/');
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i > 0) out.push_back('/');
    out.append(segments[i]);
  }
  if (trailing_slash && !out.empty() && out.back() != '/') out.push_back('/');
  return out;
}

std::string merge_paths(const std::string& base_path, std::string_view ref_path) {
  const auto slash = base_path.rfind('/');
  if (slash == std::string::npos) return "/" + std::string(ref_path);
  return base_path.substr(0, slash + 1) + std::string(ref_path);
}

[[noreturn]] void malformed(std::string_view raw, std::string_view why) {
  throw Error(Errc::malformed_url, "malformed URL '" + std::string(raw) + "': " + std::string(why));
}

class IdnaConverter {
 public:
  IdnaConverter() {
    UErrorCode status = U_ZERO_ERROR;
    idna_ = uidna_openUTS46(UIDNA_NONTRANSITIONAL_TO_ASCII, &status);
    if (U_FAILURE(status)) idna_ = nullptr;
  }
  ~IdnaConverter() {
    if (idna_ != nullptr) uidna_close(idna_);
  }
  IdnaConverter(const IdnaConverter&) = delete;
  IdnaConverter& operator=(const IdnaConverter&) = delete;

  std::optional<std::string> to_ascii(std::string_view host) const {
    if (idna_ == nullptr) return std::nullopt;
    std::array<char, 512> buf{};
    UIDNAInfo info = UIDNA_INFO_INITIALIZER;
    UErrorCode status = U_ZERO_ERROR;
    const int32_t len = uidna_nameToASCII_UTF8(idna_, host.data(), static_cast<int32_t>(host.size()),
                                               buf.data(), static_cast<int32_t>(buf.size()), &info,
                                               &status);
    if (U_FAILURE(status) || info.errors != 0 || len <= 0) return std::nullopt;
    return std::string(buf.data(), static_cast<std::size_t>(len));
  }

 private:
  UIDNA* idna_ = nullptr;
};

const IdnaConverter& idna() {
  static const IdnaConverter converter;
  return converter;
}

std::string normalize_host(std::string_view raw_url, std::string_view host) {
  if (host.empty()) malformed(raw_url, "empty host");
  if (host.front() == '[') {
    if (host.back() != ']' || host.size() < 3) malformed(raw_url, "bad IPv6 literal");
    std::string out = "[";
    for (char c : host.substr(1, host.size() - 2)) {
      if (!is_hex(c) && c != ':' && c != '.') malformed(raw_url, "bad IPv6 literal");
      out.push_back(to_lower(c));
    }
    out.push_back(']');
    return out;
  }
  const bool ascii = std::all_of(host.begin(), host.end(),
                                 [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  std::string out;
  if (ascii) {
    out.reserve(host.size());
    for (char c : host) out.push_back(to_lower(c));
  } else {
    auto converted = idna().to_ascii(host);
    if (!converted) malformed(raw_url, "host fails IDNA conversion");
    out = std::move(*converted);
  }
  if (!out.empty() && out.back() == '.') out.pop_back();
  if (out.empty()) malformed(raw_url, "empty host");
  std::size_t label_start = 0;
  for (std::size_t i = 0; i <= out.size(); ++i) {
    if (i == out.size() || out[i] == '.') {
      if (i == label_start) malformed(raw_url, "empty host label");
      label_start = i + 1;
      continue;
    }
    const char c = out[i];
    if (!(is_alpha(c) || is_digit(c) || c == '-' || c == '_')) {
      malformed(raw_url, "invalid host character");
    }
  }
  return out;
}

struct Authority {
  std::string host;
  std::optional<std::uint16_t> port;
};

Authority parse_authority(std::string_view raw_url, std::string_view authority,
                          std::string_view scheme) {
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority.remove_prefix(at + 1);  // userinfo is dropped
  }
  std::string_view host = authority;
  std::string_view port_text;
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) malformed(raw_url, "unterminated IPv6 literal");
    host = authority.substr(0, close + 1);
    const auto rest = authority.substr(close + 1);
    if (!rest.empty()) {
      if (rest.front() != ':') malformed(raw_url, "garbage after IPv6 literal");
      port_text = rest.substr(1);
    }
  } else if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host = authority.substr(0, colon);
    port_text = authority.substr(colon + 1);
  }
  Authority result;
  result.host = normalize_host(raw_url, host);
  if (!port_text.empty()) {
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value > 65535) {
      malformed(raw_url, "invalid port");
    }
    const unsigned default_port = scheme == "https" ? 443 : 80;
    if (value != default_port) result.port = static_cast<std::uint16_t>(value);
  }
  return result;
}

// Removes leading/trailing C0 controls and spaces plus embedded tab/CR/LF,
// matching what browsers do to href attribute values.
std::string strip_input(std::string_view raw) {
  while (!raw.empty() && static_cast<unsigned char>(raw.front()) <= 0x20) raw.remove_prefix(1);
  while (!raw.empty() && static_cast<unsigned char>(raw.back()) <= 0x20) raw.remove_suffix(1);
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (c != '\t' && c != '\n' && c != '\r') out.push_back(c == '\\' ? '/' : c);
  }
  return out;
}

struct Reference {
  std::optional<std::string> scheme;
  std::optional<std::string> authority;
  std::string path;
  std::optional<std::string> query;
};

Reference split_reference(std::string_view s) {
  Reference ref;
  if (!s.empty() && is_alpha(s.front())) {
    std::size_t i = 1;
    while (i < s.size() && (is_alpha(s[i]) || is_digit(s[i]) || s[i] == '+' || s[i] == '-' || s[i] == '.')) {
      ++i;
    }
    if (i < s.size() && s[i] == ':') {
      std::string scheme(s.substr(0, i));
      std::transform(scheme.begin(), scheme.end(), scheme.begin(), to_lower);
      ref.scheme = std::move(scheme);
      s.remove_prefix(i + 1);
    }
  }
  if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
  if (s.starts_with("//")) {
    s.remove_prefix(2);
    const auto end = s.find_first_of("/?");
    ref.authority = std::string(s.substr(0, end));
    s = end == std::string_view::npos ? std::string_view{} : s.substr(end);
  }
  if (const auto q = s.find('?'); q != std::string_view::npos) {
    ref.query = std::string(s.substr(q + 1));
    s = s.substr(0, q);
  }
  ref.path = std::string(s);
  return ref;
}

}  // namespace

class UrlBuilder {
 public:
  static CanonicalUrl build(std::string_view raw, const CanonicalUrl* base) {
    const std::string input = strip_input(raw);
    if (input.empty()) malformed(raw, "empty input");

    Reference ref = split_reference(input);
    if (ref.scheme) {
      if (*ref.scheme != "http" && *ref.scheme != "https") {
        throw Error(Errc::unsupported_scheme,
                    "unsupported scheme '" + *ref.scheme + "' in '" + std::string(raw) + "'");
      }
      // Special schemes: "http:foo" is relative when the base shares the
      // scheme, otherwise "http:foo" and "http:/foo" mean "http://foo".
      if (!ref.authority) {
        if (base != nullptr && base->scheme() == *ref.scheme) {
          ref.scheme.reset();
        } else {
          std::string_view rest = input;
          rest.remove_prefix(ref.scheme->size() + 1);
          while (!rest.empty() && rest.front() == '/') rest.remove_prefix(1);
          const std::string scheme = *ref.scheme;
          ref = split_reference("//" + std::string(rest));
          ref.scheme = scheme;
        }
      }
    }

    std::string scheme;
    Authority authority;
    std::string path;
    std::string query;

    if (ref.scheme) {
      scheme = *ref.scheme;
      if (!ref.authority) malformed(raw, "missing authority");
      authority = parse_authority(raw, *ref.authority, scheme);
      path = ref.path;
      query = ref.query.value_or("");
    } else {
      if (base == nullptr) malformed(raw, "relative reference without base");
      scheme = base->scheme_;
      if (ref.authority) {
        authority = parse_authority(raw, *ref.authority, scheme);
        path = ref.path;
        query = ref.query.value_or("");
      } else {
        authority.host = base->host_;
        authority.port = base->port_;
        if (ref.path.empty()) {
          path = base->path_;
          query = ref.query ? *ref.query : base->query_;
        } else {
          path = ref.path.front() == '/' ? ref.path : merge_paths(base->path_, ref.path);
          query = ref.query.value_or("");
        }
      }
    }

    CanonicalUrl url;
    url.scheme_ = std::move(scheme);
    url.host_ = std::move(authority.host);
    url.port_ = authority.port;
    url.path_ = remove_dot_segments(percent_normalize(path, false));
    if (url.path_.empty() || url.path_.front() != '/') url.path_.insert(url.path_.begin(), '/');
    url.query_ = percent_normalize(query, true);

    url.serialized_.reserve(url.scheme_.size() + url.host_.size() + url.path_.size() +
                            url.query_.size() + 10);
    url.serialized_ = url.scheme_ + "://" + url.host_;
    if (url.port_) url.serialized_ += ":" + std::to_string(*url.port_);
    url.serialized_ += url.path_;
    if (!url.query_.empty()) url.serialized_ += "?" + url.query_;
    return url;
  }
};

std::uint16_t CanonicalUrl::effective_port() const noexcept {
  if (port_) return *port_;
  return scheme_ == "https" ? 443 : 80;
}

std::string CanonicalUrl::request_target() const {
  return query_.empty() ? path_ : path_ + "?" + query_;
}

CanonicalUrl canonicalize(std::string_view raw) { return UrlBuilder::build(raw, nullptr); }

CanonicalUrl canonicalize(std::string_view raw, const CanonicalUrl& base) {
  return UrlBuilder::build(raw, &base);
}

std::optional<CanonicalUrl> try_canonicalize(std::string_view raw) noexcept {
  try {
    return UrlBuilder::build(raw, nullptr);
  } catch (...) {
    return std::nullopt;
  }
}

std::optional<CanonicalUrl> try_canonicalize(std::string_view raw,
                                             const CanonicalUrl& base) noexcept {
  try {
    return UrlBuilder::build(raw, &base);
  } catch (...) {
    return std::nullopt;
  }
}

std::string url_top(const CanonicalUrl& url) { return domain_of_host(url.host()).tld; }

DomainName domain_of(const CanonicalUrl& url) { return domain_of_host(url.host()); }

DomainName domain_of_host(std::string_view host) {
  DomainName d;
  const bool ipv6 = !host.empty() && host.front() == '[';
  const bool ipv4 = !host.empty() && std::all_of(host.begin(), host.end(), [](char c) {
    return is_digit(c) || c == '.';
  });
  if (ipv6 || ipv4) {
    d.registrable_domain = std::string(host);
    d.tld = ipv6 ? std::string(host) : std::string(host.substr(host.rfind('.') + 1));
    return d;
  }
  const auto last_dot = host.rfind('.');
  d.tld = std::string(last_dot == std::string_view::npos ? host : host.substr(last_dot + 1));
  if (last_dot == std::string_view::npos || last_dot == 0) {
    d.registrable_domain = std::string(host);
  } else {
    const auto prev_dot = host.rfind('.', last_dot - 1);
    d.registrable_domain =
        std::string(prev_dot == std::string_view::npos ? host : host.substr(prev_dot + 1));
  }
  return d;
}

}  // namespace yesql::urlkit
