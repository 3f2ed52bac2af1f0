#include "yesql/extractor.hpp"

#include <unicode/ucnv.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <string_view>
#include <unordered_map>

namespace yesql::extractor {
namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim_ascii(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

// ---------------------------------------------------------------- encoding

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t n = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      n = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      n = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      n = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    for (std::size_t k = 1; k <= n; ++k) {
      if (i + k >= s.size()) return false;
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((n == 1 && cp < 0x80) || (n == 2 && cp < 0x800) || (n == 3 && (cp < 0x10000 || cp > 0x10FFFF)) ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += n + 1;
  }
  return true;
}

std::string utf8_with_replacement(std::string_view s) {
  if (valid_utf8(s)) return std::string(s);
  std::string out;
  icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size()))).toUTF8String(out);
  return out;
}

std::string convert_charset(std::string_view bytes, const std::string& charset) {
  UErrorCode status = U_ZERO_ERROR;
  UConverter* conv = ucnv_open(charset.c_str(), &status);
  if (U_FAILURE(status) || conv == nullptr) return utf8_with_replacement(bytes);
  icu::UnicodeString text(bytes.data(), static_cast<int32_t>(bytes.size()), conv, status);
  ucnv_close(conv);
  if (U_FAILURE(status)) return utf8_with_replacement(bytes);
  std::string out;
  text.toUTF8String(out);
  return out;
}

std::string meta_charset(std::string_view body) {
  const std::string head = ascii_lower(body.substr(0, 2048));
  for (std::size_t pos = head.find("<meta"); pos != std::string::npos; pos = head.find("<meta", pos + 5)) {
    const auto end = head.find('>', pos);
    const std::string_view tag = std::string_view(head).substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    const auto cs = tag.find("charset");
    if (cs == std::string_view::npos) continue;
    std::size_t i = cs + 7;
    while (i < tag.size() && (is_space(tag[i]) || tag[i] == '=' || tag[i] == '"' || tag[i] == '\'')) ++i;
    std::size_t j = i;
    while (j < tag.size() && (std::isalnum(static_cast<unsigned char>(tag[j])) || tag[j] == '-' || tag[j] == '_' || tag[j] == ':' || tag[j] == '.')) ++j;
    if (j > i) return std::string(tag.substr(i, j - i));
  }
  return {};
}

// ---------------------------------------------------------------- entities

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

const std::unordered_map<std::string_view, std::uint32_t>& named_entities() {
  static const std::unordered_map<std::string_view, std::uint32_t> table{
      {"amp", '&'},      {"lt", '<'},        {"gt", '>'},        {"quot", '"'},      {"apos", '\''},
      {"nbsp", 0xA0},    {"copy", 0xA9},     {"reg", 0xAE},      {"laquo", 0xAB},    {"raquo", 0xBB},
      {"deg", 0xB0},     {"middot", 0xB7},   {"agrave", 0xE0},   {"aacute", 0xE1},   {"acirc", 0xE2},
      {"auml", 0xE4},    {"ccedil", 0xE7},   {"egrave", 0xE8},   {"eacute", 0xE9},   {"ecirc", 0xEA},
      {"euml", 0xEB},    {"icirc", 0xEE},    {"iuml", 0xEF},     {"ocirc", 0xF4},    {"ouml", 0xF6},
      {"ugrave", 0xF9},  {"ucirc", 0xFB},    {"uuml", 0xFC},     {"Agrave", 0xC0},   {"Eacute", 0xC9},
      {"Egrave", 0xC8},  {"Ecirc", 0xCA},    {"Ccedil", 0xC7},   {"oelig", 0x153},   {"OElig", 0x152},
      {"szlig", 0xDF},   {"ndash", 0x2013},  {"mdash", 0x2014},  {"lsquo", 0x2018},  {"rsquo", 0x2019},
      {"ldquo", 0x201C}, {"rdquo", 0x201D},  {"hellip", 0x2026}, {"euro", 0x20AC},   {"bull", 0x2022},
      {"trade", 0x2122}, {"thinsp", 0x2009}, {"ensp", 0x2002},   {"emsp", 0x2003},
  };
  return table;
}

std::string decode_entities(std::string_view s) {
  if (s.find('&') == std::string_view::npos) return std::string(s);
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i + 1;
    if (j < s.size() && s[j] == '#') {
      ++j;
      const bool hex = j < s.size() && (s[j] == 'x' || s[j] == 'X');
      if (hex) ++j;
      const std::size_t digits_start = j;
      std::uint32_t cp = 0;
      while (j < s.size() && (hex ? std::isxdigit(static_cast<unsigned char>(s[j])) : std::isdigit(static_cast<unsigned char>(s[j])))) {
        const int d = std::isdigit(static_cast<unsigned char>(s[j])) ? s[j] - '0' : (std::tolower(static_cast<unsigned char>(s[j])) - 'a' + 10);
        if (cp < 0x110000) cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
        ++j;
      }
      if (j == digits_start) {
        out.push_back(s[i++]);
        continue;
      }
      if (j < s.size() && s[j] == ';') ++j;
      append_utf8(out, cp);
      i = j;
      continue;
    }
    while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j])) && j - i <= 10) ++j;
    const std::string_view name = s.substr(i + 1, j - i - 1);
    const auto& table = named_entities();
    const auto it = table.find(name);
    const bool terminated = j < s.size() && s[j] == ';';
    const bool legacy = name == "amp" || name == "lt" || name == "gt" || name == "quot" || name == "nbsp";
    if (it != table.end() && (terminated || legacy)) {
      append_utf8(out, it->second);
      i = terminated ? j + 1 : j;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

// ---------------------------------------------------------------- tokenizer

bool is_block_tag(std::string_view name) {
  static constexpr std::array<std::string_view, 44> kBlock{
      "address", "article", "aside", "blockquote", "body", "br", "caption", "dd", "div", "dl", "dt",
      "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
      "head", "header", "hr", "html", "li", "main", "nav", "ol", "option", "p", "pre", "section",
      "select", "table", "tbody", "td", "textarea", "tfoot", "th", "thead", "title", "tr"};
  return std::find(kBlock.begin(), kBlock.end(), name) != kBlock.end() || name == "ul";
}

struct Anchor {
  std::string href;
  std::size_t start = 0;  // byte offsets into the rendered text
  std::size_t end = 0;
};

struct Document {
  std::string rendered;
  std::vector<Anchor> anchors;
  std::optional<std::string> base_href;
};

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view html) : s_(html) {}

  Document run() {
    std::optional<Anchor> open;
    auto close_open = [&] {
      if (open) {
        open->end = doc_.rendered.size();
        doc_.anchors.push_back(std::move(*open));
        open.reset();
      }
    };

    while (pos_ < s_.size()) {
      const auto lt = s_.find('<', pos_);
      if (lt == std::string_view::npos) {
        emit_text(s_.substr(pos_));
        break;
      }
      if (lt > pos_) emit_text(s_.substr(pos_, lt - pos_));
      pos_ = lt;
      if (s_.compare(pos_, 4, "<!--") == 0) {
        const auto end = s_.find("-->", pos_ + 4);
        pos_ = end == std::string_view::npos ? s_.size() : end + 3;
        continue;
      }
      if (pos_ + 1 < s_.size() && (s_[pos_ + 1] == '!' || s_[pos_ + 1] == '?')) {
        const auto end = s_.find('>', pos_);
        pos_ = end == std::string_view::npos ? s_.size() : end + 1;
        continue;
      }
      const bool closing = pos_ + 1 < s_.size() && s_[pos_ + 1] == '/';
      const std::size_t name_start = pos_ + (closing ? 2 : 1);
      if (name_start >= s_.size() || !std::isalpha(static_cast<unsigned char>(s_[name_start]))) {
        emit_text("<");
        ++pos_;
        continue;
      }
      std::size_t i = name_start;
      while (i < s_.size() && !is_space(s_[i]) && s_[i] != '>' && s_[i] != '/') ++i;
      const std::string name = ascii_lower(s_.substr(name_start, i - name_start));
      std::vector<std::pair<std::string, std::string>> attrs;
      pos_ = parse_attributes(i, closing ? nullptr : &attrs);

      if (is_block_tag(name)) doc_.rendered.push_back(' ');
      if (closing) {
        if (name == "a") close_open();
        continue;
      }
      if (name == "a") {
        close_open();
        for (auto& [k, v] : attrs) {
          if (k == "href") {
            std::string href(trim_ascii(v));
            if (!href.empty()) open = Anchor{std::move(href), doc_.rendered.size(), 0};
            break;
          }
        }
      } else if (name == "base" && !doc_.base_href) {
        for (auto& [k, v] : attrs) {
          if (k == "href" && !trim_ascii(v).empty()) doc_.base_href = std::string(trim_ascii(v));
        }
      } else if (name == "script" || name == "style" || name == "noscript" || name == "template") {
        skip_raw_text(name, false);
      } else if (name == "title" || name == "textarea") {
        skip_raw_text(name, true);
        doc_.rendered.push_back(' ');
      }
    }
    close_open();
    return std::move(doc_);
  }

 private:
  void emit_text(std::string_view raw) { doc_.rendered += decode_entities(raw); }

  // Parses attributes starting at `i`; returns the position after '>'.
  std::size_t parse_attributes(std::size_t i, std::vector<std::pair<std::string, std::string>>* attrs) {
    while (i < s_.size()) {
      while (i < s_.size() && (is_space(s_[i]) || s_[i] == '/')) ++i;
      if (i >= s_.size()) break;
      if (s_[i] == '>') return i + 1;
      const std::size_t name_start = i;
      while (i < s_.size() && !is_space(s_[i]) && s_[i] != '>' && s_[i] != '=' && s_[i] != '/') ++i;
      if (i == name_start) {  // lone '=' or similar garbage
        ++i;
        continue;
      }
      std::string name = ascii_lower(s_.substr(name_start, i - name_start));
      std::size_t j = i;
      while (j < s_.size() && is_space(s_[j])) ++j;
      std::string value;
      if (j < s_.size() && s_[j] == '=') {
        ++j;
        while (j < s_.size() && is_space(s_[j])) ++j;
        if (j < s_.size() && (s_[j] == '"' || s_[j] == '\'')) {
          const char quote = s_[j];
          const auto end = s_.find(quote, j + 1);
          const auto stop = end == std::string_view::npos ? s_.size() : end;
          value = decode_entities(s_.substr(j + 1, stop - j - 1));
          i = end == std::string_view::npos ? s_.size() : end + 1;
        } else {
          const std::size_t v_start = j;
          while (j < s_.size() && !is_space(s_[j]) && s_[j] != '>') ++j;
          value = decode_entities(s_.substr(v_start, j - v_start));
          i = j;
        }
      }
      if (attrs != nullptr) attrs->emplace_back(std::move(name), std::move(value));
    }
    return s_.size();
  }

  void skip_raw_text(const std::string& name, bool keep_text) {
    const std::string lowered_tail = ascii_lower(s_.substr(pos_));
    const auto end = lowered_tail.find("</" + name);
    const std::size_t stop = end == std::string::npos ? s_.size() : pos_ + end;
    if (keep_text) emit_text(s_.substr(pos_, stop - pos_));
    if (end == std::string::npos) {
      pos_ = s_.size();
      return;
    }
    const auto gt = s_.find('>', stop);
    pos_ = gt == std::string_view::npos ? s_.size() : gt + 1;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  Document doc_;
};

// ---------------------------------------------------------------- words

// Length in bytes of a whitespace code point starting at s[i], 0 otherwise.
// Covers ASCII whitespace, NBSP and the Unicode space separators.
std::size_t space_len(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c <= 0x20) return 1;
  if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0) return 2;
  if (c == 0xE2 && i + 2 < s.size()) {
    const auto c1 = static_cast<unsigned char>(s[i + 1]);
    const auto c2 = static_cast<unsigned char>(s[i + 2]);
    if (c1 == 0x80 && (c2 <= 0x8A || c2 == 0xAF)) return 3;
    if (c1 == 0x81 && c2 == 0x9F) return 3;
  }
  if (c == 0xE3 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
      static_cast<unsigned char>(s[i + 2]) == 0x80) {
    return 3;
  }
  return 0;
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < s.size()) {
    const auto n = space_len(s, i);
    if (n > 0) {
      if (start != std::string_view::npos) {
        words.push_back(s.substr(start, i - start));
        start = std::string_view::npos;
      }
      i += n;
    } else {
      if (start == std::string_view::npos) start = i;
      ++i;
    }
  }
  if (start != std::string_view::npos) words.push_back(s.substr(start));
  return words;
}

std::string join(const std::vector<std::string_view>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  }
  return out;
}

// Cuts to at most `max_chars` code points without splitting a sequence.
void truncate_chars(std::string& s, std::size_t max_chars) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (chars == max_chars) {
        s.resize(i);
        break;
      }
      ++chars;
    }
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
}

std::string build_context(const std::string& rendered, const Anchor& a) {
  const std::string_view all(rendered);
  auto before = split_words(all.substr(0, a.start));
  auto inner = split_words(all.substr(a.start, a.end - a.start));
  auto after = split_words(all.substr(a.end));
  std::vector<std::string_view> words;
  const auto nb = std::min(before.size(), kContextWindowWords);
  words.insert(words.end(), before.end() - static_cast<std::ptrdiff_t>(nb), before.end());
  words.insert(words.end(), inner.begin(), inner.end());
  const auto na = std::min(after.size(), kContextWindowWords);
  words.insert(words.end(), after.begin(), after.begin() + static_cast<std::ptrdiff_t>(na));
  std::string context = join(words);
  truncate_chars(context, kMaxContextChars);
  return context;
}

}  // namespace

std::string charset_from_content_type(std::string_view content_type) {
  const std::string lowered = ascii_lower(content_type);
  const auto pos = lowered.find("charset=");
  if (pos == std::string::npos) return {};
  std::string_view value = std::string_view(lowered).substr(pos + 8);
  const auto end = value.find(';');
  value = trim_ascii(value.substr(0, end));
  if (!value.empty() && (value.front() == '"' || value.front() == '\'')) value.remove_prefix(1);
  if (!value.empty() && (value.back() == '"' || value.back() == '\'')) value.remove_suffix(1);
  return std::string(value);
}

bool is_html(std::string_view content_type, std::span<const char> body) {
  std::string media = ascii_lower(trim_ascii(content_type.substr(0, content_type.find(';'))));
  if (!media.empty()) return media == "text/html" || media == "application/xhtml+xml";
  std::string_view head(body.data(), std::min<std::size_t>(body.size(), 512));
  head = trim_ascii(head);
  const std::string lowered = ascii_lower(head.substr(0, 16));
  return lowered.starts_with("<!doctype html") || lowered.starts_with("<html") ||
         lowered.starts_with("<head") || lowered.starts_with("<body");
}

std::string decode_body(std::span<const char> body, std::string_view content_type) {
  const std::string_view bytes(body.data(), body.size());
  std::string charset = charset_from_content_type(content_type);
  if (charset.empty()) charset = meta_charset(bytes);
  if (charset.empty() || charset == "utf-8" || charset == "utf8" || charset == "us-ascii") {
    return utf8_with_replacement(bytes);
  }
  return convert_charset(bytes, charset);
}

std::vector<ExtractedLink> extract_links(std::span<const char> body, std::string_view content_type,
                                         const urlkit::CanonicalUrl& base) {
  std::vector<ExtractedLink> links;
  try {
    if (!is_html(content_type, body)) return links;
    const std::string html = decode_body(body, content_type);
    const Document doc = Tokenizer(html).run();

    // A <base href> changes what relative hrefs mean, so such links are
    // resolved here; otherwise hrefs are returned exactly as written.
    std::optional<urlkit::CanonicalUrl> doc_base;
    if (doc.base_href) doc_base = urlkit::try_canonicalize(*doc.base_href, base);

    links.reserve(doc.anchors.size());
    for (const auto& a : doc.anchors) {
      ExtractedLink link;
      link.target_raw = a.href;
      if (doc_base) {
        if (auto resolved = urlkit::try_canonicalize(a.href, *doc_base)) link.target_raw = resolved->str();
      }
      link.context = build_context(doc.rendered, a);
      links.push_back(std::move(link));
    }
  } catch (...) {
    // Extraction is best effort; a pathological page yields what was parsed.
  }
  return links;
}

std::string page_text(std::span<const char> body, std::string_view content_type) {
  try {
    if (body.empty() || !is_html(content_type, body)) return {};
    const std::string html = decode_body(body, content_type);
    const Document doc = Tokenizer(html).run();
    return join(split_words(doc.rendered));
  } catch (...) {
    return {};
  }
}

}  // namespace yesql::extractor
