#include "yesql/mockweb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ctime>
#include <deque>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "yesql/error.hpp"
#include "yesql/urlkit.hpp"

namespace yesql::mockweb {
namespace {

constexpr std::array<std::string_view, 4> kTlds{"com", "fr", "org", "net"};
constexpr std::array<std::string_view, 6> kSections{"news", "politique", "sport", "culture", "blog", "archives"};

// Filler vocabulary. Region keywords are rejected if they collide with it,
// so keyword pages are the only ones whose anchors mention a keyword.
constexpr std::array<std::string_view, 64> kWords{
    "the",      "campaign", "vote",     "debate",   "poll",     "city",      "report",   "minister",
    "party",    "reform",   "budget",   "school",   "health",   "market",    "energy",   "europe",
    "local",    "council",  "program",  "interview", "analysis", "opinion", "week",     "today",
    "results",  "meeting",  "press",    "video",    "photo",    "archive",   "region",   "union",
    "public",   "night",    "street",   "project",  "history",  "science",   "music",    "theatre",
    "élection", "président", "débat",   "société",  "économie", "août",      "naïve",    "façade",
    "Noël",     "garçon",   "État",     "très",     "déjà",     "où",        "R&D",      "l'été",
    "«direct»", "Côte",     "crème",    "forêt",    "hôpital",  "Besançon",  "Zoë",      "<b>"};

Error spec_error(const std::string& what) { return Error(Errc::invalid_spec, what); }

/// mt19937_64 with our own reductions: the standard distributions are
/// implementation-defined, which would make bundles differ between libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------- text

std::uint32_t decode_cp(std::string_view s, std::size_t& i) {
  const auto c = static_cast<unsigned char>(s[i]);
  int n = c < 0x80 ? 0 : c < 0xE0 ? 1 : c < 0xF0 ? 2 : 3;
  std::uint32_t cp = n == 0 ? c : n == 1 ? (c & 0x1F) : n == 2 ? (c & 0x0F) : (c & 0x07);
  for (int k = 0; k < n; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[++i]) & 0x3F);
  ++i;
  return cp;
}

std::string_view named_entity(std::uint32_t cp) {
  switch (cp) {
    case 0xE9: return "eacute";
    case 0xE8: return "egrave";
    case 0xEA: return "ecirc";
    case 0xE0: return "agrave";
    case 0xE7: return "ccedil";
    case 0xF4: return "ocirc";
    case 0xEB: return "euml";
    case 0xEF: return "iuml";
    case 0xC9: return "Eacute";
    case 0xAB: return "laquo";
    case 0xBB: return "raquo";
    default: return {};
  }
}

/// HTML for one word. Non-ASCII letters are written raw, as a named entity
/// or as a numeric reference depending on `style`.
std::string render_word(std::string_view word, int style) {
  std::string out;
  for (std::size_t i = 0; i < word.size();) {
    const std::uint32_t cp = decode_cp(word, i);
    if (cp == '&') {
      out += "&amp;";
    } else if (cp == '<') {
      out += "&lt;";
    } else if (cp == '>') {
      out += "&gt;";
    } else if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (style == 1 && !named_entity(cp).empty()) {
      out += "&" + std::string(named_entity(cp)) + ";";
    } else if (style == 2) {
      out += "&#" + std::to_string(cp) + ";";
    } else if (style == 3) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "&#x%X;", cp);
      out += buf;
    } else {
      // raw: copy the original UTF-8 bytes back
      std::size_t start = i - 1;
      while ((static_cast<unsigned char>(word[start]) & 0xC0) == 0x80) --start;
      out.append(word.substr(start, i - start));
    }
  }
  return out;
}

/// Every generated character is below U+0100, so Latin-1 is a byte-per-code-point copy.
std::string to_latin1(std::string_view utf8) {
  std::string out;
  for (std::size_t i = 0; i < utf8.size();) out.push_back(static_cast<char>(decode_cp(utf8, i)));
  return out;
}

/// Builds page HTML and, in parallel, the text the extractor should see.
class PageWriter {
 public:
  explicit PageWriter(Rng& rng) : rng_(rng) {}

  void raw(std::string_view html) { html_ += html; }

  void words(int n) {
    for (int k = 0; k < n; ++k) word(std::string(kWords[rng_.below(kWords.size())]));
  }

  void word(const std::string& w) {
    if (pending_space_) html_ += rng_.chance(0.05) ? "&nbsp;" : " ";
    html_ += render_word(w, static_cast<int>(rng_.below(4)));
    if (!text_.empty()) text_.push_back(' ');
    text_ += w;
    pending_space_ = true;
  }

  void break_words() { pending_space_ = false; }

  std::string& html() { return html_; }
  const std::string& text() const { return text_; }

 private:
  Rng& rng_;
  std::string html_;
  std::string text_;
  bool pending_space_ = false;
};

std::string html_attr(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out.push_back(c);
  }
  return out;
}

std::string format_timestamp(std::int64_t epoch) {
  const std::time_t t = static_cast<std::time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string base36(std::uint64_t n) {
  static constexpr char kDigits[] = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string out;
  do {
    out.insert(out.begin(), kDigits[n % 36]);
    n /= 36;
  } while (n > 0);
  return out;
}

// ---------------------------------------------------------------- spec parsing

std::vector<std::string> fields(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string f; in >> f;) out.push_back(f);
  return out;
}

template <typename T>
T number(const std::string& key, const std::string& value) {
  T out{};
  std::istringstream in(value);
  in >> out;
  if (in.fail() || !in.eof()) throw spec_error("bad value '" + value + "' for " + key);
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(15);
  out << v;
  return out.str();
}

bool is_keyword_token(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::islower(c) || std::isdigit(c) || c == '-' || c == '_';
  });
}

struct Counts {
  std::vector<int> keyword;
  std::vector<int> error;
  int orphans = 0;
};

Counts special_counts(const MockWebSpec& spec) {
  Counts c;
  for (const auto& r : spec.keyword_regions) c.keyword.push_back(static_cast<int>(std::lround(r.fraction * spec.page_count)));
  for (const auto& e : spec.error_pages) c.error.push_back(static_cast<int>(std::lround(e.fraction * spec.page_count)));
  c.orphans = static_cast<int>(std::lround(spec.orphan_fraction * spec.page_count));
  return c;
}

}  // namespace

// ---------------------------------------------------------------- spec

MockWebSpec MockWebSpec::parse(std::string_view text) {
  MockWebSpec spec;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto f = fields(line);
    if (f.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw spec_error("line " + std::to_string(line_no) + ": expected key = value");
    const auto key_fields = fields(std::string_view(line).substr(0, eq));
    const auto values = fields(std::string_view(line).substr(eq + 1));
    if (key_fields.size() != 1 || values.empty()) {
      throw spec_error("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string& key = key_fields[0];
    auto single = [&]() -> const std::string& {
      if (values.size() != 1) throw spec_error("line " + std::to_string(line_no) + ": " + key + " takes one value");
      return values[0];
    };
    if (key == "seed") {
      spec.seed = number<std::uint64_t>(key, single());
    } else if (key == "page_count") {
      spec.page_count = number<int>(key, single());
    } else if (key == "domain_count") {
      spec.domain_count = number<int>(key, single());
    } else if (key == "seed_pages") {
      spec.seed_pages = number<int>(key, single());
    } else if (key == "out_degree_min") {
      spec.out_degree_min = number<int>(key, single());
    } else if (key == "out_degree_max") {
      spec.out_degree_max = number<int>(key, single());
    } else if (key == "out_degree") {
      if (values.size() != 2) throw spec_error("out_degree takes: min max");
      spec.out_degree_min = number<int>(key, values[0]);
      spec.out_degree_max = number<int>(key, values[1]);
    } else if (key == "orphan_fraction") {
      spec.orphan_fraction = number<double>(key, single());
    } else if (key == "keyword_region") {
      if (values.size() != 3) throw spec_error("keyword_region takes: keyword fraction tld");
      spec.keyword_regions.push_back({values[0], number<double>(key, values[1]), values[2]});
    } else if (key == "error_pages") {
      if (values.size() != 2) throw spec_error("error_pages takes: status fraction");
      spec.error_pages.push_back({number<int>(key, values[0]), number<double>(key, values[1])});
    } else if (key == "redirect_chains") {
      if (values.size() != 2) throw spec_error("redirect_chains takes: count length");
      spec.redirect_chains.push_back({number<int>(key, values[0]), number<int>(key, values[1])});
    } else if (key == "latency_ms") {
      spec.latency = std::chrono::milliseconds{number<int>(key, single())};
    } else if (key == "tweets") {
      spec.tweets = number<int>(key, single());
    } else {
      throw spec_error("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

MockWebSpec MockWebSpec::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw spec_error("cannot read spec file " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

void MockWebSpec::validate() const {
  if (page_count < 1) throw spec_error("page_count must be at least 1");
  if (domain_count < 1) throw spec_error("domain_count must be at least 1");
  if (seed_pages < 1 || seed_pages > page_count) throw spec_error("seed_pages must be in [1, page_count]");
  if (out_degree_min < 0 || out_degree_max < out_degree_min) throw spec_error("need 0 <= out_degree_min <= out_degree_max");
  auto fraction_ok = [](double f) { return std::isfinite(f) && f >= 0 && f <= 1; };
  if (!fraction_ok(orphan_fraction)) throw spec_error("orphan_fraction must be in [0, 1]");
  std::set<std::string> keywords;
  for (const auto& r : keyword_regions) {
    if (!fraction_ok(r.fraction)) throw spec_error("keyword fraction for '" + r.keyword + "' must be in [0, 1]");
    if (!is_keyword_token(r.keyword)) throw spec_error("keyword '" + r.keyword + "' must be lowercase [a-z0-9_-]");
    if (std::find(kWords.begin(), kWords.end(), r.keyword) != kWords.end() ||
        std::find(kSections.begin(), kSections.end(), r.keyword) != kSections.end()) {
      throw spec_error("keyword '" + r.keyword + "' collides with the filler vocabulary");
    }
    if (!keywords.insert(r.keyword).second) throw spec_error("keyword '" + r.keyword + "' listed twice");
    bool hosted = false;
    for (int d = 0; d < std::min<int>(domain_count, kTlds.size()); ++d) hosted |= kTlds[d % kTlds.size()] == r.tld;
    if (!hosted) throw spec_error("no generated domain uses tld '" + r.tld + "'");
  }
  for (const auto& e : error_pages) {
    if (!fraction_ok(e.fraction)) throw spec_error("error page fraction must be in [0, 1]");
    if (e.status < 400 || e.status > 599) throw spec_error("error status must be 4xx or 5xx");
  }
  for (const auto& r : redirect_chains) {
    if (r.count < 0) throw spec_error("redirect chain count must not be negative");
    if (r.length < 1 || r.length > kMaxRedirectChainLength) {
      throw spec_error("redirect chain length must be in [1, " + std::to_string(kMaxRedirectChainLength) + "]");
    }
  }
  if (latency.count() < 0) throw spec_error("latency_ms must not be negative");
  if (tweets < 0) throw spec_error("tweets must not be negative");

  const Counts c = special_counts(*this);
  long total = c.orphans;
  for (int k : c.keyword) total += k;
  for (int k : c.error) total += k;
  if (total > page_count - seed_pages) {
    throw spec_error("keyword, error and orphan pages exceed the " + std::to_string(page_count - seed_pages) +
                     " non-seed pages");
  }
}

std::string MockWebSpec::to_text() const {
  std::ostringstream out;
  out << "seed = " << seed << '\n'
      << "page_count = " << page_count << '\n'
      << "domain_count = " << domain_count << '\n'
      << "seed_pages = " << seed_pages << '\n'
      << "out_degree = " << out_degree_min << ' ' << out_degree_max << '\n'
      << "orphan_fraction = " << format_double(orphan_fraction) << '\n';
  for (const auto& r : keyword_regions) out << "keyword_region = " << r.keyword << ' ' << format_double(r.fraction) << ' ' << r.tld << '\n';
  for (const auto& e : error_pages) out << "error_pages = " << e.status << ' ' << format_double(e.fraction) << '\n';
  for (const auto& r : redirect_chains) out << "redirect_chains = " << r.count << ' ' << r.length << '\n';
  out << "latency_ms = " << latency.count() << '\n' << "tweets = " << tweets << '\n';
  return out.str();
}

std::string_view to_string(PageKind kind) noexcept {
  switch (kind) {
    case PageKind::normal: return "normal";
    case PageKind::keyword: return "keyword";
    case PageKind::error: return "error";
    case PageKind::redirect: return "redirect";
  }
  return "normal";
}

// ---------------------------------------------------------------- generator

std::map<std::string, int> bfs_depths(const std::vector<Edge>& edges, const std::vector<std::string>& seeds) {
  std::unordered_map<std::string, std::vector<const std::string*>> out;
  for (const auto& e : edges) out[e.source].push_back(&e.target);
  std::map<std::string, int> depth;
  std::deque<std::string> queue;
  for (const auto& s : seeds) {
    if (depth.emplace(s, 0).second) queue.push_back(s);
  }
  while (!queue.empty()) {
    const std::string u = std::move(queue.front());
    queue.pop_front();
    const int du = depth[u];
    auto it = out.find(u);
    if (it == out.end()) continue;
    for (const std::string* v : it->second) {
      if (depth.emplace(*v, du + 1).second) queue.push_back(*v);
    }
  }
  return depth;
}

Bundle generate(const MockWebSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Bundle b;
  b.spec = spec;

  for (int d = 0; d < spec.domain_count; ++d) {
    b.domains.push_back("site" + std::to_string(d) + "." + std::string(kTlds[d % kTlds.size()]));
  }

  // Node ids: [0, N) are pages, [N, N + R) are the first hop of each redirect chain.
  const int n = spec.page_count;
  struct Node {
    PageKind kind = PageKind::normal;
    int status = 200;
    std::string keyword;
    bool orphan = false;
    std::string host;
    std::string path;
    std::string url;
    std::vector<int> out;
    int chain_length = 0;
    int redirect_target = -1;
  };
  std::vector<Node> nodes(n);

  std::vector<int> order;
  for (int i = spec.seed_pages; i < n; ++i) order.push_back(i);
  rng.shuffle(order);
  const Counts counts = special_counts(spec);
  std::size_t next = 0;
  for (std::size_t r = 0; r < spec.keyword_regions.size(); ++r) {
    for (int k = 0; k < counts.keyword[r]; ++k) {
      auto& node = nodes[order[next++]];
      node.kind = PageKind::keyword;
      node.keyword = spec.keyword_regions[r].keyword;
      node.host = spec.keyword_regions[r].tld;  // resolved to a domain below
    }
  }
  for (std::size_t e = 0; e < spec.error_pages.size(); ++e) {
    for (int k = 0; k < counts.error[e]; ++k) {
      auto& node = nodes[order[next++]];
      node.kind = PageKind::error;
      node.status = spec.error_pages[e].status;
    }
  }
  for (int k = 0; k < counts.orphans; ++k) nodes[order[next++]].orphan = true;

  std::map<std::string, std::vector<std::string>> domains_by_tld;
  for (const auto& d : b.domains) domains_by_tld[d.substr(d.rfind('.') + 1)].push_back(d);
  for (int i = 0; i < n; ++i) {
    auto& node = nodes[i];
    if (node.kind == PageKind::keyword) {
      node.host = rng.pick(domains_by_tld[node.host]);
      node.path = "/" + node.keyword + "/p" + std::to_string(i) + ".html";
    } else {
      node.host = rng.pick(b.domains);
      node.path = "/" + std::string(kSections[rng.below(kSections.size())]) + "/p" + std::to_string(i) + ".html";
    }
  }

  std::vector<int> redirect_targets;
  for (int i = 0; i < n; ++i) {
    if (nodes[i].kind != PageKind::error && !nodes[i].orphan) redirect_targets.push_back(i);
  }
  int chain = 0;
  for (const auto& group : spec.redirect_chains) {
    for (int c = 0; c < group.count; ++c, ++chain) {
      Node node;
      node.kind = PageKind::redirect;
      node.status = 302;
      node.host = rng.pick(b.domains);
      node.path = "/r/" + std::to_string(chain) + "/0";
      node.chain_length = group.length;
      node.redirect_target = rng.pick(redirect_targets);
      nodes.push_back(std::move(node));
    }
  }
  for (auto& node : nodes) node.url = urlkit::canonicalize("http://" + node.host + node.path).str();

  auto is_content = [&](int i) { return nodes[i].kind == PageKind::normal || nodes[i].kind == PageKind::keyword; };

  // Spanning tree: every non-orphan node gets one parent among the content
  // pages placed before it, so reachability never depends on luck.
  std::vector<int> sequence;
  for (int i = spec.seed_pages; i < static_cast<int>(nodes.size()); ++i) {
    if (!nodes[i].orphan) sequence.push_back(i);
  }
  rng.shuffle(sequence);
  std::vector<int> parents;
  for (int i = 0; i < spec.seed_pages; ++i) parents.push_back(i);
  for (int v : sequence) {
    nodes[rng.pick(parents)].out.push_back(v);
    if (is_content(v)) parents.push_back(v);
  }

  std::vector<int> link_pool;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    if (!nodes[i].orphan) link_pool.push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    if (!is_content(i)) continue;
    const int degree = rng.between(spec.out_degree_min, spec.out_degree_max);
    for (int k = 0; k < degree; ++k) {
      const int t = rng.pick(link_pool);
      if (t != i) nodes[i].out.push_back(t);
    }
    rng.shuffle(nodes[i].out);
  }

  // Pages.
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    auto& node = nodes[i];
    if (node.kind == PageKind::redirect) {
      for (int hop = 0; hop < node.chain_length; ++hop) {
        Page p;
        const std::string prefix = node.path.substr(0, node.path.rfind('/') + 1);  // "/r/<chain>/"
        p.host = node.host;
        p.path = prefix + std::to_string(hop);
        p.url = "http://" + p.host + p.path;
        p.kind = PageKind::redirect;
        p.status = hop + 1 < node.chain_length ? 302 : 301;
        p.location = hop + 1 < node.chain_length ? prefix + std::to_string(hop + 1) : nodes[node.redirect_target].url;
        b.pages.push_back(std::move(p));
      }
      continue;
    }

    Page p;
    p.url = node.url;
    p.host = node.host;
    p.path = node.path;
    p.kind = node.kind;
    p.status = node.status;
    p.keyword = node.keyword;
    p.orphan = node.orphan;
    const bool latin1 = node.kind != PageKind::error && rng.chance(0.1);
    const std::string charset = latin1 ? "iso-8859-1" : "utf-8";
    p.content_type = "text/html; charset=" + charset;

    PageWriter w(rng);
    w.raw("<!DOCTYPE html>\n<html><head><meta charset=\"" + charset + "\"><title>");
    if (node.kind == PageKind::error) {
      w.word("Error");
      w.word(std::to_string(node.status));
      w.raw("</title></head>\n<body><h1>");
      w.break_words();
      w.word("Error");
      w.word(std::to_string(node.status));
      w.raw("</h1></body></html>\n");
    } else {
      w.words(rng.between(3, 6));
      w.raw("</title></head>\n<body>\n<h1>");
      w.break_words();
      w.words(rng.between(3, 8));
      w.raw("</h1>\n");
      for (int t : node.out) {
        const auto& target = nodes[t];
        const bool relative = target.host == node.host && rng.chance(0.5);
        w.raw("<p>");
        w.break_words();
        // Five filler words on each side keep neighboring anchors' text out
        // of each other's 10-word context windows.
        w.words(5);
        w.raw(" <a href=\"" + html_attr(relative ? target.path : target.url) + "\">");
        w.break_words();
        if (target.kind == PageKind::keyword) {
          w.word(target.keyword);
          w.words(rng.between(1, 2));
        } else {
          w.words(rng.between(1, 3));
        }
        w.raw("</a> ");
        w.break_words();
        w.words(5);
        w.raw("</p>\n");
      }
      w.raw("<div class=\"footer\"><!-- generated -->");
      w.break_words();
      w.words(rng.between(4, 12));
      w.raw("<script>var links = \"<a href='/nowhere'>x</a>\";</script></div>\n</body></html>\n");
    }
    p.text = w.text();
    p.body = latin1 ? to_latin1(w.html()) : std::move(w.html());
    b.pages.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < b.pages.size(); ++i) b.index.emplace(b.pages[i].host + b.pages[i].path, i);

  for (int i = 0; i < spec.seed_pages; ++i) b.seeds.push_back(nodes[i].url);

  std::set<std::pair<std::string, std::string>> seen;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    const auto& node = nodes[i];
    if (node.kind == PageKind::redirect) {
      const auto& target = nodes[node.redirect_target].url;
      if (seen.emplace(node.url, target).second) b.edges.push_back({node.url, target, "redirect"});
      continue;
    }
    for (int t : node.out) {
      if (seen.emplace(node.url, nodes[t].url).second) b.edges.push_back({node.url, nodes[t].url, "link"});
    }
  }
  b.depths = bfs_depths(b.edges, b.seeds);
  for (const auto& node : nodes) {
    if (node.kind == PageKind::keyword) b.keyword_pages.emplace_back(node.url, node.keyword);
  }

  if (spec.tweets > 0) {
    // Popularity follows a 1/rank law over every page plus some URLs that
    // live outside the mock web entirely.
    std::vector<std::string> candidates;
    for (int i = 0; i < n; ++i) candidates.push_back(nodes[i].url);
    for (int k = 0; k < std::max(1, n / 5); ++k) {
      candidates.push_back("http://outside" + std::to_string(k % 7) + ".example/story/" + std::to_string(k));
    }
    rng.shuffle(candidates);
    std::vector<double> cumulative;
    double total = 0;
    for (std::size_t r = 0; r < candidates.size(); ++r) cumulative.push_back(total += 1.0 / static_cast<double>(r + 1));
    auto popular = [&] {
      const double x = rng.unit() * total;
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
      return candidates[std::min<std::size_t>(it - cumulative.begin(), candidates.size() - 1)];
    };

    std::vector<std::string> shorts;
    std::uint64_t next_code = 1;
    const std::int64_t start = 1335052800;  // a Sunday in spring 2012, 00:00 UTC
    for (int i = 0; i < spec.tweets; ++i) {
      Tweet t;
      t.timestamp = format_timestamp(start + static_cast<std::int64_t>(i) * 37);
      t.author = "user" + std::to_string(rng.below(static_cast<std::uint64_t>(spec.tweets / 3 + 1)));
      std::vector<std::string> words;
      const int length = rng.between(4, 12);
      for (int k = 0; k < length; ++k) words.emplace_back(kWords[rng.below(kWords.size())]);
      if (rng.chance(0.3)) {
        const int urls = rng.chance(0.1) ? 2 : 1;
        for (int u = 0; u < urls; ++u) {
          std::string short_url;
          if (!shorts.empty() && rng.chance(0.4)) {
            short_url = rng.pick(shorts);
          } else {
            short_url = "http://sho.rt/" + base36(next_code++);
            shorts.push_back(short_url);
            if (!rng.chance(0.05)) b.shortener.emplace_back(short_url, popular());
          }
          words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), short_url);
        }
      }
      for (const auto& word : words) t.text += (t.text.empty() ? "" : " ") + word;
      b.tweets.push_back(std::move(t));
    }
  }
  return b;
}

const Page* Bundle::find(std::string_view host, std::string_view target) const {
  std::string key(host);
  key += target;
  const auto it = index.find(key);
  return it == index.end() ? nullptr : &pages[it->second];
}

const Page* Bundle::find_url(std::string_view url) const {
  const auto parsed = urlkit::try_canonicalize(url);
  return parsed ? find(parsed->host(), parsed->request_target()) : nullptr;
}

std::vector<std::string> Bundle::reachable_ok() const {
  std::vector<std::string> out;
  for (const auto& [url, depth] : depths) {
    const Page* p = find_url(url);
    if (p != nullptr && p->kind != PageKind::error) out.push_back(url);
  }
  return out;
}

std::vector<std::string> Bundle::reachable_failed() const {
  std::vector<std::string> out;
  for (const auto& [url, depth] : depths) {
    const Page* p = find_url(url);
    if (p == nullptr || p->kind == PageKind::error) out.push_back(url);
  }
  return out;
}

void Bundle::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + (dir / name).string());
    return out;
  };

  int max_depth = 0;
  for (const auto& [url, d] : depths) max_depth = std::max(max_depth, d);
  {
    auto out = open("manifest.txt");
    out << "format_version\t" << kFormatVersion << '\n'
        << "prng\t" << kPrngName << '\n'
        << "seed\t" << spec.seed << '\n'
        << "page_count\t" << spec.page_count << '\n'
        << "domain_count\t" << spec.domain_count << '\n'
        << "resources\t" << pages.size() << '\n'
        << "seeds\t" << seeds.size() << '\n'
        << "edges\t" << edges.size() << '\n'
        << "reachable\t" << depths.size() << '\n'
        << "reachable_ok\t" << reachable_ok().size() << '\n'
        << "reachable_failed\t" << reachable_failed().size() << '\n'
        << "keyword_pages\t" << keyword_pages.size() << '\n'
        << "max_depth\t" << max_depth << '\n'
        << "tweets\t" << tweets.size() << '\n';
  }
  open("spec.txt") << spec.to_text();
  {
    auto out = open("seeds.txt");
    for (const auto& s : seeds) out << s << '\n';
  }
  {
    auto out = open("edges.tsv");
    for (const auto& e : edges) out << e.source << '\t' << e.target << '\t' << e.kind << '\n';
  }
  {
    auto out = open("depths.tsv");
    for (const auto& [url, d] : depths) out << url << '\t' << d << '\n';
  }
  {
    auto out = open("pages.tsv");
    for (const auto& p : pages) {
      out << p.url << '\t' << p.status << '\t' << to_string(p.kind) << '\t' << p.keyword << '\t'
          << (p.orphan ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open("keyword_pages.tsv");
    for (const auto& [url, kw] : keyword_pages) out << url << '\t' << kw << '\n';
  }
  {
    auto out = open("texts.tsv");
    for (const auto& p : pages) {
      if (p.kind == PageKind::normal || p.kind == PageKind::keyword) out << p.url << '\t' << p.text << '\n';
    }
  }
  if (!tweets.empty()) {
    auto out = open("tweets.tsv");
    for (const auto& t : tweets) out << t.timestamp << '\t' << t.author << '\t' << t.text << '\n';
    auto map = open("shortener.tsv");
    for (const auto& [s, e] : shortener) map << s << '\t' << e << '\n';
  }
}

// ---------------------------------------------------------------- server

struct MockServer::State {
  httplib::Server server;
  std::thread thread;
  mutable std::mutex log_mutex;
  std::vector<AccessEntry> log;
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};
};

MockServer::MockServer(std::shared_ptr<const Bundle> bundle, std::string bind_host, std::uint16_t port, int threads)
    : bundle_(std::move(bundle)), bind_host_(std::move(bind_host)), state_(std::make_unique<State>()) {
  auto& server = state_->server;
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  server.set_keep_alive_max_count(1);
  // httplib defaults to SO_REUSEPORT, which would let a second server share a
  // busy port instead of failing.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });

  State* state = state_.get();
  const Bundle* web = bundle_.get();
  server.set_pre_routing_handler([state, web](const httplib::Request& req, httplib::Response& res) {
    const int now_in_flight = ++state->in_flight;
    int seen = state->max_in_flight.load();
    while (now_in_flight > seen && !state->max_in_flight.compare_exchange_weak(seen, now_in_flight)) {
    }

    std::string host = req.get_header_value("Host");
    if (const auto colon = host.rfind(':'); colon != std::string::npos) host.erase(colon);
    std::transform(host.begin(), host.end(), host.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    if (web->spec.latency.count() > 0) std::this_thread::sleep_for(web->spec.latency);

    const Page* page = req.method == "GET" || req.method == "HEAD" ? web->find(host, req.target) : nullptr;
    if (page == nullptr) {
      res.status = 404;
      res.set_content("not found\n", "text/plain");
    } else {
      res.status = page->status;
      if (page->location) res.set_header("Location", *page->location);
      if (!page->body.empty()) res.set_content(page->body, page->content_type);
    }
    {
      std::lock_guard lock(state->log_mutex);
      state->log.push_back({std::chrono::steady_clock::now(), host, req.target, res.status});
    }
    --state->in_flight;
    return httplib::Server::HandlerResponse::Handled;
  });

  const bool bound = port == 0 ? (port_ = static_cast<std::uint16_t>(server.bind_to_any_port(bind_host_)), port_ > 0)
                               : (port_ = port, server.bind_to_port(bind_host_, port));
  if (!bound) {
    throw Error(Errc::address_in_use, "cannot listen on " + bind_host_ + ":" + std::to_string(port));
  }
  state_->thread = std::thread([state] { state->server.listen_after_bind(); });
  server.wait_until_ready();
}

MockServer::~MockServer() { stop(); }

void MockServer::stop() {
  if (!state_ || !state_->thread.joinable()) return;
  state_->server.stop();
  state_->thread.join();
}

int MockServer::in_flight() const { return state_->in_flight.load(); }
int MockServer::max_in_flight() const { return state_->max_in_flight.load(); }
void MockServer::reset_gauge() { state_->max_in_flight = state_->in_flight.load(); }

std::vector<AccessEntry> MockServer::access_log() const {
  std::lock_guard lock(state_->log_mutex);
  return state_->log;
}

std::size_t MockServer::request_count() const {
  std::lock_guard lock(state_->log_mutex);
  return state_->log.size();
}

}  // namespace yesql::mockweb
