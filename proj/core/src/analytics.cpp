#include "yesql/analytics.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "yesql/error.hpp"

namespace yesql::analytics {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto tab = line.find('\t');
    out.push_back(line.substr(0, tab));
    if (tab == std::string_view::npos) break;
    line.remove_prefix(tab + 1);
  }
  return out;
}

bool skip_line(const std::string& line) {
  return line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos;
}

void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// http(s) tokens of a tweet, trailing punctuation removed.
std::vector<std::string> urls_in(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string token; in >> token;) {
    const std::string lower = ascii_lower(token.substr(0, 8));
    if (!lower.starts_with("http://") && !lower.starts_with("https://")) continue;
    while (!token.empty() && std::string_view(".,;:!?)]}'\"").find(token.back()) != std::string_view::npos) {
      token.pop_back();
    }
    out.push_back(std::move(token));
  }
  return out;
}

std::string url_key(std::string_view raw) {
  if (auto u = urlkit::try_canonicalize(raw)) return u->str();
  return std::string(raw);
}

std::optional<std::string> domain_key(std::string_view url) {
  const auto parsed = urlkit::try_canonicalize(url);
  if (!parsed) return std::nullopt;
  return urlkit::domain_of(*parsed).registrable_domain;
}

double pct(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

DepthMap exact_depths(std::span<const frontier::UrlEdge> edges, std::span<const std::string> seeds) {
  std::unordered_map<std::string_view, std::vector<std::string_view>> adjacency;
  for (const auto& e : edges) adjacency[e.source].push_back(e.target);

  DepthMap depth;
  std::deque<std::string_view> frontier;
  for (const auto& s : seeds) {
    if (depth.emplace(s, 0).second) frontier.push_back(s);
  }
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop_front();
    const auto it = adjacency.find(u);
    if (it == adjacency.end()) continue;
    const int next = depth.find(std::string(u))->second + 1;
    for (const auto v : it->second) {
      if (depth.emplace(v, next).second) frontier.push_back(v);
    }
  }
  return depth;
}

// ---------------------------------------------------------------- tweets

void TweetUrlSet::add(const urlkit::CanonicalUrl& url, std::int64_t tweets) {
  if (tweets < 1) throw Error(Errc::invalid_argument, "tweet count must be positive");
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), url,
                                   [](const TweetUrl& e, const urlkit::CanonicalUrl& u) { return e.url < u; });
  if (it != entries_.end() && it->url == url) {
    it->tweet_count += tweets;
  } else {
    entries_.insert(it, TweetUrl{url, tweets});
  }
}

std::vector<TweetUrl> TweetUrlSet::top(std::size_t k) const {
  std::vector<TweetUrl> sorted = entries_;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TweetUrl& a, const TweetUrl& b) { return a.tweet_count > b.tweet_count; });
  sorted.resize(std::min(k, sorted.size()));
  return sorted;
}

IngestReport ingest_tweets(std::istream& tweets, std::istream& mapping) {
  IngestReport report;

  std::unordered_map<std::string, std::string> resolve;
  int line_no = 0;
  for (std::string line; std::getline(mapping, line);) {
    ++line_no;
    chomp(line);
    if (skip_line(line)) continue;
    const auto f = split_tabs(line);
    if (f.size() < 2 || f[0].empty() || f[1].empty()) {
      report.errors.push_back("mapping:" + std::to_string(line_no) + ": expected short<TAB>effective");
      continue;
    }
    resolve[url_key(f[0])] = std::string(f[1]);
  }

  std::map<std::string, std::int64_t> counts;  // canonical effective URL -> tweets
  std::unordered_set<std::string> shorts;
  std::unordered_set<std::string> unresolved;
  line_no = 0;
  for (std::string line; std::getline(tweets, line);) {
    ++line_no;
    chomp(line);
    if (skip_line(line)) continue;
    const auto f = split_tabs(line);
    if (f.size() < 3) {
      report.errors.push_back("tweets:" + std::to_string(line_no) + ": expected timestamp<TAB>author<TAB>text");
      continue;
    }
    ++report.tweets;
    std::string text(f[2]);
    for (std::size_t i = 3; i < f.size(); ++i) (text += ' ') += f[i];
    const auto mentioned = urls_in(text);
    if (mentioned.empty()) continue;
    ++report.tweets_with_urls;

    std::set<std::string> effective_in_tweet;
    for (const auto& raw : mentioned) {
      ++report.url_mentions;
      const std::string key = url_key(raw);
      shorts.insert(key);
      const auto it = resolve.find(key);
      if (it == resolve.end()) {
        ++report.unresolvable_mentions;
        unresolved.insert(key);
        continue;
      }
      const auto effective = urlkit::try_canonicalize(it->second);
      if (!effective) {
        report.errors.push_back("tweets:" + std::to_string(line_no) + ": '" + it->second +
                                "' (mapped from " + raw + ") is not an http(s) URL");
        continue;
      }
      effective_in_tweet.insert(effective->str());
    }
    for (const auto& e : effective_in_tweet) ++counts[e];
  }

  for (const auto& [url, n] : counts) report.urls.add(urlkit::canonicalize(url), n);
  report.unique_short_urls = std::ssize(shorts);
  report.unresolvable_urls = std::ssize(unresolved);
  return report;
}

IngestReport ingest_tweets(const std::filesystem::path& tweets, const std::filesystem::path& mapping) {
  std::ifstream t(tweets);
  if (!t) throw Error(Errc::io_error, "cannot read " + tweets.string());
  std::ifstream m(mapping);
  if (!m) throw Error(Errc::io_error, "cannot read " + mapping.string());
  return ingest_tweets(t, m);
}

// ---------------------------------------------------------------- coverage

std::string_view to_string(Unit unit) noexcept { return unit == Unit::url ? "url" : "domain"; }

Unit parse_unit(std::string_view s) {
  if (s == "url") return Unit::url;
  if (s == "domain") return Unit::domain;
  throw Error(Errc::invalid_argument, "unit must be 'url' or 'domain', got '" + std::string(s) + "'");
}

CoverageReport coverage_by_depth(const DepthMap& crawled, const TweetUrlSet& targets, std::size_t k, Unit unit) {
  if (targets.empty()) throw Error(Errc::empty_targets, "no target URLs to measure coverage against");
  if (k == 0 || k > targets.size()) {
    throw Error(Errc::invalid_argument,
                "k must be in [1, " + std::to_string(targets.size()) + "], got " + std::to_string(k));
  }

  // Reduce everything to keys of the chosen unit: key -> smallest depth.
  std::map<std::string, int> crawled_keys;
  std::set<std::string> all_keys;
  std::set<std::string> top_keys;
  if (unit == Unit::url) {
    crawled_keys = crawled;
    for (const auto& t : targets.entries()) all_keys.insert(t.url.str());
    for (const auto& t : targets.top(k)) top_keys.insert(t.url.str());
  } else {
    for (const auto& [url, depth] : crawled) {
      const auto key = domain_key(url);
      if (!key) continue;
      auto [it, inserted] = crawled_keys.emplace(*key, depth);
      if (!inserted) it->second = std::min(it->second, depth);
    }
    for (const auto& t : targets.entries()) all_keys.insert(urlkit::domain_of(t.url).registrable_domain);
    for (const auto& t : targets.top(k)) top_keys.insert(urlkit::domain_of(t.url).registrable_domain);
  }

  std::set<int> depths;
  for (const auto& [url, depth] : crawled) depths.insert(depth);

  CoverageReport report;
  report.unit = unit;
  report.k = k;
  report.targets = all_keys.size();
  report.topk_targets = top_keys.size();
  for (const int d : depths) {
    CoverageRow row;
    row.depth = d;
    std::size_t hit_all = 0;
    std::size_t hit_top = 0;
    for (const auto& [key, depth] : crawled_keys) {
      if (depth > d) continue;
      ++row.cumulative_crawled;
      hit_all += all_keys.count(key);
      hit_top += top_keys.count(key);
    }
    row.pct_all = pct(hit_all, all_keys.size());
    row.pct_topk = pct(hit_top, top_keys.size());
    report.rows.push_back(row);
  }
  return report;
}

std::string FrequencyBucket::label() const {
  return "[" + std::to_string(lower) + "," + (upper ? std::to_string(*upper) : std::string("inf")) + ")";
}

std::vector<FrequencyBucket> coverage_by_frequency(const std::set<std::string>& crawled, const TweetUrlSet& targets,
                                                   std::span<const std::int64_t> edges) {
  if (targets.empty()) throw Error(Errc::empty_targets, "no target URLs to measure coverage against");
  if (edges.empty()) throw Error(Errc::invalid_argument, "at least one bucket edge is required");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) throw Error(Errc::invalid_argument, "bucket edges must be strictly increasing");
  }
  std::vector<FrequencyBucket> buckets;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    FrequencyBucket b;
    b.lower = edges[i];
    if (i + 1 < edges.size()) b.upper = edges[i + 1];
    buckets.push_back(b);
  }
  for (const auto& t : targets.entries()) {
    // Last bucket whose lower edge is <= count.
    const auto it = std::upper_bound(edges.begin(), edges.end(), t.tweet_count);
    if (it == edges.begin()) continue;
    auto& b = buckets[static_cast<std::size_t>(it - edges.begin()) - 1];
    ++b.targets;
    b.covered += crawled.count(t.url.str()) > 0 ? 1 : 0;
  }
  for (auto& b : buckets) {
    if (b.targets > 0) b.pct = pct(static_cast<std::size_t>(b.covered), static_cast<std::size_t>(b.targets));
  }
  return buckets;
}

// ---------------------------------------------------------------- depth audit

bool DepthAudit::all_explained() const {
  return inconsistent.empty() &&
         std::all_of(deviations.begin(), deviations.end(), [](const DepthDeviation& d) { return !d.root_cause.empty(); });
}

DepthAudit audit_depths(std::span<const frontier::UrlRecord> urls, std::span<const frontier::UrlEdge> links,
                        const DepthMap& exact) {
  std::unordered_map<std::string, const frontier::UrlRecord*> by_url;
  for (const auto& r : urls) by_url.emplace(r.url.str(), &r);
  std::unordered_map<std::string, std::vector<std::string>> inbound;
  for (const auto& e : links) inbound[e.target].push_back(e.source);

  auto exact_of = [&](const std::string& u) -> std::optional<int> {
    const auto it = exact.find(u);
    return it == exact.end() ? std::nullopt : std::optional<int>(it->second);
  };

  std::unordered_map<std::string, std::string> memo;
  // Walks shortest-path predecessors until it finds one whose depth dropped
  // after it was fetched.
  auto root_cause = [&](auto&& self, const std::string& u) -> std::string {
    if (const auto m = memo.find(u); m != memo.end()) return m->second;
    memo[u] = "";
    const auto eu = exact_of(u);
    std::string found;
    for (const auto& s : inbound[u]) {
      const auto es = exact_of(s);
      const auto rec = by_url.find(s);
      if (!eu || !es || *es != *eu - 1 || rec == by_url.end()) continue;
      const auto& r = *rec->second;
      if (r.fetch_depth && *r.fetch_depth > r.depth) {
        found = s;
        break;
      }
      if (r.depth > *es) {
        found = self(self, s);
        if (!found.empty()) break;
      }
    }
    memo[u] = found;
    return found;
  };

  DepthAudit audit;
  for (const auto& r : urls) {
    const std::string& u = r.url.str();
    const auto e = exact_of(u);

    std::optional<int> expected;
    if (r.is_seed) {
      expected = 0;
    } else {
      for (const auto& s : inbound[u]) {
        const auto it = by_url.find(s);
        if (it == by_url.end() || !it->second->fetch_depth) continue;
        const int via = *it->second->fetch_depth + 1;
        expected = expected ? std::min(*expected, via) : via;
      }
    }
    if (!expected || *expected != r.depth || (e && r.depth < *e)) audit.inconsistent.push_back(u);

    if (!e) continue;
    ++audit.compared;
    if (r.depth == *e) {
      ++audit.equal;
      continue;
    }
    audit.deviations.push_back({u, r.depth, *e, r.depth > *e ? root_cause(root_cause, u) : std::string{}});
  }
  return audit;
}

DepthMap crawled_depths(frontier::Frontier& store) {
  const auto urls = store.urls();
  std::vector<std::string> seeds;
  for (const auto& r : urls) {
    if (r.is_seed) seeds.push_back(r.url.str());
  }
  const auto links = store.link_urls();
  const DepthMap all = exact_depths(links, seeds);
  DepthMap out;
  for (const auto& r : urls) {
    if (r.status != frontier::UrlStatus::fetched) continue;
    if (const auto it = all.find(r.url.str()); it != all.end()) out.emplace(it->first, it->second);
  }
  return out;
}

// ---------------------------------------------------------------- text I/O

std::vector<frontier::UrlEdge> read_edges(std::istream& in) {
  std::vector<frontier::UrlEdge> edges;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    chomp(line);
    if (skip_line(line)) continue;
    const auto f = split_tabs(line);
    if (f.size() < 2) throw Error(Errc::invalid_argument, "edge list line " + std::to_string(line_no) + ": expected source<TAB>target");
    edges.push_back({std::string(f[0]), std::string(f[1])});
  }
  return edges;
}

std::vector<std::string> read_url_list(std::istream& in) {
  std::vector<std::string> urls;
  for (std::string line; std::getline(in, line);) {
    chomp(line);
    if (skip_line(line)) continue;
    urls.push_back(std::string(split_tabs(line)[0]));
  }
  return urls;
}

DepthMap read_depths(std::istream& in) {
  DepthMap depths;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    chomp(line);
    if (skip_line(line)) continue;
    const auto f = split_tabs(line);
    int depth = -1;
    if (f.size() >= 2) {
      std::istringstream num{std::string(f[1])};
      num >> depth;
      if (num.fail() || !num.eof()) depth = -1;
    }
    if (depth < 0) throw Error(Errc::invalid_argument, "depth file line " + std::to_string(line_no) + ": expected url<TAB>depth");
    depths[std::string(f[0])] = depth;
  }
  return depths;
}

void write_depths(std::ostream& out, const DepthMap& depths) {
  for (const auto& [url, d] : depths) out << url << '\t' << d << '\n';
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

std::string align_columns(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      const std::string pad(width[c] - row[c].size(), ' ');
      line += c == 0 ? row[c] + pad : pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

std::string format_table(const CoverageReport& r) {
  const std::string unit(to_string(r.unit));
  std::vector<std::vector<std::string>> rows{
      {"depth", "crawled_" + unit + "s", "pct_all", "pct_top" + std::to_string(r.k)}};
  for (const auto& row : r.rows) {
    rows.push_back({std::to_string(row.depth), std::to_string(row.cumulative_crawled), format_percent(row.pct_all),
                    format_percent(row.pct_topk)});
  }
  return "# unit=" + unit + " targets=" + std::to_string(r.targets) + " k=" + std::to_string(r.k) +
         " top_targets=" + std::to_string(r.topk_targets) + "\n" + align_columns(rows);
}

std::string format_records(const CoverageReport& r) {
  std::string out = "# unit=" + std::string(to_string(r.unit)) + " targets=" + std::to_string(r.targets) +
                    " k=" + std::to_string(r.k) + " top_targets=" + std::to_string(r.topk_targets) + "\n";
  out += "depth\tcrawled\tpct_all\tpct_topk\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.depth) + '\t' + std::to_string(row.cumulative_crawled) + '\t' +
           format_percent(row.pct_all) + '\t' + format_percent(row.pct_topk) + '\n';
  }
  return out;
}

std::string format_table(std::span<const FrequencyBucket> buckets) {
  std::vector<std::vector<std::string>> rows{{"tweets", "targets", "covered", "pct"}};
  for (const auto& b : buckets) {
    rows.push_back({b.label(), std::to_string(b.targets), std::to_string(b.covered),
                    b.pct ? format_percent(*b.pct) : std::string("no-data")});
  }
  return align_columns(rows);
}

std::string format_records(std::span<const FrequencyBucket> buckets) {
  std::string out = "lower\tupper\ttargets\tcovered\tpct\n";
  for (const auto& b : buckets) {
    out += std::to_string(b.lower) + '\t' + (b.upper ? std::to_string(*b.upper) : std::string("inf")) + '\t' +
           std::to_string(b.targets) + '\t' + std::to_string(b.covered) + '\t' +
           (b.pct ? format_percent(*b.pct) : std::string("no-data")) + '\n';
  }
  return out;
}

std::string format_plot_data(std::span<const FrequencyBucket> buckets) {
  std::string out;
  for (const auto& b : buckets) {
    if (b.pct) out += std::to_string(b.lower) + ' ' + format_percent(*b.pct) + '\n';
  }
  return out;
}

std::string format_table(const frontier::FrontierStats& s) {
  return align_columns({{"pending", std::to_string(s.pending)},
                        {"claimed", std::to_string(s.claimed)},
                        {"fetched", std::to_string(s.fetched)},
                        {"failed", std::to_string(s.failed)},
                        {"urls", std::to_string(s.total_urls())},
                        {"links", std::to_string(s.total_links)},
                        {"max_depth", std::to_string(s.max_depth)}});
}

}  // namespace yesql::analytics
