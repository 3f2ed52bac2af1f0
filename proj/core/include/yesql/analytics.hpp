#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "yesql/frontier.hpp"
#include "yesql/urlkit.hpp"

namespace yesql::analytics {

using DepthMap = std::map<std::string, int>;  // canonical URL -> depth

/// Shortest link distance from any seed; unreachable URLs are absent.
DepthMap exact_depths(std::span<const frontier::UrlEdge> edges, std::span<const std::string> seeds);

struct TweetUrl {
  urlkit::CanonicalUrl url;
  std::int64_t tweet_count = 0;
};

/// Effective URLs with the number of tweets that mention each one.
class TweetUrlSet {
 public:
  void add(const urlkit::CanonicalUrl& url, std::int64_t tweets = 1);

  /// Sorted by URL.
  const std::vector<TweetUrl>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// The k most tweeted; ties at equal counts go to the lexicographically
  /// smaller canonical URL.
  std::vector<TweetUrl> top(std::size_t k) const;

 private:
  std::vector<TweetUrl> entries_;
};

struct IngestReport {
  TweetUrlSet urls;
  std::int64_t tweets = 0;
  std::int64_t tweets_with_urls = 0;
  std::int64_t url_mentions = 0;
  std::int64_t unique_short_urls = 0;
  std::int64_t unresolvable_urls = 0;      // distinct short URLs missing from the mapping
  std::int64_t unresolvable_mentions = 0;
  std::vector<std::string> errors;          // "tweets:12: ..." style, non-fatal

  double url_bearing_pct() const noexcept {
    return tweets == 0 ? 0.0 : 100.0 * static_cast<double>(tweets_with_urls) / static_cast<double>(tweets);
  }
};

/// Tweet records are `timestamp<TAB>author<TAB>text`; mapping lines are
/// `short<TAB>effective`. A URL counts once per tweet however often the
/// tweet repeats it.
IngestReport ingest_tweets(std::istream& tweets, std::istream& mapping);
IngestReport ingest_tweets(const std::filesystem::path& tweets, const std::filesystem::path& mapping);

enum class Unit { url, domain };
std::string_view to_string(Unit unit) noexcept;
Unit parse_unit(std::string_view s);

struct CoverageRow {
  int depth = 0;
  std::int64_t cumulative_crawled = 0;
  double pct_all = 0;
  double pct_topk = 0;
};

struct CoverageReport {
  Unit unit = Unit::url;
  std::size_t k = 0;
  std::size_t targets = 0;       // after domain mapping when unit == domain
  std::size_t topk_targets = 0;  // likewise
  std::vector<CoverageRow> rows;
};

/// One row per depth present in `crawled`, cumulative over depth <= d.
/// With Unit::domain both sides are mapped to registrable domains and
/// deduplicated first; the top-k set is chosen among URLs, then mapped.
/// Throws empty_targets, or invalid_argument when k is 0 or exceeds the
/// number of targets.
CoverageReport coverage_by_depth(const DepthMap& crawled, const TweetUrlSet& targets, std::size_t k, Unit unit);

struct FrequencyBucket {
  std::int64_t lower = 0;
  std::optional<std::int64_t> upper;  // exclusive; open-ended when absent
  std::int64_t targets = 0;
  std::int64_t covered = 0;
  std::optional<double> pct;  // absent when the bucket holds no target

  std::string label() const;
};

/// Buckets [e0,e1), [e1,e2), ..., [en,inf). Targets tweeted fewer than e0
/// times fall outside every bucket. Throws empty_targets or invalid_argument
/// for edges that are empty or not strictly increasing.
std::vector<FrequencyBucket> coverage_by_frequency(const std::set<std::string>& crawled, const TweetUrlSet& targets,
                                                   std::span<const std::int64_t> edges);

/// Comparison of the frontier's stored depths with exact BFS depths.
struct DepthDeviation {
  std::string url;
  int stored = 0;
  int exact = 0;
  /// URL on a shortest path whose depth dropped after it had been fetched,
  /// so its children kept the older, larger value. Empty when unexplained.
  std::string root_cause;
};

struct DepthAudit {
  std::size_t compared = 0;
  std::size_t equal = 0;
  std::vector<DepthDeviation> deviations;  // stored != exact
  std::vector<std::string> inconsistent;   // stored depth contradicts the recorded links

  bool all_explained() const;
};

/// Every stored depth must equal min(fetch_depth(source) + 1) over recorded
/// inbound links (0 for seeds), never undercut the exact depth, and each
/// deviation must trace back to a fetched URL whose depth dropped later.
DepthAudit audit_depths(std::span<const frontier::UrlRecord> urls, std::span<const frontier::UrlEdge> links,
                        const DepthMap& exact);

/// Fetched URLs of a store with their exact depths over its recorded links.
DepthMap crawled_depths(frontier::Frontier& store);

// ---------------------------------------------------------------- text I/O

std::vector<frontier::UrlEdge> read_edges(std::istream& in);
std::vector<std::string> read_url_list(std::istream& in);
DepthMap read_depths(std::istream& in);
void write_depths(std::ostream& out, const DepthMap& depths);

/// Aligned plain-text tables and tab-separated records; percentages always
/// carry two decimals.
std::string format_percent(double pct);
std::string format_table(const CoverageReport& report);
std::string format_records(const CoverageReport& report);
std::string format_table(std::span<const FrequencyBucket> buckets);
std::string format_records(std::span<const FrequencyBucket> buckets);
/// "x y" lines (bucket lower edge, percent) for plotting; empty buckets skipped.
std::string format_plot_data(std::span<const FrequencyBucket> buckets);
std::string format_table(const frontier::FrontierStats& stats);

/// Left column left-aligned, others right-aligned, two spaces between.
std::string align_columns(const std::vector<std::vector<std::string>>& rows);

}  // namespace yesql::analytics
