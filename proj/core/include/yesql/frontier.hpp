#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "yesql/extractor.hpp"
#include "yesql/fetcher.hpp"
#include "yesql/scoring.hpp"
#include "yesql/urlkit.hpp"

namespace yesql::frontier {

using Clock = std::chrono::system_clock;
using TimePoint = Clock::time_point;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::chrono::minutes kDefaultLease{10};

enum class UrlStatus { pending, claimed, fetched, failed };

std::string_view to_string(UrlStatus s) noexcept;
UrlStatus parse_status(std::string_view s);

struct StoreSettings {
  /// SQLite database path or file: URI (e.g. "file:crawl.db?mode=ro").
  std::string path;
  std::chrono::milliseconds busy_timeout{30'000};
  /// Injected for lease tests; defaults to the system clock.
  std::function<TimePoint()> clock;
};

struct UrlRecord {
  std::int64_t id = 0;
  urlkit::CanonicalUrl url;
  urlkit::DomainName domain;
  scoring::Score url_score = 0;
  scoring::Score link_score_sum = 0;
  scoring::Score priority = 0;
  int depth = 0;
  std::optional<int> fetch_depth;  // depth as stored when the URL was submitted
  bool is_seed = false;
  UrlStatus status = UrlStatus::pending;
  std::optional<std::string> claim_token;
  std::optional<TimePoint> claim_expiry;
  std::optional<int> http_status;
  std::optional<std::string> fetch_error;
  std::optional<TimePoint> fetched_at;
  std::optional<std::string> fetched_by;
};

struct LinkRecord {
  std::int64_t source_id = 0;
  std::int64_t target_id = 0;
  std::string context;
  scoring::Score context_score = 0;
};

struct CrawlBatch {
  std::string claim_token;
  TimePoint lease_expiry;
  std::vector<UrlRecord> urls;  // ordered by priority desc, id asc

  bool empty() const noexcept { return urls.empty(); }
};

struct SeedReport {
  std::int64_t inserted = 0;
  std::int64_t skipped = 0;  // duplicates within the call or already stored
  std::vector<std::pair<std::string, std::string>> rejected;  // (raw, reason)
};

/// What an instance sends back for one claimed URL. Discovered targets are
/// resolved against `fetch.final`.
struct SourceResult {
  urlkit::CanonicalUrl source;
  fetcher::FetchOutcome fetch;
  std::vector<extractor::ExtractedLink> discovered;
};

struct SubmitReport {
  std::int64_t fetched = 0;
  std::int64_t failed = 0;
  std::int64_t new_urls = 0;
  std::int64_t links_offered = 0;
  std::int64_t rejected_links = 0;  // malformed or non-http(s) targets
};

struct FrontierStats {
  std::int64_t pending = 0;
  std::int64_t claimed = 0;
  std::int64_t fetched = 0;
  std::int64_t failed = 0;
  int max_depth = 0;
  std::int64_t total_links = 0;

  std::int64_t total_urls() const noexcept { return pending + claimed + fetched + failed; }
  friend bool operator==(const FrontierStats&, const FrontierStats&) = default;
};

struct UrlEdge {
  std::string source;
  std::string target;
};

/// Handle on the relational frontier. Every mutating operation is a single
/// transaction; many handles (threads or processes) may work on the same
/// store concurrently, but one handle must not be shared between threads.
class Frontier {
 public:
  static Frontier open(const StoreSettings& settings);

  Frontier(Frontier&&) noexcept;
  Frontier& operator=(Frontier&&) noexcept;
  ~Frontier();

  /// Creates tables, constraints, indexes and the insertion view. Idempotent.
  /// Throws insufficient_privilege on read-only stores and schema_too_new
  /// when the store was created by a newer release.
  void init_schema();
  std::optional<int> schema_version();

  SeedReport insert_seeds(std::span<const std::string> raw_urls,
                          const scoring::KeywordStrategy& strategy);

  /// Atomically claims up to `limit` pending URLs, best priority first.
  CrawlBatch claim_batch(int limit, std::chrono::milliseconds lease, std::string_view instance_id);

  /// Records fetch outcomes and discovered links for URLs of one claim.
  /// Throws unknown_token, expired_claim (after returning the claim's URLs
  /// to pending) or invalid_argument when a source is not part of the claim.
  SubmitReport submit_discoveries(std::string_view claim_token, std::span<const SourceResult> results,
                                  const scoring::KeywordStrategy& strategy);

  /// Returns still-claimed URLs of a claim to pending; all of them when
  /// `urls` is empty.
  std::int64_t release_claims(std::string_view claim_token,
                              std::span<const urlkit::CanonicalUrl> urls = {});

  /// Reverts every claim whose lease ended before `now`.
  std::int64_t expire_leases(TimePoint now);

  FrontierStats stats();

  /// Registers score_url(text), score_link(text), normalize(text) and
  /// url_top(text) as SQL functions on this connection so fetch queries can
  /// score server-side.
  void install_sql_functions(const scoring::KeywordStrategy& strategy);

  std::optional<UrlRecord> find(const urlkit::CanonicalUrl& url);
  std::vector<UrlRecord> urls(std::optional<UrlStatus> status = std::nullopt);
  std::vector<LinkRecord> links();
  std::vector<UrlEdge> link_urls();

  /// Runs an arbitrary read-only query returning one integer (tests, tools).
  std::int64_t query_int(std::string_view sql);

  TimePoint now() const;

 private:
  struct Impl;
  explicit Frontier(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace yesql::frontier
