#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "yesql/fetcher.hpp"
#include "yesql/frontier.hpp"
#include "yesql/politeness.hpp"
#include "yesql/scoring.hpp"

namespace yesql::runtime {

struct InstanceConfig {
  std::string instance_id;  // generated from host and pid when empty
  int batch_size = 50;
  int parallel_fetches = 20;
  std::chrono::milliseconds lease = frontier::kDefaultLease;
  std::optional<std::int64_t> stop_after;  // cap on fetch attempts (fetched + failed)
  std::chrono::milliseconds idle_shutdown{10'000};
  fetcher::FetcherOptions fetcher;
  fetcher::PolitenessPolicy politeness;
  std::optional<std::filesystem::path> content_dir;  // page bodies, named by SHA-256 of the URL
  int store_retries = 5;
  bool record_fetched_urls = false;  // fill RunSummary::fetched_urls
  std::ostream* event_log = nullptr;  // JSON lines; nullptr disables
};

/// Throws Error{invalid_argument} for unusable settings; returns warnings
/// for legal but questionable ones.
std::vector<std::string> validate(const InstanceConfig& config);

struct RunSummary {
  std::string instance_id;
  std::int64_t fetched = 0;
  std::int64_t failed = 0;
  std::int64_t discovered = 0;  // URLs new to the frontier
  std::int64_t batches = 0;
  std::int64_t released = 0;    // claims handed back at shutdown
  std::int64_t lost = 0;        // results dropped because a lease had expired
  std::chrono::milliseconds wall_time{0};
  bool aborted = false;
  std::string abort_reason;
  std::vector<std::string> fetched_urls;  // every submitted source, when recorded
};

std::string to_json(const RunSummary& summary);

/// Cooperative stop request shared between a running instance and whoever
/// wants it to stop (a signal-watching thread, a test).
class ShutdownToken {
 public:
  void request();
  bool requested() const noexcept { return requested_.load(); }
  /// Returns true if shutdown was requested before `timeout` elapsed.
  bool wait_for(std::chrono::milliseconds timeout);

 private:
  std::atomic<bool> requested_{false};
  std::mutex mutex_;
  std::condition_variable cv_;
};

/// Claim, fetch, extract, submit until the stop budget is spent, the frontier
/// stays empty for `idle_shutdown`, or `shutdown` is requested. Claims still
/// unfinished at exit are released. Opens its own store connection.
RunSummary run_instance(const InstanceConfig& config, const frontier::StoreSettings& store,
                        const scoring::KeywordStrategy& strategy, ShutdownToken* shutdown = nullptr);

/// File name used under content_dir for `url`: hex SHA-256 of its string.
std::string content_file_name(const urlkit::CanonicalUrl& url);

}  // namespace yesql::runtime
