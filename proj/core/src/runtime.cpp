#include "yesql/runtime.hpp"

#include <openssl/sha.h>
#include <unistd.h>

#include <algorithm>
#include <deque>
#include <fstream>
#include <thread>

#include "event_log.hpp"
#include "yesql/error.hpp"
#include "yesql/extractor.hpp"

namespace yesql::runtime {
namespace {

using SteadyClock = std::chrono::steady_clock;
using nlohmann::json;

constexpr int kMaxOutstandingBatches = 2;
constexpr auto kIdlePoll = std::chrono::milliseconds{50};
constexpr auto kBusyPoll = std::chrono::milliseconds{200};

std::string default_instance_id() {
  char host[256] = {};
  if (gethostname(host, sizeof host - 1) != 0) std::snprintf(host, sizeof host, "localhost");
  static std::atomic<int> counter{0};
  return std::string(host) + "-" + std::to_string(getpid()) + "-" + std::to_string(counter++);
}

struct Batch {
  frontier::CrawlBatch claim;
  std::vector<std::optional<frontier::SourceResult>> results;
  std::size_t remaining = 0;
};

struct WorkItem {
  std::shared_ptr<Batch> batch;
  std::size_t index = 0;
};

/// Fetch workers plus the queue they drain. The coordinator pushes claimed
/// batches in and collects finished ones.
class WorkerPool {
 public:
  WorkerPool(const InstanceConfig& config, EventLog& log)
      : config_(config), log_(log), fetcher_(config.fetcher), gate_(config.politeness) {
    for (int i = 0; i < config.parallel_fetches; ++i) threads_.emplace_back([this] { work(); });
  }

  ~WorkerPool() { stop(); }

  void dispatch(const std::shared_ptr<Batch>& batch) {
    {
      std::lock_guard lock(mutex_);
      for (std::size_t i = 0; i < batch->claim.urls.size(); ++i) queue_.push_back({batch, i});
    }
    work_cv_.notify_all();
  }

  std::size_t queued() {
    std::lock_guard lock(mutex_);
    return queue_.size();
  }

  /// Waits until some batch finishes or `timeout` passes; returns finished batches.
  std::vector<std::shared_ptr<Batch>> wait_finished(std::chrono::milliseconds timeout, ShutdownToken* shutdown) {
    std::unique_lock lock(mutex_);
    done_cv_.wait_for(lock, timeout, [&] {
      return !finished_.empty() || (shutdown != nullptr && shutdown->requested());
    });
    return std::exchange(finished_, {});
  }

  /// Drops queued work, lets in-flight fetches complete and joins the workers.
  void stop() {
    {
      std::lock_guard lock(mutex_);
      if (stopping_ && threads_.empty()) return;
      stopping_ = true;
      queue_.clear();
    }
    work_cv_.notify_all();
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  void wake() { done_cv_.notify_all(); }

 private:
  void work() {
    for (;;) {
      std::optional<WorkItem> item;
      fetcher::PolitenessGate::Permit permit;
      {
        std::unique_lock lock(mutex_);
        for (;;) {
          if (stopping_) return;
          auto next_retry = SteadyClock::time_point::max();
          for (auto it = queue_.begin(); it != queue_.end(); ++it) {
            const auto& rec = it->batch->claim.urls[it->index];
            auto admitted = gate_.try_acquire(rec.domain.registrable_domain);
            if (auto* p = std::get_if<fetcher::PolitenessGate::Permit>(&admitted)) {
              permit = std::move(*p);
              item = std::move(*it);
              queue_.erase(it);
              break;
            }
            next_retry = std::min(next_retry, std::get<SteadyClock::time_point>(admitted));
          }
          if (item) break;
          if (next_retry == SteadyClock::time_point::max()) {
            work_cv_.wait(lock);
          } else {
            work_cv_.wait_until(lock, next_retry);
          }
        }
      }

      auto result = process(item->batch->claim.urls[item->index]);
      permit.release();
      {
        // Pairs with the check-then-wait above so the wakeup cannot slip in between.
        std::lock_guard lock(mutex_);
      }
      work_cv_.notify_all();  // a domain slot opened up

      {
        std::lock_guard lock(mutex_);
        auto& batch = *item->batch;
        batch.results[item->index] = std::move(result);
        if (--batch.remaining == 0) finished_.push_back(item->batch);
      }
      done_cv_.notify_all();
    }
  }

  frontier::SourceResult process(const frontier::UrlRecord& rec) {
    frontier::SourceResult result;
    result.source = rec.url;
    try {
      result.fetch = fetcher_.fetch(rec.url);
    } catch (const std::exception& e) {
      result.fetch.requested = rec.url;
      result.fetch.final = rec.url;
      result.fetch.error = fetcher::FetchError::transport;
    }
    auto& fetch = result.fetch;
    if (!fetch.error && fetch.redirected()) {
      // The redirect target is crawled as a URL of its own, one level deeper.
      result.discovered.push_back({fetch.final.str(), ""});
    } else if (fetch.ok()) {
      const auto& ctype = fetch.content_type ? *fetch.content_type : std::string{};
      result.discovered = extractor::extract_links(fetch.body, ctype, fetch.final);
      if (config_.content_dir) store_body(rec.url, fetch.body);
    }
    log_.emit("fetch", {{"url", rec.url.str()},
                        {"status", fetch.http_status},
                        {"error", fetch.error ? json(fetcher::to_string(*fetch.error)) : json(nullptr)},
                        {"ms", fetch.elapsed.count() / 1000},
                        {"links", result.discovered.size()}});
    fetch.body.clear();
    fetch.body.shrink_to_fit();
    return result;
  }

  void store_body(const urlkit::CanonicalUrl& url, const std::string& body) {
    std::error_code ec;
    std::filesystem::create_directories(*config_.content_dir, ec);
    std::ofstream out(*config_.content_dir / content_file_name(url), std::ios::binary);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
  }

  const InstanceConfig& config_;
  EventLog& log_;
  fetcher::Fetcher fetcher_;
  fetcher::PolitenessGate gate_;

  std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  std::deque<WorkItem> queue_;
  std::vector<std::shared_ptr<Batch>> finished_;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

class Coordinator {
 public:
  Coordinator(const InstanceConfig& config, const frontier::StoreSettings& store,
              const scoring::KeywordStrategy& strategy, ShutdownToken* shutdown)
      : config_(config),
        strategy_(strategy),
        shutdown_(shutdown),
        log_(config.event_log, config.instance_id),
        frontier_(frontier::Frontier::open(store)) {
    summary_.instance_id = config.instance_id;
  }

  RunSummary run() {
    const auto start = SteadyClock::now();
    log_.emit("start", {{"batch_size", config_.batch_size}, {"parallel", config_.parallel_fetches}});
    WorkerPool pool(config_, log_);
    std::vector<std::shared_ptr<Batch>> outstanding;
    std::optional<SteadyClock::time_point> idle_since;

    try {
      for (;;) {
        for (auto& batch : pool.wait_finished(std::chrono::milliseconds{0}, nullptr)) {
          submit(*batch, batch->results);
          std::erase(outstanding, batch);
        }
        if (shutdown_ != nullptr && shutdown_->requested()) break;

        const std::int64_t in_hand = attempts_ + outstanding_urls(outstanding);
        const std::int64_t budget =
            config_.stop_after ? *config_.stop_after - in_hand : std::numeric_limits<std::int64_t>::max();
        if (budget <= 0 && outstanding.empty()) break;

        bool claimed = false;
        if (budget > 0 && std::ssize(outstanding) < kMaxOutstandingBatches &&
            pool.queued() < static_cast<std::size_t>(config_.parallel_fetches)) {
          const int limit = static_cast<int>(std::min<std::int64_t>(config_.batch_size, budget));
          auto batch = claim(limit);
          if (batch) {
            pool.dispatch(batch);
            outstanding.push_back(std::move(batch));
            idle_since.reset();
            claimed = true;
          } else if (outstanding.empty()) {
            const auto now = SteadyClock::now();
            if (!idle_since) idle_since = now;
            if (now - *idle_since >= config_.idle_shutdown) {
              log_.emit("idle", {{"ms", config_.idle_shutdown.count()}});
              break;
            }
          }
        }
        if (claimed) continue;
        const auto poll = outstanding.empty() ? kIdlePoll : kBusyPoll;
        for (auto& batch : pool.wait_finished(poll, shutdown_)) {
          submit(*batch, batch->results);
          std::erase(outstanding, batch);
        }
      }
    } catch (const Error& e) {
      summary_.aborted = true;
      summary_.abort_reason = e.what();
      log_.emit("error", {{"what", e.what()}, {"code", to_string(e.code())}});
    }

    pool.stop();
    // Whatever finished before the stop still gets recorded; the rest goes
    // straight back to pending instead of waiting out the lease.
    for (auto& batch : outstanding) {
      try {
        if (!summary_.aborted) submit(*batch, batch->results);
        const auto released = frontier_.release_claims(batch->claim.claim_token);
        summary_.released += released;
        if (released > 0) log_.emit("release", {{"token", batch->claim.claim_token}, {"urls", released}});
      } catch (const Error& e) {
        log_.emit("error", {{"what", e.what()}, {"code", to_string(e.code())}});
      }
    }

    summary_.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - start);
    log_.emit("stop", {{"fetched", summary_.fetched}, {"failed", summary_.failed}});
    return std::move(summary_);
  }

 private:
  static std::int64_t outstanding_urls(const std::vector<std::shared_ptr<Batch>>& outstanding) {
    std::int64_t n = 0;
    for (const auto& b : outstanding) n += std::ssize(b->claim.urls);
    return n;
  }

  template <typename F>
  auto with_retries(F&& op) -> decltype(op()) {
    auto delay = std::chrono::milliseconds{100};
    for (int attempt = 0;; ++attempt) {
      try {
        return op();
      } catch (const Error& e) {
        if (e.code() != Errc::store_unavailable || attempt >= config_.store_retries) throw;
        log_.emit("retry", {{"what", e.what()}, {"attempt", attempt + 1}});
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
    }
  }

  std::shared_ptr<Batch> claim(int limit) {
    auto claim = with_retries([&] {
      frontier_.expire_leases(frontier_.now());
      return frontier_.claim_batch(limit, config_.lease, config_.instance_id);
    });
    if (claim.empty()) return nullptr;
    ++summary_.batches;
    log_.emit("claim", {{"token", claim.claim_token}, {"urls", claim.urls.size()}});
    auto batch = std::make_shared<Batch>();
    batch->remaining = claim.urls.size();
    batch->results.resize(claim.urls.size());
    batch->claim = std::move(claim);
    return batch;
  }

  void submit(Batch& batch, std::vector<std::optional<frontier::SourceResult>>& slots) {
    std::vector<frontier::SourceResult> results;
    for (auto& slot : slots) {
      if (slot) results.push_back(std::move(*slot));
      slot.reset();
    }
    if (results.empty()) return;
    attempts_ += std::ssize(results);
    try {
      const auto report = with_retries(
          [&] { return frontier_.submit_discoveries(batch.claim.claim_token, results, strategy_); });
      summary_.fetched += report.fetched;
      summary_.failed += report.failed;
      summary_.discovered += report.new_urls;
      if (config_.record_fetched_urls) {
        for (const auto& r : results) summary_.fetched_urls.push_back(r.source.str());
      }
      log_.emit("submit", {{"token", batch.claim.claim_token},
                           {"fetched", report.fetched},
                           {"failed", report.failed},
                           {"new_urls", report.new_urls},
                           {"links", report.links_offered}});
    } catch (const Error& e) {
      if (e.code() != Errc::expired_claim) throw;
      // The frontier already put these URLs back; someone will redo them.
      summary_.lost += std::ssize(results);
      attempts_ -= std::ssize(results);
      log_.emit("error", {{"what", e.what()}, {"code", to_string(e.code())}});
    }
  }

  const InstanceConfig& config_;
  const scoring::KeywordStrategy& strategy_;
  ShutdownToken* shutdown_;
  EventLog log_;
  frontier::Frontier frontier_;
  RunSummary summary_;
  std::int64_t attempts_ = 0;
};

}  // namespace

std::vector<std::string> validate(const InstanceConfig& config) {
  if (config.batch_size < 1) throw Error(Errc::invalid_argument, "batch size must be at least 1");
  if (config.parallel_fetches < 1) throw Error(Errc::invalid_argument, "parallel fetches must be at least 1");
  if (config.lease.count() <= 0) throw Error(Errc::invalid_argument, "lease must be positive");
  if (config.idle_shutdown.count() < 0) throw Error(Errc::invalid_argument, "idle shutdown must not be negative");
  if (config.stop_after && *config.stop_after < 0) throw Error(Errc::invalid_argument, "stop-after must not be negative");
  std::vector<std::string> warnings;
  if (config.batch_size < config.parallel_fetches) {
    warnings.push_back("batch size " + std::to_string(config.batch_size) + " is below the " +
                       std::to_string(config.parallel_fetches) + " parallel fetches; workers will idle");
  }
  return warnings;
}

std::string to_json(const RunSummary& s) {
  json j = {{"instance", s.instance_id},
            {"fetched", s.fetched},
            {"failed", s.failed},
            {"discovered", s.discovered},
            {"batches", s.batches},
            {"released", s.released},
            {"lost", s.lost},
            {"wall_ms", s.wall_time.count()},
            {"aborted", s.aborted}};
  if (s.aborted) j["abort_reason"] = s.abort_reason;
  return j.dump();
}

void ShutdownToken::request() {
  {
    std::lock_guard lock(mutex_);
    requested_ = true;
  }
  cv_.notify_all();
}

bool ShutdownToken::wait_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return cv_.wait_for(lock, timeout, [&] { return requested_.load(); });
}

RunSummary run_instance(const InstanceConfig& config, const frontier::StoreSettings& store,
                        const scoring::KeywordStrategy& strategy, ShutdownToken* shutdown) {
  validate(config);
  InstanceConfig effective = config;
  if (effective.instance_id.empty()) effective.instance_id = default_instance_id();
  return Coordinator(effective, store, strategy, shutdown).run();
}

std::string content_file_name(const urlkit::CanonicalUrl& url) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(url.str().data()), url.str().size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

}  // namespace yesql::runtime
