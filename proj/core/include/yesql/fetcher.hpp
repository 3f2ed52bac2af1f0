#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "yesql/urlkit.hpp"

namespace yesql::fetcher {

enum class FetchError {
  dns_failure,
  connect_timeout,
  connect_failure,
  read_timeout,
  too_many_redirects,
  bad_redirect,
  tls_failure,
  robots_disallowed,
  transport,
};

std::string_view to_string(FetchError e) noexcept;
std::optional<FetchError> parse_fetch_error(std::string_view s) noexcept;

struct FetchLimits {
  std::chrono::milliseconds timeout{30'000};
  int max_redirects = 5;
  std::size_t max_body_bytes = 4 * 1024 * 1024;
};

struct FetchOutcome {
  urlkit::CanonicalUrl requested;
  urlkit::CanonicalUrl final;  // equals `requested` when no redirect happened
  int http_status = 0;         // 0 when no response was received
  std::optional<std::string> content_type;
  std::string body;            // empty whenever `error` is set
  bool truncated = false;
  std::chrono::microseconds elapsed{0};
  std::optional<FetchError> error;

  bool ok() const noexcept { return !error && http_status >= 200 && http_status < 300; }
  bool redirected() const noexcept { return final != requested; }
};

/// Host and port every connection is sent to regardless of the URL's host,
/// which still goes out in the Host header. Lets a single loopback server
/// impersonate any number of domains.
struct ConnectOverride {
  std::string host;
  std::uint16_t port = 0;
};

struct FetcherOptions {
  FetchLimits limits;
  std::string user_agent = "yesql-crawler/0.1 (+https://github.com/yesql-crawler/yesql-crawler)";
  bool honor_robots = true;
  std::chrono::seconds robots_ttl{3600};
  std::optional<ConnectOverride> connect_override;
};

/// HTTP(S) downloader. Redirects are followed manually so that each hop is
/// canonicalized; HTTP error statuses are reported in the outcome, never
/// thrown. Thread-safe: the robots.txt cache is shared between callers.
class Fetcher {
 public:
  explicit Fetcher(FetcherOptions options = {});
  ~Fetcher();
  Fetcher(const Fetcher&) = delete;
  Fetcher& operator=(const Fetcher&) = delete;

  FetchOutcome fetch(const urlkit::CanonicalUrl& url) const;
  FetchOutcome fetch(const urlkit::CanonicalUrl& url, const FetchLimits& limits) const;

  const FetcherOptions& options() const noexcept { return options_; }

 private:
  class RobotsCache;

  FetchOutcome fetch_following(const urlkit::CanonicalUrl& url, const FetchLimits& limits) const;

  FetcherOptions options_;
  std::unique_ptr<RobotsCache> robots_;
};

/// One-shot fetch with default options and robots.txt ignored.
FetchOutcome fetch(const urlkit::CanonicalUrl& url, const FetchLimits& limits);

}  // namespace yesql::fetcher
