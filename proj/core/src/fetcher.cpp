#include "yesql/fetcher.hpp"

#include <netdb.h>
#include <sys/socket.h>

#include <future>
#include <map>
#include <mutex>

#include <httplib.h>

#include "yesql/robots.hpp"

namespace yesql::fetcher {
namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr std::size_t kMaxRobotsBytes = 512 * 1024;

bool is_redirect(int status) {
  return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

bool is_ip_literal(const std::string& host) {
  if (!host.empty() && host.front() == '[') return true;
  return host.find_first_not_of("0123456789.") == std::string::npos;
}

bool resolves(const std::string& host) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const int rc = getaddrinfo(host.c_str(), nullptr, &hints, &result);
  if (result != nullptr) freeaddrinfo(result);
  return rc == 0;
}

FetchError map_error(httplib::Error e) {
  switch (e) {
    case httplib::Error::Connection: return FetchError::connect_failure;
    case httplib::Error::ConnectionTimeout: return FetchError::connect_timeout;
    case httplib::Error::Read: return FetchError::read_timeout;
    case httplib::Error::SSLConnection:
    case httplib::Error::SSLLoadingCerts:
    case httplib::Error::SSLServerVerification:
      return FetchError::tls_failure;
    default:
      return FetchError::transport;
  }
}

struct SingleResponse {
  int status = 0;
  std::optional<std::string> content_type;
  std::optional<std::string> location;
  std::string body;
  bool truncated = false;
  std::optional<FetchError> error;
};

SingleResponse fetch_once(const urlkit::CanonicalUrl& url, const FetchLimits& limits,
                          const FetcherOptions& options) {
  SingleResponse out;
  std::string origin;
  httplib::Headers headers{{"User-Agent", options.user_agent}, {"Accept", "text/html,*/*;q=0.8"}};
  if (options.connect_override && url.scheme() == "http") {
    origin = "http://" + options.connect_override->host + ":" +
             std::to_string(options.connect_override->port);
    std::string host_header = url.host();
    if (url.port()) host_header += ":" + std::to_string(*url.port());
    headers.emplace("Host", host_header);
  } else {
    if (!is_ip_literal(url.host()) && !resolves(url.host())) {
      out.error = FetchError::dns_failure;
      return out;
    }
    origin = url.scheme() + "://" + url.host() + ":" + std::to_string(url.effective_port());
  }

  httplib::Client client(origin);
  client.set_follow_location(false);
  client.set_keep_alive(false);
  client.set_connection_timeout(limits.timeout);
  client.set_read_timeout(limits.timeout);
  client.set_write_timeout(limits.timeout);
  client.enable_server_certificate_verification(true);

  auto result = client.Get(
      url.request_target(), headers,
      [&](const httplib::Response& r) {
        out.status = r.status;
        if (r.has_header("Content-Type")) out.content_type = r.get_header_value("Content-Type");
        if (r.has_header("Location")) out.location = r.get_header_value("Location");
        return true;
      },
      [&](const char* data, std::size_t len) {
        const std::size_t room = limits.max_body_bytes - out.body.size();
        if (len > room) {
          out.body.append(data, room);
          out.truncated = true;
          return false;
        }
        out.body.append(data, len);
        return true;
      });
  if (!result) {
    if (result.error() == httplib::Error::Canceled && out.truncated) return out;
    out.error = map_error(result.error());
    out.body.clear();
    out.truncated = false;
  }
  return out;
}

std::string origin_key(const urlkit::CanonicalUrl& url) {
  return url.scheme() + "://" + url.host() + ":" + std::to_string(url.effective_port());
}

}  // namespace

std::string_view to_string(FetchError e) noexcept {
  switch (e) {
    case FetchError::dns_failure: return "dns_failure";
    case FetchError::connect_timeout: return "connect_timeout";
    case FetchError::connect_failure: return "connect_failure";
    case FetchError::read_timeout: return "read_timeout";
    case FetchError::too_many_redirects: return "too_many_redirects";
    case FetchError::bad_redirect: return "bad_redirect";
    case FetchError::tls_failure: return "tls_failure";
    case FetchError::robots_disallowed: return "robots_disallowed";
    case FetchError::transport: return "transport";
  }
  return "transport";
}

std::optional<FetchError> parse_fetch_error(std::string_view s) noexcept {
  for (auto e : {FetchError::dns_failure, FetchError::connect_timeout, FetchError::connect_failure,
                 FetchError::read_timeout, FetchError::too_many_redirects, FetchError::bad_redirect,
                 FetchError::tls_failure, FetchError::robots_disallowed, FetchError::transport}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

class Fetcher::RobotsCache {
 public:
  using RulesPtr = std::shared_ptr<const RobotsRules>;

  explicit RobotsCache(std::chrono::seconds ttl) : ttl_(ttl) {}

  RulesPtr rules_for(const urlkit::CanonicalUrl& url, const Fetcher& fetcher) {
    const std::string key = origin_key(url);
    std::promise<RulesPtr> promise;
    std::shared_future<RulesPtr> cached;
    {
      std::lock_guard lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end() && SteadyClock::now() - it->second.fetched_at < ttl_) {
        cached = it->second.rules;
      } else {
        entries_[key] = Entry{promise.get_future().share(), SteadyClock::now()};
      }
    }
    // Another worker may still be downloading this origin's file.
    if (cached.valid()) return cached.get();
    RulesPtr rules;
    try {
      rules = download(url, fetcher);
    } catch (...) {
      rules = std::make_shared<const RobotsRules>(RobotsRules::allow_all());
    }
    promise.set_value(rules);
    return rules;
  }

 private:
  struct Entry {
    std::shared_future<RulesPtr> rules;
    SteadyClock::time_point fetched_at;
  };

  static RulesPtr download(const urlkit::CanonicalUrl& url, const Fetcher& fetcher) {
    const auto robots_url = urlkit::canonicalize("/robots.txt", url);
    FetchLimits limits = fetcher.options().limits;
    limits.max_body_bytes = std::min(limits.max_body_bytes, kMaxRobotsBytes);
    const auto outcome = fetcher.fetch_following(robots_url, limits);
    if (outcome.error) return std::make_shared<const RobotsRules>(RobotsRules::disallow_all());
    if (outcome.http_status >= 200 && outcome.http_status < 300) {
      return std::make_shared<const RobotsRules>(
          RobotsRules::parse(outcome.body, fetcher.options().user_agent));
    }
    if (outcome.http_status >= 400 && outcome.http_status < 500) {
      return std::make_shared<const RobotsRules>(RobotsRules::allow_all());
    }
    return std::make_shared<const RobotsRules>(RobotsRules::disallow_all());
  }

  std::chrono::seconds ttl_;
  std::mutex mutex_;
  std::map<std::string, Entry> entries_;
};

Fetcher::Fetcher(FetcherOptions options)
    : options_(std::move(options)), robots_(std::make_unique<RobotsCache>(options_.robots_ttl)) {}

Fetcher::~Fetcher() = default;

FetchOutcome Fetcher::fetch(const urlkit::CanonicalUrl& url) const { return fetch(url, options_.limits); }

FetchOutcome Fetcher::fetch(const urlkit::CanonicalUrl& url, const FetchLimits& limits) const {
  const auto start = SteadyClock::now();
  FetchOutcome outcome;
  if (options_.honor_robots && !robots_->rules_for(url, *this)->allowed(url.request_target())) {
    outcome.requested = url;
    outcome.final = url;
    outcome.error = FetchError::robots_disallowed;
  } else {
    outcome = fetch_following(url, limits);
  }
  outcome.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(SteadyClock::now() - start);
  return outcome;
}

FetchOutcome Fetcher::fetch_following(const urlkit::CanonicalUrl& url, const FetchLimits& limits) const {
  FetchOutcome outcome;
  outcome.requested = url;
  urlkit::CanonicalUrl current = url;
  for (int hop = 0;; ++hop) {
    auto response = fetch_once(current, limits, options_);
    outcome.final = current;
    if (response.error) {
      outcome.error = response.error;
      return outcome;
    }
    if (is_redirect(response.status)) {
      std::optional<urlkit::CanonicalUrl> next;
      if (response.location) next = urlkit::try_canonicalize(*response.location, current);
      if (!next) {
        outcome.http_status = response.status;
        outcome.error = FetchError::bad_redirect;
        return outcome;
      }
      if (hop >= limits.max_redirects) {
        outcome.http_status = response.status;
        outcome.error = FetchError::too_many_redirects;
        return outcome;
      }
      current = std::move(*next);
      continue;
    }
    outcome.http_status = response.status;
    outcome.content_type = std::move(response.content_type);
    outcome.body = std::move(response.body);
    outcome.truncated = response.truncated;
    return outcome;
  }
}

FetchOutcome fetch(const urlkit::CanonicalUrl& url, const FetchLimits& limits) {
  FetcherOptions options;
  options.limits = limits;
  options.honor_robots = false;
  return Fetcher(std::move(options)).fetch(url);
}

}  // namespace yesql::fetcher
