#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

namespace yesql::fetcher {

struct PolitenessPolicy {
  std::chrono::milliseconds min_interval{1000};  // between fetch starts, per domain
  int max_concurrent = 2;                        // in-flight fetches, per domain
};

/// Per-domain admission control shared by the fetch workers of one instance.
/// Instances do not coordinate politeness with each other.
class PolitenessGate {
 public:
  using SteadyClock = std::chrono::steady_clock;

  /// Held for the duration of one fetch; releases the domain slot on
  /// destruction.
  class Permit {
   public:
    Permit() = default;
    Permit(Permit&& other) noexcept;
    Permit& operator=(Permit&& other) noexcept;
    ~Permit();
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

    explicit operator bool() const noexcept { return gate_ != nullptr; }
    void release();

   private:
    friend class PolitenessGate;
    Permit(PolitenessGate* gate, std::string domain) : gate_(gate), domain_(std::move(domain)) {}

    PolitenessGate* gate_ = nullptr;
    std::string domain_;
  };

  explicit PolitenessGate(PolitenessPolicy policy);

  /// Blocks until the domain admits another fetch.
  Permit acquire(const std::string& domain);

  /// Non-blocking: a permit, or the earliest instant worth retrying at
  /// (time_point::max() when only a release can unblock the domain).
  std::variant<Permit, SteadyClock::time_point> try_acquire(const std::string& domain);

  const PolitenessPolicy& policy() const noexcept { return policy_; }

  /// Waits until some permit is released or `deadline` passes. A release
  /// that happened before the call is not seen; callers polling several
  /// domains should pass a finite deadline.
  void wait_for_change(SteadyClock::time_point deadline);

 private:
  struct DomainState {
    int in_flight = 0;
    std::optional<SteadyClock::time_point> last_start;
  };

  std::variant<Permit, SteadyClock::time_point> admit(const std::string& domain, SteadyClock::time_point now);
  void release(const std::string& domain);

  PolitenessPolicy policy_;
  std::mutex mutex_;
  std::condition_variable released_;
  std::map<std::string, DomainState> domains_;
  std::uint64_t generation_ = 0;
};

}  // namespace yesql::fetcher
