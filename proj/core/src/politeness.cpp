#include "yesql/politeness.hpp"

#include <utility>

namespace yesql::fetcher {

PolitenessGate::Permit::Permit(Permit&& other) noexcept
    : gate_(std::exchange(other.gate_, nullptr)), domain_(std::move(other.domain_)) {}

PolitenessGate::Permit& PolitenessGate::Permit::operator=(Permit&& other) noexcept {
  if (this != &other) {
    release();
    gate_ = std::exchange(other.gate_, nullptr);
    domain_ = std::move(other.domain_);
  }
  return *this;
}

PolitenessGate::Permit::~Permit() { release(); }

void PolitenessGate::Permit::release() {
  if (gate_ != nullptr) std::exchange(gate_, nullptr)->release(domain_);
}

PolitenessGate::PolitenessGate(PolitenessPolicy policy) : policy_(policy) {
  if (policy_.max_concurrent < 1) policy_.max_concurrent = 1;
  if (policy_.min_interval.count() < 0) policy_.min_interval = std::chrono::milliseconds{0};
}

std::variant<PolitenessGate::Permit, PolitenessGate::SteadyClock::time_point>
PolitenessGate::try_acquire(const std::string& domain) {
  std::lock_guard lock(mutex_);
  return admit(domain, SteadyClock::now());
}

std::variant<PolitenessGate::Permit, PolitenessGate::SteadyClock::time_point>
PolitenessGate::admit(const std::string& domain, SteadyClock::time_point now) {
  auto& state = domains_[domain];
  if (state.in_flight >= policy_.max_concurrent) return SteadyClock::time_point::max();
  if (state.last_start && *state.last_start + policy_.min_interval > now) {
    return *state.last_start + policy_.min_interval;
  }
  ++state.in_flight;
  state.last_start = now;
  return Permit(this, domain);
}

PolitenessGate::Permit PolitenessGate::acquire(const std::string& domain) {
  std::unique_lock lock(mutex_);
  for (;;) {
    auto result = admit(domain, SteadyClock::now());
    if (auto* permit = std::get_if<Permit>(&result)) return std::move(*permit);
    const auto retry_at = std::get<SteadyClock::time_point>(result);
    if (retry_at == SteadyClock::time_point::max()) {
      released_.wait(lock);
    } else {
      released_.wait_until(lock, retry_at);
    }
  }
}

void PolitenessGate::wait_for_change(SteadyClock::time_point deadline) {
  std::unique_lock lock(mutex_);
  const auto seen = generation_;
  if (deadline == SteadyClock::time_point::max()) {
    released_.wait(lock, [&] { return generation_ != seen; });
  } else {
    released_.wait_until(lock, deadline, [&] { return generation_ != seen; });
  }
}

void PolitenessGate::release(const std::string& domain) {
  {
    std::lock_guard lock(mutex_);
    auto it = domains_.find(domain);
    if (it != domains_.end() && it->second.in_flight > 0) --it->second.in_flight;
    ++generation_;
  }
  released_.notify_all();
}

}  // namespace yesql::fetcher
