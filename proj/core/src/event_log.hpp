#pragma once

#include <mutex>
#include <ostream>
#include <string_view>

#include <json.hpp>

namespace yesql {

/// Writes one JSON object per line. A null stream makes every call a no-op,
/// so callers never need to check whether logging is on.
class EventLog {
 public:
  explicit EventLog(std::ostream* out, std::string instance_id = {})
      : out_(out), instance_id_(std::move(instance_id)) {}

  bool enabled() const noexcept { return out_ != nullptr; }

  void emit(std::string_view event, nlohmann::json fields = nlohmann::json::object());

 private:
  std::ostream* out_;
  std::string instance_id_;
  std::mutex mutex_;
};

/// UTC timestamp with millisecond precision, e.g. 2012-04-22T18:03:00.123Z.
std::string iso_timestamp();

}  // namespace yesql
