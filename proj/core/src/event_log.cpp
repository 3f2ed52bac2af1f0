#include "event_log.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

namespace yesql {

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - secs).count();
  const std::time_t t = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

void EventLog::emit(std::string_view event, nlohmann::json fields) {
  if (out_ == nullptr) return;
  nlohmann::json line = nlohmann::json::object();
  line["ts"] = iso_timestamp();
  line["event"] = event;
  if (!instance_id_.empty()) line["instance"] = instance_id_;
  for (auto& [k, v] : fields.items()) line[k] = std::move(v);
  const std::string text = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  std::lock_guard lock(mutex_);
  *out_ << text << '\n';
  out_->flush();
}

}  // namespace yesql
