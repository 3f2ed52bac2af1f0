#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace yesql {

enum class Errc {
  malformed_url,
  unsupported_scheme,
  store_unavailable,
  insufficient_privilege,
  schema_too_new,
  schema_missing,
  expired_claim,
  unknown_token,
  invalid_argument,
  invalid_spec,
  invalid_strategy,
  empty_targets,
  address_in_use,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

// Every failure the library reports carries one of the codes above so that
// callers (the CLI in particular) can map them onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace yesql
