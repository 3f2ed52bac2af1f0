#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace yesql::fetcher {

/// Parsed robots.txt restricted to the group that applies to one user agent.
/// Matching follows RFC 9309: longest matching rule wins, Allow wins ties,
/// '*' and '$' wildcards supported.
class RobotsRules {
 public:
  static RobotsRules allow_all() { return RobotsRules{}; }
  static RobotsRules disallow_all();
  static RobotsRules parse(std::string_view robots_txt, std::string_view user_agent);

  bool allowed(std::string_view path_and_query) const;

 private:
  struct Rule {
    std::string pattern;
    bool allow = false;
  };
  std::vector<Rule> rules_;
};

}  // namespace yesql::fetcher
