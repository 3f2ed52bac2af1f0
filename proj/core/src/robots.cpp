#include "yesql/robots.hpp"

#include <algorithm>
#include <cctype>

namespace yesql::fetcher {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Product token of our User-Agent ("yesql-crawler/0.1 (...)" -> "yesql-crawler").
std::string product_token(std::string_view user_agent) {
  const auto end = user_agent.find_first_of("/ ");
  return lower(user_agent.substr(0, end));
}

bool wildcard_match(std::string_view pattern, std::string_view path) {
  const bool anchored = !pattern.empty() && pattern.back() == '$';
  if (anchored) pattern.remove_suffix(1);
  // Backtracking matcher; patterns are short so the worst case is fine.
  std::size_t p = 0, s = 0, star_p = std::string_view::npos, star_s = 0;
  while (s < path.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star_p = p++;
      star_s = s;
    } else if (p < pattern.size() && pattern[p] == path[s]) {
      ++p;
      ++s;
    } else if (p == pattern.size() && !anchored) {
      return true;
    } else if (star_p != std::string_view::npos) {
      p = star_p + 1;
      s = ++star_s;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

}  // namespace

RobotsRules RobotsRules::disallow_all() {
  RobotsRules r;
  r.rules_.push_back({"/", false});
  return r;
}

RobotsRules RobotsRules::parse(std::string_view text, std::string_view user_agent) {
  const std::string agent = product_token(user_agent);
  struct Group {
    std::vector<std::string> agents;
    std::vector<Rule> rules;
  };
  std::vector<Group> groups;
  bool in_agent_list = false;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string key = lower(trim(line.substr(0, colon)));
    const std::string_view value = trim(line.substr(colon + 1));
    if (key == "user-agent") {
      if (!in_agent_list) groups.emplace_back();
      groups.back().agents.push_back(lower(value));
      in_agent_list = true;
    } else if (key == "allow" || key == "disallow") {
      in_agent_list = false;
      if (groups.empty()) continue;
      if (value.empty()) continue;  // "Disallow:" with no path allows everything
      groups.back().rules.push_back({std::string(value), key == "allow"});
    } else {
      in_agent_list = false;
    }
  }

  RobotsRules result;
  bool matched_specific = false;
  for (const auto& g : groups) {
    for (const auto& a : g.agents) {
      if (a != "*" && !agent.empty() && a == agent) {
        if (!matched_specific) result.rules_.clear();
        matched_specific = true;
        result.rules_.insert(result.rules_.end(), g.rules.begin(), g.rules.end());
      }
    }
  }
  if (!matched_specific) {
    for (const auto& g : groups) {
      if (std::find(g.agents.begin(), g.agents.end(), "*") != g.agents.end()) {
        result.rules_.insert(result.rules_.end(), g.rules.begin(), g.rules.end());
      }
    }
  }
  return result;
}

bool RobotsRules::allowed(std::string_view path) const {
  if (path == "/robots.txt") return true;
  std::size_t best_len = 0;
  bool best_allow = true;
  bool any = false;
  for (const auto& rule : rules_) {
    if (!wildcard_match(rule.pattern, path)) continue;
    const auto len = rule.pattern.size();
    if (!any || len > best_len || (len == best_len && rule.allow)) {
      best_len = len;
      best_allow = rule.allow;
      any = true;
    }
  }
  return !any || best_allow;
}

}  // namespace yesql::fetcher
