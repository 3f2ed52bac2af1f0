#include "yesql/scoring.hpp"

#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "yesql/error.hpp"

namespace yesql::scoring {
namespace {

bool has_regex_metachar(std::string_view pattern) {
  return pattern.find_first_of(".^$|()[]{}*+?\\") != std::string_view::npos;
}

[[noreturn]] void invalid(std::size_t line, const std::string& why) {
  throw Error(Errc::invalid_strategy,
              line == 0 ? why : "strategy line " + std::to_string(line) + ": " + why);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view next_token(std::string_view& s) {
  s = trim(s);
  const auto end = s.find_first_of(" \t");
  const auto token = s.substr(0, end);
  s = end == std::string_view::npos ? std::string_view{} : s.substr(end);
  return token;
}

Score parse_weight(std::string_view token, std::size_t line) {
  Score value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
    invalid(line, "expected an integer weight, got '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

bool KeywordStrategy::Matcher::matches(std::string_view normalized) const {
  if (regex) return std::regex_search(normalized.begin(), normalized.end(), *regex);
  return normalized.find(literal) != std::string_view::npos;
}

KeywordStrategy::KeywordStrategy(std::vector<KeywordRule> rules,
                                 std::map<std::string, Score> tld_bonuses)
    : rules_(std::move(rules)), tld_bonuses_(std::move(tld_bonuses)) {
  for (const auto& [tld, bonus] : tld_bonuses_) {
    if (bonus < 0) invalid(0, "negative bonus for tld '" + tld + "'");
    if (tld.empty() || tld.find('.') != std::string::npos) invalid(0, "bad tld '" + tld + "'");
  }
  matchers_.reserve(rules_.size());
  for (const auto& rule : rules_) {
    if (rule.url_weight < 0 || rule.link_weight < 0) {
      invalid(0, "negative weight for pattern '" + rule.pattern + "'");
    }
    if (rule.pattern.empty()) invalid(0, "empty pattern");
    Matcher m;
    if (has_regex_metachar(rule.pattern)) {
      try {
        m.regex = std::make_shared<const std::regex>(rule.pattern, std::regex::ECMAScript |
                                                                       std::regex::optimize);
      } catch (const std::regex_error& e) {
        invalid(0, "bad pattern '" + rule.pattern + "': " + e.what());
      }
    } else {
      m.literal = urlkit::normalize_text(rule.pattern);
    }
    matchers_.push_back(std::move(m));
  }
}

KeywordStrategy KeywordStrategy::parse(std::string_view text) {
  std::vector<KeywordRule> rules;
  std::map<std::string, Score> tlds;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos && trim(line.substr(0, hash)).empty()) {
      continue;
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto directive = next_token(line);
    if (directive == "tld") {
      const auto label = next_token(line);
      const auto bonus = next_token(line);
      if (label.empty() || bonus.empty() || !trim(line).empty()) {
        invalid(line_no, "expected: tld <label> <bonus>");
      }
      std::string key = urlkit::normalize_text(label);
      if (tlds.contains(key)) invalid(line_no, "duplicate tld '" + key + "'");
      tlds.emplace(std::move(key), parse_weight(bonus, line_no));
    } else if (directive == "rule") {
      const auto url_w = next_token(line);
      const auto link_w = next_token(line);
      const auto pattern = trim(line);
      if (url_w.empty() || link_w.empty() || pattern.empty()) {
        invalid(line_no, "expected: rule <url_weight> <link_weight> <pattern>");
      }
      rules.push_back({std::string(pattern), parse_weight(url_w, line_no), parse_weight(link_w, line_no)});
    } else {
      invalid(line_no, "unknown directive '" + std::string(directive) + "'");
    }
  }
  return KeywordStrategy(std::move(rules), std::move(tlds));
}

KeywordStrategy KeywordStrategy::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read strategy file " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Score KeywordStrategy::score_url(const urlkit::CanonicalUrl& url) const {
  Score score = 0;
  if (!tld_bonuses_.empty()) {
    if (const auto it = tld_bonuses_.find(urlkit::url_top(url)); it != tld_bonuses_.end()) {
      score += it->second;
    }
  }
  const std::string normalized = urlkit::normalize_text(url.str());
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].url_weight != 0 && matchers_[i].matches(normalized)) score += rules_[i].url_weight;
  }
  return score;
}

Score KeywordStrategy::score_link(std::string_view context) const {
  if (context.empty() || rules_.empty()) return 0;
  const std::string normalized = urlkit::normalize_text(context);
  Score score = 0;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].link_weight != 0 && matchers_[i].matches(normalized)) score += rules_[i].link_weight;
  }
  return score;
}

KeywordStrategy KeywordStrategy::scaled(Score factor) const {
  if (factor <= 0) throw Error(Errc::invalid_argument, "scale factor must be positive");
  auto rules = rules_;
  for (auto& r : rules) {
    r.url_weight *= factor;
    r.link_weight *= factor;
  }
  auto tlds = tld_bonuses_;
  for (auto& [_, bonus] : tlds) bonus *= factor;
  return KeywordStrategy(std::move(rules), std::move(tlds));
}

std::string KeywordStrategy::to_text() const {
  std::ostringstream out;
  for (const auto& [tld, bonus] : tld_bonuses_) out << "tld " << tld << ' ' << bonus << '\n';
  for (const auto& r : rules_) out << "rule " << r.url_weight << ' ' << r.link_weight << ' ' << r.pattern << '\n';
  return out.str();
}

KeywordStrategy reference_strategy() {
  return KeywordStrategy({{"keyword1", 2, 1}, {"keyword2", 1, 1}}, {{"fr", 1}});
}

Score score_url(const urlkit::CanonicalUrl& url, const KeywordStrategy& strategy) {
  return strategy.score_url(url);
}

Score score_link(std::string_view context, const KeywordStrategy& strategy) {
  return strategy.score_link(context);
}

Priority combine_priority(Score url_score, std::span<const Score> link_scores) {
  return Priority{std::accumulate(link_scores.begin(), link_scores.end(), url_score)};
}

}  // namespace yesql::scoring
