#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "yesql/urlkit.hpp"

namespace yesql::scoring {

using Score = std::int64_t;

struct KeywordRule {
  std::string pattern;  // regular expression over normalize_text() output
  Score url_weight = 0;
  Score link_weight = 0;

  friend bool operator==(const KeywordRule&, const KeywordRule&) = default;
};

/// Declarative focus strategy. Each rule contributes its weight at most once
/// per scored text (presence test, not an occurrence count); TLD bonuses are
/// added to URL scores only. Immutable once built, so it can be shared freely
/// between worker threads.
///
/// Text format, one directive per line, '#' starts a comment:
///
///     tld  <label> <bonus>
///     rule <url_weight> <link_weight> <pattern ...rest of line>
class KeywordStrategy {
 public:
  KeywordStrategy() = default;
  KeywordStrategy(std::vector<KeywordRule> rules, std::map<std::string, Score> tld_bonuses);

  static KeywordStrategy parse(std::string_view text);
  static KeywordStrategy load(const std::filesystem::path& file);

  const std::vector<KeywordRule>& rules() const noexcept { return rules_; }
  const std::map<std::string, Score>& tld_bonuses() const noexcept { return tld_bonuses_; }

  Score score_url(const urlkit::CanonicalUrl& url) const;
  Score score_link(std::string_view context) const;

  /// Same rules with every weight multiplied by `factor` (> 0).
  KeywordStrategy scaled(Score factor) const;

  /// Serializes back into the text format accepted by parse().
  std::string to_text() const;

 private:
  struct Matcher {
    std::string literal;                     // normalized; used when the pattern has no metacharacters
    std::shared_ptr<const std::regex> regex;  // otherwise
    bool matches(std::string_view normalized) const;
  };

  std::vector<KeywordRule> rules_;
  std::map<std::string, Score> tld_bonuses_;
  std::vector<Matcher> matchers_;
};

/// Focus strategy from the reference deployment: +1 for .fr hosts, keyword1
/// worth 2 in URLs and 1 in anchor contexts, keyword2 worth 1 in both.
KeywordStrategy reference_strategy();

Score score_url(const urlkit::CanonicalUrl& url, const KeywordStrategy& strategy);
Score score_link(std::string_view context, const KeywordStrategy& strategy);

struct Priority {
  Score value = 0;
  friend auto operator<=>(const Priority&, const Priority&) = default;
};

Priority combine_priority(Score url_score, std::span<const Score> link_scores);

}  // namespace yesql::scoring
