#include <gtest/gtest.h>

#include "yesql/robots.hpp"

using yesql::fetcher::RobotsRules;

TEST(Robots, LongestMatchWins) {
  const auto r = RobotsRules::parse("User-agent: *\nDisallow: /a\nAllow: /a/b\nDisallow: /a/b/c\n", "bot/1.0");
  EXPECT_TRUE(r.allowed("/"));
  EXPECT_FALSE(r.allowed("/a"));
  EXPECT_FALSE(r.allowed("/a/x"));
  EXPECT_TRUE(r.allowed("/a/b"));
  EXPECT_FALSE(r.allowed("/a/b/c/d"));
}

TEST(Robots, AllowWinsTies) {
  const auto r = RobotsRules::parse("User-agent: *\nDisallow: /page\nAllow: /page\n", "bot");
  EXPECT_TRUE(r.allowed("/page"));
}

TEST(Robots, Wildcards) {
  const auto r = RobotsRules::parse("User-agent: *\nDisallow: /*.pdf$\nDisallow: /tmp*/x\n", "bot");
  EXPECT_FALSE(r.allowed("/docs/file.pdf"));
  EXPECT_TRUE(r.allowed("/docs/file.pdf?download=1"));
  EXPECT_FALSE(r.allowed("/tmp123/x"));
  EXPECT_TRUE(r.allowed("/tmp123/y"));
}

TEST(Robots, SpecificAgentGroupReplacesStar) {
  const std::string txt =
      "User-agent: *\nDisallow: /\n\n"
      "User-agent: YeSQL-Crawler\nUser-agent: other\nDisallow: /private\n";
  const auto ours = RobotsRules::parse(txt, "yesql-crawler/0.1 (+http://x)");
  EXPECT_TRUE(ours.allowed("/public"));
  EXPECT_FALSE(ours.allowed("/private/x"));
  const auto theirs = RobotsRules::parse(txt, "somebot/2.0");
  EXPECT_FALSE(theirs.allowed("/public"));
}

TEST(Robots, EmptyDisallowAndCommentsAndJunk) {
  const auto r = RobotsRules::parse("# hi\nUser-agent: * # all\nDisallow:\nnonsense line\nSitemap: /s.xml\n", "bot");
  EXPECT_TRUE(r.allowed("/anything"));
  EXPECT_TRUE(RobotsRules::parse("", "bot").allowed("/x"));
  EXPECT_TRUE(RobotsRules::parse("Disallow: /\n", "bot").allowed("/x"));  // rule outside any group
}

TEST(Robots, DisallowAllStillServesRobotsFile) {
  const auto r = RobotsRules::disallow_all();
  EXPECT_FALSE(r.allowed("/"));
  EXPECT_FALSE(r.allowed("/page?q=1"));
  EXPECT_TRUE(r.allowed("/robots.txt"));
  EXPECT_TRUE(RobotsRules::allow_all().allowed("/x"));
}

TEST(Robots, CrlfLines) {
  const auto r = RobotsRules::parse("User-agent: *\r\nDisallow: /x\r\n", "bot");
  EXPECT_FALSE(r.allowed("/x/1"));
  EXPECT_TRUE(r.allowed("/y"));
}
