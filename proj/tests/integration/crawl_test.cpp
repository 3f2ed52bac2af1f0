#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "yesql/analytics.hpp"

#include "scenarios.hpp"
#include "test_support.hpp"

using namespace yesql;
using namespace yesql::test;

namespace {

void expect_disjoint_and_complete(const MultiInstanceRun& run, const mockweb::Bundle& web) {
  EXPECT_FALSE(run.aborted);
  std::multiset<std::string> all;
  for (const auto& log : run.fetched_by_instance) all.insert(log.begin(), log.end());
  for (const auto& url : all) EXPECT_EQ(all.count(url), 1u) << url;
  std::vector<std::string> merged(all.begin(), all.end());
  std::vector<std::string> expected = web.reachable_ok();
  const auto failed = web.reachable_failed();
  expected.insert(expected.end(), failed.begin(), failed.end());
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(merged, expected);
  EXPECT_EQ(run.fetched_total, static_cast<std::int64_t>(web.reachable_ok().size()));
  EXPECT_EQ(run.failed_total, static_cast<std::int64_t>(failed.size()));
  EXPECT_EQ(run.store_fetched, web.reachable_ok());
  EXPECT_TRUE(run.store_claimed.empty());
}

}  // namespace

TEST(Crawl, FourProcessesShareOneFrontier) {
  auto spec = plain_spec(41, 400, 8);
  spec.error_pages.push_back({404, 0.02});
  spec.redirect_chains.push_back({5, 2});
  auto web = start_mock_web(spec);
  TempDir dir;
  const auto run = run_processes(web, dir / "f.db", 4);
  expect_disjoint_and_complete(run, web.web());
  int busy = 0;
  for (const auto& log : run.fetched_by_instance) busy += !log.empty();
  EXPECT_GE(busy, 2);
}

TEST(Crawl, FourThreadsShareOneFrontier) {
  auto spec = plain_spec(42, 400, 8);
  spec.keyword_regions.push_back({"keyword1", 0.1, "fr"});
  auto web = start_mock_web(spec);
  TempDir dir;
  expect_disjoint_and_complete(run_instances(web, dir / "f.db", scoring::reference_strategy(), 4), web.web());
}

TEST(Crawl, RecoversFromAKilledInstance) {
  auto spec = plain_spec(43, 200, 6);
  spec.latency = std::chrono::milliseconds(15);
  TempDir dir;
  const auto r = crash_and_recover(spec, dir.path(), 40);
  EXPECT_EQ(r.kill_signal_status, -9);
  EXPECT_GT(r.fetched_before_kill, 0);
  EXPECT_LT(r.fetched_before_kill, 200);
  EXPECT_GT(r.claimed_at_kill, 0);
  EXPECT_EQ(r.expired, r.claimed_at_kill);
  EXPECT_EQ(r.rerun_exit, 0);
  EXPECT_EQ(r.reference_fetched.size(), 200u);
  EXPECT_TRUE(r.identical());
}

TEST(Crawl, DepthsAgreeWithTheManifest) {
  auto spec = plain_spec(44, 300, 6);
  spec.out_degree_min = 1;
  spec.out_degree_max = 4;
  auto web = start_mock_web(spec);
  TempDir dir;
  crawl_once(web, dir / "f.db", scoring::reference_strategy(), 3);
  auto store = frontier::Frontier::open(store_at(dir / "f.db"));
  const auto crawled = analytics::crawled_depths(store);
  EXPECT_EQ(crawled, web.web().depths);

  const auto urls = store.urls();
  const auto links = store.link_urls();
  const auto audit = analytics::audit_depths(urls, links, crawled);
  EXPECT_TRUE(audit.all_explained());
  EXPECT_EQ(audit.compared, web.web().depths.size());
}
