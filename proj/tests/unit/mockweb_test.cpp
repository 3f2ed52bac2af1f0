#include <gtest/gtest.h>
#include <httplib.h>

#include <deque>
#include <future>
#include <map>
#include <set>

#include "test_support.hpp"
#include "yesql/error.hpp"
#include "yesql/mockweb.hpp"

using namespace yesql;
using mockweb::MockWebSpec;
using mockweb::PageKind;
using test::TempDir;

namespace {

MockWebSpec rich_spec(std::uint64_t seed) {
  MockWebSpec spec;
  spec.seed = seed;
  spec.page_count = 400;
  spec.domain_count = 12;
  spec.seed_pages = 3;
  spec.orphan_fraction = 0.02;
  spec.keyword_regions.push_back({"keyword1", 0.10, "fr"});
  spec.keyword_regions.push_back({"keyword2", 0.05, "com"});
  spec.error_pages.push_back({404, 0.03});
  spec.error_pages.push_back({500, 0.01});
  spec.redirect_chains.push_back({6, 1});
  spec.redirect_chains.push_back({4, 3});
  spec.tweets = 200;
  return spec;
}

// Independent BFS written against the adjacency of the edge list.
std::map<std::string, int> oracle_depths(const mockweb::Bundle& web) {
  std::multimap<std::string, std::string> adj;
  for (const auto& e : web.edges) adj.emplace(e.source, e.target);
  std::map<std::string, int> depth;
  std::vector<std::string> frontier = web.seeds;
  for (const auto& s : frontier) depth[s] = 0;
  for (int d = 1; !frontier.empty(); ++d) {
    std::vector<std::string> next;
    for (const auto& u : frontier) {
      auto [lo, hi] = adj.equal_range(u);
      for (auto it = lo; it != hi; ++it) {
        if (!depth.count(it->second)) {
          depth[it->second] = d;
          next.push_back(it->second);
        }
      }
    }
    frontier = std::move(next);
  }
  return depth;
}

std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    out[entry.path().filename().string()] = test::read_file(entry.path());
  }
  return out;
}

httplib::Result get(const mockweb::MockServer& server, const std::string& host, const std::string& target) {
  httplib::Client client(server.bind_host(), server.port());
  client.set_follow_location(false);
  return client.Get(target, {{"Host", host}});
}

}  // namespace

TEST(MockWeb, SameSpecSameBundle) {
  const auto spec = rich_spec(42);
  const auto a = mockweb::generate(spec);
  const auto b = mockweb::generate(spec);
  ASSERT_EQ(a.pages.size(), b.pages.size());
  for (std::size_t i = 0; i < a.pages.size(); ++i) {
    EXPECT_EQ(a.pages[i].url, b.pages[i].url);
    EXPECT_EQ(a.pages[i].body, b.pages[i].body);
  }
  TempDir da, db;
  a.write(da.path());
  b.write(db.path());
  const auto files = read_dir(da.path());
  EXPECT_EQ(files, read_dir(db.path()));
  for (const char* name : {"manifest.txt", "spec.txt", "seeds.txt", "edges.tsv", "depths.tsv", "pages.tsv",
                           "keyword_pages.tsv", "texts.tsv", "tweets.tsv", "shortener.tsv"}) {
    EXPECT_TRUE(files.count(name)) << name;
  }
  EXPECT_NE(mockweb::generate(rich_spec(43)).pages[0].body, a.pages[0].body);
}

TEST(MockWeb, DepthsMatchAnIndependentBfs) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto web = mockweb::generate(rich_spec(seed));
    EXPECT_EQ(web.depths, oracle_depths(web)) << seed;
  }
}

TEST(MockWeb, StructureFollowsTheSpec) {
  const auto spec = rich_spec(9);
  const auto web = mockweb::generate(spec);
  std::map<PageKind, int> kinds;
  std::set<std::string> urls;
  for (const auto& p : web.pages) {
    ++kinds[p.kind];
    EXPECT_TRUE(urls.insert(p.url).second) << p.url;
    EXPECT_EQ(web.find(p.host, p.path), &p);
  }
  EXPECT_EQ(kinds[PageKind::keyword], 60);
  EXPECT_EQ(kinds[PageKind::error], 16);
  EXPECT_EQ(kinds[PageKind::redirect], 6 * 1 + 4 * 3);
  EXPECT_EQ(kinds[PageKind::normal] + kinds[PageKind::keyword] + kinds[PageKind::error], spec.page_count);
  EXPECT_EQ(web.seeds.size(), 3u);

  for (const auto& [url, kw] : web.keyword_pages) {
    const auto* p = web.find_url(url);
    ASSERT_NE(p, nullptr);
    const auto host = p->host;
    EXPECT_EQ(host.substr(host.rfind('.') + 1), kw == "keyword1" ? "fr" : "com") << url;
    EXPECT_EQ(p->path.rfind("/" + kw + "/", 0), 0u) << url;
  }

  // Orphans are unreachable, everything else reachable.
  for (const auto& p : web.pages) {
    if (p.kind == PageKind::redirect) continue;
    EXPECT_EQ(web.depths.count(p.url) == 0, p.orphan) << p.url;
  }
  EXPECT_EQ(web.reachable_ok().size() + web.reachable_failed().size(), web.depths.size());
  for (const auto& url : web.reachable_failed()) EXPECT_EQ(web.find_url(url)->kind, PageKind::error);
}

TEST(MockWeb, RedirectChainsEndAtRealPages) {
  const auto web = mockweb::generate(rich_spec(11));
  int chains = 0;
  for (const auto& e : web.edges) {
    if (e.kind != "redirect") continue;
    ++chains;
    const auto* p = web.find_url(e.source);
    ASSERT_NE(p, nullptr);
    int hops = 0;
    while (p->kind == PageKind::redirect) {
      ASSERT_TRUE(p->location);
      EXPECT_EQ(p->status, p->location->rfind("http://", 0) == 0 ? 301 : 302);
      p = p->location->front() == '/' ? web.find(p->host, *p->location) : web.find_url(*p->location);
      ASSERT_NE(p, nullptr);
      ++hops;
    }
    EXPECT_LE(hops, mockweb::kMaxRedirectChainLength);
    EXPECT_EQ(p->url, e.target);
    EXPECT_NE(p->kind, PageKind::error);
  }
  EXPECT_EQ(chains, 10);
}

TEST(MockWeb, TweetsReferenceShortUrls) {
  const auto web = mockweb::generate(rich_spec(3));
  ASSERT_EQ(web.tweets.size(), 200u);
  std::set<std::string> mapped;
  for (const auto& [s, e] : web.shortener) {
    EXPECT_EQ(s.rfind("http://sho.rt/", 0), 0u);
    EXPECT_TRUE(mapped.insert(s).second);
    EXPECT_TRUE(web.find_url(e) != nullptr || e.find(".example/") != std::string::npos) << e;
  }
  int with_url = 0;
  for (const auto& t : web.tweets) with_url += t.text.find("http://sho.rt/") != std::string::npos;
  EXPECT_GT(with_url, 20);
  EXPECT_LT(with_url, 120);
}

TEST(MockWebSpec, ParseAndRoundTrip) {
  const auto spec = MockWebSpec::parse(
      "# test web\n"
      "seed = 7\n"
      "page_count = 1000\n"
      "keyword_region = keyword1 0.10 fr   # the interesting part\n"
      "error_pages = 404 0.02\n"
      "redirect_chains = 5 2\n"
      "latency_ms = 3\n");
  EXPECT_EQ(spec.seed, 7u);
  EXPECT_EQ(spec.page_count, 1000);
  ASSERT_EQ(spec.keyword_regions.size(), 1u);
  EXPECT_DOUBLE_EQ(spec.keyword_regions[0].fraction, 0.10);
  EXPECT_EQ(spec.latency, std::chrono::milliseconds(3));
  EXPECT_EQ(MockWebSpec::parse(spec.to_text()).to_text(), spec.to_text());
  const auto rich = rich_spec(5);
  EXPECT_EQ(MockWebSpec::parse(rich.to_text()).to_text(), rich.to_text());
}

TEST(MockWebSpec, RejectsInvalidSpecs) {
  for (const char* text : {
           "page_count = 0\n",
           "page_count = ten\n",
           "seed\n",
           "colour = blue\n",
           "keyword_region = keyword1 1.5 fr\n",
           "keyword_region = Keyword1 0.1 fr\n",
           "keyword_region = keyword1 0.1 de\n",
           "keyword_region = keyword1 0.1\n",
           "keyword_region = k 0.1 fr\nkeyword_region = k 0.1 com\n",
           "error_pages = 200 0.1\n",
           "redirect_chains = 1 9\n",
           "page_count = 10\nkeyword_region = keyword1 0.6 fr\nerror_pages = 404 0.5\n",
           "seed_pages = 20\npage_count = 10\n",
       }) {
    try {
      MockWebSpec::parse(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_spec) << text;
    }
  }
}

TEST(MockServer, ServesTheBundle) {
  auto web = test::start_mock_web(rich_spec(21));
  const auto& bundle = web.web();
  int checked = 0;
  for (const auto& p : bundle.pages) {
    if (checked++ % 7 != 0) continue;
    const auto res = get(*web.server, p.host, p.path);
    ASSERT_TRUE(res) << p.url;
    EXPECT_EQ(res->status, p.status) << p.url;
    if (p.location) {
      EXPECT_EQ(res->get_header_value("Location"), *p.location);
    } else {
      EXPECT_EQ(res->body, p.body) << p.url;
      EXPECT_EQ(res->get_header_value("Content-Type"), p.content_type);
    }
  }
  const auto missing = get(*web.server, bundle.domains[0], "/nowhere");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  const auto wrong_host = get(*web.server, "elsewhere.com", bundle.pages[0].path);
  ASSERT_TRUE(wrong_host);
  EXPECT_EQ(wrong_host->status, 404);

  const auto log = web.server->access_log();
  ASSERT_FALSE(log.empty());
  EXPECT_EQ(log.back().host, "elsewhere.com");
  EXPECT_EQ(log.back().status, 404);
  EXPECT_EQ(web.server->request_count(), log.size());
  EXPECT_EQ(web.server->in_flight(), 0);
}

TEST(MockServer, GaugeSeesConcurrentRequests) {
  auto spec = test::plain_spec(4, 30, 3);
  spec.latency = std::chrono::milliseconds(400);
  auto web = test::start_mock_web(spec);
  const auto& page = web.web().pages[0];
  std::vector<std::future<int>> results;
  for (int i = 0; i < 20; ++i) {
    results.push_back(std::async(std::launch::async, [&] {
      const auto res = get(*web.server, page.host, page.path);
      return res ? res->status : -1;
    }));
  }
  for (auto& r : results) EXPECT_EQ(r.get(), 200);
  EXPECT_EQ(web.server->max_in_flight(), 20);
  EXPECT_EQ(web.server->in_flight(), 0);
  web.server->reset_gauge();
  EXPECT_EQ(web.server->max_in_flight(), 0);
}

TEST(MockServer, BusyPortIsReported) {
  auto web = test::start_mock_web(test::plain_spec(1, 5, 1));
  auto bundle = std::make_shared<const mockweb::Bundle>(mockweb::generate(test::plain_spec(1, 5, 1)));
  try {
    mockweb::MockServer second(bundle, "127.0.0.1", web.server->port());
    FAIL() << "second server bound the same port";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::address_in_use);
  }
}
