#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include <json.hpp>

#include <csignal>
#include <fstream>
#include <thread>

#include "process.hpp"
#include "test_support.hpp"

using namespace yesql;
using namespace yesql::test;
using ::testing::HasSubstr;

namespace {

class Cli : public ::testing::Test {
 protected:
  ProcessResult run(std::vector<std::string> args, bool with_db = true) {
    std::vector<std::string> argv{crawler_binary()};
    if (with_db) {
      argv.push_back("--db");
      argv.push_back(db_.string());
    }
    argv.insert(argv.end(), args.begin(), args.end());
    return run_process(argv);
  }

  std::string fixture(const std::string& name) { return fixture_path(name).string(); }

  TempDir dir_;
  std::filesystem::path db_ = dir_ / "crawl.db";
};

std::vector<std::string> crawl_args(const mockweb::MockServer& server) {
  return {"crawl",         "--no-robots", "--min-interval", "0",      "--idle-shutdown",
          "300ms",         "--quiet",     "--batch-size",   "10",     "--parallel",
          "5",             "--per-domain", "4",             "--connect-to",
          server.bind_host() + ":" + std::to_string(server.port())};
}

std::string seeds_text(const mockweb::Bundle& web) {
  std::string out;
  for (const auto& s : web.seeds) out += s + "\n";
  return out;
}

/// Waits for the "listening host:port" line of a mockweb child.
int wait_for_port(const std::filesystem::path& out_file) {
  for (int i = 0; i < 200; ++i) {
    std::ifstream in(out_file);
    for (std::string line; std::getline(in, line);) {
      if (line.rfind("listening ", 0) == 0) return std::stoi(line.substr(line.rfind(':') + 1));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  return -1;
}

}  // namespace

TEST_F(Cli, InitIsIdempotent) {
  auto r = run({"init"});
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "schema version 1\n");
  r = run({"init"});
  EXPECT_EQ(r.exit_code, 0) << r.err;
}

TEST_F(Cli, InitFailuresMapToExitCodes) {
  ASSERT_EQ(run({"init"}).exit_code, 0);
  // A read-only handle is the file-store analog of wrong credentials.
  auto r = run_process({crawler_binary(), "--db", "file:" + db_.string() + "?mode=ro", "init"});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_THAT(r.err, HasSubstr("read-only"));
  r = run_process({crawler_binary(), "--db", (dir_ / "no" / "such" / "dir.db").string(), "init"});
  EXPECT_EQ(r.exit_code, 3);
  r = run({"init"}, false);
  EXPECT_EQ(r.exit_code, 2);
}

TEST_F(Cli, DbFromEnvironment) {
  ::setenv("CRAWLER_DB", db_.c_str(), 1);
  const auto r = run({"init"}, false);
  ::unsetenv("CRAWLER_DB");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(db_));
}

TEST_F(Cli, SeedCountsAndWarnings) {
  ASSERT_EQ(run({"init"}).exit_code, 0);
  std::string seeds;
  for (int i = 0; i < 32; ++i) seeds += "http://journal" + std::to_string(i) + ".fr/politique\n";
  write_file(dir_ / "seeds.txt", seeds);
  auto r = run({"seed", (dir_ / "seeds.txt").string()});
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "inserted 32\nskipped 0\n");
  r = run({"seed", (dir_ / "seeds.txt").string()});
  EXPECT_EQ(r.out, "inserted 0\nskipped 32\n");

  write_file(dir_ / "mixed.txt", "# comment\nhttp://a.org/\nnot a url\n\nhttp://b.org/\n");
  r = run({"seed", (dir_ / "mixed.txt").string()});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "inserted 2\nskipped 0\n");
  EXPECT_THAT(r.err, HasSubstr("warning: skipped 'not a url'"));

  r = run({"seed", (dir_ / "missing.txt").string()});
  EXPECT_EQ(r.exit_code, 2);
}

TEST_F(Cli, SeedWithoutSchemaFails) {
  write_file(dir_ / "seeds.txt", "http://a.org/\n");
  const auto r = run({"seed", (dir_ / "seeds.txt").string()});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_THAT(r.err, HasSubstr("init"));
}

TEST_F(Cli, CrawlFetchesTheReachableSet) {
  auto web = start_mock_web(plain_spec(31, 120, 6));
  ASSERT_EQ(run({"init"}).exit_code, 0);
  write_file(dir_ / "seeds.txt", seeds_text(web.web()));
  ASSERT_EQ(run({"seed", (dir_ / "seeds.txt").string()}).exit_code, 0);

  auto args = crawl_args(*web.server);
  args.push_back("--list-fetched");
  const auto r = run(args);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::istringstream out(r.out);
  std::string summary_line;
  std::getline(out, summary_line);
  const auto summary = nlohmann::json::parse(summary_line);
  EXPECT_EQ(summary.at("fetched"), web.web().reachable_ok().size());
  EXPECT_EQ(summary.at("failed"), 0);
  EXPECT_EQ(summary.at("aborted"), false);
  std::vector<std::string> listed;
  for (std::string line; std::getline(out, line);) listed.push_back(line);
  std::sort(listed.begin(), listed.end());
  EXPECT_EQ(listed, web.web().reachable_ok());

  const auto stats = run({"report", "stats"});
  EXPECT_EQ(stats.exit_code, 0);
  EXPECT_THAT(stats.out, HasSubstr("fetched    120\n"));

  const auto depths = run({"export", "depths"});
  std::map<std::string, int> exported;
  std::istringstream in(depths.out);
  for (std::string line; std::getline(in, line);) {
    exported[line.substr(0, line.find('\t'))] = std::stoi(line.substr(line.find('\t') + 1));
  }
  EXPECT_EQ(exported, web.web().depths);
}

TEST_F(Cli, CrawlStopAfter) {
  auto web = start_mock_web(plain_spec(32, 60, 4));
  ASSERT_EQ(run({"init"}).exit_code, 0);
  write_file(dir_ / "seeds.txt", seeds_text(web.web()));
  ASSERT_EQ(run({"seed", (dir_ / "seeds.txt").string()}).exit_code, 0);
  auto args = crawl_args(*web.server);
  args.insert(args.end(), {"--stop-after", "10"});
  const auto r = run(args);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("fetched"), 10);
}

TEST_F(Cli, CrawlWithStoreDown) {
  const auto r = run_process({crawler_binary(), "--db", (dir_ / "gone" / "x.db").string(), "crawl", "--quiet"});
  EXPECT_EQ(r.exit_code, 3);
}

TEST_F(Cli, CrawlRejectsBadSettings) {
  ASSERT_EQ(run({"init"}).exit_code, 0);
  EXPECT_EQ(run({"crawl", "--batch-size", "0"}).exit_code, 2);
  EXPECT_EQ(run({"crawl", "--lease", "ten minutes"}).exit_code, 2);
  EXPECT_EQ(run({"crawl", "--strategy", (dir_ / "missing.txt").string()}).exit_code, 2);
  write_file(dir_ / "bad.strategy", "rule two 1 keyword1\n");
  EXPECT_EQ(run({"crawl", "--strategy", (dir_ / "bad.strategy").string()}).exit_code, 2);
}

TEST_F(Cli, CoverageReportsMatchGoldens) {
  const std::string cov = fixture("coverage");
  const std::vector<std::string> inputs{"--depths", cov + "/depths.tsv", "--tweets", cov + "/tweets.tsv",
                                        "--mapping", cov + "/mapping.tsv"};
  struct Case {
    std::vector<std::string> args;
    std::string golden;
  };
  const std::vector<Case> cases{
      {{"depth-coverage", "--k", "10"}, "depth_url_k10.txt"},
      {{"depth-coverage", "--k", "10", "--unit", "domain"}, "depth_domain_k10.txt"},
      {{"depth-coverage", "--k", "5", "--format", "records"}, "depth_url_k5.records"},
      {{"frequency-coverage"}, "frequency_default.txt"},
      {{"frequency-coverage", "--buckets", "1,3,8", "--format", "records"}, "frequency_1_3_8.records"},
      {{"frequency-coverage", "--buckets", "1,3,8", "--format", "plot"}, "frequency_1_3_8.plot"},
  };
  for (const auto& c : cases) {
    std::vector<std::string> args{"report"};
    args.insert(args.end(), c.args.begin(), c.args.end());
    args.insert(args.end(), inputs.begin(), inputs.end());
    const auto r = run(args, false);
    EXPECT_EQ(r.exit_code, 0) << c.golden << ": " << r.err;
    EXPECT_EQ(r.out, read_file(cov + "/" + c.golden)) << c.golden;
  }
}

TEST_F(Cli, ReportErrors) {
  const std::string cov = fixture("coverage");
  auto r = run({"report", "depth-coverage", "--depths", cov + "/depths.tsv"}, false);
  EXPECT_EQ(r.exit_code, 2);
  r = run({"report", "depth-coverage", "--k", "0", "--depths", cov + "/depths.tsv", "--tweets", cov + "/tweets.tsv",
           "--mapping", cov + "/mapping.tsv"},
          false);
  EXPECT_EQ(r.exit_code, 2);
  write_file(dir_ / "empty.tsv", "");
  r = run({"report", "frequency-coverage", "--depths", cov + "/depths.tsv", "--tweets", (dir_ / "empty.tsv").string(),
           "--mapping", cov + "/mapping.tsv"},
          false);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_THAT(r.err, HasSubstr("no target"));
}

TEST_F(Cli, StatsOnAFreshStore) {
  ASSERT_EQ(run({"init"}).exit_code, 0);
  const auto r = run({"report", "stats"});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "pending    0\nclaimed    0\nfetched    0\nfailed     0\nurls       0\nlinks      0\nmax_depth  0\n");
}

TEST_F(Cli, UnknownReportAndUsage) {
  auto r = run({"report", "pagerank"});
  EXPECT_EQ(r.exit_code, 64);
  EXPECT_THAT(r.err, HasSubstr("depth-coverage"));
  r = run({"report"});
  EXPECT_EQ(r.exit_code, 64);
  r = run({}, false);
  EXPECT_EQ(r.exit_code, 2);
  r = run({"frobnicate"}, false);
  EXPECT_EQ(r.exit_code, 2);
  r = run({"--help"}, false);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_THAT(r.out, HasSubstr("crawl"));
}

TEST_F(Cli, MockwebServesUntilSigterm) {
  write_file(dir_ / "web.spec", "seed = 3\npage_count = 50\nkeyword_region = keyword1 0.1 fr\n");
  ChildProcess child({crawler_binary(), "mockweb", (dir_ / "web.spec").string(), "--out", (dir_ / "bundle").string()},
                     (dir_ / "out.txt").string(), (dir_ / "err.txt").string());
  const int port = wait_for_port(dir_ / "out.txt");
  ASSERT_GT(port, 0) << read_file(dir_ / "err.txt");
  EXPECT_THAT(read_file(dir_ / "out.txt"), HasSubstr("manifest " + (dir_ / "bundle" / "manifest.txt").string()));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "bundle" / "edges.tsv"));

  // Same spec generated in-process serves the same bytes.
  const auto bundle = mockweb::generate(mockweb::MockWebSpec::load(dir_ / "web.spec"));
  const auto& page = bundle.pages.front();
  fetcher::FetcherOptions options;
  options.honor_robots = false;
  options.connect_override = fetcher::ConnectOverride{"127.0.0.1", static_cast<std::uint16_t>(port)};
  const auto got = fetcher::Fetcher(options).fetch(urlkit::canonicalize(page.url));
  EXPECT_EQ(got.http_status, 200);
  EXPECT_EQ(got.body, page.body);

  // A second server on the same port must fail with the environment code.
  const auto busy = run_process({crawler_binary(), "mockweb", (dir_ / "web.spec").string(), "--port",
                                 std::to_string(port)},
                                {}, std::chrono::seconds(20));
  EXPECT_EQ(busy.exit_code, 3) << busy.err;

  child.kill(SIGTERM);
  EXPECT_EQ(child.wait(std::chrono::seconds(10)), 0);
}

TEST_F(Cli, MockwebRejectsInvalidSpecs) {
  write_file(dir_ / "bad.spec", "page_count = -3\n");
  auto r = run_process({crawler_binary(), "mockweb", (dir_ / "bad.spec").string()});
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_THAT(r.err, HasSubstr("page_count"));
  r = run_process({crawler_binary(), "mockweb", (dir_ / "missing.spec").string()});
  EXPECT_EQ(r.exit_code, 2);
}
