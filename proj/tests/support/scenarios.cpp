#include "scenarios.hpp"

#include <signal.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "process.hpp"

namespace yesql::test {
namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void cli_or_throw(const std::vector<std::string>& argv) {
  const auto r = run_process(argv);
  if (r.exit_code != 0) throw std::runtime_error(argv[1] + " failed: " + r.err);
}

void cli_init_and_seed(const mockweb::Bundle& web, const std::filesystem::path& db) {
  const auto seeds = db.parent_path() / (db.filename().string() + ".seeds");
  std::string text;
  for (const auto& s : web.seeds) text += s + "\n";
  write_file(seeds, text);
  cli_or_throw({crawler_binary(), "--db", db.string(), "init"});
  cli_or_throw({crawler_binary(), "--db", db.string(), "seed", seeds.string()});
}

}  // namespace

std::vector<std::string> cli_crawl_args(const mockweb::MockServer& server, const std::filesystem::path& db,
                                        int parallel, int batch) {
  return {crawler_binary(), "--db", db.string(), "crawl", "--no-robots", "--min-interval", "0",
          "--idle-shutdown", "500ms", "--quiet", "--batch-size", std::to_string(batch), "--parallel",
          std::to_string(parallel), "--per-domain", "4", "--connect-to",
          server.bind_host() + ":" + std::to_string(server.port())};
}

MultiInstanceRun run_instances(const MockWeb& web, const std::filesystem::path& db,
                               const scoring::KeywordStrategy& strategy, int instances) {
  {
    auto store = open_store(db);
    seed_store(store, web.web(), strategy);
  }
  std::vector<runtime::RunSummary> summaries(static_cast<std::size_t>(instances));
  std::vector<std::thread> threads;
  for (int i = 0; i < instances; ++i) {
    threads.emplace_back([&, i] {
      summaries[i] = runtime::run_instance(mock_crawl_config(*web.server, "i" + std::to_string(i)), store_at(db), strategy);
    });
  }
  for (auto& t : threads) t.join();

  MultiInstanceRun run;
  for (auto& s : summaries) {
    run.fetched_total += s.fetched;
    run.failed_total += s.failed;
    run.lost += s.lost;
    run.aborted |= s.aborted;
    run.fetched_by_instance.push_back(std::move(s.fetched_urls));
  }
  auto store = frontier::Frontier::open(store_at(db));
  run.store_fetched = urls_with_status(store, frontier::UrlStatus::fetched);
  run.store_claimed = urls_with_status(store, frontier::UrlStatus::claimed);
  return run;
}

MultiInstanceRun run_processes(const MockWeb& web, const std::filesystem::path& db, int instances) {
  cli_init_and_seed(web.web(), db);
  std::vector<std::unique_ptr<ChildProcess>> children;
  for (int i = 0; i < instances; ++i) {
    auto argv = cli_crawl_args(*web.server, db);
    argv.insert(argv.end(), {"--list-fetched", "--instance-id", "p" + std::to_string(i)});
    const auto base = db.string() + ".p" + std::to_string(i);
    children.push_back(std::make_unique<ChildProcess>(argv, base + ".out", base + ".err"));
  }
  MultiInstanceRun run;
  for (int i = 0; i < instances; ++i) {
    const auto status = children[i]->wait(std::chrono::minutes(5));
    const auto base = db.string() + ".p" + std::to_string(i);
    if (status != 0) run.aborted = true;
    auto lines = lines_of(read_file(base + ".out"));
    if (lines.empty()) {
      run.aborted = true;
      run.fetched_by_instance.emplace_back();
      continue;
    }
    const auto summary = lines.front();
    auto number = [&](const std::string& key) -> std::int64_t {
      const auto at = summary.find("\"" + key + "\":");
      return at == std::string::npos ? 0 : std::stoll(summary.substr(at + key.size() + 3));
    };
    run.fetched_total += number("fetched");
    run.failed_total += number("failed");
    run.lost += number("lost");
    if (summary.find("\"aborted\":true") != std::string::npos) run.aborted = true;
    lines.erase(lines.begin());
    run.fetched_by_instance.push_back(std::move(lines));
  }
  auto store = frontier::Frontier::open(store_at(db));
  run.store_fetched = urls_with_status(store, frontier::UrlStatus::fetched);
  run.store_claimed = urls_with_status(store, frontier::UrlStatus::claimed);
  return run;
}

CrashRecovery crash_and_recover(const mockweb::MockWebSpec& spec, const std::filesystem::path& dir,
                                std::int64_t kill_after) {
  auto web = start_mock_web(spec);
  CrashRecovery out;

  const auto reference_db = dir / "reference.db";
  cli_init_and_seed(web.web(), reference_db);
  cli_or_throw(cli_crawl_args(*web.server, reference_db));
  {
    auto store = frontier::Frontier::open(store_at(reference_db));
    out.reference_fetched = urls_with_status(store, frontier::UrlStatus::fetched);
    out.reference_failed = urls_with_status(store, frontier::UrlStatus::failed);
  }

  const auto db = dir / "crashed.db";
  cli_init_and_seed(web.web(), db);
  {
    ChildProcess child(cli_crawl_args(*web.server, db), (dir / "crash.out").string(), (dir / "crash.err").string());
    auto watch = frontier::Frontier::open(store_at(db));
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::minutes(2);
    while (std::chrono::steady_clock::now() < deadline) {
      if (child.wait(std::chrono::milliseconds(0))) break;
      // The fetched count moves right after a submit, which is also when the
      // instance may hold no claim; wait until a batch is out again.
      const auto stats = watch.stats();
      if (stats.fetched >= kill_after && stats.claimed > 0) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    child.kill(SIGKILL);
    out.kill_signal_status = child.wait(std::chrono::seconds(10)).value_or(0);
  }
  {
    auto store = frontier::Frontier::open(store_at(db));
    const auto stats = store.stats();
    out.fetched_before_kill = stats.fetched + stats.failed;
    out.claimed_at_kill = stats.claimed;
    // Far enough in the future that every lease the dead instance held is over.
    out.expired = store.expire_leases(store.now() + std::chrono::hours(24 * 365));
  }
  out.rerun_exit = run_process(cli_crawl_args(*web.server, db)).exit_code;
  auto store = frontier::Frontier::open(store_at(db));
  out.recovered_fetched = urls_with_status(store, frontier::UrlStatus::fetched);
  out.recovered_failed = urls_with_status(store, frontier::UrlStatus::failed);
  return out;
}

FocusTrial focus_trial(const MockWeb& web, const std::filesystem::path& db, const scoring::KeywordStrategy& strategy,
                       std::int64_t stop_after) {
  {
    auto store = open_store(db);
    seed_store(store, web.web(), strategy);
  }
  auto config = mock_crawl_config(*web.server, "focus");
  config.stop_after = stop_after;
  const auto summary = runtime::run_instance(config, store_at(db), strategy);
  std::set<std::string> keyword_pages;
  for (const auto& [url, kw] : web.web().keyword_pages) keyword_pages.insert(url);
  FocusTrial t;
  for (const auto& url : summary.fetched_urls) {
    ++t.fetches;
    t.keyword_hits += keyword_pages.count(url);
  }
  return t;
}

}  // namespace yesql::test
