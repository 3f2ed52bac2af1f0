// yesql-crawler: operator entry point. Exit codes: 0 ok, 1 unexpected
// failure, 2 usage or configuration, 3 environment (store down, port busy),
// 64 unknown report.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "yesql/analytics.hpp"
#include "yesql/error.hpp"
#include "yesql/frontier.hpp"
#include "yesql/mockweb.hpp"
#include "yesql/runtime.hpp"
#include "yesql/scoring.hpp"

namespace {

using namespace yesql;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEnvironment = 3;
constexpr int kExitUnknownReport = 64;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::store_unavailable:
    case Errc::address_in_use:
      return kExitEnvironment;
    default:
      return kExitConfig;
  }
}

std::chrono::milliseconds parse_duration(const std::string& text) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument, "bad duration '" + text + "'");
  }
  const std::string unit = text.substr(used);
  double ms = 0;
  if (unit.empty() || unit == "s") ms = value * 1000;
  else if (unit == "ms") ms = value;
  else if (unit == "m") ms = value * 60'000;
  else if (unit == "h") ms = value * 3'600'000;
  else throw Error(Errc::invalid_argument, "bad duration unit in '" + text + "' (use ms, s, m or h)");
  if (ms < 0) throw Error(Errc::invalid_argument, "duration must not be negative: '" + text + "'");
  return std::chrono::milliseconds{static_cast<std::int64_t>(ms)};
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto end = line.find_last_not_of(" \t");
    lines.push_back(line.substr(start, end - start + 1));
  }
  return lines;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  return in;
}

scoring::KeywordStrategy load_strategy(const std::string& path) {
  return path.empty() ? scoring::reference_strategy() : scoring::KeywordStrategy::load(path);
}

frontier::Frontier open_store(const std::string& db) {
  if (db.empty()) throw Error(Errc::invalid_argument, "no store given (use --db or CRAWLER_DB)");
  frontier::StoreSettings settings;
  settings.path = db;
  return frontier::Frontier::open(settings);
}

/// Blocks SIGINT/SIGTERM for every thread and turns them into a shutdown
/// request from a dedicated watcher thread.
class SignalWatcher {
 public:
  explicit SignalWatcher(runtime::ShutdownToken& token) {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    sigaddset(&set_, SIGUSR1);
    pthread_sigmask(SIG_BLOCK, &set_, nullptr);
    thread_ = std::thread([this, &token] {
      int sig = 0;
      sigwait(&set_, &sig);
      if (sig != SIGUSR1) token.request();
    });
  }
  ~SignalWatcher() {
    pthread_kill(thread_.native_handle(), SIGUSR1);
    thread_.join();
  }

 private:
  sigset_t set_{};
  std::thread thread_;
};

struct Options {
  std::string db;
  // seed
  std::string seeds_file;
  std::string strategy;
  // crawl
  int batch_size = 50;
  int parallel = 20;
  std::string lease = "10m";
  std::int64_t stop_after = -1;
  std::string idle_shutdown = "10s";
  std::string timeout = "30s";
  std::string min_interval = "1s";
  int per_domain = 2;
  bool no_robots = false;
  std::string user_agent;
  std::string content_dir;
  std::string connect_to;
  std::string instance_id;
  bool quiet = false;
  bool list_fetched = false;
  // reports
  std::string depths_file;
  std::string crawled_file;
  std::string tweets_file;
  std::string mapping_file;
  std::size_t k = 100;
  std::string unit = "url";
  std::string format = "table";
  std::vector<std::int64_t> buckets{1, 2, 5, 10, 20, 50};
  // mockweb
  std::string spec_file;
  std::string bind = "127.0.0.1";
  int port = 0;
  std::string out_dir;
  // export
  std::string what = "edges";
};

int cmd_init(const Options& o) {
  auto store = open_store(o.db);
  store.init_schema();
  std::cout << "schema version " << *store.schema_version() << '\n';
  return kExitOk;
}

int cmd_seed(const Options& o) {
  const auto strategy = load_strategy(o.strategy);
  const auto lines = read_lines(o.seeds_file);
  auto store = open_store(o.db);
  const auto report = store.insert_seeds(lines, strategy);
  for (const auto& [raw, reason] : report.rejected) std::cerr << "warning: skipped '" << raw << "': " << reason << '\n';
  std::cout << "inserted " << report.inserted << '\n' << "skipped " << report.skipped << '\n';
  return kExitOk;
}

int cmd_crawl(const Options& o) {
  const auto strategy = load_strategy(o.strategy);
  runtime::InstanceConfig config;
  config.instance_id = o.instance_id;
  config.batch_size = o.batch_size;
  config.parallel_fetches = o.parallel;
  config.lease = parse_duration(o.lease);
  if (o.stop_after >= 0) config.stop_after = o.stop_after;
  config.idle_shutdown = parse_duration(o.idle_shutdown);
  config.fetcher.limits.timeout = parse_duration(o.timeout);
  config.fetcher.honor_robots = !o.no_robots;
  if (!o.user_agent.empty()) config.fetcher.user_agent = o.user_agent;
  if (!o.connect_to.empty()) {
    const auto colon = o.connect_to.rfind(':');
    if (colon == std::string::npos) throw Error(Errc::invalid_argument, "--connect-to expects host:port");
    config.fetcher.connect_override =
        fetcher::ConnectOverride{o.connect_to.substr(0, colon),
                                 static_cast<std::uint16_t>(std::stoi(o.connect_to.substr(colon + 1)))};
  }
  config.politeness.min_interval = parse_duration(o.min_interval);
  config.politeness.max_concurrent = o.per_domain;
  if (!o.content_dir.empty()) config.content_dir = o.content_dir;
  config.record_fetched_urls = o.list_fetched;
  if (!o.quiet) config.event_log = &std::cerr;
  for (const auto& w : runtime::validate(config)) std::cerr << "warning: " << w << '\n';

  // Fail before spawning anything if the store is unusable.
  open_store(o.db).stats();

  runtime::ShutdownToken token;
  runtime::RunSummary summary;
  {
    SignalWatcher watcher(token);
    frontier::StoreSettings settings;
    settings.path = o.db;
    summary = runtime::run_instance(config, settings, strategy, &token);
  }
  std::cout << runtime::to_json(summary) << '\n';
  if (o.list_fetched) {
    for (const auto& u : summary.fetched_urls) std::cout << u << '\n';
  }
  return summary.aborted ? kExitEnvironment : kExitOk;
}

analytics::IngestReport load_targets(const Options& o) {
  if (o.tweets_file.empty() || o.mapping_file.empty()) {
    throw Error(Errc::invalid_argument, "--tweets and --mapping are required");
  }
  auto report = analytics::ingest_tweets(o.tweets_file, o.mapping_file);
  for (const auto& e : report.errors) std::cerr << "warning: " << e << '\n';
  std::cerr << "tweets " << report.tweets << ", with urls " << report.tweets_with_urls << " ("
            << analytics::format_percent(report.url_bearing_pct()) << "%), effective urls " << report.urls.size()
            << ", unresolvable " << report.unresolvable_urls << '\n';
  return report;
}

analytics::DepthMap load_crawled(const Options& o) {
  if (!o.depths_file.empty()) {
    auto in = open_input(o.depths_file);
    return analytics::read_depths(in);
  }
  auto store = open_store(o.db);
  return analytics::crawled_depths(store);
}

int cmd_depth_coverage(const Options& o) {
  const auto crawled = load_crawled(o);
  const auto targets = load_targets(o);
  const auto report = analytics::coverage_by_depth(crawled, targets.urls, o.k, analytics::parse_unit(o.unit));
  std::cout << (o.format == "records" ? analytics::format_records(report) : analytics::format_table(report));
  return kExitOk;
}

int cmd_frequency_coverage(const Options& o) {
  std::set<std::string> crawled;
  if (!o.crawled_file.empty()) {
    auto in = open_input(o.crawled_file);
    for (auto& u : analytics::read_url_list(in)) crawled.insert(std::move(u));
  } else {
    for (const auto& [url, depth] : load_crawled(o)) crawled.insert(url);
  }
  const auto targets = load_targets(o);
  const auto buckets = analytics::coverage_by_frequency(crawled, targets.urls, o.buckets);
  if (o.format == "records") {
    std::cout << analytics::format_records(buckets);
  } else if (o.format == "plot") {
    std::cout << analytics::format_plot_data(buckets);
  } else {
    std::cout << analytics::format_table(buckets);
  }
  return kExitOk;
}

int cmd_stats(const Options& o) {
  auto store = open_store(o.db);
  std::cout << analytics::format_table(store.stats());
  return kExitOk;
}

int cmd_mockweb(const Options& o) {
  const auto spec = mockweb::MockWebSpec::load(o.spec_file);
  auto bundle = std::make_shared<const mockweb::Bundle>(mockweb::generate(spec));
  if (!o.out_dir.empty()) {
    bundle->write(o.out_dir);
    std::cout << "manifest " << (std::filesystem::path(o.out_dir) / "manifest.txt").string() << '\n';
  }
  runtime::ShutdownToken token;
  SignalWatcher watcher(token);
  mockweb::MockServer server(bundle, o.bind, static_cast<std::uint16_t>(o.port));
  std::cout << "listening " << o.bind << ':' << server.port() << '\n' << std::flush;
  while (!token.wait_for(std::chrono::hours{1})) {
  }
  server.stop();
  return kExitOk;
}

int cmd_export(const Options& o) {
  auto store = open_store(o.db);
  if (o.what == "edges") {
    for (const auto& e : store.link_urls()) std::cout << e.source << '\t' << e.target << '\n';
  } else if (o.what == "urls") {
    for (const auto& r : store.urls()) {
      std::cout << r.url.str() << '\t' << frontier::to_string(r.status) << '\t' << r.depth << '\t' << r.priority
                << '\n';
    }
  } else if (o.what == "depths") {
    analytics::write_depths(std::cout, analytics::crawled_depths(store));
  } else if (o.what == "seeds") {
    for (const auto& r : store.urls()) {
      if (r.is_seed) std::cout << r.url.str() << '\n';
    }
  } else {
    throw Error(Errc::invalid_argument, "export what: edges, urls, depths or seeds");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Focused web crawler coordinated through a relational store"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);
  Options o;
  app.add_option("--db", o.db, "SQLite database path or file: URI")->envname("CRAWLER_DB");

  auto* init = app.add_subcommand("init", "Create the frontier schema (idempotent)");

  auto* seed = app.add_subcommand("seed", "Insert seed URLs, one per line");
  seed->add_option("file", o.seeds_file)->required()->check(CLI::ExistingFile);
  seed->add_option("--strategy", o.strategy, "Strategy file (default: built-in reference)")->check(CLI::ExistingFile);

  auto* crawl = app.add_subcommand("crawl", "Run one crawler instance");
  crawl->add_option("--strategy", o.strategy, "Strategy file (default: built-in reference)")->check(CLI::ExistingFile);
  crawl->add_option("--batch-size", o.batch_size, "URLs per claim")->capture_default_str();
  crawl->add_option("--parallel", o.parallel, "Concurrent fetches")->capture_default_str();
  crawl->add_option("--lease", o.lease, "Claim lease, e.g. 10m")->capture_default_str();
  crawl->add_option("--stop-after", o.stop_after, "Stop after this many fetch attempts");
  crawl->add_option("--idle-shutdown", o.idle_shutdown, "Exit after the frontier stays empty this long")
      ->capture_default_str();
  crawl->add_option("--timeout", o.timeout, "Per-request timeout")->capture_default_str();
  crawl->add_option("--min-interval", o.min_interval, "Minimum delay between fetches to one domain")
      ->capture_default_str();
  crawl->add_option("--per-domain", o.per_domain, "Concurrent fetches per domain")->capture_default_str();
  crawl->add_flag("--no-robots", o.no_robots, "Ignore robots.txt (mock webs only)");
  crawl->add_option("--user-agent", o.user_agent);
  crawl->add_option("--content-dir", o.content_dir, "Store fetched bodies here");
  crawl->add_option("--connect-to", o.connect_to, "Send every http connection to host:port");
  crawl->add_option("--instance-id", o.instance_id);
  crawl->add_flag("--quiet", o.quiet, "No JSON event lines on stderr");
  crawl->add_flag("--list-fetched", o.list_fetched, "Print submitted URLs after the summary");

  auto* report = app.add_subcommand("report", "depth-coverage | frequency-coverage | stats");
  report->allow_extras();
  auto add_target_options = [&](CLI::App* sub, const char* formats) {
    sub->add_option("--tweets", o.tweets_file, "timestamp<TAB>author<TAB>text records")->check(CLI::ExistingFile);
    sub->add_option("--mapping", o.mapping_file, "short<TAB>effective URL pairs")->check(CLI::ExistingFile);
    sub->add_option("--depths", o.depths_file, "url<TAB>depth file instead of --db")->check(CLI::ExistingFile);
    sub->add_option("--format", o.format, formats)->capture_default_str();
  };
  auto* depth_cov = report->add_subcommand("depth-coverage", "Tweeted URL coverage by crawl depth");
  add_target_options(depth_cov, "table or records");
  depth_cov->add_option("--k", o.k, "Size of the most-tweeted subset")->capture_default_str();
  depth_cov->add_option("--unit", o.unit, "url or domain")->capture_default_str();
  auto* freq_cov = report->add_subcommand("frequency-coverage", "Coverage per tweet-frequency bucket");
  add_target_options(freq_cov, "table, records or plot");
  freq_cov->add_option("--crawled", o.crawled_file, "List of crawled URLs instead of --db")->check(CLI::ExistingFile);
  freq_cov->add_option("--buckets", o.buckets, "Comma-separated bucket lower edges")
      ->delimiter(',')
      ->default_str("1,2,5,10,20,50");
  auto* stats = report->add_subcommand("stats", "Frontier counters");

  auto* mock = app.add_subcommand("mockweb", "Generate and serve a synthetic web");
  mock->add_option("spec", o.spec_file)->required();
  mock->add_option("--bind", o.bind)->capture_default_str();
  mock->add_option("--port", o.port)->capture_default_str();
  mock->add_option("--out", o.out_dir, "Write the bundle (manifest, edges, depths) here");

  auto* exp = app.add_subcommand("export", "Dump store contents as tab-separated lines");
  exp->add_option("what", o.what, "edges, urls, depths or seeds")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*init) return cmd_init(o);
    if (*seed) return cmd_seed(o);
    if (*crawl) return cmd_crawl(o);
    if (*report) {
      if (*depth_cov) return cmd_depth_coverage(o);
      if (*freq_cov) return cmd_frequency_coverage(o);
      if (*stats) return cmd_stats(o);
      std::cerr << "unknown report";
      for (const auto& extra : report->remaining()) std::cerr << " '" << extra << "'";
      std::cerr << "\n" << report->help();
      return kExitUnknownReport;
    }
    if (*mock) return cmd_mockweb(o);
    if (*exp) return cmd_export(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfig;
}
