#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "yesql/fetcher.hpp"

namespace yesql::mockweb {

inline constexpr std::string_view kPrngName = "mt19937_64";
inline constexpr int kFormatVersion = 1;
inline constexpr int kMaxRedirectChainLength = 5;  // what the default fetcher follows

struct KeywordRegion {
  std::string keyword;
  double fraction = 0;  // of page_count
  std::string tld;      // keyword pages live on domains under this TLD
};

struct ErrorPages {
  int status = 404;
  double fraction = 0;
};

struct RedirectChains {
  int count = 0;
  int length = 1;  // hops before the real page
};

/// Text format: `key = value` lines, '#' comments. keyword_region,
/// error_pages and redirect_chains may repeat:
///
///     seed = 7
///     page_count = 1000
///     keyword_region = keyword1 0.10 fr
///     error_pages = 404 0.02
///     redirect_chains = 5 2
struct MockWebSpec {
  std::uint64_t seed = 1;
  int page_count = 100;
  int domain_count = 10;
  int seed_pages = 1;
  int out_degree_min = 2;
  int out_degree_max = 6;
  double orphan_fraction = 0;
  std::vector<KeywordRegion> keyword_regions;
  std::vector<ErrorPages> error_pages;
  std::vector<RedirectChains> redirect_chains;
  std::chrono::milliseconds latency{0};
  int tweets = 0;  // synthetic tweet records to emit

  /// Throws Error{invalid_spec}.
  static MockWebSpec parse(std::string_view text);
  static MockWebSpec load(const std::filesystem::path& file);
  void validate() const;
  std::string to_text() const;
};

enum class PageKind { normal, keyword, error, redirect };
std::string_view to_string(PageKind kind) noexcept;

struct Page {
  std::string url;   // canonical form
  std::string host;
  std::string path;  // request target
  PageKind kind = PageKind::normal;
  int status = 200;
  std::string content_type;
  std::string body;
  std::optional<std::string> location;  // for redirect hops
  std::string keyword;                  // keyword pages only
  std::string text;                     // expected extractor page_text
  bool orphan = false;
};

struct Edge {
  std::string source;
  std::string target;
  std::string kind;  // "link" or "redirect"
};

struct Tweet {
  std::string timestamp;
  std::string author;
  std::string text;
};

struct Bundle {
  MockWebSpec spec;
  std::vector<std::string> domains;
  std::vector<Page> pages;  // every servable resource, including redirect hops
  std::vector<std::string> seeds;
  std::vector<Edge> edges;  // distinct (source, target), source order
  std::map<std::string, int> depths;  // BFS from the seeds; keys = reachable set
  std::vector<std::pair<std::string, std::string>> keyword_pages;  // (url, keyword)
  std::vector<Tweet> tweets;
  std::vector<std::pair<std::string, std::string>> shortener;  // (short, effective)

  const Page* find(std::string_view host, std::string_view target) const;
  const Page* find_url(std::string_view url) const;

  /// Reachable URLs that answer 2xx (directly or after redirects).
  std::vector<std::string> reachable_ok() const;
  /// Reachable URLs the crawler will record as failed.
  std::vector<std::string> reachable_failed() const;

  /// Writes manifest.txt, spec.txt, seeds.txt, edges.tsv, depths.tsv,
  /// pages.tsv, keyword_pages.tsv, texts.tsv and, when tweets were
  /// requested, tweets.tsv and shortener.tsv.
  void write(const std::filesystem::path& dir) const;

  std::unordered_map<std::string, std::size_t> index;  // host + target -> page
};

/// Deterministic: the same spec always yields byte-identical bundles.
Bundle generate(const MockWebSpec& spec);

/// Plain BFS over an edge list; the generator's own ground truth.
std::map<std::string, int> bfs_depths(const std::vector<Edge>& edges, const std::vector<std::string>& seeds);

struct AccessEntry {
  std::chrono::steady_clock::time_point at;
  std::string host;
  std::string target;
  int status = 0;
};

/// Serves a bundle over HTTP/1.1, dispatching on the Host header so one
/// loopback port stands in for every generated domain.
class MockServer {
 public:
  /// Binds immediately (port 0 picks a free port). Throws Error{address_in_use}.
  explicit MockServer(std::shared_ptr<const Bundle> bundle, std::string bind_host = "127.0.0.1",
                      std::uint16_t port = 0, int threads = 64);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  const std::string& bind_host() const noexcept { return bind_host_; }
  fetcher::ConnectOverride connect_override() const { return {bind_host_, port_}; }

  int in_flight() const;
  int max_in_flight() const;
  void reset_gauge();
  std::vector<AccessEntry> access_log() const;
  std::size_t request_count() const;

  void stop();

 private:
  struct State;
  std::shared_ptr<const Bundle> bundle_;
  std::string bind_host_;
  std::uint16_t port_ = 0;
  std::unique_ptr<State> state_;
};

}  // namespace yesql::mockweb
