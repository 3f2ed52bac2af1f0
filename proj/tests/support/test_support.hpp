#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "yesql/frontier.hpp"
#include "yesql/mockweb.hpp"
#include "yesql/runtime.hpp"

namespace yesql::test {

// Removed with its contents on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path fixture_path(const std::string& name);
std::string read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, const std::string& content);

frontier::StoreSettings store_at(const std::filesystem::path& db);
/// Opens `db` and creates the schema.
frontier::Frontier open_store(const std::filesystem::path& db);

struct MockWeb {
  std::shared_ptr<const mockweb::Bundle> bundle;
  std::unique_ptr<mockweb::MockServer> server;

  const mockweb::Bundle& web() const { return *bundle; }
};

MockWeb start_mock_web(const mockweb::MockWebSpec& spec);

/// Plain web: no keyword regions, errors, redirects or orphans.
mockweb::MockWebSpec plain_spec(std::uint64_t seed, int pages, int domains = 10);

/// Settings for crawling a loopback mock web quickly: no politeness delay,
/// robots ignored, short idle timeout.
runtime::InstanceConfig mock_crawl_config(const mockweb::MockServer& server, const std::string& instance_id = "test");

/// Seeds the store with the bundle's seed pages.
void seed_store(frontier::Frontier& store, const mockweb::Bundle& web, const scoring::KeywordStrategy& strategy);

/// Crawls `web` with one instance into a fresh store at `db`.
runtime::RunSummary crawl_once(const MockWeb& web, const std::filesystem::path& db,
                               const scoring::KeywordStrategy& strategy, int instances = 1);

std::vector<std::string> urls_with_status(frontier::Frontier& store, frontier::UrlStatus status);

}  // namespace yesql::test

namespace yesql::test {

struct ScoringVector {
  std::string kind;  // "url" or "link"
  std::string input;
  scoring::Score expected = 0;
};

std::vector<ScoringVector> load_scoring_vectors();

}  // namespace yesql::test
