#include "yesql/frontier.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <unordered_set>

#include "sqlite.hpp"
#include "yesql/error.hpp"

namespace yesql::frontier {
namespace {

// The only write path for URLs and links is the `discoveries` view: inserting
// a row there lets the trigger maintain uniqueness, depth (min rule, no
// propagation to descendants) and incremental priorities. A link implies
// depth from its source's depth as of the source's fetch, so replaying old
// discoveries never rewrites anything.
constexpr std::string_view kSchemaSql = R"sql(
CREATE TABLE IF NOT EXISTS meta (
  key   TEXT PRIMARY KEY,
  value TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS urls (
  id             INTEGER PRIMARY KEY,
  url            TEXT    NOT NULL UNIQUE,
  domain         TEXT    NOT NULL,
  tld            TEXT    NOT NULL,
  url_score      INTEGER NOT NULL,
  link_score_sum INTEGER NOT NULL DEFAULT 0,
  priority       INTEGER NOT NULL,
  depth          INTEGER NOT NULL CHECK (depth >= 0),
  fetch_depth    INTEGER,
  is_seed        INTEGER NOT NULL DEFAULT 0,
  status         TEXT    NOT NULL DEFAULT 'pending'
                 CHECK (status IN ('pending', 'claimed', 'fetched', 'failed')),
  claim_token    TEXT,
  claim_expiry   INTEGER,
  http_status    INTEGER,
  fetch_error    TEXT,
  fetched_at     INTEGER,
  fetched_by     TEXT
);
CREATE INDEX IF NOT EXISTS urls_frontier ON urls (status, priority DESC, id);
CREATE INDEX IF NOT EXISTS urls_claim ON urls (claim_token) WHERE claim_token IS NOT NULL;

CREATE TABLE IF NOT EXISTS links (
  source_id     INTEGER NOT NULL REFERENCES urls (id),
  target_id     INTEGER NOT NULL REFERENCES urls (id),
  context       TEXT    NOT NULL,
  context_score INTEGER NOT NULL,
  PRIMARY KEY (source_id, target_id)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS links_target ON links (target_id);

CREATE TABLE IF NOT EXISTS claims (
  token       TEXT PRIMARY KEY,
  instance_id TEXT    NOT NULL,
  issued_at   INTEGER NOT NULL,
  expiry      INTEGER NOT NULL,
  state       TEXT    NOT NULL CHECK (state IN ('active', 'expired', 'closed'))
);
CREATE INDEX IF NOT EXISTS claims_active ON claims (state, expiry);

CREATE VIEW IF NOT EXISTS discoveries AS
  SELECT NULL AS source_id,
         url AS target_url,
         domain AS target_domain,
         tld AS target_tld,
         url_score AS target_url_score,
         '' AS context,
         0 AS context_score
    FROM urls WHERE 0;

CREATE TRIGGER IF NOT EXISTS discoveries_insert INSTEAD OF INSERT ON discoveries
BEGIN
  INSERT OR IGNORE INTO urls (url, domain, tld, url_score, link_score_sum, priority, depth, is_seed)
  VALUES (NEW.target_url, NEW.target_domain, NEW.target_tld, NEW.target_url_score, 0,
          NEW.target_url_score,
          COALESCE((SELECT COALESCE(fetch_depth, depth) + 1 FROM urls WHERE id = NEW.source_id), 0),
          NEW.source_id IS NULL);

  UPDATE urls SET depth = (SELECT COALESCE(fetch_depth, depth) + 1 FROM urls WHERE id = NEW.source_id)
   WHERE NEW.source_id IS NOT NULL
     AND url = NEW.target_url
     AND depth > (SELECT COALESCE(fetch_depth, depth) + 1 FROM urls WHERE id = NEW.source_id);

  UPDATE urls SET link_score_sum = link_score_sum + NEW.context_score,
                  priority = priority + NEW.context_score
   WHERE NEW.source_id IS NOT NULL
     AND url = NEW.target_url
     AND NOT EXISTS (SELECT 1 FROM links
                      WHERE source_id = NEW.source_id AND target_id = urls.id);

  INSERT OR IGNORE INTO links (source_id, target_id, context, context_score)
  SELECT NEW.source_id, id, NEW.context, NEW.context_score
    FROM urls WHERE NEW.source_id IS NOT NULL AND url = NEW.target_url;
END;
)sql";

constexpr std::string_view kUrlColumns =
    "id, url, domain, tld, url_score, link_score_sum, priority, depth, fetch_depth, is_seed, "
    "status, claim_token, claim_expiry, http_status, fetch_error, fetched_at, fetched_by";

std::int64_t to_millis(TimePoint t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

TimePoint from_millis(std::int64_t ms) { return TimePoint(std::chrono::milliseconds(ms)); }

std::string random_token() {
  thread_local std::random_device rd;
  constexpr char kHex[] = "0123456789abcdef";
  std::string token;
  token.reserve(32);
  for (int i = 0; i < 4; ++i) {
    auto word = static_cast<std::uint32_t>(rd());
    for (int j = 0; j < 8; ++j) {
      token.push_back(kHex[word & 0xF]);
      word >>= 4;
    }
  }
  return token;
}

UrlRecord read_url(const sqlite::Statement& s) {
  UrlRecord r;
  r.id = s.int64(0);
  r.url = urlkit::canonicalize(s.text(1));
  r.domain = {s.text(2), s.text(3)};
  r.url_score = s.int64(4);
  r.link_score_sum = s.int64(5);
  r.priority = s.int64(6);
  r.depth = static_cast<int>(s.int64(7));
  if (auto v = s.opt_int64(8)) r.fetch_depth = static_cast<int>(*v);
  r.is_seed = s.int64(9) != 0;
  r.status = parse_status(s.text(10));
  r.claim_token = s.opt_text(11);
  if (auto v = s.opt_int64(12)) r.claim_expiry = from_millis(*v);
  if (auto v = s.opt_int64(13)) r.http_status = static_cast<int>(*v);
  r.fetch_error = s.opt_text(14);
  if (auto v = s.opt_int64(15)) r.fetched_at = from_millis(*v);
  r.fetched_by = s.opt_text(16);
  return r;
}

void sql_score_url(sqlite3_context* ctx, int, sqlite3_value** argv) {
  const auto* strategy = static_cast<const scoring::KeywordStrategy*>(sqlite3_user_data(ctx));
  const auto* text = sqlite3_value_text(argv[0]);
  if (text == nullptr) return sqlite3_result_null(ctx);
  const auto url = urlkit::try_canonicalize(reinterpret_cast<const char*>(text));
  if (!url) return sqlite3_result_null(ctx);
  sqlite3_result_int64(ctx, strategy->score_url(*url));
}

void sql_score_link(sqlite3_context* ctx, int, sqlite3_value** argv) {
  const auto* strategy = static_cast<const scoring::KeywordStrategy*>(sqlite3_user_data(ctx));
  const auto* text = sqlite3_value_text(argv[0]);
  sqlite3_result_int64(ctx, text == nullptr ? 0 : strategy->score_link(reinterpret_cast<const char*>(text)));
}

void sql_normalize(sqlite3_context* ctx, int, sqlite3_value** argv) {
  const auto* text = sqlite3_value_text(argv[0]);
  if (text == nullptr) return sqlite3_result_null(ctx);
  const std::string out = urlkit::normalize_text(reinterpret_cast<const char*>(text));
  sqlite3_result_text(ctx, out.data(), static_cast<int>(out.size()), SQLITE_TRANSIENT);
}

void sql_url_top(sqlite3_context* ctx, int, sqlite3_value** argv) {
  const auto* text = sqlite3_value_text(argv[0]);
  if (text == nullptr) return sqlite3_result_null(ctx);
  const auto url = urlkit::try_canonicalize(reinterpret_cast<const char*>(text));
  if (!url) return sqlite3_result_null(ctx);
  const std::string out = urlkit::url_top(*url);
  sqlite3_result_text(ctx, out.data(), static_cast<int>(out.size()), SQLITE_TRANSIENT);
}

}  // namespace

std::string_view to_string(UrlStatus s) noexcept {
  switch (s) {
    case UrlStatus::pending: return "pending";
    case UrlStatus::claimed: return "claimed";
    case UrlStatus::fetched: return "fetched";
    case UrlStatus::failed: return "failed";
  }
  return "pending";
}

UrlStatus parse_status(std::string_view s) {
  if (s == "pending") return UrlStatus::pending;
  if (s == "claimed") return UrlStatus::claimed;
  if (s == "fetched") return UrlStatus::fetched;
  if (s == "failed") return UrlStatus::failed;
  throw Error(Errc::invalid_argument, "unknown url status '" + std::string(s) + "'");
}

struct Frontier::Impl {
  StoreSettings settings;
  sqlite::Connection conn;
  bool schema_checked = false;

  // Hot-path statements, prepared once the schema is known to exist.
  sqlite::Statement find_url;
  sqlite::Statement insert_discovery;
  sqlite::Statement mark_source;
  sqlite::Statement max_id;

  TimePoint now() const { return settings.clock ? settings.clock() : Clock::now(); }

  void require_schema() {
    if (schema_checked) return;
    auto s = conn.prepare("SELECT COUNT(*) FROM sqlite_master WHERE type = 'table' AND name IN ('urls', 'links', 'claims', 'meta')");
    s.step();
    if (s.int64(0) != 4) {
      throw Error(Errc::schema_missing, "store '" + settings.path + "' has no crawler schema; run init first");
    }
    find_url = conn.prepare("SELECT id FROM urls WHERE url = ?1");
    insert_discovery = conn.prepare(
        "INSERT INTO discoveries (source_id, target_url, target_domain, target_tld, "
        "target_url_score, context, context_score) VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)");
    mark_source = conn.prepare(
        "UPDATE urls SET status = ?1, http_status = ?2, fetch_error = ?3, fetched_at = ?4, "
        "fetched_by = ?5, fetch_depth = depth, claim_token = NULL, claim_expiry = NULL "
        "WHERE url = ?6 AND claim_token = ?7 AND status = 'claimed' RETURNING id");
    max_id = conn.prepare("SELECT COALESCE(MAX(id), 0) FROM urls");
    schema_checked = true;
  }

  std::int64_t current_max_id() {
    max_id.reset();
    max_id.step();
    const auto id = max_id.int64(0);
    max_id.reset();  // a stepped statement would pin a stale read snapshot
    return id;
  }

  void insert_row(std::optional<std::int64_t> source_id, const urlkit::CanonicalUrl& target,
                  std::string_view context, scoring::Score url_score, scoring::Score context_score) {
    const auto domain = urlkit::domain_of(target);
    insert_discovery.reset();
    insert_discovery.bind(1, source_id)
        .bind(2, target.str())
        .bind(3, domain.registrable_domain)
        .bind(4, domain.tld)
        .bind(5, url_score)
        .bind(6, context)
        .bind(7, context_score);
    insert_discovery.run();
  }

  std::int64_t revert_claim(std::string_view token) {
    auto s = conn.prepare(
        "UPDATE urls SET status = 'pending', claim_token = NULL, claim_expiry = NULL "
        "WHERE claim_token = ?1 AND status = 'claimed'");
    s.bind(1, token).run();
    return conn.changes();
  }

  void close_claim_if_done(std::string_view token) {
    auto s = conn.prepare(
        "UPDATE claims SET state = 'closed' WHERE token = ?1 AND state = 'active' AND NOT EXISTS "
        "(SELECT 1 FROM urls WHERE claim_token = ?1 AND status = 'claimed')");
    s.bind(1, token).run();
  }
};

Frontier::Frontier(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Frontier::Frontier(Frontier&&) noexcept = default;
Frontier& Frontier::operator=(Frontier&&) noexcept = default;
Frontier::~Frontier() = default;

Frontier Frontier::open(const StoreSettings& settings) {
  auto impl = std::make_unique<Impl>();
  impl->settings = settings;
  impl->conn = sqlite::Connection(settings.path, static_cast<int>(settings.busy_timeout.count()));
  if (!impl->conn.read_only()) {
    impl->conn.exec("PRAGMA journal_mode = WAL");
    impl->conn.exec("PRAGMA synchronous = NORMAL");
  }
  // Surfaces unreadable files (not a database, permissions) at open time.
  impl->conn.exec("SELECT COUNT(*) FROM sqlite_master");
  return Frontier(std::move(impl));
}

void Frontier::init_schema() {
  auto& conn = impl_->conn;
  if (conn.read_only()) {
    throw Error(Errc::insufficient_privilege, "store '" + impl_->settings.path + "' is read-only");
  }
  sqlite::Transaction tx(conn, sqlite::TxMode::immediate);
  {
    auto has_meta = conn.prepare("SELECT COUNT(*) FROM sqlite_master WHERE type = 'table' AND name = 'meta'");
    has_meta.step();
    if (has_meta.int64(0) == 1) {
      auto version = conn.prepare("SELECT value FROM meta WHERE key = 'schema_version'");
      if (version.step()) {
        const int stored = std::stoi(version.text(0));
        if (stored > kSchemaVersion) {
          throw Error(Errc::schema_too_new, "store schema version " + std::to_string(stored) +
                                                " is newer than supported version " +
                                                std::to_string(kSchemaVersion));
        }
      }
    }
  }
  conn.exec(kSchemaSql);
  conn.prepare("INSERT OR IGNORE INTO meta (key, value) VALUES ('schema_version', ?1)")
      .bind(1, std::to_string(kSchemaVersion))
      .run();
  tx.commit();
  impl_->schema_checked = false;
  impl_->require_schema();
}

std::optional<int> Frontier::schema_version() {
  auto has_meta = impl_->conn.prepare("SELECT COUNT(*) FROM sqlite_master WHERE type = 'table' AND name = 'meta'");
  has_meta.step();
  if (has_meta.int64(0) == 0) return std::nullopt;
  auto s = impl_->conn.prepare("SELECT value FROM meta WHERE key = 'schema_version'");
  if (!s.step()) return std::nullopt;
  return std::stoi(s.text(0));
}

SeedReport Frontier::insert_seeds(std::span<const std::string> raw_urls,
                                  const scoring::KeywordStrategy& strategy) {
  impl_->require_schema();
  SeedReport report;
  sqlite::Transaction tx(impl_->conn, sqlite::TxMode::immediate);
  const auto before = impl_->current_max_id();
  for (const auto& raw : raw_urls) {
    std::optional<urlkit::CanonicalUrl> url;
    try {
      url = urlkit::canonicalize(raw);
    } catch (const Error& e) {
      report.rejected.emplace_back(raw, e.what());
      continue;
    }
    auto& find = impl_->find_url;
    find.reset();
    find.bind(1, url->str());
    const bool exists = find.step();
    find.reset();
    if (exists) {
      ++report.skipped;
      continue;
    }
    impl_->insert_row(std::nullopt, *url, "", strategy.score_url(*url), 0);
  }
  report.inserted = impl_->current_max_id() - before;
  tx.commit();
  return report;
}

CrawlBatch Frontier::claim_batch(int limit, std::chrono::milliseconds lease, std::string_view instance_id) {
  if (limit <= 0) throw Error(Errc::invalid_argument, "claim limit must be positive");
  impl_->require_schema();
  auto& conn = impl_->conn;
  const auto now = impl_->now();
  CrawlBatch batch;
  batch.claim_token = random_token();
  batch.lease_expiry = now + lease;

  sqlite::Transaction tx(conn, sqlite::TxMode::immediate);
  auto claim = conn.prepare(
      "UPDATE urls SET status = 'claimed', claim_token = ?1, claim_expiry = ?2 "
      "WHERE id IN (SELECT id FROM urls WHERE status = 'pending' "
      "ORDER BY priority DESC, id ASC LIMIT ?3) RETURNING " + std::string(kUrlColumns));
  claim.bind(1, batch.claim_token).bind(2, to_millis(batch.lease_expiry)).bind(3, limit);
  while (claim.step()) batch.urls.push_back(read_url(claim));
  if (batch.urls.empty()) {
    tx.commit();
    batch.claim_token.clear();
    return batch;
  }
  conn.prepare("INSERT INTO claims (token, instance_id, issued_at, expiry, state) VALUES (?1, ?2, ?3, ?4, 'active')")
      .bind(1, batch.claim_token)
      .bind(2, instance_id)
      .bind(3, to_millis(now))
      .bind(4, to_millis(batch.lease_expiry))
      .run();
  tx.commit();
  std::sort(batch.urls.begin(), batch.urls.end(), [](const UrlRecord& a, const UrlRecord& b) {
    return a.priority != b.priority ? a.priority > b.priority : a.id < b.id;
  });
  return batch;
}

SubmitReport Frontier::submit_discoveries(std::string_view claim_token,
                                          std::span<const SourceResult> results,
                                          const scoring::KeywordStrategy& strategy) {
  impl_->require_schema();
  auto& conn = impl_->conn;
  const auto now = impl_->now();
  SubmitReport report;

  sqlite::Transaction tx(conn, sqlite::TxMode::immediate);
  std::string instance_id;
  {
    auto claim = conn.prepare("SELECT instance_id, expiry, state FROM claims WHERE token = ?1");
    claim.bind(1, claim_token);
    if (!claim.step()) {
      throw Error(Errc::unknown_token, "unknown claim token '" + std::string(claim_token) + "'");
    }
    instance_id = claim.text(0);
    const auto expiry = from_millis(claim.int64(1));
    const auto state = claim.text(2);
    claim.reset();
    if (state == "expired" || (state == "active" && expiry < now)) {
      impl_->revert_claim(claim_token);
      conn.prepare("UPDATE claims SET state = 'expired' WHERE token = ?1").bind(1, claim_token).run();
      tx.commit();
      throw Error(Errc::expired_claim, "claim '" + std::string(claim_token) + "' expired; work discarded");
    }
  }

  const auto before = impl_->current_max_id();
  for (const auto& result : results) {
    const bool ok = result.fetch.ok();
    auto& mark = impl_->mark_source;
    mark.reset();
    mark.bind(1, ok ? "fetched" : "failed")
        .bind(2, result.fetch.http_status == 0 ? std::optional<std::int64_t>{}
                                               : std::optional<std::int64_t>{result.fetch.http_status})
        .bind(3, result.fetch.error ? std::optional<std::string>{std::string(fetcher::to_string(*result.fetch.error))}
                                    : std::optional<std::string>{})
        .bind(4, to_millis(now))
        .bind(5, instance_id)
        .bind(6, result.source.str())
        .bind(7, claim_token);
    if (!mark.step()) {
      mark.reset();
      throw Error(Errc::invalid_argument,
                  "'" + result.source.str() + "' is not an outstanding URL of claim '" + std::string(claim_token) + "'");
    }
    const std::int64_t source_id = mark.int64(0);
    mark.reset();
    ok ? ++report.fetched : ++report.failed;

    for (const auto& link : result.discovered) {
      ++report.links_offered;
      const auto target = urlkit::try_canonicalize(link.target_raw, result.fetch.final);
      if (!target) {
        ++report.rejected_links;
        continue;
      }
      impl_->insert_row(source_id, *target, link.context, strategy.score_url(*target),
                        strategy.score_link(link.context));
    }
  }
  report.new_urls = impl_->current_max_id() - before;
  impl_->close_claim_if_done(claim_token);
  tx.commit();
  return report;
}

std::int64_t Frontier::release_claims(std::string_view claim_token,
                                      std::span<const urlkit::CanonicalUrl> urls) {
  impl_->require_schema();
  auto& conn = impl_->conn;
  sqlite::Transaction tx(conn, sqlite::TxMode::immediate);
  std::int64_t released = 0;
  if (urls.empty()) {
    released = impl_->revert_claim(claim_token);
  } else {
    auto s = conn.prepare(
        "UPDATE urls SET status = 'pending', claim_token = NULL, claim_expiry = NULL "
        "WHERE claim_token = ?1 AND status = 'claimed' AND url = ?2");
    for (const auto& url : urls) {
      s.reset();
      s.bind(1, claim_token).bind(2, url.str()).run();
      released += conn.changes();
    }
  }
  impl_->close_claim_if_done(claim_token);
  tx.commit();
  return released;
}

std::int64_t Frontier::expire_leases(TimePoint now) {
  impl_->require_schema();
  auto& conn = impl_->conn;
  sqlite::Transaction tx(conn, sqlite::TxMode::immediate);
  conn.prepare(
          "UPDATE urls SET status = 'pending', claim_token = NULL, claim_expiry = NULL "
          "WHERE status = 'claimed' AND claim_expiry < ?1")
      .bind(1, to_millis(now))
      .run();
  const auto reverted = conn.changes();
  conn.prepare("UPDATE claims SET state = 'expired' WHERE state = 'active' AND expiry < ?1")
      .bind(1, to_millis(now))
      .run();
  tx.commit();
  return reverted;
}

FrontierStats Frontier::stats() {
  impl_->require_schema();
  auto& conn = impl_->conn;
  FrontierStats st;
  sqlite::Transaction tx(conn, sqlite::TxMode::deferred);
  auto by_status = conn.prepare("SELECT status, COUNT(*) FROM urls GROUP BY status");
  while (by_status.step()) {
    const auto n = by_status.int64(1);
    switch (parse_status(by_status.text(0))) {
      case UrlStatus::pending: st.pending = n; break;
      case UrlStatus::claimed: st.claimed = n; break;
      case UrlStatus::fetched: st.fetched = n; break;
      case UrlStatus::failed: st.failed = n; break;
    }
  }
  auto depth = conn.prepare("SELECT COALESCE(MAX(depth), 0) FROM urls");
  depth.step();
  st.max_depth = static_cast<int>(depth.int64(0));
  auto links = conn.prepare("SELECT COUNT(*) FROM links");
  links.step();
  st.total_links = links.int64(0);
  by_status.reset();
  depth.reset();
  links.reset();
  tx.commit();
  return st;
}

void Frontier::install_sql_functions(const scoring::KeywordStrategy& strategy) {
  auto* db = impl_->conn.get();
  auto* owned = new scoring::KeywordStrategy(strategy);
  auto destroy = [](void* p) { delete static_cast<scoring::KeywordStrategy*>(p); };
  constexpr int flags = SQLITE_UTF8 | SQLITE_DETERMINISTIC;
  int rc = sqlite3_create_function_v2(db, "score_url", 1, flags, owned, sql_score_url, nullptr, nullptr, destroy);
  if (rc != SQLITE_OK) {
    delete owned;
    sqlite::throw_error(db, rc, "create_function score_url");
  }
  auto* owned_link = new scoring::KeywordStrategy(strategy);
  rc = sqlite3_create_function_v2(db, "score_link", 1, flags, owned_link, sql_score_link, nullptr, nullptr, destroy);
  if (rc != SQLITE_OK) {
    delete owned_link;
    sqlite::throw_error(db, rc, "create_function score_link");
  }
  rc = sqlite3_create_function_v2(db, "normalize", 1, flags, nullptr, sql_normalize, nullptr, nullptr, nullptr);
  if (rc != SQLITE_OK) sqlite::throw_error(db, rc, "create_function normalize");
  rc = sqlite3_create_function_v2(db, "url_top", 1, flags, nullptr, sql_url_top, nullptr, nullptr, nullptr);
  if (rc != SQLITE_OK) sqlite::throw_error(db, rc, "create_function url_top");
}

std::optional<UrlRecord> Frontier::find(const urlkit::CanonicalUrl& url) {
  impl_->require_schema();
  auto s = impl_->conn.prepare("SELECT " + std::string(kUrlColumns) + " FROM urls WHERE url = ?1");
  s.bind(1, url.str());
  if (!s.step()) return std::nullopt;
  return read_url(s);
}

std::vector<UrlRecord> Frontier::urls(std::optional<UrlStatus> status) {
  impl_->require_schema();
  std::string sql = "SELECT " + std::string(kUrlColumns) + " FROM urls";
  if (status) sql += " WHERE status = ?1";
  sql += " ORDER BY id";
  auto s = impl_->conn.prepare(sql);
  if (status) s.bind(1, to_string(*status));
  std::vector<UrlRecord> out;
  while (s.step()) out.push_back(read_url(s));
  return out;
}

std::vector<LinkRecord> Frontier::links() {
  impl_->require_schema();
  auto s = impl_->conn.prepare("SELECT source_id, target_id, context, context_score FROM links ORDER BY source_id, target_id");
  std::vector<LinkRecord> out;
  while (s.step()) out.push_back({s.int64(0), s.int64(1), s.text(2), s.int64(3)});
  return out;
}

std::vector<UrlEdge> Frontier::link_urls() {
  impl_->require_schema();
  auto s = impl_->conn.prepare(
      "SELECT s.url, t.url FROM links l JOIN urls s ON s.id = l.source_id "
      "JOIN urls t ON t.id = l.target_id ORDER BY l.source_id, l.target_id");
  std::vector<UrlEdge> out;
  while (s.step()) out.push_back({s.text(0), s.text(1)});
  return out;
}

std::int64_t Frontier::query_int(std::string_view sql) {
  auto s = impl_->conn.prepare(sql);
  if (!s.step()) return 0;
  return s.int64(0);
}

TimePoint Frontier::now() const { return impl_->now(); }

}  // namespace yesql::frontier
