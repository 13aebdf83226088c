// Copyright 2026 The Persuade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "persuade/store.hpp"

#include <sqlite3.h>

#include <chrono>
#include <ctime>

#include "json.hpp"
#include "persuade/error.hpp"

namespace persuade {

using nlohmann::json;

const char* resolution_method_name(ResolutionMethod m) {
    return m == ResolutionMethod::Agreement ? "agreement" : "third-annotator-majority";
}

std::string utc_now() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

namespace {

const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS samples (
  sample_id TEXT PRIMARY KEY,
  body TEXT NOT NULL,
  width INTEGER NOT NULL,
  height INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS rounds (
  round_t INTEGER PRIMARY KEY,
  open INTEGER NOT NULL,
  opened_at TEXT NOT NULL,
  checkpoint_hash TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS assignments (
  round_t INTEGER NOT NULL,
  sample_id TEXT NOT NULL,
  annotator_id TEXT NOT NULL,
  slot INTEGER NOT NULL,
  PRIMARY KEY (round_t, sample_id, annotator_id)
);
CREATE TABLE IF NOT EXISTS annotations (
  record_id INTEGER PRIMARY KEY AUTOINCREMENT,
  round_t INTEGER NOT NULL,
  sample_id TEXT NOT NULL,
  annotator_id TEXT NOT NULL,
  labels TEXT NOT NULL,
  submitted_at TEXT NOT NULL,
  UNIQUE (round_t, sample_id, annotator_id)
);
CREATE TABLE IF NOT EXISTS resolutions (
  round_t INTEGER NOT NULL,
  sample_id TEXT NOT NULL,
  final_labels TEXT NOT NULL,
  method TEXT NOT NULL,
  record_ids TEXT NOT NULL,
  PRIMARY KEY (round_t, sample_id)
);
CREATE TABLE IF NOT EXISTS masks (
  mask_id INTEGER PRIMARY KEY AUTOINCREMENT,
  sample_id TEXT NOT NULL,
  strategy_id TEXT NOT NULL,
  annotator_id TEXT NOT NULL,
  width INTEGER NOT NULL,
  height INTEGER NOT NULL,
  rle TEXT NOT NULL,
  submitted_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS gold (
  sample_id TEXT PRIMARY KEY,
  labels TEXT NOT NULL,
  round_t INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS kv (
  key TEXT PRIMARY KEY,
  value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS audit (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  at TEXT NOT NULL,
  kind TEXT NOT NULL,
  detail TEXT NOT NULL
);
)sql";

class Stmt {
public:
    Stmt(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &st_, nullptr) != SQLITE_OK)
            throw IoError(std::string("store: prepare failed: ") + sqlite3_errmsg(db));
    }
    ~Stmt() { sqlite3_finalize(st_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int i, const std::string& v) {
        check(sqlite3_bind_text(st_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Stmt& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(st_, i, v));
        return *this;
    }
    Stmt& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }

    /// True while a row is available.
    bool step() {
        const int rc = sqlite3_step(st_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        if (rc == SQLITE_CONSTRAINT) throw ConflictError(std::string("store: ") + sqlite3_errmsg(db_));
        throw IoError(std::string("store: step failed: ") + sqlite3_errmsg(db_));
    }
    void run() {
        while (step()) {
        }
    }

    std::string text(int col) const {
        const auto* p = sqlite3_column_text(st_, col);
        return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(st_, col)))
                 : std::string();
    }
    std::int64_t i64(int col) const { return sqlite3_column_int64(st_, col); }
    int i32(int col) const { return sqlite3_column_int(st_, col); }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) throw IoError(std::string("store: bind failed: ") + sqlite3_errmsg(db_));
    }
    sqlite3* db_;
    sqlite3_stmt* st_ = nullptr;
};

std::string labels_json(const StrategySet& s) { return json(s.ids()).dump(); }
StrategySet labels_from(const std::string& text) { return StrategySet(json::parse(text).get<std::vector<std::string>>()); }

AnnotationRecord read_annotation(const Stmt& st) {
    AnnotationRecord r;
    r.record_id = st.i64(0);
    r.round_t = st.i32(1);
    r.sample_id = st.text(2);
    r.annotator_id = st.text(3);
    r.labels = labels_from(st.text(4));
    r.submitted_at = st.text(5);
    return r;
}

constexpr const char* kAnnotationCols = "SELECT record_id, round_t, sample_id, annotator_id, labels, submitted_at FROM annotations";

ResolutionRecord read_resolution(const Stmt& st) {
    ResolutionRecord r;
    r.round_t = st.i32(0);
    r.sample_id = st.text(1);
    r.final_labels = labels_from(st.text(2));
    r.method = st.text(3) == "agreement" ? ResolutionMethod::Agreement : ResolutionMethod::ThirdAnnotatorMajority;
    r.record_ids = json::parse(st.text(4)).get<std::vector<std::int64_t>>();
    return r;
}

constexpr const char* kResolutionCols = "SELECT round_t, sample_id, final_labels, method, record_ids FROM resolutions";

MaskRecord read_mask(const Stmt& st) {
    MaskRecord m;
    m.mask_id = st.i64(0);
    m.sample_id = st.text(1);
    m.strategy_id = st.text(2);
    m.annotator_id = st.text(3);
    m.mask = rle_from_string(st.text(4));
    m.submitted_at = st.text(5);
    return m;
}

constexpr const char* kMaskCols = "SELECT mask_id, sample_id, strategy_id, annotator_id, rle, submitted_at FROM masks";

RoundRow read_round(const Stmt& st) {
    return RoundRow{st.i32(0), st.i32(1) != 0, st.text(2), st.text(3)};
}

}  // namespace

Store::Store(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        throw IoError("store: cannot open " + path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    exec("PRAGMA journal_mode=WAL;");
    exec("PRAGMA synchronous=NORMAL;");
    exec(kSchema);
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) const {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw IoError("store: " + msg);
    }
}

void Store::transaction(const std::function<void()>& body) {
    std::lock_guard lock(mu_);
    if (tx_depth_ > 0) {
        // Nested: joins the enclosing transaction.
        ++tx_depth_;
        try {
            body();
        } catch (...) {
            --tx_depth_;
            throw;
        }
        --tx_depth_;
        return;
    }
    exec("BEGIN IMMEDIATE;");
    tx_depth_ = 1;
    try {
        body();
        tx_depth_ = 0;
        exec("COMMIT;");
    } catch (...) {
        tx_depth_ = 0;
        exec("ROLLBACK;");
        throw;
    }
}

bool Store::insert_sample(const StoredSample& s) {
    std::lock_guard lock(mu_);
    Stmt st(db_, "INSERT OR IGNORE INTO samples (sample_id, body, width, height) VALUES (?, ?, ?, ?)");
    st.bind(1, s.sample.sample_id).bind(2, sample_to_json(s.sample)).bind(3, s.width).bind(4, s.height).run();
    return sqlite3_changes(db_) > 0;
}

std::optional<StoredSample> Store::sample(const std::string& id) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT body, width, height FROM samples WHERE sample_id = ?");
    st.bind(1, id);
    if (!st.step()) return std::nullopt;
    return StoredSample{sample_from_json(st.text(0)), st.i32(1), st.i32(2)};
}

std::vector<StoredSample> Store::samples() const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT body, width, height FROM samples ORDER BY sample_id");
    std::vector<StoredSample> out;
    while (st.step()) out.push_back({sample_from_json(st.text(0)), st.i32(1), st.i32(2)});
    return out;
}

void Store::insert_round(int round_t) {
    std::lock_guard lock(mu_);
    Stmt(db_, "INSERT INTO rounds (round_t, open, opened_at) VALUES (?, 1, ?)").bind(1, round_t).bind(2, utc_now()).run();
}

std::optional<RoundRow> Store::round(int round_t) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT round_t, open, opened_at, checkpoint_hash FROM rounds WHERE round_t = ?");
    st.bind(1, round_t);
    if (!st.step()) return std::nullopt;
    return read_round(st);
}

std::vector<RoundRow> Store::rounds() const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT round_t, open, opened_at, checkpoint_hash FROM rounds ORDER BY round_t");
    std::vector<RoundRow> out;
    while (st.step()) out.push_back(read_round(st));
    return out;
}

void Store::close_round(int round_t, const std::string& checkpoint_hash) {
    std::lock_guard lock(mu_);
    Stmt(db_, "UPDATE rounds SET open = 0, checkpoint_hash = ? WHERE round_t = ?").bind(1, checkpoint_hash).bind(2, round_t).run();
}

void Store::insert_assignment(const Assignment& a) {
    std::lock_guard lock(mu_);
    Stmt(db_, "INSERT INTO assignments (round_t, sample_id, annotator_id, slot) VALUES (?, ?, ?, ?)")
        .bind(1, a.round_t)
        .bind(2, a.sample_id)
        .bind(3, a.annotator_id)
        .bind(4, a.slot)
        .run();
}

std::vector<Assignment> Store::assignments(int round_t) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT round_t, sample_id, annotator_id, slot FROM assignments WHERE round_t = ? ORDER BY sample_id, slot");
    st.bind(1, round_t);
    std::vector<Assignment> out;
    while (st.step()) out.push_back({st.i32(0), st.text(1), st.text(2), st.i32(3)});
    return out;
}

std::vector<Assignment> Store::assignments(int round_t, const std::string& sample_id) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT round_t, sample_id, annotator_id, slot FROM assignments WHERE round_t = ? AND sample_id = ? ORDER BY slot");
    st.bind(1, round_t).bind(2, sample_id);
    std::vector<Assignment> out;
    while (st.step()) out.push_back({st.i32(0), st.text(1), st.text(2), st.i32(3)});
    return out;
}

std::pair<AnnotationRecord, bool> Store::upsert_annotation(const AnnotationRecord& r) {
    std::lock_guard lock(mu_);
    bool replaced = false;
    {
        Stmt st(db_, "SELECT record_id FROM annotations WHERE round_t = ? AND sample_id = ? AND annotator_id = ?");
        st.bind(1, r.round_t).bind(2, r.sample_id).bind(3, r.annotator_id);
        replaced = st.step();
    }
    AnnotationRecord stored = r;
    if (stored.submitted_at.empty()) stored.submitted_at = utc_now();
    if (replaced) {
        Stmt(db_, "UPDATE annotations SET labels = ?, submitted_at = ? WHERE round_t = ? AND sample_id = ? AND annotator_id = ?")
            .bind(1, labels_json(stored.labels))
            .bind(2, stored.submitted_at)
            .bind(3, r.round_t)
            .bind(4, r.sample_id)
            .bind(5, r.annotator_id)
            .run();
        Stmt st(db_, "SELECT record_id FROM annotations WHERE round_t = ? AND sample_id = ? AND annotator_id = ?");
        st.bind(1, r.round_t).bind(2, r.sample_id).bind(3, r.annotator_id);
        st.step();
        stored.record_id = st.i64(0);
    } else {
        Stmt(db_, "INSERT INTO annotations (round_t, sample_id, annotator_id, labels, submitted_at) VALUES (?, ?, ?, ?, ?)")
            .bind(1, r.round_t)
            .bind(2, r.sample_id)
            .bind(3, r.annotator_id)
            .bind(4, labels_json(stored.labels))
            .bind(5, stored.submitted_at)
            .run();
        stored.record_id = sqlite3_last_insert_rowid(db_);
    }
    return {stored, replaced};
}

std::vector<AnnotationRecord> Store::annotations(int round_t, const std::string& sample_id) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, (std::string(kAnnotationCols) + " WHERE round_t = ? AND sample_id = ? ORDER BY record_id").c_str());
    st.bind(1, round_t).bind(2, sample_id);
    std::vector<AnnotationRecord> out;
    while (st.step()) out.push_back(read_annotation(st));
    return out;
}

std::vector<AnnotationRecord> Store::annotations(int round_t) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, (std::string(kAnnotationCols) + " WHERE round_t = ? ORDER BY record_id").c_str());
    st.bind(1, round_t);
    std::vector<AnnotationRecord> out;
    while (st.step()) out.push_back(read_annotation(st));
    return out;
}

std::vector<AnnotationRecord> Store::all_annotations() const {
    std::lock_guard lock(mu_);
    Stmt st(db_, (std::string(kAnnotationCols) + " ORDER BY record_id").c_str());
    std::vector<AnnotationRecord> out;
    while (st.step()) out.push_back(read_annotation(st));
    return out;
}

void Store::put_resolution(const ResolutionRecord& r) {
    std::lock_guard lock(mu_);
    Stmt(db_, "INSERT OR REPLACE INTO resolutions (round_t, sample_id, final_labels, method, record_ids) VALUES (?, ?, ?, ?, ?)")
        .bind(1, r.round_t)
        .bind(2, r.sample_id)
        .bind(3, labels_json(r.final_labels))
        .bind(4, std::string(resolution_method_name(r.method)))
        .bind(5, json(r.record_ids).dump())
        .run();
}

void Store::delete_resolution(int round_t, const std::string& sample_id) {
    std::lock_guard lock(mu_);
    Stmt(db_, "DELETE FROM resolutions WHERE round_t = ? AND sample_id = ?").bind(1, round_t).bind(2, sample_id).run();
}

std::optional<ResolutionRecord> Store::resolution(int round_t, const std::string& sample_id) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, (std::string(kResolutionCols) + " WHERE round_t = ? AND sample_id = ?").c_str());
    st.bind(1, round_t).bind(2, sample_id);
    if (!st.step()) return std::nullopt;
    return read_resolution(st);
}

std::vector<ResolutionRecord> Store::resolutions(int round_t) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, (std::string(kResolutionCols) + " WHERE round_t = ? ORDER BY sample_id").c_str());
    st.bind(1, round_t);
    std::vector<ResolutionRecord> out;
    while (st.step()) out.push_back(read_resolution(st));
    return out;
}

std::optional<ResolutionRecord> Store::latest_resolution(const std::string& sample_id) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, (std::string(kResolutionCols) + " WHERE sample_id = ? ORDER BY round_t DESC LIMIT 1").c_str());
    st.bind(1, sample_id);
    if (!st.step()) return std::nullopt;
    return read_resolution(st);
}

std::int64_t Store::insert_mask(const MaskRecord& m) {
    std::lock_guard lock(mu_);
    Stmt(db_, "INSERT INTO masks (sample_id, strategy_id, annotator_id, width, height, rle, submitted_at) VALUES (?, ?, ?, ?, ?, ?, ?)")
        .bind(1, m.sample_id)
        .bind(2, m.strategy_id)
        .bind(3, m.annotator_id)
        .bind(4, m.mask.width)
        .bind(5, m.mask.height)
        .bind(6, rle_to_string(m.mask))
        .bind(7, m.submitted_at.empty() ? utc_now() : m.submitted_at)
        .run();
    return sqlite3_last_insert_rowid(db_);
}

std::vector<MaskRecord> Store::masks(const std::string& sample_id, const std::string& strategy_id) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, (std::string(kMaskCols) + " WHERE sample_id = ? AND strategy_id = ? ORDER BY mask_id").c_str());
    st.bind(1, sample_id).bind(2, strategy_id);
    std::vector<MaskRecord> out;
    while (st.step()) out.push_back(read_mask(st));
    return out;
}

std::vector<MaskRecord> Store::all_masks() const {
    std::lock_guard lock(mu_);
    Stmt st(db_, (std::string(kMaskCols) + " ORDER BY mask_id").c_str());
    std::vector<MaskRecord> out;
    while (st.step()) out.push_back(read_mask(st));
    return out;
}

void Store::put_gold(const std::string& sample_id, const StrategySet& labels, int round_t) {
    std::lock_guard lock(mu_);
    Stmt(db_, "INSERT OR REPLACE INTO gold (sample_id, labels, round_t) VALUES (?, ?, ?)")
        .bind(1, sample_id)
        .bind(2, labels_json(labels))
        .bind(3, round_t)
        .run();
}

std::map<std::string, StrategySet> Store::gold() const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT sample_id, labels FROM gold");
    std::map<std::string, StrategySet> out;
    while (st.step()) out[st.text(0)] = labels_from(st.text(1));
    return out;
}

void Store::put_kv(const std::string& key, const std::string& value) {
    std::lock_guard lock(mu_);
    Stmt(db_, "INSERT OR REPLACE INTO kv (key, value) VALUES (?, ?)").bind(1, key).bind(2, value).run();
}

std::optional<std::string> Store::get_kv(const std::string& key) const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT value FROM kv WHERE key = ?");
    st.bind(1, key);
    if (!st.step()) return std::nullopt;
    return st.text(0);
}

void Store::audit(const std::string& kind, const std::string& detail_json) {
    std::lock_guard lock(mu_);
    Stmt(db_, "INSERT INTO audit (at, kind, detail) VALUES (?, ?, ?)").bind(1, utc_now()).bind(2, kind).bind(3, detail_json).run();
}

std::vector<std::pair<std::string, std::string>> Store::audit_log() const {
    std::lock_guard lock(mu_);
    Stmt st(db_, "SELECT kind, detail FROM audit ORDER BY id");
    std::vector<std::pair<std::string, std::string>> out;
    while (st.step()) out.emplace_back(st.text(0), st.text(1));
    return out;
}

}  // namespace persuade
