#include "sqlmbr/sqlexec.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace sqlmbr {

namespace {

struct Deadline {
    std::chrono::steady_clock::time_point at;
    bool fired = false;
};

int progress_guard(void* ctx) {
    auto* d = static_cast<Deadline*>(ctx);
    if (std::chrono::steady_clock::now() >= d->at) {
        d->fired = true;
        return 1;  // interrupt the statement
    }
    return 0;
}

struct Connection {
    sqlite3* db = nullptr;
    ~Connection() {
        if (db) sqlite3_close_v2(db);
    }
};

struct Statement {
    sqlite3_stmt* stmt = nullptr;
    ~Statement() {
        if (stmt) sqlite3_finalize(stmt);
    }
};

Cell read_cell(sqlite3_stmt* stmt, int col) {
    switch (sqlite3_column_type(stmt, col)) {
        case SQLITE_INTEGER:
            return Cell{static_cast<std::int64_t>(sqlite3_column_int64(stmt, col))};
        case SQLITE_FLOAT: return Cell{sqlite3_column_double(stmt, col)};
        case SQLITE_TEXT: {
            const unsigned char* p = sqlite3_column_text(stmt, col);
            const int n = sqlite3_column_bytes(stmt, col);
            return Cell{std::string(reinterpret_cast<const char*>(p), static_cast<size_t>(n))};
        }
        case SQLITE_BLOB: {
            const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt, col));
            const int n = sqlite3_column_bytes(stmt, col);
            return Cell{Blob{std::vector<std::uint8_t>(p, p + n)}};
        }
        default: return Cell{std::monostate{}};
    }
}

// True when the remaining text holds nothing but whitespace/comments.
bool tail_is_blank(sqlite3* db, const char* tail) {
    if (!tail || !*tail) return true;
    Statement probe;
    const int rc = sqlite3_prepare_v2(db, tail, -1, &probe.stmt, nullptr);
    return rc == SQLITE_OK && probe.stmt == nullptr;
}

void check_limits(const ExecLimits& limits) {
    if (limits.timeout.count() <= 0 || limits.max_rows <= 0 || limits.max_cells <= 0)
        throw std::invalid_argument("execution limits must be strictly positive");
}

ExecutionOutcome run(const DbRef& ref, std::string_view sql, const ExecLimits& limits,
                     bool plan_mode) {
    check_limits(limits);
    Connection conn;
    int rc = sqlite3_open_v2(ref.path.c_str(), &conn.db,
                             SQLITE_OPEN_READONLY | SQLITE_OPEN_FULLMUTEX, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = conn.db ? sqlite3_errmsg(conn.db) : "out of memory";
        return EngineError{"cannot open database '" + ref.path + "': " + msg};
    }
    sqlite3_exec(conn.db, "PRAGMA query_only=ON", nullptr, nullptr, nullptr);

    Deadline deadline{std::chrono::steady_clock::now() + limits.timeout};
    sqlite3_progress_handler(conn.db, 500, progress_guard, &deadline);

    std::string text;
    if (plan_mode) {
        text = "EXPLAIN QUERY PLAN ";
        text.append(sql);
    } else {
        text.assign(sql);
    }

    Statement st;
    const char* tail = nullptr;
    rc = sqlite3_prepare_v2(conn.db, text.c_str(), -1, &st.stmt, &tail);
    if (rc != SQLITE_OK) {
        if (deadline.fired) return Timeout{limits.timeout};
        return EngineError{sqlite3_errmsg(conn.db)};
    }
    if (st.stmt == nullptr) return EngineError{"no SQL statement found"};
    if (!tail_is_blank(conn.db, tail))
        return EngineError{"multiple SQL statements are not allowed"};
    if (!sqlite3_stmt_readonly(st.stmt))
        return EngineError{"write statements are not permitted in a read-only sandbox"};

    ResultTable table;
    const int ncols = sqlite3_column_count(st.stmt);
    table.columns.reserve(static_cast<size_t>(ncols));
    for (int c = 0; c < ncols; ++c) {
        const char* name = sqlite3_column_name(st.stmt, c);
        table.columns.emplace_back(name ? name : "");
    }

    while (true) {
        rc = sqlite3_step(st.stmt);
        if (rc == SQLITE_ROW) {
            if (static_cast<std::int64_t>(table.rows.size()) >= limits.max_rows ||
                static_cast<std::int64_t>((table.rows.size() + 1) * table.columns.size()) >
                    limits.max_cells) {
                table.truncated = true;
                break;
            }
            std::vector<Cell> row;
            row.reserve(static_cast<size_t>(ncols));
            for (int c = 0; c < ncols; ++c) row.push_back(read_cell(st.stmt, c));
            table.rows.push_back(std::move(row));
            continue;
        }
        if (rc == SQLITE_DONE) break;
        if (deadline.fired) return Timeout{limits.timeout};
        return EngineError{sqlite3_errmsg(conn.db)};
    }
    return table;
}

}  // namespace

ExecutionOutcome execute(const DbRef& db, std::string_view sql, const ExecLimits& limits) {
    return run(db, sql, limits, /*plan_mode=*/false);
}

ExecutionOutcome explain(const DbRef& db, std::string_view sql, const ExecLimits& limits) {
    return run(db, sql, limits, /*plan_mode=*/true);
}

std::vector<ExecutionOutcome> execute_pool(const DbRef& db, const CandidatePool& pool,
                                           const ExecLimits& limits, ExecMode mode,
                                           unsigned concurrency) {
    pool.validate();
    const std::size_t n = pool.size();
    std::vector<ExecutionOutcome> outcomes(n, EngineError{"not executed"});

    unsigned workers = concurrency;
    if (workers == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        workers = std::clamp(hw == 0 ? 2u : hw, 1u, 8u);
    }
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n));

    auto task = [&](std::size_t i) {
        const auto& sql = pool.candidates[i].sql;
        outcomes[i] = mode == ExecMode::exact ? execute(db, sql, limits)
                                              : explain(db, sql, limits);
    };

    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return outcomes;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        threads.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
        });
    for (auto& t : threads) t.join();
    return outcomes;
}

}  // namespace sqlmbr
