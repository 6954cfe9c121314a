#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sqlmbr/core.hpp"

namespace sqlmbr {

enum class Dialect { sqlite };

struct DbRef {
    std::string path;
    Dialect dialect = Dialect::sqlite;
};

struct ExecLimits {
    std::chrono::milliseconds timeout{10000};
    std::int64_t max_rows = 5000;
    std::int64_t max_cells = 50000;
};

/// Run one read-only statement against the database and collect its rows.
/// The connection is opened read-only and non-read statement classes are
/// rejected before stepping; the database file is never modified. Rows are
/// returned in engine order, truncated at max_rows/max_cells with the
/// truncated flag set. Syntax/semantic failures, mutation attempts, and
/// multi-statement inputs yield EngineError; exceeding the wall-clock budget
/// yields Timeout.
ExecutionOutcome execute(const DbRef& db, std::string_view sql, const ExecLimits& limits = {});

/// Query-plan rows for the statement (EXPLAIN QUERY PLAN), kept verbatim.
/// Never reads user data rows. Same error taxonomy as execute().
ExecutionOutcome explain(const DbRef& db, std::string_view sql, const ExecLimits& limits = {});

enum class ExecMode { exact, plan };

/// Execute (or explain) every candidate; outcomes align with candidate
/// order, per-candidate failures never abort the batch. Each in-flight
/// execution uses an independent read-only connection; concurrency 0 picks a
/// hardware-based default, 1 forces sequential.
std::vector<ExecutionOutcome> execute_pool(const DbRef& db, const CandidatePool& pool,
                                           const ExecLimits& limits, ExecMode mode,
                                           unsigned concurrency = 0);

}  // namespace sqlmbr
