#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sqlmbr/core.hpp"

namespace sqlmbr {

/// Canonical form used for cell equality inside the metrics: numerically
/// equal integers and reals collapse to one value (12 significant digits),
/// text loses trailing whitespace, NaN becomes null.
Cell normalize_cell(const Cell& cell);

/// Column-name normalization applied before name matching: case-folded,
/// leading/trailing whitespace trimmed.
std::string normalize_column_name(std::string_view name);

/// Execution similarity between two outcomes, in [0,1]. Any failed outcome
/// scores 0 (including failure vs failure); two empty tables score 1. For
/// successful tables: columns are paired first by normalized name, then the
/// remainders by a max-weight assignment; the score is the summed per-pair
/// multiset intersection of canonical cells over the summed per-pair larger
/// column size (unmatched columns count their own cells).
double table_similarity(const ExecutionOutcome& a, const ExecutionOutcome& b);

/// Same metric applied to query-plan tables produced by explain().
double plan_similarity(const ExecutionOutcome& a, const ExecutionOutcome& b);

/// Symmetric matrix over a pool's outcomes. Diagonal is 1 for successful
/// outcomes and 0 for failed ones; each off-diagonal pair is computed once.
SimilarityMatrix similarity_matrix(const std::vector<ExecutionOutcome>& outcomes);

// ---------------------------------------------------------------------------
// Input/output agreement for generic functions
// ---------------------------------------------------------------------------

/// One observed output for a shared input; `failed` marks an execution
/// failure, which equals nothing (not even another failure).
struct IoOutput {
    bool failed = false;
    Cell value{};

    static IoOutput failure() { return IoOutput{true, {}}; }
    static IoOutput of(Cell v) { return IoOutput{false, std::move(v)}; }
};

using OutputVector = std::vector<IoOutput>;

/// Fraction of indices where both outputs succeeded and are canonically
/// equal. Throws std::invalid_argument on length mismatch or empty vectors.
double io_agreement(const OutputVector& a, const OutputVector& b);

// ---------------------------------------------------------------------------
// Internals exposed for reuse and testing
// ---------------------------------------------------------------------------
namespace detail {

/// Max-weight assignment value for a rectangular non-negative weight matrix
/// (Hungarian method); returns the best total weight of a maximum-cardinality
/// pairing of rows to columns.
std::int64_t max_assignment(const std::vector<std::vector<std::int64_t>>& weights);

}  // namespace detail

}  // namespace sqlmbr
