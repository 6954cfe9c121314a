#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace sqlmbr {

// ---------------------------------------------------------------------------
// Cells and result tables
// ---------------------------------------------------------------------------

struct Blob {
    std::vector<std::uint8_t> bytes;
    friend bool operator==(const Blob&, const Blob&) = default;
    friend auto operator<=>(const Blob&, const Blob&) = default;
};

/// One value of an executed query: null, integer, real, text, or bytes.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;

/// Normalized execution output: named columns of typed cells, row-major.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;  // every row has columns.size() cells
    bool truncated = false;               // row/cell cap was hit

    std::size_t cell_count() const { return columns.size() * rows.size(); }
    friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

struct EngineError {
    std::string message;  // non-empty
    friend bool operator==(const EngineError&, const EngineError&) = default;
};

struct Timeout {
    std::chrono::milliseconds limit{0};
    friend bool operator==(const Timeout&, const Timeout&) = default;
};

/// Per-candidate execution result. Exactly one of table / error / timeout.
using ExecutionOutcome = std::variant<ResultTable, EngineError, Timeout>;

inline bool ok(const ExecutionOutcome& o) { return std::holds_alternative<ResultTable>(o); }

inline const ResultTable* table_of(const ExecutionOutcome& o) {
    return std::get_if<ResultTable>(&o);
}

/// Short human-readable form, e.g. "ok(2x3)", "error: no such table", "timeout: 100ms".
std::string outcome_summary(const ExecutionOutcome& o);

// ---------------------------------------------------------------------------
// Candidates
// ---------------------------------------------------------------------------

/// One sampled SQL text. `source` tags the producing model/run so pools can
/// mix samples from several generators; `weight` is a positive sample
/// count/importance (1 per raw sample, duplicates never merged).
struct Candidate {
    std::string id;
    std::string sql;
    std::string source;
    double weight = 1.0;
};

struct CandidatePool {
    std::string question;
    std::vector<Candidate> candidates;  // order is the tie-breaking order everywhere
    std::string db_ref;

    /// Throws std::invalid_argument on a broken invariant: empty pool,
    /// duplicate ids, non-positive weight, or blank sql.
    void validate() const;

    std::size_t size() const { return candidates.size(); }
};

// ---------------------------------------------------------------------------
// Similarity matrix
// ---------------------------------------------------------------------------

/// Symmetric n x n utilities in [0,1] over a candidate pool.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    explicit SimilarityMatrix(std::size_t n) : n_(n), cells_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double at(std::size_t i, std::size_t j) const { return cells_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, double v) { cells_[i * n_ + j] = v; }
    void set_symmetric(std::size_t i, std::size_t j, double v) {
        set(i, j, v);
        set(j, i, v);
    }

    friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> cells_;
};

// ---------------------------------------------------------------------------
// Selection report
// ---------------------------------------------------------------------------

enum class SelectionMethod { exec_exact, exec_plan, majority, first };

const char* method_name(SelectionMethod m);

struct SelectionReport {
    std::size_t chosen_index = 0;
    std::string chosen_id;
    std::vector<double> scores;  // scores[chosen_index] == max(scores)
    SelectionMethod method = SelectionMethod::exec_exact;
    std::vector<std::string> per_candidate_outcome;  // empty for text-only methods
    bool tie = false;        // >= 2 indices attain the max score
    bool all_failed = false;  // every candidate failed execution
};

}  // namespace sqlmbr
