#pragma once

#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sqlmbr/core.hpp"
#include "sqlmbr/sqlexec.hpp"

namespace sqlmbr {

// ---------------------------------------------------------------------------
// Pipe-syntax lexing
// ---------------------------------------------------------------------------

/// A query cut at top-level "|>" boundaries. Joining the segments with the
/// separator reproduces the original text byte-for-byte.
struct PipeSegments {
    std::vector<std::string> segments;
    bool terminal = false;  // generation signaled completion
};

class PipeLexError : public std::runtime_error {
public:
    PipeLexError(std::string construct_, std::size_t offset_);
    std::string construct;
    std::size_t offset;
};

/// Split at every "|>" outside quoted regions, comments, and parentheses.
/// Throws PipeLexError on an unterminated string or block comment.
PipeSegments split_pipes(std::string_view sql);

/// Inverse of split_pipes.
std::string join_pipes(const PipeSegments& segments);

/// First k segments joined with the separator restored; 1 <= k <= size.
std::string prefix_of(const PipeSegments& segments, std::size_t k);

/// Rewrite a pipe-syntax query (or prefix) into standard SQL executable on
/// SQLite. Covers the single-SELECT operator chain: FROM, JOIN variants,
/// WHERE, SELECT, EXTEND, AGGREGATE [GROUP [AND ORDER] BY], DISTINCT,
/// ORDER BY, LIMIT, AS; other shapes collapse the accumulated query into a
/// derived table first. Text without top-level pipes that does not start
/// with FROM passes through unchanged. Throws std::invalid_argument on an
/// operator outside the supported subset.
std::string pipe_to_standard_sql(std::string_view pipe_sql);

// ---------------------------------------------------------------------------
// Generator interface
// ---------------------------------------------------------------------------

/// One sampled continuation: text up to the next pipe boundary (separator
/// excluded) or to end of query. `final` marks end of query; an empty text
/// is also a completion signal. `failed` marks a sampling failure.
struct Continuation {
    std::string text;
    bool final = false;
    bool failed = false;
};

struct GenRequest {
    std::string context;        // prompt context (question, schema, ...)
    std::string prefix;         // current accepted prefix
    std::string trajectory_id;  // stable id of the requesting trajectory
    int step = 0;               // per-trajectory 0-based sample counter
    int k = 1;                  // number of continuations requested
};

class Generator {
public:
    virtual ~Generator() = default;
    /// Returns exactly k continuations. Throws on unrecoverable failure.
    virtual std::vector<Continuation> generate(const GenRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Incremental pipe-wise decoding
// ---------------------------------------------------------------------------

inline constexpr int kInfinitePatience = std::numeric_limits<int>::max();

struct PipeDecodeOptions {
    int n = 5;                          // parallel trajectories
    int patience = 3;                   // rejections before pruning; kInfinitePatience disables
    int max_steps = 32;                 // guard against generators that never finish
    double reject_threshold = 1.0;      // rejection requires similarity-to-consensus below this
    ExecMode step_mode = ExecMode::exact;  // how prefixes are judged each step
    ExecLimits limits{};
    std::string context;                // forwarded to the generator
    unsigned concurrency = 0;
};

struct TrajectorySnapshot {
    std::string id;
    std::string prefix;
    int rejections = 0;
    std::string status;  // active | pruned | complete
};

struct PruneEvent {
    std::string pruned_id;
    std::string restarted_id;
};

struct DecodeStep {
    int step = 0;  // 1-based
    std::vector<TrajectorySnapshot> trajectories;  // state after extension, before pruning
    std::vector<std::string> outcome_summaries;
    SimilarityMatrix matrix;
    std::size_t consensus_index = 0;
    std::string consensus_id;
    bool consensus_tie = false;
    std::vector<PruneEvent> prunes;
    std::vector<std::string> completed_ids;
};

struct DecodeResult {
    SelectionReport report;             // final exec-MBR over completed queries
    std::string chosen_sql;             // pipe-syntax text of the winner
    std::vector<Candidate> final_pool;  // candidates the final selection ran over
    std::vector<DecodeStep> steps;
    bool incomplete = false;  // max_steps hit with no completed trajectory
};

/// Run execution-guided pipe-wise decoding: per step each active trajectory
/// samples one next segment, all current prefixes are executed and the
/// consensus prefix is chosen by MBR; trajectories that disagree with the
/// consensus accumulate rejections and are pruned-and-restarted from the
/// consensus prefix once rejections reach patience. The final answer is
/// exec-MBR over the completed full queries.
DecodeResult pipe_decode(const DbRef& db, Generator& gen, const PipeDecodeOptions& options);

}  // namespace sqlmbr
