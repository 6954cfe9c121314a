#pragma once

#include <string>
#include <string_view>

#include "sqlmbr/core.hpp"

namespace sqlmbr {

/// Zero-one vs graded utility flavors a selection can run under.
enum class UtilityKind { exec_exact, exec_plan, zero_one_normalized, zero_one_verbatim };

/// Expected-utility selection: scores[i] = sum_j weight_j * matrix[i][j]
/// (self term included); chosen = smallest index attaining the max.
/// Throws std::invalid_argument when matrix size != pool size.
SelectionReport mbr_select(const CandidatePool& pool, const SimilarityMatrix& matrix,
                           SelectionMethod label = SelectionMethod::exec_exact);

/// Lexical SQL canonicalization: comments stripped, whitespace outside
/// quoted regions collapsed to single spaces, text outside quoted regions
/// upper-cased, trailing semicolons removed, ends trimmed. Quoted contents
/// are untouched; unparseable text is normalized textually, never rejected.
std::string normalize_sql(std::string_view sql);

/// Majority vote over (optionally normalized) candidate texts; score of a
/// candidate is the total weight of its text group. Equivalent to mbr_select
/// with the corresponding zero-one matrix.
SelectionReport majority_select(const CandidatePool& pool, bool normalized);

/// Greedy baseline: always the pool's first candidate.
SelectionReport first_select(const CandidatePool& pool);

/// Fill per_candidate_outcome and the all_failed flag from outcomes.
void attach_outcomes(SelectionReport& report, const std::vector<ExecutionOutcome>& outcomes);

}  // namespace sqlmbr
