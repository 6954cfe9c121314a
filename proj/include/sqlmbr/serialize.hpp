#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "sqlmbr/core.hpp"

namespace sqlmbr {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Interchange format for the domain types (round-trip safe)
// ---------------------------------------------------------------------------

json cell_to_json(const Cell&);
Cell cell_from_json(const json&);

json table_to_json(const ResultTable&);
ResultTable table_from_json(const json&);

json outcome_to_json(const ExecutionOutcome&);
ExecutionOutcome outcome_from_json(const json&);

json candidate_to_json(const Candidate&);
Candidate candidate_from_json(const json&);

json pool_to_json(const CandidatePool&);
CandidatePool pool_from_json(const json&);

json matrix_to_json(const SimilarityMatrix&);
SimilarityMatrix matrix_from_json(const json&);

json report_to_json(const SelectionReport&);
SelectionReport report_from_json(const json&);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

/// Rejects unknown keys so config typos never pass silently.
void strict_keys(const json& object, std::initializer_list<const char*> allowed,
                 const std::string& context);

json load_json_file(const std::filesystem::path& file);
void write_json_file(const std::filesystem::path& file, const json& value);

/// Candidate file: one JSON object {question, db?, candidates:[...]} or
/// JSONL with one candidate object per line.
CandidatePool load_candidates_file(const std::filesystem::path& file);

/// Matrix CSV: one row per line, values comma-separated.
std::string matrix_to_csv(const SimilarityMatrix&);

// ---------------------------------------------------------------------------
// Decode traces
// ---------------------------------------------------------------------------

struct DecodeStep;
struct DecodeResult;

json decode_step_to_json(const DecodeStep&);
json decode_result_to_json(const DecodeResult&);

/// Structured decode log: one JSON record per step, then one final record.
void write_trace_jsonl(const std::filesystem::path& file, const DecodeResult&);
std::string trace_to_jsonl(const DecodeResult&);

}  // namespace sqlmbr
