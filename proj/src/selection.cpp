#include "sqlmbr/selection.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_map>

#include "sqlmbr/sqltext.hpp"

namespace sqlmbr {

namespace {

// Smallest argmax + tie flag; scores must be non-empty.
SelectionReport finalize(const CandidatePool& pool, std::vector<double> scores,
                         SelectionMethod label) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    std::size_t at_max = 0;
    for (double s : scores)
        if (s == scores[best]) ++at_max;

    SelectionReport r;
    r.chosen_index = best;
    r.chosen_id = pool.candidates[best].id;
    r.scores = std::move(scores);
    r.method = label;
    r.tie = at_max >= 2;
    return r;
}

}  // namespace

SelectionReport mbr_select(const CandidatePool& pool, const SimilarityMatrix& matrix,
                           SelectionMethod label) {
    pool.validate();
    const std::size_t n = pool.size();
    if (matrix.size() != n)
        throw std::invalid_argument("mbr_select: matrix dimension " +
                                    std::to_string(matrix.size()) + " != pool size " +
                                    std::to_string(n));
    std::vector<double> scores(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += pool.candidates[j].weight * matrix.at(i, j);
        scores[i] = s;
    }
    return finalize(pool, std::move(scores), label);
}

std::string normalize_sql(std::string_view sql) {
    std::string out;
    out.reserve(sql.size());
    auto emit_space = [&out] {
        if (!out.empty() && out.back() != ' ') out.push_back(' ');
    };
    std::size_t i = 0;
    while (i < sql.size()) {
        if (auto region = sqltext::region_at(sql, i)) {
            std::size_t end = sqltext::region_end(sql, i, *region);
            switch (*region) {
                case sqltext::RegionKind::line_comment:
                case sqltext::RegionKind::block_comment:
                    // Unterminated block comment swallows the rest of the text.
                    if (end == sqltext::npos) end = sql.size();
                    emit_space();
                    break;
                default:
                    if (end == sqltext::npos) end = sql.size();  // unterminated: copy verbatim
                    out.append(sql.substr(i, end - i));
                    break;
            }
            i = end;
            continue;
        }
        const unsigned char c = static_cast<unsigned char>(sql[i]);
        if (std::isspace(c))
            emit_space();
        else
            out.push_back(static_cast<char>(std::toupper(c)));
        ++i;
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == ';')) out.pop_back();
    std::size_t b = 0;
    while (b < out.size() && out[b] == ' ') ++b;
    return out.substr(b);
}

SelectionReport majority_select(const CandidatePool& pool, bool normalized) {
    pool.validate();
    std::unordered_map<std::string, double> group_weight;
    std::vector<std::string> keys(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        keys[i] = normalized ? normalize_sql(pool.candidates[i].sql) : pool.candidates[i].sql;
        group_weight[keys[i]] += pool.candidates[i].weight;
    }
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) scores[i] = group_weight[keys[i]];
    return finalize(pool, std::move(scores), SelectionMethod::majority);
}

SelectionReport first_select(const CandidatePool& pool) {
    pool.validate();
    std::vector<double> scores(pool.size(), 0.0);
    scores[0] = 1.0;
    return finalize(pool, std::move(scores), SelectionMethod::first);
}

void attach_outcomes(SelectionReport& report, const std::vector<ExecutionOutcome>& outcomes) {
    report.per_candidate_outcome.clear();
    report.per_candidate_outcome.reserve(outcomes.size());
    bool any_ok = false;
    for (const auto& o : outcomes) {
        report.per_candidate_outcome.push_back(outcome_summary(o));
        any_ok = any_ok || ok(o);
    }
    report.all_failed = !outcomes.empty() && !any_ok;
}

}  // namespace sqlmbr
