#include "sqlmbr/pipe.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>

#include "sqlmbr/selection.hpp"
#include "sqlmbr/similarity.hpp"
#include "sqlmbr/sqltext.hpp"

namespace sqlmbr {

PipeLexError::PipeLexError(std::string construct_, std::size_t offset_)
    : std::runtime_error("unterminated " + construct_ + " starting at offset " +
                         std::to_string(offset_)),
      construct(std::move(construct_)),
      offset(offset_) {}

PipeSegments split_pipes(std::string_view sql) {
    PipeSegments out;
    std::string current;
    std::size_t depth = 0;
    std::size_t i = 0;
    while (i < sql.size()) {
        if (auto region = sqltext::region_at(sql, i)) {
            const std::size_t end = sqltext::region_end(sql, i, *region);
            if (end == sqltext::npos) throw PipeLexError(sqltext::region_name(*region), i);
            current.append(sql.substr(i, end - i));
            i = end;
            continue;
        }
        const char c = sql[i];
        if (c == '(') ++depth;
        if (c == ')' && depth > 0) --depth;
        if (depth == 0 && c == '|' && i + 1 < sql.size() && sql[i + 1] == '>') {
            out.segments.push_back(std::move(current));
            current.clear();
            i += 2;
            continue;
        }
        current.push_back(c);
        ++i;
    }
    out.segments.push_back(std::move(current));
    return out;
}

std::string join_pipes(const PipeSegments& s) {
    std::string out;
    for (std::size_t i = 0; i < s.segments.size(); ++i) {
        if (i) out += "|>";
        out += s.segments[i];
    }
    return out;
}

std::string prefix_of(const PipeSegments& s, std::size_t k) {
    if (k < 1 || k > s.segments.size())
        throw std::out_of_range("prefix_of: k=" + std::to_string(k) + " out of [1," +
                                std::to_string(s.segments.size()) + "]");
    std::string out;
    for (std::size_t i = 0; i < k; ++i) {
        if (i) out += "|>";
        out += s.segments[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipe-syntax -> standard SQL
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

// Leading keyword of a segment (letters only), upper-cased.
std::string leading_word(std::string_view s) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    std::size_t e = b;
    while (e < s.size() && (std::isalpha(static_cast<unsigned char>(s[e])) || s[e] == '_')) ++e;
    return upper(s.substr(b, e - b));
}

std::string after_word(std::string_view s, std::size_t words) {
    std::size_t i = 0;
    for (std::size_t w = 0; w < words; ++w) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    return trim(s.substr(i));
}

// Case-insensitive search for a top-level keyword sequence like "GROUP BY";
// quoted regions, comments and parenthesized text are skipped.
std::size_t find_toplevel(std::string_view text, const std::vector<std::string>& words,
                          std::size_t from = 0) {
    std::size_t depth = 0;
    std::size_t i = from;
    auto word_at = [&](std::size_t pos, const std::string& w, std::size_t& end) {
        if (pos + w.size() > text.size()) return false;
        for (std::size_t k = 0; k < w.size(); ++k)
            if (std::toupper(static_cast<unsigned char>(text[pos + k])) != w[k]) return false;
        const bool left_ok =
            pos == 0 || !(std::isalnum(static_cast<unsigned char>(text[pos - 1])) ||
                          text[pos - 1] == '_');
        const std::size_t after = pos + w.size();
        const bool right_ok =
            after >= text.size() || !(std::isalnum(static_cast<unsigned char>(text[after])) ||
                                      text[after] == '_');
        if (!left_ok || !right_ok) return false;
        end = after;
        return true;
    };
    while (i < text.size()) {
        if (auto region = sqltext::region_at(text, i)) {
            std::size_t end = sqltext::region_end(text, i, *region);
            i = end == sqltext::npos ? text.size() : end;
            continue;
        }
        if (text[i] == '(') ++depth;
        if (text[i] == ')' && depth > 0) --depth;
        if (depth == 0) {
            std::size_t pos = i, end = 0;
            bool all = true;
            for (const auto& w : words) {
                while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
                    ++pos;
                if (!word_at(pos, w, end)) {
                    all = false;
                    break;
                }
                pos = end;
            }
            if (all) return i;
        }
        ++i;
    }
    return sqltext::npos;
}

// Slots of the standard SELECT under construction.
struct QueryBuilder {
    std::string from_clause;
    std::vector<std::string> where;
    std::string select_list;  // empty means "*"
    bool distinct = false;
    std::string group_by;
    std::string order_by;
    std::string limit;
    int collapse_count = 0;

    bool has_select_stage() const { return !select_list.empty() || !group_by.empty(); }

    std::string render() const {
        std::string q = "SELECT ";
        if (distinct) q += "DISTINCT ";
        q += select_list.empty() ? "*" : select_list;
        q += " FROM " + from_clause;
        if (!where.empty()) {
            q += " WHERE ";
            for (std::size_t i = 0; i < where.size(); ++i) {
                if (i) q += " AND ";
                q += "(" + where[i] + ")";
            }
        }
        if (!group_by.empty()) q += " GROUP BY " + group_by;
        if (!order_by.empty()) q += " ORDER BY " + order_by;
        if (!limit.empty()) q += " LIMIT " + limit;
        return q;
    }

    void collapse(const std::string& alias_hint = "") {
        const std::string alias =
            alias_hint.empty() ? "_p" + std::to_string(++collapse_count) : alias_hint;
        from_clause = "(" + render() + ") AS " + alias;
        where.clear();
        select_list.clear();
        distinct = false;
        group_by.clear();
        order_by.clear();
        limit.clear();
    }
};

// GROUP BY items may carry "expr AS alias"; the alias names the output
// column, and SQLite accepts grouping by that alias.
std::string strip_aliases_for_group(const std::string& keys) {
    std::vector<std::string> items;
    std::size_t depth = 0, start = 0;
    for (std::size_t i = 0; i <= keys.size(); ++i) {
        if (i < keys.size()) {
            if (auto region = sqltext::region_at(keys, i)) {
                std::size_t end = sqltext::region_end(keys, i, *region);
                i = (end == sqltext::npos ? keys.size() : end) - 1;
                continue;
            }
            if (keys[i] == '(') ++depth;
            if (keys[i] == ')' && depth > 0) --depth;
        }
        if (i == keys.size() || (keys[i] == ',' && depth == 0)) {
            items.push_back(trim(keys.substr(start, i - start)));
            start = i + 1;
        }
    }
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        std::string item = items[i];
        const std::size_t as = find_toplevel(item, {"AS"});
        if (as != sqltext::npos) item = trim(item.substr(as + 2));
        if (i) out += ", ";
        out += item;
    }
    return out;
}

void apply_aggregate(QueryBuilder& q, const std::string& body) {
    // AGGREGATE aggs [GROUP [AND ORDER] BY keys]
    std::string aggs = body;
    std::string keys;
    bool order_too = false;
    std::size_t g = find_toplevel(body, {"GROUP", "AND", "ORDER", "BY"});
    if (g != sqltext::npos) {
        order_too = true;
    } else {
        g = find_toplevel(body, {"GROUP", "BY"});
    }
    if (g != sqltext::npos) {
        aggs = trim(body.substr(0, g));
        std::string rest = trim(body.substr(g));
        keys = after_word(rest, order_too ? 4 : 2);
    }
    if (keys.empty()) {
        q.select_list = aggs;
        q.group_by.clear();
    } else {
        q.select_list = keys + ", " + aggs;
        q.group_by = strip_aliases_for_group(keys);
        if (order_too) q.order_by = q.group_by;
    }
}

}  // namespace

std::string pipe_to_standard_sql(std::string_view pipe_sql) {
    const PipeSegments segs = split_pipes(pipe_sql);
    const std::string head = trim(segs.segments[0]);
    if (segs.segments.size() == 1 && leading_word(head) != "FROM")
        return std::string(pipe_sql);  // already standard SQL

    QueryBuilder q;
    std::size_t start = 0;
    if (leading_word(head) == "FROM") {
        q.from_clause = after_word(head, 1);
        start = 1;
    } else {
        q.from_clause = "(" + head + ") AS _p0";
        start = 1;
    }

    for (std::size_t i = start; i < segs.segments.size(); ++i) {
        const std::string seg = trim(segs.segments[i]);
        if (seg.empty()) continue;
        const std::string op = leading_word(seg);
        if (op == "WHERE") {
            if (q.has_select_stage()) q.collapse();
            q.where.push_back(after_word(seg, 1));
        } else if (op == "JOIN" || op == "LEFT" || op == "RIGHT" || op == "INNER" ||
                   op == "CROSS" || op == "FULL" || op == "OUTER") {
            if (q.has_select_stage() || !q.where.empty()) q.collapse();
            q.from_clause += " " + seg;
        } else if (op == "SELECT") {
            if (q.has_select_stage()) q.collapse();
            q.select_list = after_word(seg, 1);
        } else if (op == "EXTEND") {
            if (q.has_select_stage()) q.collapse();
            q.select_list = "*, " + after_word(seg, 1);
        } else if (op == "AGGREGATE") {
            if (q.has_select_stage()) q.collapse();
            apply_aggregate(q, after_word(seg, 1));
        } else if (op == "DISTINCT") {
            if (q.has_select_stage()) q.collapse();
            q.distinct = true;
        } else if (op == "ORDER") {
            if (!q.order_by.empty() || !q.limit.empty()) q.collapse();
            q.order_by = after_word(seg, 2);
        } else if (op == "LIMIT") {
            if (!q.limit.empty()) q.collapse();
            q.limit = after_word(seg, 1);
        } else if (op == "AS") {
            q.collapse(after_word(seg, 1));
        } else {
            throw std::invalid_argument("unsupported pipe operator: " +
                                        (op.empty() ? seg.substr(0, 16) : op));
        }
    }
    return q.render();
}

// ---------------------------------------------------------------------------
// pipe_decode
// ---------------------------------------------------------------------------

namespace {

// Stand-in text for a not-yet-started trajectory; comment-only SQL keeps the
// step pool valid and executes to a well-defined EngineError.
constexpr const char* kEmptyPrefixSql = "-- (empty)";

struct Trajectory {
    std::string id;
    std::string prefix;
    int rejections = 0;
    bool complete = false;
    int local_step = 0;   // continuations consumed so far
    int restarts = 0;     // restart generation counter for id naming
    std::deque<Continuation> pending;  // queued segments from an overshooting generator

    std::string status() const { return complete ? "complete" : "active"; }
};

// Split an overshooting continuation into per-step segments; lexing failures
// leave the text as one opaque segment so execution can judge it.
std::deque<Continuation> plan_segments(const Continuation& c) {
    std::deque<Continuation> out;
    PipeSegments segs;
    try {
        segs = split_pipes(c.text);
    } catch (const PipeLexError&) {
        out.push_back(c);
        return out;
    }
    for (std::size_t i = 0; i < segs.segments.size(); ++i)
        out.push_back(Continuation{segs.segments[i],
                                   c.final && i + 1 == segs.segments.size(), false});
    return out;
}

ExecutionOutcome execute_pipe_text(const DbRef& db, const std::string& text,
                                   const PipeDecodeOptions& opt,
                                   std::map<std::string, ExecutionOutcome>& cache) {
    auto it = cache.find(text);
    if (it != cache.end()) return it->second;
    ExecutionOutcome outcome = EngineError{"empty prefix"};
    if (!trim(text).empty()) {
        try {
            const std::string sql = pipe_to_standard_sql(text);
            outcome = opt.step_mode == ExecMode::exact ? execute(db, sql, opt.limits)
                                                       : explain(db, sql, opt.limits);
        } catch (const PipeLexError& e) {
            outcome = EngineError{e.what()};
        } catch (const std::invalid_argument& e) {
            outcome = EngineError{e.what()};
        }
    }
    cache.emplace(text, outcome);
    return outcome;
}

}  // namespace

DecodeResult pipe_decode(const DbRef& db, Generator& gen, const PipeDecodeOptions& opt) {
    if (opt.n < 1) throw std::invalid_argument("pipe_decode: n must be >= 1");
    if (opt.patience < 1) throw std::invalid_argument("pipe_decode: patience must be >= 1");
    if (opt.max_steps < 1) throw std::invalid_argument("pipe_decode: max_steps must be >= 1");

    std::vector<Trajectory> trajs(static_cast<std::size_t>(opt.n));
    for (int i = 0; i < opt.n; ++i) trajs[static_cast<std::size_t>(i)].id = "t" + std::to_string(i);

    std::map<std::string, ExecutionOutcome> cache;
    DecodeResult result;

    for (int step = 1; step <= opt.max_steps; ++step) {
        bool any_active = false;
        for (const auto& t : trajs) any_active = any_active || !t.complete;
        if (!any_active) break;

        // (1) each active trajectory receives one sampled next segment
        std::vector<bool> finished_now(trajs.size(), false);
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            auto& t = trajs[i];
            if (t.complete) continue;
            Continuation c;
            if (!t.pending.empty()) {
                c = t.pending.front();
                t.pending.pop_front();
            } else {
                GenRequest req{opt.context, t.prefix, t.id, t.local_step, 1};
                auto batch = gen.generate(req);
                if (batch.empty())
                    throw std::runtime_error("generator returned no continuation for " + t.id);
                ++t.local_step;
                auto segs = plan_segments(batch.front());
                c = segs.front();
                segs.pop_front();
                for (auto& rest : segs) t.pending.push_back(std::move(rest));
            }
            if (c.failed) {
                // Sampling failure: close the trajectory at its current prefix.
                finished_now[i] = true;
                continue;
            }
            if (!c.text.empty()) {
                if (!t.prefix.empty()) t.prefix += "|>";
                t.prefix += c.text;
            }
            if (c.final || c.text.empty()) finished_now[i] = t.pending.empty();
        }

        // (2) every current prefix is executed
        std::vector<ExecutionOutcome> outcomes;
        outcomes.reserve(trajs.size());
        for (const auto& t : trajs) outcomes.push_back(execute_pipe_text(db, t.prefix, opt, cache));

        // (3) consensus by MBR over the step pool
        CandidatePool pool;
        pool.question = opt.context;
        for (const auto& t : trajs)
            pool.candidates.push_back(
                Candidate{t.id, t.prefix.empty() ? kEmptyPrefixSql : t.prefix, "", 1.0});
        const SimilarityMatrix matrix = similarity_matrix(outcomes);
        const SelectionReport consensus = mbr_select(pool, matrix);
        const std::size_t consensus_idx = consensus.chosen_index;

        // (4) reject active trajectories that disagree with the consensus
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            if (trajs[i].complete || i == consensus_idx) continue;
            if (matrix.at(i, consensus_idx) < opt.reject_threshold) ++trajs[i].rejections;
        }

        DecodeStep record;
        record.step = step;
        record.matrix = matrix;
        record.consensus_index = consensus_idx;
        record.consensus_id = trajs[consensus_idx].id;
        record.consensus_tie = consensus.tie;
        for (const auto& o : outcomes) record.outcome_summaries.push_back(outcome_summary(o));
        for (const auto& t : trajs)
            record.trajectories.push_back(
                TrajectorySnapshot{t.id, t.prefix, t.rejections, t.status()});

        // (5) prune and restart from the consensus prefix
        const std::string consensus_prefix = trajs[consensus_idx].prefix;
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            auto& t = trajs[i];
            if (t.complete || i == consensus_idx) continue;
            if (opt.patience != kInfinitePatience && t.rejections >= opt.patience) {
                const std::string old_id = t.id;
                ++t.restarts;
                t.id = old_id.substr(0, old_id.find('.')) + ".r" + std::to_string(t.restarts);
                t.prefix = consensus_prefix;
                t.rejections = 0;
                t.local_step = 0;
                t.pending.clear();
                finished_now[i] = false;
                record.prunes.push_back(PruneEvent{old_id, t.id});
                record.trajectories[i].status = "pruned";
            }
        }

        // (6) completions
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            if (finished_now[i] && !trajs[i].complete) {
                trajs[i].complete = true;
                record.completed_ids.push_back(trajs[i].id);
            }
        }

        result.steps.push_back(std::move(record));
    }

    // Final answer: exec-MBR over completed full queries, in trajectory slot
    // order so tie-breaking matches full-sequence selection; when nothing
    // completed within max_steps, fall back to the current prefixes.
    CandidatePool final_pool;
    bool any_complete = false;
    for (const auto& t : trajs) any_complete = any_complete || t.complete;
    result.incomplete = !any_complete;
    for (const auto& t : trajs) {
        if (any_complete && !t.complete) continue;
        final_pool.candidates.push_back(
            Candidate{t.id, t.prefix.empty() ? kEmptyPrefixSql : t.prefix, "", 1.0});
    }
    std::vector<ExecutionOutcome> final_outcomes;
    std::map<std::string, ExecutionOutcome> final_cache;
    PipeDecodeOptions exact_opt = opt;
    exact_opt.step_mode = ExecMode::exact;
    for (const auto& c : final_pool.candidates)
        final_outcomes.push_back(execute_pipe_text(db, c.sql, exact_opt, final_cache));
    result.report = mbr_select(final_pool, similarity_matrix(final_outcomes));
    attach_outcomes(result.report, final_outcomes);
    result.chosen_sql = final_pool.candidates[result.report.chosen_index].sql;
    result.final_pool = final_pool.candidates;
    return result;
}

}  // namespace sqlmbr
