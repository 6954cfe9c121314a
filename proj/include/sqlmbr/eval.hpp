#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sqlmbr/core.hpp"
#include "sqlmbr/serialize.hpp"
#include "sqlmbr/sqlexec.hpp"

namespace sqlmbr {

struct Task {
    std::string task_id;
    DbRef db;
    std::string question;
    std::string evidence;
    std::string gold_sql;
};

/// One selection method under evaluation. `n` is the sample budget: the
/// first n candidates of each pool (0 = whole pool).
struct MethodSpec {
    enum class Kind { greedy, majority, exec, plan, pass };
    Kind kind = Kind::greedy;
    int n = 0;
    bool normalized = true;  // majority only

    std::string name() const;
    /// Parses "greedy", "maj@10", "exec@10", "plan@10", "pass@10",
    /// "maj-verbatim@10"; throws std::invalid_argument on anything else.
    static MethodSpec parse(std::string_view text);
};

enum class Verdict { correct, incorrect, invalid };
const char* verdict_name(Verdict v);

struct PoolStats {
    std::size_t size = 0;
    std::size_t failed = 0;  // candidates with error/timeout outcomes
};

struct EvalReport {
    std::map<std::string, double> accuracy;            // method -> fraction
    std::map<std::string, std::size_t> correct_count;  // method -> correct tasks
    std::size_t task_count = 0;                        // denominator
    std::map<std::string, std::map<std::string, std::string>> verdicts;  // task -> method -> v
    std::map<std::string, PoolStats> pool_stats;       // task -> stats
    std::vector<std::string> skipped;                  // task ids skipped (bad gold / no pool)
    std::vector<std::string> warnings;
    json config_echo;
};

/// True iff the predicted rows match gold as a multiset of canonicalized row
/// tuples (column names ignored, column order as projected); when gold_sql
/// has a top-level ORDER BY the comparison is order-sensitive instead.
bool result_match(const ResultTable& predicted, const ResultTable& gold,
                  std::string_view gold_sql);

/// True when the text has an ORDER BY outside strings/comments/parentheses.
bool has_toplevel_order_by(std::string_view sql);

/// Tasks file: JSONL, one object per line with task_id, db, question,
/// evidence (optional), gold_sql.
std::vector<Task> load_tasks(const std::filesystem::path& file);

/// Runs every method over every task's pool: select, execute the chosen
/// candidate, compare against gold. Tasks with failing gold SQL or a missing
/// pool are skipped loudly and excluded from denominators. pass@n dominance
/// over every same-budget method is asserted on every pool.
EvalReport evaluate(const std::vector<Task>& tasks,
                    const std::map<std::string, CandidatePool>& pools,
                    const std::vector<MethodSpec>& methods, const ExecLimits& limits,
                    unsigned concurrency = 0);

json eval_report_to_json(const EvalReport&);

/// Human-readable accuracy table.
std::string eval_report_table(const EvalReport&);

}  // namespace sqlmbr
