#include "sqlmbr/eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "sqlmbr/selection.hpp"
#include "sqlmbr/similarity.hpp"
#include "sqlmbr/sqltext.hpp"

namespace sqlmbr {

std::string MethodSpec::name() const {
    switch (kind) {
        case Kind::greedy: return "greedy";
        case Kind::majority:
            return (normalized ? std::string("maj@") : std::string("maj-verbatim@")) +
                   std::to_string(n);
        case Kind::exec: return "exec@" + std::to_string(n);
        case Kind::plan: return "plan@" + std::to_string(n);
        case Kind::pass: return "pass@" + std::to_string(n);
    }
    return "?";
}

MethodSpec MethodSpec::parse(std::string_view text) {
    MethodSpec m;
    std::string base(text);
    const std::size_t at = base.find('@');
    if (at != std::string::npos) {
        const std::string digits = base.substr(at + 1);
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
            throw std::invalid_argument("method spec: bad sample budget in '" + base + "'");
        m.n = std::stoi(digits);
        base = base.substr(0, at);
    }
    if (base == "greedy" || base == "first") {
        m.kind = Kind::greedy;
    } else if (base == "maj" || base == "majority") {
        m.kind = Kind::majority;
    } else if (base == "maj-verbatim") {
        m.kind = Kind::majority;
        m.normalized = false;
    } else if (base == "exec") {
        m.kind = Kind::exec;
    } else if (base == "plan") {
        m.kind = Kind::plan;
    } else if (base == "pass") {
        m.kind = Kind::pass;
    } else {
        throw std::invalid_argument("method spec: unknown method '" + std::string(text) + "'");
    }
    return m;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::correct: return "correct";
        case Verdict::incorrect: return "incorrect";
        case Verdict::invalid: return "invalid";
    }
    return "?";
}

bool has_toplevel_order_by(std::string_view sql) {
    std::size_t depth = 0;
    std::size_t i = 0;
    auto is_word_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    auto word_here = [&](std::size_t pos, std::string_view w) {
        if (pos + w.size() > sql.size()) return false;
        for (std::size_t k = 0; k < w.size(); ++k)
            if (std::toupper(static_cast<unsigned char>(sql[pos + k])) != w[k]) return false;
        const bool left_ok = pos == 0 || !is_word_char(sql[pos - 1]);
        const bool right_ok = pos + w.size() >= sql.size() || !is_word_char(sql[pos + w.size()]);
        return left_ok && right_ok;
    };
    while (i < sql.size()) {
        if (auto region = sqltext::region_at(sql, i)) {
            const std::size_t end = sqltext::region_end(sql, i, *region);
            i = end == sqltext::npos ? sql.size() : end;
            continue;
        }
        if (sql[i] == '(') ++depth;
        if (sql[i] == ')' && depth > 0) --depth;
        if (depth == 0 && word_here(i, "ORDER")) {
            std::size_t j = i + 5;
            while (j < sql.size()) {
                if (auto region = sqltext::region_at(sql, j)) {
                    const std::size_t end = sqltext::region_end(sql, j, *region);
                    if (end == sqltext::npos) break;
                    j = end;
                    continue;
                }
                if (std::isspace(static_cast<unsigned char>(sql[j]))) {
                    ++j;
                    continue;
                }
                break;
            }
            if (word_here(j, "BY")) return true;
        }
        ++i;
    }
    return false;
}

namespace {

// Total order on canonical cells so row multisets can be compared by sort.
bool cell_less(const Cell& a, const Cell& b) {
    if (a.index() != b.index()) return a.index() < b.index();
    switch (a.index()) {
        case 0: return false;
        case 1: return std::get<1>(a) < std::get<1>(b);
        case 2: return std::get<2>(a) < std::get<2>(b);
        case 3: return std::get<3>(a) < std::get<3>(b);
        default: return std::get<4>(a).bytes < std::get<4>(b).bytes;
    }
}

bool row_less(const std::vector<Cell>& a, const std::vector<Cell>& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (cell_less(a[i], b[i])) return true;
        if (cell_less(b[i], a[i])) return false;
    }
    return false;
}

std::vector<std::vector<Cell>> canonical_rows(const ResultTable& t) {
    std::vector<std::vector<Cell>> rows;
    rows.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        std::vector<Cell> r;
        r.reserve(row.size());
        for (const auto& c : row) r.push_back(normalize_cell(c));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

bool result_match(const ResultTable& predicted, const ResultTable& gold,
                  std::string_view gold_sql) {
    auto p = canonical_rows(predicted);
    auto g = canonical_rows(gold);
    if (p.size() != g.size()) return false;
    if (!has_toplevel_order_by(gold_sql)) {
        std::sort(p.begin(), p.end(), row_less);
        std::sort(g.begin(), g.end(), row_less);
    }
    return p == g;
}

std::vector<Task> load_tasks(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::vector<Task> tasks;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line);
        strict_keys(j, {"task_id", "db", "question", "evidence", "gold_sql"},
                    file.string() + ":" + std::to_string(lineno));
        Task t;
        t.task_id = j.at("task_id").get<std::string>();
        t.db.path = j.at("db").get<std::string>();
        t.question = j.value("question", "");
        t.evidence = j.value("evidence", "");
        t.gold_sql = j.at("gold_sql").get<std::string>();
        tasks.push_back(std::move(t));
    }
    return tasks;
}

namespace {

CandidatePool head_pool(const CandidatePool& pool, std::size_t n) {
    CandidatePool sub = pool;
    if (n > 0 && n < sub.candidates.size()) sub.candidates.resize(n);
    return sub;
}

}  // namespace

EvalReport evaluate(const std::vector<Task>& tasks,
                    const std::map<std::string, CandidatePool>& pools,
                    const std::vector<MethodSpec>& methods, const ExecLimits& limits,
                    unsigned concurrency) {
    EvalReport report;
    std::vector<const Task*> ordered;
    for (const auto& t : tasks) ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(),
              [](const Task* a, const Task* b) { return a->task_id < b->task_id; });

    for (const Task* task : ordered) {
        auto pool_it = pools.find(task->task_id);
        if (pool_it == pools.end()) {
            report.skipped.push_back(task->task_id);
            report.warnings.push_back("task " + task->task_id + ": no candidate pool");
            continue;
        }
        const ExecutionOutcome gold_outcome = execute(task->db, task->gold_sql, limits);
        if (!ok(gold_outcome)) {
            report.skipped.push_back(task->task_id);
            report.warnings.push_back("task " + task->task_id + ": gold SQL failed: " +
                                      outcome_summary(gold_outcome));
            continue;
        }
        const ResultTable& gold_table = *table_of(gold_outcome);
        const CandidatePool& pool = pool_it->second;
        pool.validate();

        const auto exact =
            execute_pool(task->db, pool, limits, ExecMode::exact, concurrency);
        std::vector<ExecutionOutcome> plan;  // computed on demand
        std::vector<bool> candidate_correct(pool.size(), false);
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (const auto* t = table_of(exact[i]))
                candidate_correct[i] = result_match(*t, gold_table, task->gold_sql);

        PoolStats stats;
        stats.size = pool.size();
        for (const auto& o : exact)
            if (!ok(o)) ++stats.failed;
        report.pool_stats[task->task_id] = stats;

        auto pass_at = [&](std::size_t n) {
            const std::size_t upto = n == 0 ? pool.size() : std::min(n, pool.size());
            for (std::size_t i = 0; i < upto; ++i)
                if (candidate_correct[i]) return true;
            return false;
        };

        for (const MethodSpec& m : methods) {
            const std::size_t budget =
                m.n == 0 ? pool.size() : std::min<std::size_t>(m.n, pool.size());
            Verdict v;
            if (m.kind == MethodSpec::Kind::pass) {
                v = pass_at(budget) ? Verdict::correct : Verdict::incorrect;
            } else {
                CandidatePool sub = head_pool(pool, budget);
                SelectionReport sel;
                switch (m.kind) {
                    case MethodSpec::Kind::greedy: sel = first_select(sub); break;
                    case MethodSpec::Kind::majority:
                        sel = majority_select(sub, m.normalized);
                        break;
                    case MethodSpec::Kind::exec: {
                        std::vector<ExecutionOutcome> head(exact.begin(),
                                                           exact.begin() + budget);
                        sel = mbr_select(sub, similarity_matrix(head),
                                         SelectionMethod::exec_exact);
                        break;
                    }
                    case MethodSpec::Kind::plan: {
                        if (plan.empty())
                            plan = execute_pool(task->db, pool, limits, ExecMode::plan,
                                                concurrency);
                        std::vector<ExecutionOutcome> head(plan.begin(), plan.begin() + budget);
                        sel = mbr_select(sub, similarity_matrix(head),
                                         SelectionMethod::exec_plan);
                        break;
                    }
                    default: throw std::logic_error("unhandled method kind");
                }
                const std::size_t chosen = sel.chosen_index;
                if (!ok(exact[chosen]))
                    v = Verdict::invalid;
                else
                    v = candidate_correct[chosen] ? Verdict::correct : Verdict::incorrect;
                // Oracle dominance: a correct selection implies pass@budget.
                if (v == Verdict::correct && !pass_at(budget))
                    throw std::logic_error("pass@n dominance violated on task " + task->task_id);
            }
            report.verdicts[task->task_id][m.name()] = verdict_name(v);
            if (v == Verdict::correct) ++report.correct_count[m.name()];
        }
        ++report.task_count;
    }

    for (const MethodSpec& m : methods) {
        const std::size_t correct = report.correct_count[m.name()];
        report.accuracy[m.name()] =
            report.task_count == 0
                ? 0.0
                : static_cast<double>(correct) / static_cast<double>(report.task_count);
    }
    return report;
}

json eval_report_to_json(const EvalReport& r) {
    json pool_stats = json::object();
    for (const auto& [task, s] : r.pool_stats)
        pool_stats[task] = json{{"size", s.size}, {"failed", s.failed}};
    return json{{"accuracy", r.accuracy},
                {"correct_count", r.correct_count},
                {"task_count", r.task_count},
                {"verdicts", r.verdicts},
                {"pool_stats", pool_stats},
                {"skipped", r.skipped},
                {"warnings", r.warnings},
                {"config", r.config_echo}};
}

std::string eval_report_table(const EvalReport& r) {
    std::ostringstream out;
    out << "method            correct/total  accuracy\n";
    for (const auto& [method, acc] : r.accuracy) {
        out << std::left << std::setw(18) << method << std::right << std::setw(7)
            << r.correct_count.at(method) << "/" << std::left << std::setw(7) << r.task_count
            << std::fixed << std::setprecision(3) << acc << "\n";
    }
    if (!r.skipped.empty()) {
        out << "skipped:";
        for (const auto& t : r.skipped) out << " " << t;
        out << "\n";
    }
    return out.str();
}

}  // namespace sqlmbr
