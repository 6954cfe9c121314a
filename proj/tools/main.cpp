// sqlmbr: pick the best SQL query from a pool of sampled candidates by
// executing them and selecting the one most consistent with the rest.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "sqlmbr/eval.hpp"
#include "sqlmbr/generators.hpp"
#include "sqlmbr/pipe.hpp"
#include "sqlmbr/selection.hpp"
#include "sqlmbr/serialize.hpp"
#include "sqlmbr/similarity.hpp"
#include "sqlmbr/sqlexec.hpp"

namespace fs = std::filesystem;
using namespace sqlmbr;

namespace {

struct CommonFlags {
    std::string db;
    double timeout_s = 10.0;
    std::int64_t max_rows = 5000;
    std::int64_t max_cells = 50000;
    unsigned concurrency = 0;

    ExecLimits limits() const {
        ExecLimits l;
        l.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
        l.max_rows = max_rows;
        l.max_cells = max_cells;
        return l;
    }
    json echo() const {
        return json{{"db", db},
                    {"timeout_s", timeout_s},
                    {"max_rows", max_rows},
                    {"max_cells", max_cells}};
    }
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_db = true) {
    if (with_db)
        cmd->add_option("--db", f.db,
                        "SQLite database file (a candidate file's \"db\" field overrides)");
    cmd->add_option("--timeout", f.timeout_s, "per-query timeout in seconds (default 10)");
    cmd->add_option("--max-rows", f.max_rows, "result row cap (default 5000)");
    cmd->add_option("--max-cells", f.max_cells, "result cell cap (default 50000)");
    cmd->add_option("--concurrency", f.concurrency, "parallel executions (0 = auto)");
}

DbRef resolve_db(const CandidatePool& pool, const CommonFlags& common) {
    if (!pool.db_ref.empty()) return DbRef{pool.db_ref};
    if (!common.db.empty()) return DbRef{common.db};
    throw std::invalid_argument("no database: pass --db or set \"db\" in the candidate file");
}

std::unique_ptr<Generator> make_generator(const std::string& spec) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("--generator must be replay:<path> or http:<config-path>");
    const std::string kind = spec.substr(0, colon);
    const std::string path = spec.substr(colon + 1);
    if (kind == "replay") return std::make_unique<ReplayGenerator>(load_replay_script(path));
    if (kind == "http") return std::make_unique<HttpGenerator>(load_http_config(path));
    throw std::invalid_argument("unknown generator kind '" + kind + "'");
}

int cmd_similarity(const CommonFlags& common, const std::string& candidates_file,
                   const std::string& metric, const std::string& out,
                   const std::string& csv_out) {
    CandidatePool pool = load_candidates_file(candidates_file);
    const DbRef db = resolve_db(pool, common);
    const auto outcomes = execute_pool(
        db, pool, common.limits(), metric == "plan" ? ExecMode::plan : ExecMode::exact,
        common.concurrency);
    const SimilarityMatrix matrix = similarity_matrix(outcomes);

    json summaries = json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        summaries.push_back(json{{"id", pool.candidates[i].id},
                                 {"outcome", outcome_summary(outcomes[i])}});
    json doc{{"metric", metric},
             {"matrix", matrix_to_json(matrix)},
             {"outcomes", std::move(summaries)},
             {"config", common.echo()}};
    if (out.empty())
        std::cout << doc.dump(2) << "\n";
    else
        write_json_file(out, doc);
    if (!csv_out.empty()) {
        std::ofstream f(csv_out);
        if (!f) throw std::runtime_error("cannot write " + csv_out);
        f << matrix_to_csv(matrix);
    }
    return 0;
}

int cmd_select(const CommonFlags& common, const std::string& candidates_file,
               const std::string& method, const std::string& metric, bool no_normalize,
               const std::string& out) {
    CandidatePool pool = load_candidates_file(candidates_file);
    SelectionReport report;
    std::vector<ExecutionOutcome> outcomes;
    if (method == "exec" || method == "plan") {
        const DbRef db = resolve_db(pool, common);
        const bool plan = method == "plan" || metric == "plan";
        outcomes = execute_pool(db, pool, common.limits(),
                                plan ? ExecMode::plan : ExecMode::exact, common.concurrency);
        report = mbr_select(pool, similarity_matrix(outcomes),
                            plan ? SelectionMethod::exec_plan : SelectionMethod::exec_exact);
    } else if (method == "majority") {
        report = majority_select(pool, !no_normalize);
    } else if (method == "first") {
        report = first_select(pool);
    } else {
        throw std::invalid_argument("unknown method '" + method + "'");
    }
    if (!outcomes.empty()) attach_outcomes(report, outcomes);

    if (!out.empty()) {
        json doc = report_to_json(report);
        doc["question"] = pool.question;
        doc["config"] = common.echo();
        doc["config"]["method"] = method;
        write_json_file(out, doc);
    }
    std::cout << pool.candidates[report.chosen_index].sql << "\n";
    return 0;
}

int cmd_pipe_decode(const CommonFlags& common, const std::string& generator_spec, int n,
                    const std::string& patience_text, int max_steps, double reject_threshold,
                    const std::string& metric, const std::string& prompt_file,
                    const std::string& out, const std::string& trace) {
    auto gen = make_generator(generator_spec);

    PipeDecodeOptions opt;
    opt.n = n;
    if (patience_text == "inf" || patience_text == "infinite")
        opt.patience = kInfinitePatience;
    else
        opt.patience = std::stoi(patience_text);
    opt.max_steps = max_steps;
    opt.reject_threshold = reject_threshold;
    opt.step_mode = metric == "plan" ? ExecMode::plan : ExecMode::exact;
    opt.limits = common.limits();
    opt.concurrency = common.concurrency;
    if (!prompt_file.empty()) {
        std::ifstream in(prompt_file);
        if (!in) throw std::runtime_error("cannot read " + prompt_file);
        std::stringstream buf;
        buf << in.rdbuf();
        opt.context = buf.str();
    }

    if (common.db.empty()) throw std::invalid_argument("pipe-decode requires --db");
    const DbRef db{common.db};
    const DecodeResult result = pipe_decode(db, *gen, opt);
    if (!trace.empty()) write_trace_jsonl(trace, result);
    if (!out.empty()) {
        json doc = decode_result_to_json(result);
        doc["config"] = common.echo();
        doc["config"]["n"] = n;
        doc["config"]["patience"] = patience_text;
        write_json_file(out, doc);
    }
    std::cout << result.chosen_sql << "\n";
    return 0;
}

int cmd_eval(const CommonFlags& common, const std::string& tasks_file,
             const std::string& pools_dir, const std::string& methods_text,
             const std::string& out) {
    const std::vector<Task> tasks = load_tasks(tasks_file);

    std::map<std::string, CandidatePool> pools;
    for (const Task& t : tasks) {
        for (const char* ext : {".json", ".jsonl"}) {
            const fs::path p = fs::path(pools_dir) / (t.task_id + ext);
            if (fs::exists(p)) {
                pools[t.task_id] = load_candidates_file(p);
                break;
            }
        }
    }

    std::vector<MethodSpec> methods;
    std::stringstream ss(methods_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) methods.push_back(MethodSpec::parse(item));
    }
    if (methods.empty()) throw std::invalid_argument("--methods produced an empty method list");

    EvalReport report = evaluate(tasks, pools, methods, common.limits(), common.concurrency);
    report.config_echo = common.echo();
    report.config_echo["tasks"] = tasks_file;
    report.config_echo["pools"] = pools_dir;
    report.config_echo["methods"] = methods_text;

    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << eval_report_table(report);
    if (!out.empty()) write_json_file(out, eval_report_to_json(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"execution-guided selection over sampled SQL candidates"};
    app.require_subcommand(1);

    // similarity
    CommonFlags sim_common;
    std::string sim_candidates, sim_metric = "table", sim_out, sim_csv;
    auto* sim = app.add_subcommand("similarity", "execute a pool and write its similarity matrix");
    add_common(sim, sim_common);
    sim->add_option("--candidates", sim_candidates, "candidate file (JSON or JSONL)")->required();
    sim->add_option("--metric", sim_metric, "table | plan")
        ->check(CLI::IsMember({"table", "plan"}));
    sim->add_option("--out", sim_out, "matrix JSON output (default: stdout)");
    sim->add_option("--csv", sim_csv, "also write the matrix as CSV");

    // select
    CommonFlags sel_common;
    std::string sel_candidates, sel_method = "exec", sel_metric = "table", sel_out;
    bool sel_no_normalize = false;
    auto* sel = app.add_subcommand("select", "pick the best candidate and print its SQL");
    add_common(sel, sel_common);
    sel->add_option("--candidates", sel_candidates, "candidate file (JSON or JSONL)")->required();
    sel->add_option("--method", sel_method, "exec | plan | majority | first")
        ->check(CLI::IsMember({"exec", "plan", "majority", "first"}));
    sel->add_option("--metric", sel_metric, "table | plan (for method=exec)")
        ->check(CLI::IsMember({"table", "plan"}));
    sel->add_flag("--no-normalize", sel_no_normalize, "majority vote on verbatim text");
    sel->add_option("--out", sel_out, "selection report JSON output");

    // pipe-decode
    CommonFlags pd_common;
    std::string pd_generator, pd_patience = "3", pd_metric = "table", pd_prompt, pd_out, pd_trace;
    int pd_n = 5, pd_max_steps = 32;
    double pd_reject = 1.0;
    auto* pd = app.add_subcommand("pipe-decode",
                                  "incremental pipe-wise decoding with consensus per step");
    add_common(pd, pd_common);
    pd->add_option("--generator", pd_generator, "replay:<script.json> | http:<config.json>")
        ->required();
    pd->add_option("--n", pd_n, "number of parallel trajectories");
    pd->add_option("--patience", pd_patience, "rejections before pruning, or 'inf'");
    pd->add_option("--max-steps", pd_max_steps, "step cap (default 32)");
    pd->add_option("--reject-threshold", pd_reject,
                   "similarity-to-consensus below this counts as a rejection (default 1.0)");
    pd->add_option("--metric", pd_metric, "table | plan for prefix scoring")
        ->check(CLI::IsMember({"table", "plan"}));
    pd->add_option("--prompt", pd_prompt, "prompt context file forwarded to the generator");
    pd->add_option("--out", pd_out, "decode result JSON output");
    pd->add_option("--trace", pd_trace, "step-by-step trace (JSONL)");

    // eval
    CommonFlags ev_common;
    std::string ev_tasks, ev_pools, ev_methods = "greedy,maj@10,exec@10,plan@10,pass@10", ev_out;
    auto* ev = app.add_subcommand("eval", "run selection methods over a task suite");
    add_common(ev, ev_common, /*with_db=*/false);
    ev->add_option("--tasks", ev_tasks, "tasks file (JSONL)")->required();
    ev->add_option("--pools", ev_pools, "directory of per-task candidate files")->required();
    ev->add_option("--methods", ev_methods, "comma list, e.g. greedy,maj@10,exec@10,pass@10");
    ev->add_option("--out", ev_out, "report JSON output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_similarity(sim_common, sim_candidates, sim_metric, sim_out, sim_csv);
        if (sel->parsed())
            return cmd_select(sel_common, sel_candidates, sel_method, sel_metric,
                              sel_no_normalize, sel_out);
        if (pd->parsed())
            return cmd_pipe_decode(pd_common, pd_generator, pd_n, pd_patience, pd_max_steps,
                                   pd_reject, pd_metric, pd_prompt, pd_out, pd_trace);
        if (ev->parsed())
            return cmd_eval(ev_common, ev_tasks, ev_pools, ev_methods, ev_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
