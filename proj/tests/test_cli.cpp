#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sqlmbr/serialize.hpp"
#include "testutil.hpp"

using namespace sqlmbr;
using testutil::TempDir;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
    const auto out_file = dir.file("cli_stdout.txt");
    const auto err_file = dir.file("cli_stderr.txt");
    const std::string cmd = std::string(SQLMBR_CLI_PATH) + " " + args + " >" +
                            out_file.string() + " 2>" + err_file.string();
    const int rc = std::system(cmd.c_str());
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CliResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("cli select: execution consensus picks an agreeing candidate") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);
    const auto cands = dir.file("cands.json");
    // Two equivalent queries and one different: the agreeing pair wins,
    // smallest index first.
    write_file(cands, json{
        {"question", "how many products"},
        {"candidates", json::array({
            json{{"id", "a"}, {"sql", "SELECT COUNT(*) FROM customers"}},
            json{{"id", "b"}, {"sql", "SELECT COUNT(*) FROM products"}},
            json{{"id", "c"}, {"sql", "SELECT COUNT(id) FROM products"}},
        })}}.dump());

    const auto report_path = dir.file("report.json");
    const auto r = run_cli(dir, "select --db " + db.string() + " --candidates " +
                                    cands.string() + " --method exec --out " +
                                    report_path.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out == "SELECT COUNT(*) FROM products\n");

    const json report = load_json_file(report_path);
    CHECK(report.at("chosen_id") == "b");
    CHECK(report.at("scores").size() == 3);
    CHECK(report.at("all_failed") == false);
}

TEST_CASE("cli select: majority and first methods") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);
    const auto cands = dir.file("cands.json");
    write_file(cands, json{
        {"question", "q"},
        {"candidates", json::array({
            json{{"id", "a"}, {"sql", "SELECT 2"}},
            json{{"id", "b"}, {"sql", "select 1"}},
            json{{"id", "c"}, {"sql", "SELECT 1;"}},
        })}}.dump());

    auto maj = run_cli(dir, "select --db " + db.string() + " --candidates " + cands.string() +
                                " --method majority");
    CHECK(maj.exit_code == 0);
    CHECK(maj.out == "select 1\n");  // normalized group of two wins, first member printed

    auto verbatim = run_cli(dir, "select --db " + db.string() + " --candidates " +
                                     cands.string() + " --method majority --no-normalize");
    CHECK(verbatim.out == "SELECT 2\n");  // all distinct, first wins

    auto first = run_cli(dir, "select --db " + db.string() + " --candidates " + cands.string() +
                                  " --method first");
    CHECK(first.out == "SELECT 2\n");
}

TEST_CASE("cli select: failures are data, not exit codes") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);
    const auto cands = dir.file("cands.json");
    write_file(cands, json{
        {"question", "q"},
        {"candidates", json::array({
            json{{"id", "a"}, {"sql", "SELEC broken"}},
            json{{"id", "b"}, {"sql", "also broken ("}},
        })}}.dump());
    const auto report_path = dir.file("report.json");
    const auto r = run_cli(dir, "select --db " + db.string() + " --candidates " +
                                    cands.string() + " --method exec --out " +
                                    report_path.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out == "SELEC broken\n");  // index 0 under an all-zero matrix
    const json report = load_json_file(report_path);
    CHECK(report.at("all_failed") == true);
    CHECK(report.at("tie") == true);
}

TEST_CASE("cli select: unreadable and empty inputs exit nonzero") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);
    const auto r = run_cli(dir, "select --db " + db.string() +
                                    " --candidates /nonexistent.json --method exec");
    CHECK(r.exit_code != 0);
    CHECK_FALSE(r.err.empty());

    const auto empty = dir.file("empty.json");
    write_file(empty, R"({"question":"q","candidates":[]})");
    const auto r2 = run_cli(dir, "select --db " + db.string() + " --candidates " +
                                     empty.string() + " --method exec");
    CHECK(r2.exit_code != 0);

    const auto typo = dir.file("typo.json");
    write_file(typo, R"({"question":"q","candidats":[]})");
    const auto r3 = run_cli(dir, "select --db " + db.string() + " --candidates " +
                                     typo.string() + " --method exec");
    CHECK(r3.exit_code != 0);
    CHECK(r3.err.find("candidats") != std::string::npos);
}

TEST_CASE("cli similarity: matrix file with a failing candidate") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);
    const auto cands = dir.file("cands.json");
    write_file(cands, json{
        {"question", "q"},
        {"candidates", json::array({
            json{{"id", "a"}, {"sql", "SELECT category FROM products"}},
            json{{"id", "b"}, {"sql", "SELEC nope"}},
            json{{"id", "c"}, {"sql", "SELECT category FROM products"}},
        })}}.dump());
    const auto out = dir.file("matrix.json");
    const auto csv = dir.file("matrix.csv");
    const auto r = run_cli(dir, "similarity --db " + db.string() + " --candidates " +
                                    cands.string() + " --out " + out.string() + " --csv " +
                                    csv.string());
    CHECK(r.exit_code == 0);

    const json doc = load_json_file(out);
    const SimilarityMatrix m = matrix_from_json(doc.at("matrix"));
    REQUIRE(m.size() == 3);
    CHECK(m.at(0, 2) == 1.0);
    CHECK(m.at(0, 1) == 0.0);
    CHECK(m.at(1, 1) == 0.0);  // failing candidate's diagonal
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(m.at(i, j) == m.at(j, i));

    std::ifstream csv_in(csv);
    std::string first_line;
    std::getline(csv_in, first_line);
    CHECK(first_line == "1,0,1");

    // plan metric also produces a matrix
    const auto r2 = run_cli(dir, "similarity --db " + db.string() + " --candidates " +
                                     cands.string() + " --metric plan --out " + out.string());
    CHECK(r2.exit_code == 0);
    CHECK(matrix_from_json(load_json_file(out).at("matrix")).at(0, 2) == 1.0);
}

TEST_CASE("cli pipe-decode: replay script, trace, and patience sentinel") {
    TempDir dir;
    const auto db = testutil::make_emp_dept_db(dir);
    const auto script = dir.file("script.json");
    write_file(script, json{
        {"mode", "pipe"},
        {"trajectories", json{
            {"t0", json::array({"FROM emp", " JOIN dept ON emp.did = dept.did",
                                " SELECT emp.name, dept.dname"})},
            {"t1", json::array({"FROM dept", " JOIN emp ON emp.did = dept.did",
                                " SELECT emp.name, dept.dname"})},
        }}}.dump());

    const auto trace = dir.file("trace.jsonl");
    const auto r = run_cli(dir, "pipe-decode --db " + db.string() + " --generator replay:" +
                                    script.string() + " --n 2 --patience inf --trace " +
                                    trace.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out == "FROM emp|> JOIN dept ON emp.did = dept.did|> SELECT emp.name, dept.dname\n");

    // Trace: one record per step plus a final record; no prunes under inf.
    std::ifstream tr(trace);
    std::string line;
    std::size_t steps = 0;
    bool saw_final = false;
    while (std::getline(tr, line)) {
        const json rec = json::parse(line);
        if (rec.contains("final")) {
            saw_final = true;
            CHECK(rec.at("final").at("incomplete") == false);
        } else {
            ++steps;
            CHECK(rec.at("prunes").empty());
        }
    }
    CHECK(steps == 3);
    CHECK(saw_final);

    // Same flow with patience 1: the divergent trajectory needs a restart
    // entry; without one the decode aborts with a diagnostic.
    const auto r2 = run_cli(dir, "pipe-decode --db " + db.string() + " --generator replay:" +
                                     script.string() + " --n 2 --patience 1");
    CHECK(r2.exit_code != 0);
    CHECK(r2.err.find("t1.r1") != std::string::npos);
}

TEST_CASE("cli pipe-decode: flat replay equals select over the same candidates") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);

    const std::vector<std::string> sqls = {
        "SELECT COUNT(*) FROM customers",
        "SELECT COUNT(*) FROM products",
        "SELECT COUNT(id) FROM products",
    };
    const auto script = dir.file("flat.json");
    write_file(script, json{{"mode", "flat"}, {"candidates", sqls}}.dump());
    const auto cands = dir.file("cands.json");
    json arr = json::array();
    for (std::size_t i = 0; i < sqls.size(); ++i)
        arr.push_back(json{{"id", "t" + std::to_string(i)}, {"sql", sqls[i]}});
    write_file(cands, json{{"question", "q"}, {"candidates", arr}}.dump());

    const auto via_pipe = run_cli(dir, "pipe-decode --db " + db.string() +
                                           " --generator replay:" + script.string() +
                                           " --n 3 --patience inf");
    const auto via_select = run_cli(dir, "select --db " + db.string() + " --candidates " +
                                             cands.string() + " --method exec");
    CHECK(via_pipe.exit_code == 0);
    CHECK(via_pipe.out == via_select.out);
}

TEST_CASE("cli eval: accuracy table, report file, rerun determinism") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);

    const auto tasks = dir.file("tasks.jsonl");
    {
        std::ofstream out(tasks);
        out << json{{"task_id", "t1"},
                    {"db", db.string()},
                    {"question", "count products"},
                    {"gold_sql", "SELECT COUNT(*) FROM products"}}
                   .dump()
            << "\n";
        out << json{{"task_id", "t2"},
                    {"db", db.string()},
                    {"question", "count customers"},
                    {"gold_sql", "SELECT COUNT(*) FROM customers"}}
                   .dump()
            << "\n";
    }
    const auto pools = dir.file("pools");
    std::filesystem::create_directory(pools);
    write_file(pools / "t1.json",
               json{{"question", "count products"},
                    {"candidates",
                     json::array({json{{"id", "a"}, {"sql", "SELECT COUNT(*) FROM products"}},
                                  json{{"id", "b"}, {"sql", "SELECT COUNT(id) FROM products"}},
                                  json{{"id", "c"}, {"sql", "SELECT 0"}}})}}
                   .dump());
    // JSONL pool flavor.
    write_file(pools / "t2.jsonl",
               json{{"id", "a"}, {"sql", "SELECT COUNT(*) FROM customers"}}.dump() + "\n" +
                   json{{"id", "b"}, {"sql", "SELEC broken"}}.dump() + "\n");

    const auto report_path = dir.file("report.json");
    const std::string args = "eval --tasks " + tasks.string() + " --pools " + pools.string() +
                             " --methods greedy,maj@3,exec@3,pass@3 --out " +
                             report_path.string();
    const auto r = run_cli(dir, args);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("exec@3") != std::string::npos);

    const json report = load_json_file(report_path);
    CHECK(report.at("task_count") == 2);
    CHECK(report.at("accuracy").at("exec@3") == 1.0);
    CHECK(report.at("accuracy").at("pass@3") == 1.0);

    const auto report2_path = dir.file("report2.json");
    const auto r2 = run_cli(dir, "eval --tasks " + tasks.string() + " --pools " +
                                     pools.string() +
                                     " --methods greedy,maj@3,exec@3,pass@3 --out " +
                                     report2_path.string());
    CHECK(r2.exit_code == 0);
    std::ifstream a(report_path), b(report2_path);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
}
