#include <doctest.h>

#include <fstream>

#include "sqlmbr/eval.hpp"
#include "testutil.hpp"

using namespace sqlmbr;
using testutil::TempDir;

namespace {

ResultTable table(std::vector<std::string> cols, std::vector<std::vector<Cell>> rows) {
    ResultTable t;
    t.columns = std::move(cols);
    t.rows = std::move(rows);
    return t;
}

Cell I(std::int64_t v) { return Cell{v}; }
Cell S(const char* v) { return Cell{std::string(v)}; }

}  // namespace

TEST_CASE("has_toplevel_order_by") {
    CHECK(has_toplevel_order_by("SELECT a FROM t ORDER BY a"));
    CHECK(has_toplevel_order_by("SELECT a FROM t order   by a"));
    CHECK(has_toplevel_order_by("SELECT a FROM t ORDER /*x*/ BY a"));
    CHECK_FALSE(has_toplevel_order_by("SELECT a FROM (SELECT b FROM t ORDER BY b)"));
    CHECK_FALSE(has_toplevel_order_by("SELECT 'ORDER BY'"));
    CHECK_FALSE(has_toplevel_order_by("SELECT a FROM t -- ORDER BY a"));
    CHECK_FALSE(has_toplevel_order_by("SELECT orderx, BY FROM t"));
}

TEST_CASE("result_match: multisets, canonicalization, order sensitivity") {
    const auto gold = table({"name"}, {{S("a")}, {S("b")}});
    SUBCASE("identical tables match") {
        CHECK(result_match(gold, gold, "SELECT name FROM t"));
    }
    SUBCASE("row order is ignored without a top-level ORDER BY") {
        const auto pred = table({"other_name"}, {{S("b")}, {S("a")}});
        CHECK(result_match(pred, gold, "SELECT name FROM t"));
    }
    SUBCASE("row order matters under a top-level ORDER BY") {
        const auto pred = table({"name"}, {{S("b")}, {S("a")}});
        CHECK_FALSE(result_match(pred, gold, "SELECT name FROM t ORDER BY name"));
        CHECK(result_match(gold, gold, "SELECT name FROM t ORDER BY name"));
    }
    SUBCASE("duplicates matter") {
        const auto pred = table({"name"}, {{S("a")}, {S("a")}});
        CHECK_FALSE(result_match(pred, gold, "SELECT name FROM t"));
    }
    SUBCASE("numeric cells are canonicalized") {
        const auto a = table({"v"}, {{I(2)}});
        const auto b = table({"v"}, {{Cell{2.0}}});
        CHECK(result_match(a, b, "SELECT v FROM t"));
    }
    SUBCASE("column count mismatch never matches") {
        const auto pred = table({"a", "b"}, {{S("a"), S("a")}, {S("b"), S("b")}});
        CHECK_FALSE(result_match(pred, gold, "SELECT name FROM t"));
    }
}

TEST_CASE("method spec parsing and names") {
    CHECK(MethodSpec::parse("greedy").name() == "greedy");
    CHECK(MethodSpec::parse("maj@10").name() == "maj@10");
    CHECK(MethodSpec::parse("exec@30").name() == "exec@30");
    CHECK(MethodSpec::parse("plan@5").name() == "plan@5");
    CHECK(MethodSpec::parse("pass@10").name() == "pass@10");
    CHECK(MethodSpec::parse("maj-verbatim@3").normalized == false);
    CHECK_THROWS_AS(MethodSpec::parse("magic@10"), std::invalid_argument);
    CHECK_THROWS_AS(MethodSpec::parse("exec@x"), std::invalid_argument);
}

namespace {

// A hand-built three-task suite over the shop db.
struct MiniSuite {
    std::vector<Task> tasks;
    std::map<std::string, CandidatePool> pools;
};

MiniSuite mini_suite(const std::string& db_path) {
    MiniSuite s;
    auto add_task = [&](const std::string& id, const std::string& gold) {
        Task t;
        t.task_id = id;
        t.db.path = db_path;
        t.question = "q-" + id;
        t.gold_sql = gold;
        s.tasks.push_back(t);
    };
    auto pool = [&](const std::string& id, std::vector<std::string> sqls) {
        CandidatePool p;
        p.question = "q-" + id;
        for (std::size_t i = 0; i < sqls.size(); ++i)
            p.candidates.push_back(
                Candidate{"c" + std::to_string(i), std::move(sqls[i]), "m", 1.0});
        s.pools[id] = std::move(p);
    };

    // All three candidates execute to the gold answer, texts split 2-vs-1.
    add_task("t1", "SELECT COUNT(*) FROM products");
    pool("t1", {"SELECT COUNT(*) FROM products", "select   count(*) from products",
                "SELECT COUNT(id) FROM products"});

    // 1 correct + 2 textually identical failing candidates: majority picks
    // the failing pair, execution similarity picks the correct one.
    add_task("t2", "SELECT COUNT(*) FROM customers");
    pool("t2", {"SELECT COUNT(*) FROM custoner", "SELECT COUNT(*) FROM custoner",
                "SELECT COUNT(*) FROM customers"});

    // Nothing correct.
    add_task("t3", "SELECT COUNT(*) FROM orders");
    pool("t3", {"SELECT COUNT(*) FROM customers", "SELECT MAX(price) FROM products",
                "SELEC broken"});
    return s;
}

}  // namespace

TEST_CASE("evaluate: verdicts, dominance, determinism") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);
    MiniSuite s = mini_suite(db.string());

    const std::vector<MethodSpec> methods = {
        MethodSpec::parse("greedy"), MethodSpec::parse("maj@3"), MethodSpec::parse("exec@3"),
        MethodSpec::parse("plan@3"), MethodSpec::parse("pass@3")};
    ExecLimits limits;
    limits.timeout = std::chrono::milliseconds(3000);

    const EvalReport r = evaluate(s.tasks, s.pools, methods, limits);
    CHECK(r.task_count == 3);

    CHECK(r.verdicts.at("t1").at("greedy") == "correct");
    CHECK(r.verdicts.at("t1").at("maj@3") == "correct");
    CHECK(r.verdicts.at("t1").at("exec@3") == "correct");
    CHECK(r.verdicts.at("t1").at("pass@3") == "correct");

    CHECK(r.verdicts.at("t2").at("maj@3") == "invalid");  // chose a failing candidate
    CHECK(r.verdicts.at("t2").at("exec@3") == "correct");
    CHECK(r.verdicts.at("t2").at("greedy") == "invalid");
    CHECK(r.verdicts.at("t2").at("pass@3") == "correct");

    CHECK(r.verdicts.at("t3").at("pass@3") == "incorrect");
    CHECK(r.verdicts.at("t3").at("exec@3") == "incorrect");

    CHECK(r.accuracy.at("pass@3") == doctest::Approx(2.0 / 3.0));
    CHECK(r.accuracy.at("exec@3") == doctest::Approx(2.0 / 3.0));
    CHECK(r.accuracy.at("maj@3") == doctest::Approx(1.0 / 3.0));
    // Dominance: pass@n accuracy bounds every method.
    for (const auto& [method, acc] : r.accuracy) CHECK(r.accuracy.at("pass@3") >= acc);

    // Pool stats mark the failing candidates.
    CHECK(r.pool_stats.at("t2").failed == 2);
    CHECK(r.pool_stats.at("t3").failed == 1);

    // Byte-identical rerun.
    const EvalReport r2 = evaluate(s.tasks, s.pools, methods, limits);
    CHECK(eval_report_to_json(r).dump() == eval_report_to_json(r2).dump());
}

TEST_CASE("evaluate: exec@1 equals greedy on every pool") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);
    MiniSuite s = mini_suite(db.string());
    const std::vector<MethodSpec> methods = {MethodSpec::parse("greedy"),
                                             MethodSpec::parse("exec@1"),
                                             MethodSpec::parse("maj@1")};
    const EvalReport r = evaluate(s.tasks, s.pools, methods, ExecLimits{});
    for (const auto& [task, verdicts] : r.verdicts) {
        CHECK(verdicts.at("exec@1") == verdicts.at("greedy"));
        CHECK(verdicts.at("maj@1") == verdicts.at("greedy"));
    }
}

TEST_CASE("evaluate: missing pools and failing gold are skipped loudly") {
    TempDir dir;
    const auto db = testutil::make_shop_db(dir);
    MiniSuite s = mini_suite(db.string());
    Task broken;
    broken.task_id = "t4";
    broken.db.path = db.string();
    broken.gold_sql = "SELECT a FROM no_such_table";
    s.tasks.push_back(broken);
    CandidatePool p;
    p.candidates.push_back(Candidate{"c0", "SELECT 1", "", 1.0});
    s.pools["t4"] = p;

    Task orphan;
    orphan.task_id = "t5";
    orphan.db.path = db.string();
    orphan.gold_sql = "SELECT 1";
    s.tasks.push_back(orphan);  // no pool

    const EvalReport r =
        evaluate(s.tasks, s.pools, {MethodSpec::parse("exec@3")}, ExecLimits{});
    CHECK(r.task_count == 3);  // t4, t5 excluded from denominators
    CHECK(r.skipped == std::vector<std::string>{"t4", "t5"});
    CHECK(r.warnings.size() == 2);
}

TEST_CASE("load_tasks parses JSONL and rejects unknown keys") {
    TempDir dir;
    const auto f = dir.file("tasks.jsonl");
    {
        std::ofstream out(f);
        out << R"({"task_id":"a","db":"x.db","question":"?","gold_sql":"SELECT 1"})" << "\n";
        out << "\n";
        out << R"({"task_id":"b","db":"y.db","question":"?","evidence":"e","gold_sql":"SELECT 2"})"
            << "\n";
    }
    const auto tasks = load_tasks(f);
    REQUIRE(tasks.size() == 2);
    CHECK(tasks[0].task_id == "a");
    CHECK(tasks[1].evidence == "e");

    const auto bad = dir.file("bad.jsonl");
    {
        std::ofstream out(bad);
        out << R"({"task_id":"a","db":"x.db","gold_sql":"SELECT 1","extra":true})" << "\n";
    }
    CHECK_THROWS_AS(load_tasks(bad), std::invalid_argument);
}
