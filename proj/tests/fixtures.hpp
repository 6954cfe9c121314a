#pragma once

// Constructed evaluation suite over the shop database: every pool carries
// three textually diverse candidates that execute to the gold answer, a
// four-copy textual majority that fails (several of them mutation attempts),
// and three executable candidates with pairwise-distinct wrong results. Text
// frequency therefore favors a failing query while execution agreement
// concentrates on the correct ones.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sqlmbr/eval.hpp"
#include "sqlmbr/serialize.hpp"
#include "testutil.hpp"

namespace fixtures {

struct ToySuite {
    std::filesystem::path db;
    std::filesystem::path tasks_file;
    std::filesystem::path pools_dir;
    std::vector<sqlmbr::Task> tasks;
    std::map<std::string, sqlmbr::CandidatePool> pools;
};

struct TaskSpec {
    std::string expr;
    std::string table;
    std::string suffix;  // "", " WHERE ...", or " ORDER BY ..."
};

inline const std::vector<TaskSpec>& task_specs() {
    static const std::vector<TaskSpec> specs = {
        {"COUNT(*)", "products", ""},
        {"COUNT(*)", "products", " WHERE category = 'tools'"},
        {"COUNT(*)", "products", " WHERE category = 'toys'"},
        {"COUNT(*)", "orders", ""},
        {"COUNT(*)", "orders", " WHERE qty > 1"},
        {"COUNT(*)", "customers", ""},
        {"COUNT(*)", "customers", " WHERE city = 'york'"},
        {"name", "products", " WHERE price > 10"},
        {"name", "products", " WHERE category = 'toys'"},
        {"MAX(price)", "products", ""},
        {"MIN(price)", "products", ""},
        {"AVG(qty)", "orders", ""},
        {"SUM(qty)", "orders", ""},
        {"city", "customers", " WHERE id <= 3"},
        {"name", "customers", " WHERE city = 'leeds'"},
        {"category", "products", " WHERE price < 5"},
        {"COUNT(*)", "orders", " WHERE day = 'mon'"},
        {"name", "products", " ORDER BY price DESC LIMIT 3"},
        {"day", "orders", " WHERE product_id = 3"},
        {"price", "products", " WHERE name = 'kite'"},
    };
    return specs;
}

inline const std::vector<std::string>& failing_majorities() {
    static const std::vector<std::string> texts = {
        "SELECT COUNT(*) FROM prodcts",
        "UPDATE products SET price = 0",
        "DELETE FROM orders",
        "DROP TABLE customers",
        "INSERT INTO products VALUES (99,'x','y',1.0)",
        "SELECT nonexistent_col FROM products",
    };
    return texts;
}

inline ToySuite build_toy_suite(const testutil::TempDir& dir) {
    namespace fs = std::filesystem;
    ToySuite suite;
    suite.db = testutil::make_shop_db(dir);
    suite.tasks_file = dir.file("tasks.jsonl");
    suite.pools_dir = dir.file("pools");
    fs::create_directory(suite.pools_dir);

    std::ofstream tasks_out(suite.tasks_file);
    const auto& specs = task_specs();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const TaskSpec& spec = specs[i];
        const std::string id = (i < 9 ? "t0" : "t") + std::to_string(i + 1);
        const std::string gold = "SELECT " + spec.expr + " FROM " + spec.table + spec.suffix;

        sqlmbr::Task task;
        task.task_id = id;
        task.db.path = suite.db.string();
        task.question = "toy question " + id;
        task.gold_sql = gold;
        suite.tasks.push_back(task);
        tasks_out << sqlmbr::json{{"task_id", id},
                                  {"db", suite.db.string()},
                                  {"question", task.question},
                                  {"gold_sql", gold}}
                         .dump()
                  << "\n";

        // Three textually diverse equivalents of the gold query.
        const std::string c1 = gold;
        const std::string c2 =
            "SELECT " + spec.expr + " FROM (SELECT * FROM " + spec.table + ")" + spec.suffix;
        const std::string c3 =
            "SELECT " + spec.expr + " FROM " + spec.table + " AS src" + spec.suffix;
        // Executable but wrong, with pairwise-distinct results.
        const std::string w1 = "SELECT 'w" + id + "a'";
        const std::string w2 = "SELECT 'w" + id + "b'";
        const std::string w3 = "SELECT 'w" + id + "c'";
        // Textual majority: four copies of one failing (often mutating) query.
        const std::string bad = failing_majorities()[i % failing_majorities().size()];

        const std::vector<std::string> texts = {bad, c1, w1, c2, bad, w2, c3, bad, w3, bad};
        sqlmbr::CandidatePool pool;
        pool.question = task.question;
        pool.db_ref = suite.db.string();
        for (std::size_t k = 0; k < texts.size(); ++k)
            pool.candidates.push_back(
                sqlmbr::Candidate{"c" + std::to_string(k), texts[k], "toy", 1.0});
        sqlmbr::write_json_file(suite.pools_dir / (id + ".json"), sqlmbr::pool_to_json(pool));
        suite.pools[id] = std::move(pool);
    }
    return suite;
}

}  // namespace fixtures
