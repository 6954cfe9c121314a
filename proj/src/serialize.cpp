#include "sqlmbr/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sqlmbr/pipe.hpp"

namespace sqlmbr {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0xf]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("blob hex has odd length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("invalid hex digit in blob");
    };
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return out;
}

}  // namespace

json cell_to_json(const Cell& c) {
    switch (c.index()) {
        case 0: return nullptr;
        case 1: return std::get<std::int64_t>(c);
        case 2: return std::get<double>(c);
        case 3: return std::get<std::string>(c);
        default: return json{{"blob", to_hex(std::get<Blob>(c).bytes)}};
    }
}

Cell cell_from_json(const json& j) {
    if (j.is_null()) return Cell{std::monostate{}};
    if (j.is_number_integer()) return Cell{j.get<std::int64_t>()};
    if (j.is_number_float()) return Cell{j.get<double>()};
    if (j.is_string()) return Cell{j.get<std::string>()};
    if (j.is_object() && j.contains("blob")) {
        strict_keys(j, {"blob"}, "cell");
        return Cell{Blob{from_hex(j.at("blob").get<std::string>())}};
    }
    throw std::invalid_argument("cell: unrecognized JSON value: " + j.dump());
}

json table_to_json(const ResultTable& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (const auto& cell : row) r.push_back(cell_to_json(cell));
        rows.push_back(std::move(r));
    }
    return json{{"columns", t.columns}, {"rows", std::move(rows)}, {"truncated", t.truncated}};
}

ResultTable table_from_json(const json& j) {
    strict_keys(j, {"columns", "rows", "truncated"}, "table");
    ResultTable t;
    t.columns = j.at("columns").get<std::vector<std::string>>();
    t.truncated = j.value("truncated", false);
    for (const auto& row : j.at("rows")) {
        std::vector<Cell> r;
        r.reserve(row.size());
        for (const auto& cell : row) r.push_back(cell_from_json(cell));
        if (r.size() != t.columns.size())
            throw std::invalid_argument("table: row width does not match column count");
        t.rows.push_back(std::move(r));
    }
    return t;
}

json outcome_to_json(const ExecutionOutcome& o) {
    if (const auto* t = table_of(o)) return json{{"status", "ok"}, {"table", table_to_json(*t)}};
    if (const auto* e = std::get_if<EngineError>(&o))
        return json{{"status", "error"}, {"message", e->message}};
    const auto& t = std::get<Timeout>(o);
    return json{{"status", "timeout"}, {"limit_ms", t.limit.count()}};
}

ExecutionOutcome outcome_from_json(const json& j) {
    const std::string status = j.at("status").get<std::string>();
    if (status == "ok") {
        strict_keys(j, {"status", "table"}, "outcome");
        return table_from_json(j.at("table"));
    }
    if (status == "error") {
        strict_keys(j, {"status", "message"}, "outcome");
        return EngineError{j.at("message").get<std::string>()};
    }
    if (status == "timeout") {
        strict_keys(j, {"status", "limit_ms"}, "outcome");
        return Timeout{std::chrono::milliseconds(j.at("limit_ms").get<std::int64_t>())};
    }
    throw std::invalid_argument("outcome: unknown status '" + status + "'");
}

json candidate_to_json(const Candidate& c) {
    return json{{"id", c.id}, {"sql", c.sql}, {"source", c.source}, {"weight", c.weight}};
}

Candidate candidate_from_json(const json& j) {
    strict_keys(j, {"id", "sql", "source", "weight"}, "candidate");
    Candidate c;
    c.id = j.value("id", "");  // loaders assign c<index> when absent
    c.sql = j.at("sql").get<std::string>();
    c.source = j.value("source", "");
    c.weight = j.value("weight", 1.0);
    return c;
}

json pool_to_json(const CandidatePool& p) {
    json cands = json::array();
    for (const auto& c : p.candidates) cands.push_back(candidate_to_json(c));
    return json{{"question", p.question}, {"db", p.db_ref}, {"candidates", std::move(cands)}};
}

CandidatePool pool_from_json(const json& j) {
    strict_keys(j, {"question", "db", "candidates"}, "candidate pool");
    CandidatePool p;
    p.question = j.value("question", "");
    p.db_ref = j.value("db", "");
    std::size_t auto_id = 0;
    for (const auto& c : j.at("candidates")) {
        Candidate cand = candidate_from_json(c);
        if (cand.id.empty()) cand.id = "c" + std::to_string(auto_id);
        ++auto_id;
        p.candidates.push_back(std::move(cand));
    }
    return p;
}

json matrix_to_json(const SimilarityMatrix& m) {
    json entries = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m.at(i, j));
        entries.push_back(std::move(row));
    }
    return json{{"n", m.size()}, {"entries", std::move(entries)}};
}

SimilarityMatrix matrix_from_json(const json& j) {
    strict_keys(j, {"n", "entries"}, "similarity matrix");
    const std::size_t n = j.at("n").get<std::size_t>();
    SimilarityMatrix m(n);
    const auto& entries = j.at("entries");
    if (entries.size() != n) throw std::invalid_argument("matrix: entries size != n");
    for (std::size_t i = 0; i < n; ++i) {
        if (entries[i].size() != n) throw std::invalid_argument("matrix: row size != n");
        for (std::size_t k = 0; k < n; ++k) m.set(i, k, entries[i][k].get<double>());
    }
    return m;
}

json report_to_json(const SelectionReport& r) {
    return json{{"chosen_index", r.chosen_index},
                {"chosen_id", r.chosen_id},
                {"scores", r.scores},
                {"method", method_name(r.method)},
                {"per_candidate_outcome", r.per_candidate_outcome},
                {"tie", r.tie},
                {"all_failed", r.all_failed}};
}

SelectionReport report_from_json(const json& j) {
    strict_keys(j,
                {"chosen_index", "chosen_id", "scores", "method", "per_candidate_outcome", "tie",
                 "all_failed"},
                "selection report");
    SelectionReport r;
    r.chosen_index = j.at("chosen_index").get<std::size_t>();
    r.chosen_id = j.at("chosen_id").get<std::string>();
    r.scores = j.at("scores").get<std::vector<double>>();
    const std::string m = j.at("method").get<std::string>();
    if (m == "exec_exact")
        r.method = SelectionMethod::exec_exact;
    else if (m == "exec_plan")
        r.method = SelectionMethod::exec_plan;
    else if (m == "majority")
        r.method = SelectionMethod::majority;
    else if (m == "first")
        r.method = SelectionMethod::first;
    else
        throw std::invalid_argument("report: unknown method '" + m + "'");
    r.per_candidate_outcome = j.value("per_candidate_outcome", std::vector<std::string>{});
    r.tie = j.value("tie", false);
    r.all_failed = j.value("all_failed", false);
    return r;
}

void strict_keys(const json& object, std::initializer_list<const char*> allowed,
                 const std::string& context) {
    if (!object.is_object()) throw std::invalid_argument(context + ": expected a JSON object");
    for (const auto& [key, value] : object.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw std::invalid_argument(context + ": unknown key '" + key + "'");
    }
}

json load_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    json j;
    in >> j;
    return j;
}

void write_json_file(const std::filesystem::path& file, const json& value) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << value.dump(2) << "\n";
}

CandidatePool load_candidates_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    if (file.extension() == ".jsonl") {
        CandidatePool p;
        std::istringstream lines(text);
        std::string line;
        std::size_t auto_id = 0;
        while (std::getline(lines, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            Candidate c = candidate_from_json(json::parse(line));
            if (c.id.empty()) c.id = "c" + std::to_string(auto_id);
            ++auto_id;
            p.candidates.push_back(std::move(c));
        }
        p.validate();
        return p;
    }
    CandidatePool p = pool_from_json(json::parse(text));
    p.validate();
    return p;
}

std::string matrix_to_csv(const SimilarityMatrix& m) {
    std::ostringstream out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (j) out << ",";
            out << m.at(i, j);
        }
        out << "\n";
    }
    return out.str();
}

json decode_step_to_json(const DecodeStep& s) {
    json trajs = json::array();
    for (const auto& t : s.trajectories)
        trajs.push_back(json{{"id", t.id},
                             {"prefix", t.prefix},
                             {"rejections", t.rejections},
                             {"status", t.status}});
    json prunes = json::array();
    for (const auto& p : s.prunes)
        prunes.push_back(json{{"pruned", p.pruned_id}, {"restarted", p.restarted_id}});
    return json{{"step", s.step},
                {"trajectories", std::move(trajs)},
                {"outcomes", s.outcome_summaries},
                {"matrix", matrix_to_json(s.matrix)},
                {"consensus_index", s.consensus_index},
                {"consensus_id", s.consensus_id},
                {"tie", s.consensus_tie},
                {"prunes", std::move(prunes)},
                {"completed", s.completed_ids}};
}

json decode_result_to_json(const DecodeResult& r) {
    json pool = json::array();
    for (const auto& c : r.final_pool) pool.push_back(candidate_to_json(c));
    return json{{"final_pool", std::move(pool)},
                {"report", report_to_json(r.report)},
                {"chosen_sql", r.chosen_sql},
                {"incomplete", r.incomplete}};
}

std::string trace_to_jsonl(const DecodeResult& r) {
    std::ostringstream out;
    for (const auto& s : r.steps) out << decode_step_to_json(s).dump() << "\n";
    out << json{{"final", decode_result_to_json(r)}}.dump() << "\n";
    return out.str();
}

void write_trace_jsonl(const std::filesystem::path& file, const DecodeResult& r) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << trace_to_jsonl(r);
}

}  // namespace sqlmbr
