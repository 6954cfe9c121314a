#include "sqlmbr/core.hpp"

#include <cctype>
#include <stdexcept>
#include <unordered_set>

namespace sqlmbr {

namespace {

bool blank(const std::string& s) {
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

std::string outcome_summary(const ExecutionOutcome& o) {
    if (const auto* t = table_of(o)) {
        std::string s = "ok(" + std::to_string(t->rows.size()) + "x" +
                        std::to_string(t->columns.size()) + ")";
        if (t->truncated) s += " truncated";
        return s;
    }
    if (const auto* e = std::get_if<EngineError>(&o)) return "error: " + e->message;
    const auto& t = std::get<Timeout>(o);
    return "timeout: " + std::to_string(t.limit.count()) + "ms";
}

void CandidatePool::validate() const {
    if (candidates.empty()) throw std::invalid_argument("candidate pool is empty");
    std::unordered_set<std::string> seen;
    for (const auto& c : candidates) {
        if (!seen.insert(c.id).second)
            throw std::invalid_argument("duplicate candidate id: " + c.id);
        if (!(c.weight > 0.0))
            throw std::invalid_argument("candidate " + c.id + " has non-positive weight");
        if (blank(c.sql)) throw std::invalid_argument("candidate " + c.id + " has empty sql");
    }
}

const char* method_name(SelectionMethod m) {
    switch (m) {
        case SelectionMethod::exec_exact: return "exec_exact";
        case SelectionMethod::exec_plan: return "exec_plan";
        case SelectionMethod::majority: return "majority";
        case SelectionMethod::first: return "first";
    }
    return "unknown";
}

}  // namespace sqlmbr
