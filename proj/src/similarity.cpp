#include "sqlmbr/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace sqlmbr {

namespace {

// 2^53: largest magnitude below which every integer is exact in a double.
constexpr double kExactIntLimit = 9007199254740992.0;

// Round to 12 significant digits via decimal round-trip.
double round_12_sig(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return std::strtod(buf, nullptr);
}

Cell canonical_number(double v) {
    if (std::isnan(v)) return Cell{std::monostate{}};
    if (std::isinf(v)) return Cell{v};
    if (v == 0.0) v = 0.0;  // fold -0
    const double r = round_12_sig(v);
    if (std::nearbyint(r) == r && std::fabs(r) < kExactIntLimit)
        return Cell{static_cast<std::int64_t>(r)};
    return Cell{r};
}

struct CellHash {
    std::size_t operator()(const Cell& c) const {
        std::size_t h = std::hash<std::size_t>{}(c.index());
        auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
        switch (c.index()) {
            case 0: break;
            case 1: mix(std::hash<std::int64_t>{}(std::get<1>(c))); break;
            case 2: mix(std::hash<double>{}(std::get<2>(c))); break;
            case 3: mix(std::hash<std::string>{}(std::get<3>(c))); break;
            case 4: {
                const auto& b = std::get<4>(c).bytes;
                mix(std::hash<std::string_view>{}(std::string_view(
                    reinterpret_cast<const char*>(b.data()), b.size())));
                break;
            }
        }
        return h;
    }
};

using Multiset = std::unordered_map<Cell, std::int64_t, CellHash>;

Multiset column_multiset(const ResultTable& t, std::size_t col) {
    Multiset freq;
    freq.reserve(t.rows.size());
    for (const auto& row : t.rows) ++freq[normalize_cell(row[col])];
    return freq;
}

std::int64_t intersection(const Multiset& a, const Multiset& b) {
    const Multiset& small = a.size() <= b.size() ? a : b;
    const Multiset& large = a.size() <= b.size() ? b : a;
    std::int64_t r = 0;
    for (const auto& [v, n] : small) {
        auto it = large.find(v);
        if (it != large.end()) r += std::min(n, it->second);
    }
    return r;
}

}  // namespace

Cell normalize_cell(const Cell& cell) {
    switch (cell.index()) {
        case 1: return canonical_number(static_cast<double>(std::get<std::int64_t>(cell)));
        case 2: return canonical_number(std::get<double>(cell));
        case 3: {
            std::string s = std::get<std::string>(cell);
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
            return Cell{std::move(s)};
        }
        default: return cell;  // null and bytes are already canonical
    }
}

std::string normalize_column_name(std::string_view name) {
    std::size_t b = 0, e = name.size();
    while (b < e && std::isspace(static_cast<unsigned char>(name[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(name[e - 1]))) --e;
    std::string out;
    out.reserve(e - b);
    for (std::size_t i = b; i < e; ++i)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(name[i]))));
    return out;
}

namespace detail {

// Hungarian method with potentials, minimizing cost = -weight, rows padded
// so that rows <= cols. Deterministic for fixed input.
std::int64_t max_assignment(const std::vector<std::vector<std::int64_t>>& weights) {
    std::size_t n = weights.size();
    if (n == 0) return 0;
    std::size_t m = weights[0].size();
    if (m == 0) return 0;

    const bool transpose = n > m;
    auto w = [&](std::size_t i, std::size_t j) -> std::int64_t {
        return transpose ? weights[j][i] : weights[i][j];
    };
    if (transpose) std::swap(n, m);

    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> u(n + 1, 0), v(m + 1, 0);
    std::vector<std::size_t> match(m + 1, 0);  // match[j] = row assigned to column j (1-based)
    std::vector<std::size_t> way(m + 1, 0);

    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<std::int64_t> minv(m + 1, kInf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            std::int64_t delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = -w(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::int64_t total = 0;
    for (std::size_t j = 1; j <= m; ++j)
        if (match[j] != 0) total += w(match[j] - 1, j - 1);
    return total;
}

}  // namespace detail

double table_similarity(const ExecutionOutcome& oa, const ExecutionOutcome& ob) {
    const ResultTable* a = table_of(oa);
    const ResultTable* b = table_of(ob);
    if (!a || !b) return 0.0;

    const std::int64_t cells_a = static_cast<std::int64_t>(a->cell_count());
    const std::int64_t cells_b = static_cast<std::int64_t>(b->cell_count());
    if (cells_a == 0 && cells_b == 0) return 1.0;

    const std::int64_t na = static_cast<std::int64_t>(a->columns.size());
    const std::int64_t nb = static_cast<std::int64_t>(b->columns.size());
    const std::int64_t ra = static_cast<std::int64_t>(a->rows.size());
    const std::int64_t rb = static_cast<std::int64_t>(b->rows.size());

    // Phase 1: pair columns with equal normalized names, positionally within
    // duplicate-name groups. Leftovers go to the assignment phase.
    std::unordered_map<std::string, std::vector<std::size_t>> by_name_a, by_name_b;
    for (std::size_t i = 0; i < a->columns.size(); ++i)
        by_name_a[normalize_column_name(a->columns[i])].push_back(i);
    for (std::size_t i = 0; i < b->columns.size(); ++i)
        by_name_b[normalize_column_name(b->columns[i])].push_back(i);

    std::vector<Multiset> ms_a(a->columns.size()), ms_b(b->columns.size());
    auto col_a = [&](std::size_t i) -> const Multiset& {
        if (ms_a[i].empty() && ra > 0) ms_a[i] = column_multiset(*a, i);
        return ms_a[i];
    };
    std::int64_t r_sum = 0;
    std::vector<bool> used_a(a->columns.size(), false), used_b(b->columns.size(), false);
    for (auto& [name, cols_a] : by_name_a) {
        auto it = by_name_b.find(name);
        if (it == by_name_b.end()) continue;
        const auto& cols_b = it->second;
        const std::size_t pairs = std::min(cols_a.size(), cols_b.size());
        for (std::size_t k = 0; k < pairs; ++k) {
            used_a[cols_a[k]] = true;
            used_b[cols_b[k]] = true;
            if (ra > 0 && rb > 0) {
                ms_b[cols_b[k]] = column_multiset(*b, cols_b[k]);
                r_sum += intersection(col_a(cols_a[k]), ms_b[cols_b[k]]);
            }
        }
    }

    // Phase 2: remaining columns paired by max-weight assignment over their
    // pairwise intersections (covers aliased computed columns).
    std::vector<std::size_t> rem_a, rem_b;
    for (std::size_t i = 0; i < used_a.size(); ++i)
        if (!used_a[i]) rem_a.push_back(i);
    for (std::size_t i = 0; i < used_b.size(); ++i)
        if (!used_b[i]) rem_b.push_back(i);
    if (!rem_a.empty() && !rem_b.empty() && ra > 0 && rb > 0) {
        std::vector<std::vector<std::int64_t>> w(rem_a.size(),
                                                 std::vector<std::int64_t>(rem_b.size(), 0));
        for (std::size_t i = 0; i < rem_a.size(); ++i)
            for (std::size_t j = 0; j < rem_b.size(); ++j) {
                if (ms_b[rem_b[j]].empty()) ms_b[rem_b[j]] = column_multiset(*b, rem_b[j]);
                w[i][j] = intersection(col_a(rem_a[i]), ms_b[rem_b[j]]);
            }
        r_sum += detail::max_assignment(w);
    }

    // Every pairable column pair contributes the larger side's cell count;
    // unpaired columns contribute their own cells. Within one table all
    // columns share the row count, so the denominator has a closed form that
    // does not depend on which pairing won. For equal column sets this equals
    // max(total cells of A, total cells of B).
    const std::int64_t paired = std::min(na, nb);
    const std::int64_t denom =
        paired * std::max(ra, rb) + (na - paired) * ra + (nb - paired) * rb;
    return static_cast<double>(r_sum) / static_cast<double>(denom);
}

double plan_similarity(const ExecutionOutcome& a, const ExecutionOutcome& b) {
    return table_similarity(a, b);
}

SimilarityMatrix similarity_matrix(const std::vector<ExecutionOutcome>& outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("similarity_matrix: empty outcome list");
    const std::size_t n = outcomes.size();
    SimilarityMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.set(i, i, ok(outcomes[i]) ? 1.0 : 0.0);
        for (std::size_t j = i + 1; j < n; ++j)
            m.set_symmetric(i, j, table_similarity(outcomes[i], outcomes[j]));
    }
    return m;
}

double io_agreement(const OutputVector& a, const OutputVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("io_agreement: length mismatch");
    if (a.empty()) throw std::invalid_argument("io_agreement: empty output vectors");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].failed || b[i].failed) continue;
        if (normalize_cell(a[i].value) == normalize_cell(b[i].value)) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(a.size());
}

}  // namespace sqlmbr
