#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace sqlmbr::sqltext {

// Lexical regions a SQL scanner must not look inside.
enum class RegionKind {
    single_quote,   // 'string literal', '' escapes
    double_quote,   // "identifier", "" escapes
    backtick,       // `identifier`, `` escapes
    line_comment,   // -- to end of line
    block_comment,  // /* ... */ (non-nesting)
};

const char* region_name(RegionKind kind);

// Region opening at text[i], if any.
std::optional<RegionKind> region_at(std::string_view text, std::size_t i);

// One past the end of the region opening at `start`. Line comments are
// terminated by newline or end of text; quotes and block comments return
// npos when unterminated.
std::size_t region_end(std::string_view text, std::size_t start, RegionKind kind);

inline constexpr std::size_t npos = std::string_view::npos;

}  // namespace sqlmbr::sqltext
