#include "sqlmbr/sqltext.hpp"

namespace sqlmbr::sqltext {

const char* region_name(RegionKind kind) {
    switch (kind) {
        case RegionKind::single_quote: return "single-quoted string";
        case RegionKind::double_quote: return "double-quoted identifier";
        case RegionKind::backtick: return "backtick identifier";
        case RegionKind::line_comment: return "line comment";
        case RegionKind::block_comment: return "block comment";
    }
    return "region";
}

std::optional<RegionKind> region_at(std::string_view text, std::size_t i) {
    const char c = text[i];
    if (c == '\'') return RegionKind::single_quote;
    if (c == '"') return RegionKind::double_quote;
    if (c == '`') return RegionKind::backtick;
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') return RegionKind::line_comment;
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') return RegionKind::block_comment;
    return std::nullopt;
}

namespace {

// Closing position for a quoted region; doubled quotes escape.
std::size_t quoted_end(std::string_view text, std::size_t start, char quote) {
    std::size_t i = start + 1;
    while (i < text.size()) {
        if (text[i] == quote) {
            if (i + 1 < text.size() && text[i + 1] == quote) {
                i += 2;
                continue;
            }
            return i + 1;
        }
        ++i;
    }
    return npos;
}

}  // namespace

std::size_t region_end(std::string_view text, std::size_t start, RegionKind kind) {
    switch (kind) {
        case RegionKind::single_quote: return quoted_end(text, start, '\'');
        case RegionKind::double_quote: return quoted_end(text, start, '"');
        case RegionKind::backtick: return quoted_end(text, start, '`');
        case RegionKind::line_comment: {
            const std::size_t nl = text.find('\n', start);
            return nl == npos ? text.size() : nl + 1;
        }
        case RegionKind::block_comment: {
            const std::size_t close = text.find("*/", start + 2);
            return close == npos ? npos : close + 2;
        }
    }
    return npos;
}

}  // namespace sqlmbr::sqltext
