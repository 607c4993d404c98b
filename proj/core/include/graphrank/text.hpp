#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

// ASCII-only text helpers shared by schema standardization, extraction value
// cleanup, and the fallback scorer. Locale-independent by design: bytes
// outside [0-9A-Za-z] are treated as separators/punctuation so behavior is
// identical on every platform.

namespace graphrank::text {

constexpr bool is_ascii_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

constexpr bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr char to_lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string lower(std::string_view s);
std::string_view trim(std::string_view s);

/// Collapses every run of whitespace to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// Canonical attribute-name form: lowercase, trimmed, internal whitespace
/// collapsed, trailing punctuation stripped ("Screen  Size:" -> "screen size").
std::string normalize_name(std::string_view s);

/// Value form used for match comparisons: lowercase + whitespace collapse.
/// Units are deliberately not canonicalized ("6.1 in" != "6.1 inches" here;
/// the containment rule in the fallback scorer softens that).
std::string normalize_match(std::string_view s);

std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Whitespace-delimited tokens of a normalized name.
std::vector<std::string> name_tokens(std::string_view normalized);

/// Last whitespace-delimited token ("screen size" -> "size"); empty if none.
std::string last_token(std::string_view normalized);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

}  // namespace graphrank::text
