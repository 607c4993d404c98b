#include "graphrank/text.hpp"

#include <algorithm>

namespace graphrank::text {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](char c) { return to_lower_ascii(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && is_ascii_space(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && is_ascii_space(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (char c : trim(s)) {
        if (is_ascii_space(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_name(std::string_view s) {
    std::string out = collapse_whitespace(lower(s));
    while (!out.empty()) {
        unsigned char back = static_cast<unsigned char>(out.back());
        if (is_ascii_alnum(back)) break;
        out.pop_back();
    }
    // Stripping punctuation can expose trailing spaces ("brand :" -> "brand ").
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string normalize_match(std::string_view s) { return collapse_whitespace(lower(s)); }

std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            return parts;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

std::vector<std::string> name_tokens(std::string_view normalized) {
    std::vector<std::string> tokens;
    for (auto& tok : split(normalized, ' ')) {
        if (!tok.empty()) tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::string last_token(std::string_view normalized) {
    auto tokens = name_tokens(normalized);
    return tokens.empty() ? std::string{} : tokens.back();
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace graphrank::text
