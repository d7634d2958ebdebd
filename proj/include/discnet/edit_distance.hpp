#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace discnet {

// Collapse every run of whitespace to a single space and trim the ends.
inline std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_gap = true;  // swallow leading whitespace
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_gap) out.push_back(' ');
            in_gap = true;
        } else {
            out.push_back(c);
            in_gap = false;
        }
    }
    if (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

// Levenshtein distance with two rolling rows.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1), curr(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        curr[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

// Levenshtein over whitespace-normalized text, scaled by the longer length.
// Symmetric, in [0,1]; two empty strings are at distance 0.
inline double normalized_edit_distance(std::string_view a, std::string_view b) {
    std::string na = normalize_whitespace(a);
    std::string nb = normalize_whitespace(b);
    std::size_t longest = std::max(na.size(), nb.size());
    if (longest == 0) return 0.0;
    return static_cast<double>(levenshtein(na, nb)) / static_cast<double>(longest);
}

}  // namespace discnet
