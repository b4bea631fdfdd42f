#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace claimrank {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Candidates in rank order; the rank of entry i is i + 1.
using RankedList = std::vector<ScoredDoc>;

/// Score descending, then doc id ascending.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/// Sorts into rank order and keeps the first top_n entries.
inline void sort_and_truncate(RankedList& list, std::size_t top_n) {
    if (top_n < list.size()) {
        std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(top_n), list.end(),
                          ranks_before);
        list.resize(top_n);
    } else {
        std::sort(list.begin(), list.end(), ranks_before);
    }
}

inline std::vector<std::string> doc_ids(const RankedList& list) {
    std::vector<std::string> ids;
    ids.reserve(list.size());
    for (const auto& e : list) ids.push_back(e.doc_id);
    return ids;
}

}  // namespace claimrank
