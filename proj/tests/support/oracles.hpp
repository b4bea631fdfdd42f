#pragma once

// Brute-force reference implementations used to cross-check the library.
// They follow the textbook definitions literally and share no code with src/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline double reciprocal_rank(const std::vector<std::string>& ranking, const std::set<std::string>& rel) {
    for (std::size_t i = 0; i < ranking.size(); ++i)
        if (rel.count(ranking[i])) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

// AP@k = (1 / min(|R|, k)) * sum over relevant positions i <= k of precision@i.
// `use_all_relevant` switches the normalizer to |R|.
inline double average_precision(const std::vector<std::string>& ranking, const std::set<std::string>& rel,
                                std::size_t k, bool use_all_relevant = false) {
    if (rel.empty()) return 0.0;
    const std::size_t depth = std::min(k, ranking.size());
    double sum = 0.0;
    for (std::size_t i = 1; i <= depth; ++i) {
        if (!rel.count(ranking[i - 1])) continue;
        std::size_t hits = 0;
        for (std::size_t j = 1; j <= i; ++j) hits += rel.count(ranking[j - 1]);
        sum += static_cast<double>(hits) / static_cast<double>(i);
    }
    const double denom = use_all_relevant ? static_cast<double>(rel.size())
                                          : static_cast<double>(std::min(rel.size(), k));
    return sum / denom;
}

inline int has_positives(const std::vector<std::string>& ranking, const std::set<std::string>& rel, std::size_t k) {
    for (std::size_t i = 0; i < ranking.size() && i < k; ++i)
        if (rel.count(ranking[i])) return 1;
    return 0;
}

// Okapi BM25 straight from the formula, recomputing every statistic per call.
inline double bm25(const std::vector<std::vector<std::string>>& docs, std::size_t d,
                   const std::vector<std::string>& query, double k1, double b) {
    const double n = static_cast<double>(docs.size());
    double total = 0.0;
    for (const auto& doc : docs) total += static_cast<double>(doc.size());
    const double avg = total / n;
    double score = 0.0;
    for (const auto& term : query) {
        double df = 0.0;
        for (const auto& doc : docs)
            if (std::find(doc.begin(), doc.end(), term) != doc.end()) df += 1.0;
        const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), term));
        if (tf == 0.0) continue;
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        const double len = static_cast<double>(docs[d].size());
        const double norm = avg > 0.0 ? len / avg : 0.0;
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
    }
    return score;
}

}  // namespace oracle
