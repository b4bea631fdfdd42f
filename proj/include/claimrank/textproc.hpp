#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "claimrank/corpus.hpp"

namespace claimrank {

inline constexpr std::string_view kUrlToken = "URL";
inline constexpr std::string_view kMentionToken = "MENTION";

/// Lowercased alphanumeric runs. Bytes >= 0x80 count as word characters so
/// UTF-8 words stay whole. URLs (http://, https://, www.) become "URL" and
/// @-mentions become "MENTION"; a bare uppercase "URL"/"MENTION" word is kept
/// as the placeholder so that re-tokenizing joined tokens is a fixed point.
/// No stemming and no stopword removal.
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens);

/// Sparse non-negative term-weight vector, sorted by term.
class SparseVector {
public:
    SparseVector() = default;
    /// Zero weights are dropped; duplicate terms are summed.
    explicit SparseVector(std::vector<std::pair<std::string, double>> entries);

    const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    double weight(std::string_view term) const;
    double norm() const;
    double dot(const SparseVector& other) const;

private:
    std::vector<std::pair<std::string, double>> entries_;
};

/// Smoothed TF.IDF: weight = tf * (ln((1 + N) / (1 + df)) + 1).
class TfidfModel {
public:
    /// Throws std::invalid_argument on an empty corpus.
    static TfidfModel fit(std::span<const std::string> corpus);

    double idf(std::string_view term) const;
    SparseVector transform(std::string_view text) const;
    std::size_t doc_count() const noexcept { return doc_count_; }
    std::size_t vocabulary_size() const noexcept { return df_.size(); }

private:
    std::size_t doc_count_ = 0;
    std::unordered_map<std::string, std::size_t> df_;
};

struct CosineResult {
    double value = 0.0;
    /// Set when either operand has zero norm; value is then 0.0.
    bool zero_norm = false;
};

/// Dense operands must have equal length (std::invalid_argument otherwise).
CosineResult cosine(std::span<const double> u, std::span<const double> v);
CosineResult cosine(std::span<const float> u, std::span<const float> v);
CosineResult cosine(const SparseVector& u, const SparseVector& v);

struct HistogramRow {
    double threshold = 0.0;
    std::size_t count = 0;
    double percent = 0.0;
};

/// TF.IDF cosine between each pair's input text and its verified claim's
/// ver_claim, fit on the union of all paired input texts and all ver_claims.
std::vector<double> pair_similarities(const PairSet& pairs, const VerifiedClaimStore& claims);

/// Count and percentage of pairs whose similarity is strictly above each threshold.
std::vector<HistogramRow> similarity_histogram(const PairSet& pairs, const VerifiedClaimStore& claims,
                                               std::span<const double> thresholds);
std::vector<HistogramRow> histogram_from_similarities(std::span<const double> similarities,
                                                      std::span<const double> thresholds);
/// TSV with columns threshold, count, percent.
std::string format_histogram_tsv(std::span<const HistogramRow> rows);

/// Rule-based splitter. A boundary is a run of . ! ? (plus closing quotes or
/// brackets) followed by whitespace and then an uppercase ASCII letter,
/// optionally behind an opening quote or bracket. A period does not end a
/// sentence after a known abbreviation (Sen., Mr., Jan., ...), a single-letter
/// uppercase initial, or a dotted acronym (U.S.). Sentences are whitespace-trimmed.
std::vector<std::string> split_sentences(std::string_view body);

}  // namespace claimrank
