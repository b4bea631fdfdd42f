#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimrank/corpus.hpp"
#include "claimrank/ranking.hpp"

namespace claimrank {

/// Which verified-claim text(s) form the indexed document. Combined fields are
/// concatenated in Title, VerClaim, Body order with single spaces.
enum class Field { Title, VerClaim, Body, TitleVerClaim, TitleVerClaimBody };

/// "title", "verclaim", "body", "title+verclaim", "title+verclaim+body".
std::string_view field_name(Field field);
/// Accepts the names above in any part order ("verclaim+title") and case.
Field parse_field(std::string_view name);
std::string field_text(const VerifiedClaim& claim, Field field);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// Okapi BM25 over one field of a claim store. Immutable after build.
///
/// score(q, d) = sum over query tokens t (with repetition) of
///     idf(t) * tf(t,d) * (k1 + 1) / (tf(t,d) + k1 * (1 - b + b * len(d) / avg_len))
/// with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
class InvertedIndex {
public:
    /// Throws ValidationError on an empty store and std::invalid_argument on
    /// k1 <= 0 or b outside [0, 1].
    static InvertedIndex build(const VerifiedClaimStore& claims, Field field, Bm25Params params = {});
    /// Generic build over parallel id/text arrays; ids must be strictly ascending.
    static InvertedIndex build(std::vector<std::string> doc_ids, std::span<const std::string> texts, Field field,
                               Bm25Params params = {});

    double score(std::span<const std::string> query_tokens, std::size_t doc) const;
    /// Throws std::out_of_range for an unknown id.
    double score(std::span<const std::string> query_tokens, std::string_view doc_id) const;
    /// Scores for every document, in doc index order.
    std::vector<double> score_all(std::span<const std::string> query_tokens) const;

    /// Documents with a positive score, best first, at most top_n (>= 1).
    RankedList retrieve(std::string_view query_text, std::size_t top_n) const;
    RankedList retrieve_tokens(std::span<const std::string> query_tokens, std::size_t top_n) const;

    double idf(std::string_view term) const;
    std::span<const Posting> postings(std::string_view term) const;
    std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    std::uint32_t doc_length(std::size_t doc) const { return doc_lengths_.at(doc); }
    const std::string& doc_id(std::size_t doc) const { return doc_ids_.at(doc); }
    std::optional<std::size_t> doc_index(std::string_view id) const;
    std::size_t vocabulary_size() const noexcept { return postings_.size(); }
    Field field() const noexcept { return field_; }
    const Bm25Params& params() const noexcept { return params_; }

    /// Portable JSON file with a format/version header.
    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

    friend bool operator==(const InvertedIndex& a, const InvertedIndex& b);

private:
    double term_weight(double idf, std::uint32_t tf, std::uint32_t len) const;
    void finalize();

    Field field_ = Field::VerClaim;
    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

/// Alternative field combination: sum of per-field BM25 scores. All indexes
/// must cover the same documents in the same order.
std::vector<double> score_sum_all(std::span<const InvertedIndex* const> indexes,
                                  std::span<const std::string> query_tokens);
RankedList retrieve_score_sum(std::span<const InvertedIndex* const> indexes, std::string_view query_text,
                              std::size_t top_n);

/// Builds a ranked list from dense scores: drops scores <= 0 when
/// `drop_non_positive`, then sorts by score with the doc-id tie rule.
RankedList ranked_from_scores(std::span<const double> scores, const std::vector<std::string>& ids,
                              std::size_t top_n, bool drop_non_positive);

}  // namespace claimrank
