#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimrank/corpus.hpp"
#include "claimrank/ranking.hpp"

namespace claimrank {

/// Which text a stored vector encodes. Input vectors belong to input claims
/// (queries) and are keyed by the input claim id.
enum class VectorField : std::uint8_t { VerClaim, Title, Body, Input };

std::string_view vector_field_name(VectorField field);
VectorField parse_vector_field(std::string_view name);

struct EmbeddingKey {
    std::string doc_id;
    VectorField field = VectorField::VerClaim;
    /// Set for Body vectors only (sentence position within the article).
    std::optional<std::uint32_t> sentence;

    friend auto operator<=>(const EmbeddingKey&, const EmbeddingKey&) = default;
    friend bool operator==(const EmbeddingKey&, const EmbeddingKey&) = default;
};

std::string format_key(const EmbeddingKey& key);

enum class VectorEncoding { Binary, Text };

/// Dense vectors of one fixed dimension, stored row-major as float32.
class EmbeddingStore {
public:
    explicit EmbeddingStore(std::size_t dim = 0, std::string encoder_id = {});

    /// Throws ValidationError on a length mismatch, a duplicate key, a
    /// non-finite component, or a Body key without a sentence index.
    void add(EmbeddingKey key, std::span<const float> vec);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return keys_.size(); }
    bool empty() const noexcept { return keys_.empty(); }
    const std::string& encoder_id() const noexcept { return encoder_id_; }
    const EmbeddingKey& key(std::size_t row) const { return keys_.at(row); }
    std::span<const float> row(std::size_t row) const;
    double row_norm(std::size_t row) const { return norms_.at(row); }
    std::optional<std::size_t> find(const EmbeddingKey& key) const;
    std::optional<std::span<const float>> vector(const EmbeddingKey& key) const;

    /// Row of the VerClaim / Title / Input vector for doc_id, if present.
    std::optional<std::size_t> field_row(std::string_view doc_id, VectorField field) const;
    /// Body sentence rows for doc_id in sentence order (empty if none).
    std::span<const std::size_t> body_rows(std::string_view doc_id) const;
    /// Rows holding `field` vectors (non-body fields), in insertion order.
    std::span<const std::size_t> rows_of(VectorField field) const;

    friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b);

private:
    struct DocRows {
        std::optional<std::size_t> verclaim, title, input;
        std::vector<std::pair<std::uint32_t, std::size_t>> body;  // (sentence, row), kept sorted
        std::vector<std::size_t> body_sorted;
    };

    std::size_t dim_;
    std::string encoder_id_;
    std::vector<EmbeddingKey> keys_;
    std::vector<float> data_;
    std::vector<double> norms_;
    std::unordered_map<std::string, DocRows> docs_;
    std::vector<std::size_t> field_rows_[4];
};

/// Vector file layout:
///   header line: CLAIMRANK-VECTORS \t <version> \t <dim> \t <count> \t <binary|text> \t <encoder id>
///   binary record: doc_id \t field \t sentence|- \t length \n  then `length` little-endian float32
///   text record:   doc_id \t field \t sentence|- \t length \t v1 v2 ... \n
/// Field names are verclaim, title, body, input.
inline constexpr std::string_view kVectorMagic = "CLAIMRANK-VECTORS";
inline constexpr int kVectorFormatVersion = 1;

/// Throws ParseError (with key or byte offset) on malformed records;
/// ValidationError on dim / duplicate / non-finite problems.
EmbeddingStore read_vectors(std::istream& in, const std::string& source, std::optional<std::size_t> expected_dim);
EmbeddingStore import_vectors(const std::filesystem::path& path, std::optional<std::size_t> expected_dim = {});
void write_vectors(const EmbeddingStore& store, std::ostream& out, VectorEncoding encoding);
void export_vectors(const EmbeddingStore& store, const std::filesystem::path& path, VectorEncoding encoding);

/// Deterministic stand-in encoder: signed feature hashing of token unigrams and
/// bigrams into `dim` buckets, L2-normalised. Texts with no tokens map to e1.
/// Throws std::invalid_argument for dim < 8.
std::vector<double> hash_embed(std::string_view text, std::size_t dim);
std::vector<float> to_float(std::span<const double> v);

/// Hash-embeds ver_claim, title and every body sentence of each claim.
EmbeddingStore hash_embed_claims(const VerifiedClaimStore& claims, std::size_t dim, std::size_t max_sentences = 0);
/// Adds Input vectors for every input claim of `pairs`.
void hash_embed_inputs(EmbeddingStore& store, const PairSet& pairs);

/// Exhaustive cosine ranking over one non-body field, best first.
RankedList rank_by_cosine(std::span<const float> query, const EmbeddingStore& store, VectorField field,
                          std::size_t top_n);
/// Cosine of `query` with one stored row.
double cosine_to_row(std::span<const float> query, double query_norm, const EmbeddingStore& store, std::size_t row);

struct SentenceScoreSet {
    std::string doc_id;
    double cos_verclaim = 0.0;
    double cos_title = 0.0;
    /// n best body-sentence cosines, descending, padded with 0.0.
    std::vector<double> body_top;

    /// [cos_verclaim, cos_title, body_top...]
    std::vector<double> features() const;
};

/// Throws ValidationError when the VerClaim or Title vector of doc_id is
/// missing. `max_sentences` > 0 restricts scoring to the first sentences.
SentenceScoreSet body_sentence_scores(std::span<const float> query, std::string_view doc_id,
                                      const EmbeddingStore& store, std::size_t n, std::size_t max_sentences = 0);

}  // namespace claimrank
