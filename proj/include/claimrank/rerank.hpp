#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "claimrank/article_scorer.hpp"
#include "claimrank/bm25.hpp"
#include "claimrank/corpus.hpp"
#include "claimrank/embed.hpp"
#include "claimrank/ranking.hpp"

namespace claimrank {

/// Everything a score source may need to know about one input claim.
struct QueryContext {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
    /// Dense encoding of the claim; empty when no embedding is available.
    std::vector<float> vector;

    static QueryContext make(std::string id, std::string text, std::vector<float> vector = {});
};

/// A scorer over the documents of one claim store, addressed by store index.
class ScoreSource {
public:
    virtual ~ScoreSource() = default;

    virtual const std::string& name() const = 0;
    virtual std::size_t doc_count() const = 0;
    virtual double score(const QueryContext& query, std::size_t doc) const = 0;
    virtual std::vector<double> score_all(const QueryContext& query) const;
    /// True when documents scoring <= 0 are absent from the ranking this
    /// source induces (lexical sources).
    virtual bool drops_non_positive() const { return false; }
};

class Bm25Source final : public ScoreSource {
public:
    Bm25Source(std::string name, const InvertedIndex& index) : name_(std::move(name)), index_(index) {}
    const std::string& name() const override { return name_; }
    std::size_t doc_count() const override { return index_.doc_count(); }
    double score(const QueryContext& query, std::size_t doc) const override;
    std::vector<double> score_all(const QueryContext& query) const override;
    bool drops_non_positive() const override { return true; }

private:
    std::string name_;
    const InvertedIndex& index_;
};

/// Sum of several per-field BM25 scores.
class Bm25SumSource final : public ScoreSource {
public:
    Bm25SumSource(std::string name, std::vector<const InvertedIndex*> indexes);
    const std::string& name() const override { return name_; }
    std::size_t doc_count() const override { return indexes_.front()->doc_count(); }
    double score(const QueryContext& query, std::size_t doc) const override;
    std::vector<double> score_all(const QueryContext& query) const override;
    bool drops_non_positive() const override { return true; }

private:
    std::string name_;
    std::vector<const InvertedIndex*> indexes_;
};

/// Cosine between the query vector and one whole-document field vector.
class CosineSource final : public ScoreSource {
public:
    /// Throws ValidationError when some claim has no vector for `field`.
    CosineSource(std::string name, const EmbeddingStore& store, VectorField field, const VerifiedClaimStore& claims);
    const std::string& name() const override { return name_; }
    std::size_t doc_count() const override { return rows_.size(); }
    double score(const QueryContext& query, std::size_t doc) const override;
    std::vector<double> score_all(const QueryContext& query) const override;

private:
    std::string name_;
    const EmbeddingStore& store_;
    std::vector<std::size_t> rows_;
};

/// MLP match probability over [cos_verclaim, cos_title, top-n body sentences].
class MlpSource final : public ScoreSource {
public:
    MlpSource(std::string name, const MlpModel& model, const EmbeddingStore& store, const VerifiedClaimStore& claims,
              std::size_t body_sentences, std::size_t max_sentences = 0);
    const std::string& name() const override { return name_; }
    std::size_t doc_count() const override { return claims_.size(); }
    double score(const QueryContext& query, std::size_t doc) const override;

    std::vector<double> features(const QueryContext& query, std::size_t doc) const;

private:
    std::string name_;
    const MlpModel& model_;
    const EmbeddingStore& store_;
    const VerifiedClaimStore& claims_;
    std::size_t body_sentences_;
    std::size_t max_sentences_;
};

/// Ranks all documents of one source for a query.
RankedList rank_with_source(const ScoreSource& source, const QueryContext& query, const VerifiedClaimStore& claims,
                            std::size_t top_n);

/// [score_1, rr_1, score_2, rr_2, ...] in source order.
using FeatureVector = std::vector<double>;

enum class ReciprocalRankMode {
    /// Rank within the candidate pool being reranked.
    Pool,
    /// Rank within the source's ranking of the whole database.
    Global,
};

/// Features for each candidate (store indexes). Candidates absent from a
/// source's induced ranking get reciprocal rank 0 but keep their raw score.
std::vector<FeatureVector> candidate_features(const QueryContext& query, std::span<const std::size_t> candidates,
                                              std::span<const ScoreSource* const> sources,
                                              ReciprocalRankMode mode = ReciprocalRankMode::Pool);

/// exp(-gamma * ||x - y||^2); throws std::invalid_argument on length mismatch.
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// Per-feature z-scoring. Constant features get std 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Standardizer fit(std::span<const FeatureVector> rows);
    FeatureVector apply(std::span<const double> x) const;
};

/// One query's candidate pool with gold labels.
struct RankingList {
    std::string query_id;
    std::vector<std::string> doc_ids;
    std::vector<FeatureVector> features;
    std::vector<std::uint8_t> labels;
};

struct RankSvmConfig {
    /// <= 0 selects 1 / feature_count.
    double gamma = 0.0;
    double c = 1.0;
    double tolerance = 1e-3;
    std::size_t max_iterations = 100000;
    std::size_t cache_megabytes = 256;
};

struct RankSvmDiagnostics {
    std::size_t pairs = 0;
    std::size_t degenerate_pairs = 0;  // identical positive/negative vectors, skipped
    std::size_t iterations = 0;
    bool converged = false;
    double max_violation = 0.0;
    double dual_objective = 0.0;
};

/// Support pair: indexes into the support vectors and its dual coefficient.
struct SupportPair {
    std::uint32_t positive = 0;
    std::uint32_t negative = 0;
    double alpha = 0.0;
};

/// Kernel RankSVM scorer f(x) = sum_p alpha_p (K(x, x+_p) - K(x, x-_p)) over
/// standardized features.
class RankSvmModel {
public:
    RankSvmModel() = default;
    RankSvmModel(Standardizer standardizer, double gamma, double c, std::vector<FeatureVector> support_vectors,
                 std::vector<SupportPair> pairs, std::vector<std::string> sources);

    double score(std::span<const double> raw_features) const;
    std::size_t feature_count() const { return standardizer_.mean.size(); }
    double gamma() const noexcept { return gamma_; }
    double c() const noexcept { return c_; }
    const Standardizer& standardizer() const noexcept { return standardizer_; }
    const std::vector<FeatureVector>& support_vectors() const noexcept { return support_; }
    const std::vector<SupportPair>& pairs() const noexcept { return pairs_; }
    const std::vector<std::string>& sources() const noexcept { return sources_; }
    RankSvmDiagnostics diagnostics;

    void save(const std::filesystem::path& path) const;
    static RankSvmModel load(const std::filesystem::path& path);

private:
    Standardizer standardizer_;
    double gamma_ = 1.0;
    double c_ = 1.0;
    std::vector<FeatureVector> support_;
    std::vector<double> beta_;  // per support vector: sum of signed alphas
    std::vector<SupportPair> pairs_;
    std::vector<std::string> sources_;
};

/// Pairwise hinge-loss RankSVM solved in the dual by greedy coordinate
/// ascent. Pairs are formed within each list only. Throws ValidationError if
/// no list has both a positive and a negative candidate. Non-convergence is
/// reported through the model's diagnostics.
RankSvmModel train_ranksvm(std::span<const RankingList> lists, const RankSvmConfig& config,
                           std::vector<std::string> sources = {});

/// Reorders the first features.size() entries of `base` by model score (ties
/// by doc id) and appends the untouched tail. Throws std::invalid_argument on
/// a feature-length mismatch.
RankedList rerank(const RankSvmModel& model, const RankedList& base, std::span<const FeatureVector> features);

struct GridPoint {
    double gamma = 0.0;
    double c = 0.0;
    double mrr = 0.0;
};

struct GridSearchResult {
    GridPoint best;
    std::vector<GridPoint> points;
};

/// k-fold cross-validated MRR (within the candidate lists) over a gamma x C grid.
GridSearchResult grid_search_ranksvm(std::span<const RankingList> lists, std::span<const double> gammas,
                                     std::span<const double> cs, std::size_t folds, RankSvmConfig base = {});

}  // namespace claimrank
