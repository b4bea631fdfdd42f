#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimrank/article_scorer.hpp"
#include "claimrank/bm25.hpp"
#include "claimrank/config.hpp"
#include "claimrank/corpus.hpp"
#include "claimrank/embed.hpp"
#include "claimrank/eval.hpp"
#include "claimrank/rerank.hpp"

namespace claimrank {

enum class FieldCombination { Concatenate, ScoreSum };

/// Every knob of the ranking pipeline. Built from a key/value file; see
/// PipelineConfig::from_config for the key names and defaults.
struct PipelineConfig {
    std::filesystem::path manifest;
    std::filesystem::path workspace;
    std::uint64_t seed = 42;

    Bm25Params bm25;
    std::vector<Field> fields{Field::Title, Field::VerClaim, Field::Body, Field::TitleVerClaim,
                              Field::TitleVerClaimBody};
    FieldCombination combination = FieldCombination::Concatenate;

    std::optional<std::filesystem::path> vectors;
    std::optional<std::size_t> vector_dim;
    std::size_t hash_dim = 0;
    std::size_t max_sentences = 0;

    std::size_t mlp_sentences = 4;
    TrainConfig mlp;
    double mlp_negative_ratio = 1.0;

    std::string rerank_base = "bm25:body";
    std::size_t rerank_depth = 100;
    std::vector<std::string> rerank_sources{"bm25:title", "bm25:verclaim", "bm25:body", "mlp"};
    RankSvmConfig svm;
    ReciprocalRankMode rr_mode = ReciprocalRankMode::Pool;

    EvalOptions eval;
    std::string rank_stage = "bm25:verclaim";
    std::size_t rank_depth = 100;

    /// Keys (defaults in brackets):
    ///   manifest, workspace [workspace], seed [42]
    ///   bm25.k1 [1.2], bm25.b [0.75], bm25.fields [all five], bm25.combination [concat|sum]
    ///   embed.vectors, embed.dim, embed.hash_dim [0], embed.max_sentences [0]
    ///   mlp.n [4], mlp.epochs [15], mlp.batch_size [2048], mlp.learning_rate [1e-3], mlp.negative_ratio [1]
    ///   rerank.base [bm25:body], rerank.depth [100], rerank.sources, rerank.gamma [auto], rerank.c [1],
    ///   rerank.rr [pool|global], rerank.tolerance [1e-3], rerank.max_iterations [100000]
    ///   eval.map_cutoffs, eval.has_positives_cutoffs, eval.normalizer [min|relevant]
    ///   rank.stage [bm25:verclaim], rank.depth [100]
    static PipelineConfig from_config(const KeyValueConfig& cfg);
    static PipelineConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
    /// Throws ValidationError/IoError on out-of-range values or missing paths.
    void validate() const;
};

struct MlpTrainSummary {
    std::size_t rows = 0;
    std::size_t positives = 0;
    std::vector<EpochStats> log;
    std::filesystem::path model_path;
};

struct RerankTrainSummary {
    std::size_t lists = 0;
    std::size_t lists_with_pairs = 0;
    RankSvmDiagnostics diagnostics;
    std::filesystem::path model_path;
};

/// Loaded dataset plus every index, vector store and model the config names.
/// After construction (and any training) it is read-only and may be shared
/// across threads.
class Engine {
public:
    explicit Engine(PipelineConfig config);
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    const PipelineConfig& config() const noexcept { return config_; }
    const Dataset& dataset() const noexcept { return dataset_; }
    const VerifiedClaimStore& claims() const noexcept { return dataset_.claims; }
    const EmbeddingStore* vectors() const noexcept { return vectors_.get(); }
    const InvertedIndex& index(Field field) const;

    /// Query for an input claim id, using its stored vector when present.
    QueryContext query_for_input(const InputClaim& input) const;
    /// Query for free text. `vector` overrides the encoder; otherwise the hash
    /// encoder is used when the vector store was produced by it.
    QueryContext query_for_text(std::string id, std::string text, std::vector<float> vector = {}) const;

    /// Stage names: bm25:<field>, embed:verclaim, embed:title, mlp, rerank.
    /// "bm25" and "embed" alone mean their verclaim variants.
    std::vector<std::string> available_stages() const;
    /// Throws MissingArtifactError when the stage's model or vectors are absent
    /// and std::invalid_argument for an unknown stage.
    RankedList rank(const QueryContext& query, std::string_view stage, std::size_t top_k) const;
    const ScoreSource& source(std::string_view name) const;
    bool has_source(std::string_view name) const;
    /// Raw score of every available source for one document.
    std::map<std::string, double> source_scores(const QueryContext& query, std::string_view doc_id) const;

    std::filesystem::path index_path(Field field) const;
    std::filesystem::path mlp_model_path() const;
    std::filesystem::path mlp_log_path() const;
    std::filesystem::path rerank_model_path() const;

    /// Writes every BM25 index into the workspace.
    std::vector<std::filesystem::path> save_indexes() const;
    MlpTrainSummary train_mlp();
    RerankTrainSummary train_rerank();
    /// Per-query candidate lists with features and labels for the given inputs.
    std::vector<RankingList> rerank_lists(const PairSet& pairs) const;

private:
    void build_indexes();
    void load_vectors();
    void load_models();
    void rebuild_sources();
    std::string canonical_stage(std::string_view stage) const;

    PipelineConfig config_;
    Dataset dataset_;
    std::map<Field, std::unique_ptr<InvertedIndex>> indexes_;
    std::unique_ptr<EmbeddingStore> vectors_;
    bool hash_vectors_ = false;
    std::unique_ptr<MlpArtifact> mlp_;
    std::unique_ptr<RankSvmModel> ranksvm_;
    std::map<std::string, std::unique_ptr<ScoreSource>, std::less<>> sources_;
};

}  // namespace claimrank
