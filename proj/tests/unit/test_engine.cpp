#include <gtest/gtest.h>

#include <filesystem>

#include "claimrank/engine.hpp"
#include "claimrank/error.hpp"
#include "synthetic.hpp"

using namespace claimrank;
namespace fs = std::filesystem;

namespace {

PipelineConfig tiny_config(const std::string& scratch, std::vector<std::string> extra = {}) {
    extra.push_back("workspace=" + synth::scratch_dir(scratch).string());
    return PipelineConfig::load(fs::path(CLAIMRANK_TEST_DATA) / "data/tiny/pipeline.cfg", extra);
}

}  // namespace

TEST(PipelineConfig, ParsesAndValidates) {
    const auto cfg = tiny_config("cfg");
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.hash_dim, 64u);
    EXPECT_EQ(cfg.rerank_depth, 8u);
    EXPECT_EQ(cfg.rerank_sources.size(), 4u);
    EXPECT_TRUE(cfg.manifest.is_absolute());
    EXPECT_THROW(tiny_config("cfg", {"bm25.b=1.5"}).validate(), ValidationError);
    EXPECT_THROW(tiny_config("cfg", {"rerank.sources=bm25:nonsense"}).validate(), std::exception);
}

TEST(Engine, ExactVerifiedClaimRanksFirst) {
    const Engine engine(tiny_config("exact"));
    for (const auto& claim : engine.claims()) {
        const auto list = engine.rank(engine.query_for_text("q", claim.ver_claim), "bm25:verclaim", 3);
        ASSERT_FALSE(list.empty());
        EXPECT_EQ(list.front().doc_id, claim.id);
    }
}

TEST(Engine, StageAliasesAndErrors) {
    const Engine engine(tiny_config("alias"));
    const auto q = engine.query_for_text("q", "tax cuts paid for themselves");
    EXPECT_EQ(engine.rank(q, "bm25", 5), engine.rank(q, "bm25:verclaim", 5));
    EXPECT_EQ(engine.rank(q, "embed", 5), engine.rank(q, "embed:verclaim", 5));
    EXPECT_LE(engine.rank(q, "bm25:body", 2).size(), 2u);
    EXPECT_THROW(engine.rank(q, "bm25", 0), std::invalid_argument);
    EXPECT_THROW(engine.rank(q, "unknown", 5), std::invalid_argument);
    EXPECT_THROW(engine.rank(q, "rerank", 5), MissingArtifactError);
    EXPECT_THROW(engine.rank(q, "mlp", 5), MissingArtifactError);
}

TEST(Engine, PersistedIndexIsReused) {
    auto cfg = tiny_config("persist");
    {
        const Engine engine(cfg);
        const auto written = engine.save_indexes();
        EXPECT_FALSE(written.empty());
        for (const auto& p : written) EXPECT_TRUE(fs::exists(p));
    }
    const Engine again(cfg);
    const auto q = again.query_for_text("q", "wind turbines birds");
    EXPECT_EQ(again.rank(q, "bm25:title+verclaim", 1).front().doc_id, "vc08");
}

TEST(Engine, TrainBothStagesThenRerank) {
    Engine engine(tiny_config("train"));
    const auto mlp = engine.train_mlp();
    EXPECT_GT(mlp.rows, 0u);
    EXPECT_GT(mlp.positives, 0u);
    EXPECT_EQ(mlp.log.size(), 5u);
    EXPECT_TRUE(fs::exists(engine.mlp_model_path()));
    EXPECT_TRUE(fs::exists(engine.mlp_log_path()));
    EXPECT_TRUE(engine.has_source("mlp"));

    const auto svm = engine.train_rerank();
    EXPECT_GT(svm.lists, 0u);
    EXPECT_TRUE(fs::exists(engine.rerank_model_path()));

    for (const auto& input : engine.dataset().test.inputs()) {
        const auto list = engine.rank(engine.query_for_input(input), "rerank", 5);
        ASSERT_FALSE(list.empty());
        const auto scores = engine.source_scores(engine.query_for_input(input), list.front().doc_id);
        EXPECT_TRUE(scores.count("bm25:verclaim"));
    }
}
