#include <gtest/gtest.h>

#include "claimrank/config.hpp"
#include "claimrank/error.hpp"

using namespace claimrank;

TEST(KeyValueConfig, SectionsCommentsAndQuotes) {
    const auto cfg = KeyValueConfig::parse(
        "seed = 3   # trailing comment\n"
        "[bm25]\n"
        "k1 = 0.9\n"
        "fields = \"title, verclaim\"\n"
        "\n"
        "[rerank]\n"
        "c=0.5\n");
    EXPECT_EQ(cfg.get_int("seed", 0), 3);
    EXPECT_DOUBLE_EQ(cfg.get_double("bm25.k1", 0), 0.9);
    EXPECT_EQ(cfg.get_list("bm25.fields", {}), (std::vector<std::string>{"title", "verclaim"}));
    EXPECT_DOUBLE_EQ(cfg.get_double("rerank.c", 0), 0.5);
    EXPECT_FALSE(cfg.contains("k1"));
}

TEST(KeyValueConfig, OverridesWin) {
    auto cfg = KeyValueConfig::parse("seed = 3\n");
    cfg.apply_override("seed=9");
    cfg.apply_override("rerank.depth = 50");
    EXPECT_EQ(cfg.get_int("seed", 0), 9);
    EXPECT_EQ(cfg.get_int("rerank.depth", 0), 50);
}

TEST(KeyValueConfig, Fallbacks) {
    const auto cfg = KeyValueConfig::parse("");
    EXPECT_EQ(cfg.get_or("missing", "x"), "x");
    EXPECT_EQ(cfg.get_int("missing", 7), 7);
    EXPECT_TRUE(cfg.get_bool("missing", true));
}

TEST(KeyValueConfig, TypedGettersRejectGarbage) {
    const auto cfg = KeyValueConfig::parse("a = abc\nb = 1.5\nc = maybe\n");
    EXPECT_THROW(cfg.get_double("a", 0), ParseError);
    EXPECT_THROW(cfg.get_int("b", 0), ParseError);
    EXPECT_THROW(cfg.get_bool("c", false), ParseError);
}

TEST(KeyValueConfig, MalformedLinesCarryLineNumbers) {
    try {
        KeyValueConfig::parse("a = 1\nnot an assignment\n", "x.cfg");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.source(), "x.cfg");
    }
    EXPECT_THROW(KeyValueConfig::parse("[open\n"), ParseError);
    EXPECT_THROW(KeyValueConfig::parse("= 3\n"), ParseError);
}

TEST(KeyValueConfig, MissingFileIsIoError) {
    EXPECT_THROW(KeyValueConfig::load("/nonexistent/claimrank.cfg"), IoError);
}

TEST(SplitList, TrimsAndDropsEmpty) {
    EXPECT_EQ(split_list(" a, ,b ,c,"), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_TRUE(split_list("").empty());
    EXPECT_EQ(trim("  x y \t"), "x y");
}
