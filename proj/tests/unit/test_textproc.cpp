#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>

#include "claimrank/config.hpp"
#include "claimrank/textproc.hpp"

using namespace claimrank;
using Tokens = std::vector<std::string>;

TEST(Tokenize, LowercasesAndDropsPunctuation) {
    EXPECT_EQ(tokenize("Hillary wants to give amnesty."), (Tokens{"hillary", "wants", "to", "give", "amnesty"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_TRUE(tokenize(" ,;! ").empty());
    EXPECT_EQ(tokenize("It's 2010"), (Tokens{"it", "s", "2010"}));
}

TEST(Tokenize, UrlsAndMentionsBecomePlaceholders) {
    EXPECT_EQ(tokenize("https://t.co/C2p25mxWJO done"), (Tokens{"URL", "done"}));
    EXPECT_EQ(tokenize("see www.example.com/x, @realDonaldTrump said"),
              (Tokens{"see", "URL", "MENTION", "said"}));
    EXPECT_EQ(tokenize("mail a@b"), (Tokens{"mail", "a", "b"}));
}

TEST(Tokenize, Utf8WordsStayWhole) {
    EXPECT_EQ(tokenize("caf\xc3\xa9 ol\xc3\xa9"), (Tokens{"caf\xc3\xa9", "ol\xc3\xa9"}));
}

TEST(Tokenize, IdempotentOnJoinedTokens) {
    std::mt19937 rng(5);
    const std::vector<std::string> pieces{"The", "http://x.y/z", "@user", "U.S.", "tax-cuts", "42%", "URL", "b",
                                          "MENTION", "\xc3\xa9t\xc3\xa9", "!!", "Mixed"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        for (int j = 0; j < 8; ++j) text += pieces[rng() % pieces.size()] + (rng() % 2 ? " " : ", ");
        const auto once = tokenize(text);
        EXPECT_EQ(tokenize(join_tokens(once)), once) << text;
    }
}

TEST(Tfidf, SingleDocumentHasUnitIdf) {
    const std::vector<std::string> corpus{"a b b"};
    const auto model = TfidfModel::fit(corpus);
    EXPECT_DOUBLE_EQ(model.idf("a"), 1.0);
    const auto v = model.transform("a b b");
    EXPECT_DOUBLE_EQ(v.weight("a"), 1.0);
    EXPECT_DOUBLE_EQ(v.weight("b"), 2.0);
    EXPECT_TRUE(model.transform("").empty());
}

TEST(Tfidf, SmoothedIdfFormula) {
    const std::vector<std::string> corpus{"x common", "y common", "z common", "x common"};
    const auto model = TfidfModel::fit(corpus);
    EXPECT_DOUBLE_EQ(model.idf("common"), 1.0);
    EXPECT_NEAR(model.idf("x"), std::log(5.0 / 3.0) + 1.0, 1e-15);
    EXPECT_NEAR(model.idf("unseen"), std::log(5.0) + 1.0, 1e-15);
    EXPECT_THROW(TfidfModel::fit(std::vector<std::string>{}), std::invalid_argument);
}

TEST(Cosine, DenseCases) {
    const std::vector<double> a{1, 1, 0}, b{1, 0, 0}, c{0, 1, 0}, z{0, 0, 0};
    EXPECT_NEAR(cosine(a, b).value, 0.70710678, 1e-8);
    EXPECT_NEAR(cosine(a, a).value, 1.0, 1e-15);
    EXPECT_EQ(cosine(b, c).value, 0.0);
    const auto zr = cosine(a, z);
    EXPECT_TRUE(zr.zero_norm);
    EXPECT_EQ(zr.value, 0.0);
    EXPECT_THROW(cosine(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Cosine, SparseMatchesDense) {
    const SparseVector u({{"a", 1.0}, {"b", 2.0}});
    const SparseVector v({{"b", 1.0}, {"c", 3.0}, {"b", 1.0}});
    EXPECT_DOUBLE_EQ(v.weight("b"), 2.0);
    const std::vector<double> du{1, 2, 0}, dv{0, 2, 3};
    EXPECT_NEAR(cosine(u, v).value, cosine(du, dv).value, 1e-15);
    EXPECT_TRUE(cosine(u, SparseVector{}).zero_norm);
}

TEST(Histogram, StrictlyAboveAndMonotone) {
    const std::vector<double> sims{0.0, 0.25, 0.5, 0.9, 1.0};
    const std::vector<double> th{-1.0, 0.0, 0.25, 0.5, 0.75};
    const auto rows = histogram_from_similarities(sims, th);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0].count, 5u);
    EXPECT_DOUBLE_EQ(rows[0].percent, 100.0);
    EXPECT_EQ(rows[1].count, 4u);
    EXPECT_EQ(rows[2].count, 3u);
    EXPECT_EQ(rows[3].count, 2u);
    EXPECT_EQ(rows[4].count, 2u);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].count, rows[i - 1].count);
    EXPECT_EQ(format_histogram_tsv(rows).substr(0, 24), "threshold\tcount\tpercent\n");
}

TEST(Histogram, PairSimilaritiesOnFixture) {
    const VerifiedClaimStore claims({{"v1", "tax cuts paid for themselves", "t", "", ""},
                                     {"v2", "crime doubled", "t", "", ""}});
    const PairSet pairs({{"q1", "tax cuts paid for themselves"}, {"q2", "weather is nice"}},
                        {{"q1", "v1"}, {"q2", "v2"}}, claims);
    const auto sims = pair_similarities(pairs, claims);
    ASSERT_EQ(sims.size(), 2u);
    EXPECT_NEAR(sims[0], 1.0, 1e-12);
    EXPECT_EQ(sims[1], 0.0);
    const std::vector<double> th{0.0, 0.5};
    const auto rows = similarity_histogram(pairs, claims, th);
    EXPECT_EQ(rows[0].count, 1u);
    EXPECT_DOUBLE_EQ(rows[0].percent, 50.0);
}

TEST(SplitSentences, SpecExamples) {
    EXPECT_EQ(split_sentences("A b. C d."), (Tokens{"A b.", "C d."}));
    EXPECT_TRUE(split_sentences("").empty());
    EXPECT_EQ(split_sentences("Sen. Warren spoke. He left."), (Tokens{"Sen. Warren spoke.", "He left."}));
}

TEST(SplitSentences, ConformanceFixture) {
    std::ifstream in(std::string(CLAIMRANK_TEST_DATA) + "/fixtures/sentence_split_conformance.jsonl");
    ASSERT_TRUE(in);
    std::string line;
    int cases = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        EXPECT_EQ(split_sentences(j.at("body").get<std::string>()), j.at("sentences").get<Tokens>())
            << j.at("body").get<std::string>();
        ++cases;
    }
    EXPECT_GE(cases, 20);
}

TEST(SplitSentences, RejoinedSentencesKeepAllWords) {
    std::mt19937 rng(9);
    const std::vector<std::string> words{"The", "rate", "fell.", "Sen.", "U.S.", "Why?", "Yes!", "a", "(Note.)",
                                         "\"Quote.\"", "Dr.", "x"};
    for (int trial = 0; trial < 300; ++trial) {
        std::string body;
        for (int j = 0; j < 12; ++j) body += words[rng() % words.size()] + " ";
        const auto sents = split_sentences(body);
        std::string joined;
        for (const auto& s : sents) {
            EXPECT_FALSE(s.empty());
            EXPECT_EQ(s, trim(s));
            joined += s + " ";
        }
        EXPECT_EQ(tokenize(joined), tokenize(body));
    }
}
