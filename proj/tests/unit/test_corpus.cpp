#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "claimrank/corpus.hpp"
#include "claimrank/error.hpp"
#include "synthetic.hpp"

using namespace claimrank;

namespace {

VerifiedClaimStore three_claims() {
    return VerifiedClaimStore({{"vc2", "Claim two.", "Title two", "Body two.", "false"},
                               {"vc1", "Claim one.", "Title one", "Body one.", "true"},
                               {"vc3", "Claim three.", "Title three", "", "true"}});
}

}  // namespace

TEST(VerifiedClaimStore, SortedByIdWithLookup) {
    const auto store = three_claims();
    ASSERT_EQ(store.size(), 3u);
    EXPECT_EQ(store[0].id, "vc1");
    EXPECT_EQ(store[2].id, "vc3");
    EXPECT_EQ(store.index_of("vc2"), 1u);
    EXPECT_EQ(store.find("nope"), nullptr);
    EXPECT_EQ(store.find("vc3")->title, "Title three");
}

TEST(VerifiedClaimStore, RejectsDuplicatesAndMissingFields) {
    EXPECT_THROW(VerifiedClaimStore({{"a", "x", "t", "", ""}, {"a", "y", "t", "", ""}}), ValidationError);
    EXPECT_THROW(VerifiedClaimStore({{"a", "", "t", "", ""}}), ValidationError);
    EXPECT_THROW(VerifiedClaimStore({{"", "x", "t", "", ""}}), ValidationError);
}

TEST(ParseVerifiedClaims, JsonLinesWithAliasesLowercasesTruth) {
    std::istringstream in(
        R"({"vclaim_id": "pf-2", "vclaim": "B.", "title": "T", "article": "Body.", "label": "Mostly True"})"
        "\n\n"
        R"({"id": "pf-1", "ver_claim": "A.", "title": "T1", "body": "", "truth_value": "FALSE", "extra": 3})"
        "\n");
    const auto store = parse_verified_claims(in, ClaimFormat::JsonLines, "mem");
    ASSERT_EQ(store.size(), 2u);
    EXPECT_EQ(store[0].id, "pf-1");
    EXPECT_EQ(store[0].truth_value, "false");
    EXPECT_EQ(store[1].body, "Body.");
    EXPECT_EQ(store[1].truth_value, "mostly true");
}

TEST(ParseVerifiedClaims, EmptyFileGivesEmptyStoreAndWarning) {
    std::istringstream in("");
    std::vector<std::string> warnings;
    const auto store = parse_verified_claims(in, ClaimFormat::JsonLines, "empty.jsonl", &warnings);
    EXPECT_TRUE(store.empty());
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("empty.jsonl"), std::string::npos);
}

TEST(ParseVerifiedClaims, DuplicateIdNamesTheId) {
    std::istringstream in(R"({"id": "pf-1", "ver_claim": "A.", "title": "T"})"
                          "\n"
                          R"({"id": "pf-1", "ver_claim": "B.", "title": "T"})"
                          "\n");
    try {
        parse_verified_claims(in, ClaimFormat::JsonLines, "dup.jsonl");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("pf-1"), std::string::npos);
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(ParseVerifiedClaims, MalformedJsonHasLineContext) {
    std::istringstream in(R"({"id": "a", "ver_claim": "A.", "title": "T"})"
                          "\n{oops\n");
    try {
        parse_verified_claims(in, ClaimFormat::JsonLines, "bad.jsonl");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("bad.jsonl:2"), std::string::npos);
    }
}

TEST(ParseVerifiedClaims, TsvWithEscapes) {
    std::istringstream in("claim_id\tclaim\ttitle\ttext\trating\n"
                          "s1\tFirst\\tclaim.\tTitle\tLine one.\\nLine two.\tTrue\n");
    const auto store = parse_verified_claims(in, ClaimFormat::Tsv, "mem.tsv");
    ASSERT_EQ(store.size(), 1u);
    EXPECT_EQ(store[0].ver_claim, "First\tclaim.");
    EXPECT_EQ(store[0].body, "Line one.\nLine two.");
}

TEST(ParseVerifiedClaims, TsvNeedsHeaderColumns) {
    std::istringstream in("foo\tbar\nx\ty\n");
    EXPECT_THROW(parse_verified_claims(in, ClaimFormat::Tsv, "mem.tsv"), ParseError);
}

TEST(VerifiedClaims, RoundTripThroughCanonicalJsonLines) {
    const auto store = three_claims();
    std::stringstream buf;
    write_verified_claims(store, buf);
    EXPECT_EQ(parse_verified_claims(buf, ClaimFormat::JsonLines, "rt"), store);
}

TEST(ParsePairs, TsvWithAndWithoutHeader) {
    const auto claims = three_claims();
    std::istringstream with_header("iclaim_id\tvclaim_id\ticlaim\nq1\tvc1\tsome text\n");
    std::istringstream bare("q1\tvc1\tsome text\nq1\tvc2\tsome text\nq2\tvc3\tother\n");
    EXPECT_EQ(parse_pairs(with_header, claims, "h", false).size(), 1u);
    const auto pairs = parse_pairs(bare, claims, "b", false);
    EXPECT_EQ(pairs.size(), 3u);
    EXPECT_EQ(pairs.inputs().size(), 2u);
    // One input claim linked to two verified claims is one query with two relevants.
    EXPECT_EQ(pairs.relevant("q1"), (std::set<std::string>{"vc1", "vc2"}));
    EXPECT_TRUE(pairs.is_relevant("q2", "vc3"));
    EXPECT_FALSE(pairs.is_relevant("q2", "vc1"));
    EXPECT_EQ(pairs.distinct_verified(), 3u);
}

TEST(ParsePairs, DanglingReferenceIsAnError) {
    const auto claims = three_claims();
    std::istringstream in("q1\tx999\ttext\n");
    try {
        parse_pairs(in, claims, "p.tsv", false);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("x999"), std::string::npos);
    }
}

TEST(ParsePairs, JsonLines) {
    const auto claims = three_claims();
    std::istringstream in(R"({"input_id": "q1", "verified_id": "vc2", "input_text": "hello"})"
                          "\n");
    const auto pairs = parse_pairs(in, claims, "p.jsonl", true);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs.find_input("q1")->text, "hello");
}

TEST(PairSet, ConflictingTextsRejected) {
    const auto claims = three_claims();
    EXPECT_THROW(PairSet({{"q1", "a"}, {"q1", "b"}}, {{"q1", "vc1"}}, claims), ValidationError);
    EXPECT_THROW(PairSet({{"q1", "a"}}, {{"q2", "vc1"}}, claims), ValidationError);
}

TEST(ValidateDataset, PassesOnMatchingCounts) {
    const auto claims = three_claims();
    const PairSet train({{"q1", "a"}}, {{"q1", "vc1"}, {"q1", "vc2"}}, claims);
    const PairSet test({{"q2", "b"}}, {{"q2", "vc3"}}, claims);
    const auto all = PairSet::merge(train, test, claims);
    const auto report = validate_dataset(claims, all, make_split(train, test), {3, 3, 2, 1});
    EXPECT_TRUE(report.passed()) << report.format();
}

TEST(ValidateDataset, CountMismatchReportsDelta) {
    const auto claims = three_claims();
    const PairSet train({{"q1", "a"}}, {{"q1", "vc1"}}, claims);
    const PairSet test({{"q2", "b"}}, {{"q2", "vc3"}}, claims);
    const auto all = PairSet::merge(train, test, claims);
    const auto report = validate_dataset(claims, all, make_split(train, test), {3, 3, 2, 1});
    EXPECT_FALSE(report.passed());
    bool saw = false;
    for (const auto& e : report.counts)
        if (e.name == "pairs") {
            EXPECT_EQ(e.delta(), -1);
            saw = true;
        }
    EXPECT_TRUE(saw);
    EXPECT_NE(report.format().find("-1"), std::string::npos);
}

TEST(ValidateDataset, OverlappingSplitsFlagged) {
    const auto claims = three_claims();
    const PairSet train({{"q1", "a"}}, {{"q1", "vc1"}}, claims);
    const PairSet test({{"q1", "a"}}, {{"q1", "vc2"}}, claims);
    const auto all = PairSet::merge(train, test, claims);
    const auto report = validate_dataset(claims, all, make_split(train, test), {});
    EXPECT_FALSE(report.passed());
    EXPECT_FALSE(report.issues.empty());
}

TEST(LoadDataset, FixtureManifest) {
    const auto m = DatasetManifest::load(std::string(CLAIMRANK_TEST_DATA) + "/data/tiny/manifest.cfg");
    EXPECT_EQ(m.expected.claims, 8u);
    const auto ds = load_dataset(m);
    EXPECT_EQ(ds.claims.size(), 8u);
    EXPECT_EQ(ds.train.size(), 6u);
    EXPECT_EQ(ds.test.size(), 3u);
    EXPECT_EQ(ds.all.size(), 9u);
    EXPECT_EQ(ds.train.relevant("q04").size(), 2u);
    EXPECT_TRUE(validate_dataset(ds.claims, ds.all, ds.split, m.expected).passed());
}

TEST(LoadDataset, MissingFileIsIoError) {
    const auto dir = synth::scratch_dir("corpus-missing");
    {
        std::ofstream(dir / "m.cfg") << "claims = nope.jsonl\npairs_train = a.tsv\npairs_test = b.tsv\n";
    }
    const auto m = DatasetManifest::load(dir / "m.cfg");
    try {
        load_dataset(m);
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("nope.jsonl"), std::string::npos);
    }
    EXPECT_THROW(DatasetManifest::load(dir / "absent.cfg"), IoError);
    std::filesystem::remove_all(dir);
}
