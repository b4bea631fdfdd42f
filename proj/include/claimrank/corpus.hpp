#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace claimrank {

/// One fact-checked database entry. truth_value is carried along but never
/// read by any ranking code.
struct VerifiedClaim {
    std::string id;
    std::string ver_claim;
    std::string title;
    std::string body;
    std::string truth_value;

    friend bool operator==(const VerifiedClaim&, const VerifiedClaim&) = default;
};

struct InputClaim {
    std::string id;
    std::string text;

    friend bool operator==(const InputClaim&, const InputClaim&) = default;
};

struct ClaimPair {
    std::string input_id;
    std::string verified_id;

    friend auto operator<=>(const ClaimPair&, const ClaimPair&) = default;
};

/// Immutable set of verified claims, kept sorted by id so that index order and
/// id order agree (ranking tie-breaks rely on this).
class VerifiedClaimStore {
public:
    VerifiedClaimStore() = default;
    /// Validates ids and required fields; throws ValidationError on violation.
    explicit VerifiedClaimStore(std::vector<VerifiedClaim> claims);

    std::size_t size() const noexcept { return claims_.size(); }
    bool empty() const noexcept { return claims_.empty(); }
    const VerifiedClaim& operator[](std::size_t i) const { return claims_[i]; }
    const VerifiedClaim* find(std::string_view id) const;
    std::optional<std::size_t> index_of(std::string_view id) const;
    const std::vector<VerifiedClaim>& claims() const noexcept { return claims_; }
    auto begin() const noexcept { return claims_.begin(); }
    auto end() const noexcept { return claims_.end(); }

    friend bool operator==(const VerifiedClaimStore& a, const VerifiedClaimStore& b) { return a.claims_ == b.claims_; }

private:
    std::vector<VerifiedClaim> claims_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

enum class ClaimFormat { JsonLines, Tsv };

/// Picks the format from the extension: .tsv/.tab/.txt -> Tsv, anything else JsonLines.
ClaimFormat claim_format_from_path(const std::filesystem::path& path);
ClaimFormat parse_claim_format(std::string_view name);

/// Reads verified claims. JSON-lines keys and TSV header columns are matched
/// case-insensitively against these aliases:
///   id          : id, vclaim_id, verified_id, claim_id
///   ver_claim   : ver_claim, vclaim, verclaim, claim
///   title       : title
///   body        : body, article, text
///   truth_value : truth_value, truthvalue, label, rating
/// TSV files need a header row; fields may use \t \n \\ escapes.
VerifiedClaimStore parse_verified_claims(std::istream& in, ClaimFormat format, const std::string& source,
                                         std::vector<std::string>* warnings = nullptr);
VerifiedClaimStore load_verified_claims(const std::filesystem::path& path, ClaimFormat format,
                                        std::vector<std::string>* warnings = nullptr);

/// Canonical JSON-lines output, one claim per line in id order.
void write_verified_claims(const VerifiedClaimStore& store, std::ostream& out);
void save_verified_claims(const VerifiedClaimStore& store, const std::filesystem::path& path);

/// Gold links between input claims and verified claims (a multi-map).
class PairSet {
public:
    PairSet() = default;
    /// Throws ValidationError on dangling ids, empty input text, or one input id
    /// carrying two different texts.
    PairSet(std::vector<InputClaim> inputs, std::vector<ClaimPair> pairs, const VerifiedClaimStore& claims);

    const std::vector<InputClaim>& inputs() const noexcept { return inputs_; }
    const std::vector<ClaimPair>& pairs() const noexcept { return pairs_; }
    std::size_t size() const noexcept { return pairs_.size(); }
    const InputClaim* find_input(std::string_view id) const;
    /// Relevant verified ids for one input claim (empty if unknown).
    const std::set<std::string>& relevant(std::string_view input_id) const;
    bool is_relevant(std::string_view input_id, std::string_view verified_id) const;
    std::size_t distinct_verified() const;
    /// query id -> relevant doc ids.
    const std::map<std::string, std::set<std::string>, std::less<>>& qrels() const noexcept { return relevant_; }

    /// Union of two pair sets over the same claim store.
    static PairSet merge(const PairSet& a, const PairSet& b, const VerifiedClaimStore& claims);

private:
    std::vector<InputClaim> inputs_;
    std::vector<ClaimPair> pairs_;
    std::map<std::string, std::set<std::string>, std::less<>> relevant_;
};

/// Reads a pair file. TSV columns are input_id, verified_id, input_text (a
/// header row naming them is optional and may use the aliases iclaim_id /
/// query_id, vclaim_id, iclaim / input_claim / text). A .jsonl/.json file is read
/// as JSON-lines with the same key names.
PairSet parse_pairs(std::istream& in, const VerifiedClaimStore& claims, const std::string& source, bool json_lines);
PairSet load_pairs(const std::filesystem::path& path, const VerifiedClaimStore& claims);
void write_pairs_tsv(const PairSet& pairs, std::ostream& out);

struct DatasetSplit {
    std::set<std::string> train;
    std::set<std::string> test;
};

DatasetSplit make_split(const PairSet& train, const PairSet& test);

struct ExpectedCounts {
    std::optional<std::size_t> claims;
    std::optional<std::size_t> pairs;
    std::optional<std::size_t> train;
    std::optional<std::size_t> test;
};

struct ValidationEntry {
    std::string name;
    std::size_t expected = 0;
    std::size_t actual = 0;
    std::int64_t delta() const { return static_cast<std::int64_t>(actual) - static_cast<std::int64_t>(expected); }
    bool ok() const { return actual == expected; }
};

struct ValidationReport {
    std::vector<ValidationEntry> counts;
    std::vector<std::string> issues;
    bool passed() const;
    std::string format() const;
};

/// Compares actual counts (claims, pairs, and pairs per split) and split
/// structure against expectations. Mismatches are reported, never thrown.
ValidationReport validate_dataset(const VerifiedClaimStore& claims, const PairSet& pairs, const DatasetSplit& split,
                                  const ExpectedCounts& expected);

/// Dataset manifest: a key/value file naming the claim file, the two pair
/// files, and the expected counts. Relative paths resolve against the manifest.
///
///   name = politifact
///   claims = verified_claims.jsonl
///   claims_format = jsonl
///   pairs_train = train.tsv
///   pairs_test = test.tsv
///   expected.claims = 16636
///   expected.pairs = 768
///   expected.train = 614
///   expected.test = 154
struct DatasetManifest {
    std::string name;
    std::filesystem::path claims;
    ClaimFormat claims_format = ClaimFormat::JsonLines;
    std::filesystem::path pairs_train;
    std::filesystem::path pairs_test;
    ExpectedCounts expected;

    static DatasetManifest load(const std::filesystem::path& path);
};

struct Dataset {
    std::string name;
    VerifiedClaimStore claims;
    PairSet train;
    PairSet test;
    PairSet all;
    DatasetSplit split;
    std::vector<std::string> warnings;
};

Dataset load_dataset(const DatasetManifest& manifest);

}  // namespace claimrank
