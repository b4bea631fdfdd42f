#include "claimrank/bm25.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "claimrank/config.hpp"
#include "claimrank/error.hpp"
#include "claimrank/textproc.hpp"

namespace claimrank {

using json = nlohmann::json;

namespace {

constexpr const char* kIndexFormat = "claimrank-bm25-index";
constexpr int kIndexVersion = 1;

}  // namespace

std::string_view field_name(Field field) {
    switch (field) {
        case Field::Title: return "title";
        case Field::VerClaim: return "verclaim";
        case Field::Body: return "body";
        case Field::TitleVerClaim: return "title+verclaim";
        case Field::TitleVerClaimBody: return "title+verclaim+body";
    }
    return "?";
}

Field parse_field(std::string_view name) {
    bool title = false, verclaim = false, body = false;
    for (auto part : split_list(name, '+')) {
        for (auto& c : part) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (part == "title") title = true;
        else if (part == "verclaim" || part == "ver_claim" || part == "vclaim") verclaim = true;
        else if (part == "body") body = true;
        else throw std::invalid_argument("unknown field '" + std::string(name) + "'");
    }
    if (title && verclaim && body) return Field::TitleVerClaimBody;
    if (title && verclaim && !body) return Field::TitleVerClaim;
    if (title && !verclaim && !body) return Field::Title;
    if (!title && verclaim && !body) return Field::VerClaim;
    if (!title && !verclaim && body) return Field::Body;
    throw std::invalid_argument("unsupported field combination '" + std::string(name) + "'");
}

std::string field_text(const VerifiedClaim& claim, Field field) {
    auto join = [](std::initializer_list<const std::string*> parts) {
        std::string out;
        for (const auto* p : parts) {
            if (p->empty()) continue;
            if (!out.empty()) out.push_back(' ');
            out += *p;
        }
        return out;
    };
    switch (field) {
        case Field::Title: return claim.title;
        case Field::VerClaim: return claim.ver_claim;
        case Field::Body: return claim.body;
        case Field::TitleVerClaim: return join({&claim.title, &claim.ver_claim});
        case Field::TitleVerClaimBody: return join({&claim.title, &claim.ver_claim, &claim.body});
    }
    return {};
}

InvertedIndex InvertedIndex::build(const VerifiedClaimStore& claims, Field field, Bm25Params params) {
    if (claims.empty()) throw ValidationError("cannot build a BM25 index over an empty claim store");
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    ids.reserve(claims.size());
    texts.reserve(claims.size());
    for (const auto& c : claims) {
        ids.push_back(c.id);
        texts.push_back(field_text(c, field));
    }
    return build(std::move(ids), texts, field, params);
}

InvertedIndex InvertedIndex::build(std::vector<std::string> doc_ids, std::span<const std::string> texts, Field field,
                                   Bm25Params params) {
    if (doc_ids.empty()) throw ValidationError("cannot build a BM25 index over an empty document set");
    if (doc_ids.size() != texts.size()) throw std::invalid_argument("doc id / text count mismatch");
    if (!(params.k1 > 0.0)) throw std::invalid_argument("BM25 k1 must be > 0");
    if (!(params.b >= 0.0 && params.b <= 1.0)) throw std::invalid_argument("BM25 b must be in [0, 1]");
    for (std::size_t i = 1; i < doc_ids.size(); ++i)
        if (!(doc_ids[i - 1] < doc_ids[i])) throw std::invalid_argument("doc ids must be strictly ascending");

    InvertedIndex index;
    index.field_ = field;
    index.params_ = params;
    index.doc_ids_ = std::move(doc_ids);
    index.doc_lengths_.resize(texts.size());
    for (std::size_t d = 0; d < texts.size(); ++d) {
        auto tokens = tokenize(texts[d]);
        index.doc_lengths_[d] = static_cast<std::uint32_t>(tokens.size());
        std::map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[std::move(t)];
        for (auto& [term, count] : tf) index.postings_[term].push_back({static_cast<std::uint32_t>(d), count});
    }
    index.finalize();
    return index;
}

void InvertedIndex::finalize() {
    double total = 0.0;
    for (auto len : doc_lengths_) total += len;
    avg_doc_length_ = doc_lengths_.empty() ? 0.0 : total / static_cast<double>(doc_lengths_.size());
}

double InvertedIndex::term_weight(double idf, std::uint32_t tf, std::uint32_t len) const {
    const double norm = avg_doc_length_ > 0.0 ? static_cast<double>(len) / avg_doc_length_ : 0.0;
    const double f = static_cast<double>(tf);
    return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm));
}

double InvertedIndex::idf(std::string_view term) const {
    const double n = static_cast<double>(doc_ids_.size());
    const double df = static_cast<double>(postings(term).size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
    auto it = postings_.find(std::string(term));
    if (it == postings_.end()) return {};
    return it->second;
}

std::optional<std::size_t> InvertedIndex::doc_index(std::string_view id) const {
    auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), id);
    if (it == doc_ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - doc_ids_.begin());
}

double InvertedIndex::score(std::span<const std::string> query_tokens, std::size_t doc) const {
    if (doc >= doc_ids_.size()) throw std::out_of_range("doc index out of range");
    double total = 0.0;
    for (const auto& t : query_tokens) {
        auto plist = postings(t);
        auto it = std::lower_bound(plist.begin(), plist.end(), doc,
                                   [](const Posting& p, std::size_t d) { return p.doc < d; });
        if (it == plist.end() || it->doc != doc) continue;
        total += term_weight(idf(t), it->tf, doc_lengths_[doc]);
    }
    return total;
}

double InvertedIndex::score(std::span<const std::string> query_tokens, std::string_view doc_id) const {
    auto idx = doc_index(doc_id);
    if (!idx) throw std::out_of_range("unknown doc id '" + std::string(doc_id) + "'");
    return score(query_tokens, *idx);
}

std::vector<double> InvertedIndex::score_all(std::span<const std::string> query_tokens) const {
    std::vector<double> scores(doc_ids_.size(), 0.0);
    for (const auto& t : query_tokens) {
        auto plist = postings(t);
        if (plist.empty()) continue;
        const double w = idf(t);
        for (const auto& p : plist) scores[p.doc] += term_weight(w, p.tf, doc_lengths_[p.doc]);
    }
    return scores;
}

RankedList ranked_from_scores(std::span<const double> scores, const std::vector<std::string>& ids,
                              std::size_t top_n, bool drop_non_positive) {
    RankedList list;
    for (std::size_t d = 0; d < scores.size(); ++d) {
        if (drop_non_positive && !(scores[d] > 0.0)) continue;
        list.push_back({ids[d], scores[d]});
    }
    sort_and_truncate(list, top_n);
    return list;
}

RankedList InvertedIndex::retrieve_tokens(std::span<const std::string> query_tokens, std::size_t top_n) const {
    if (top_n == 0) throw std::invalid_argument("top_n must be >= 1");
    const auto scores = score_all(query_tokens);
    return ranked_from_scores(scores, doc_ids_, top_n, true);
}

RankedList InvertedIndex::retrieve(std::string_view query_text, std::size_t top_n) const {
    const auto tokens = tokenize(query_text);
    return retrieve_tokens(tokens, top_n);
}

std::vector<double> score_sum_all(std::span<const InvertedIndex* const> indexes,
                                  std::span<const std::string> query_tokens) {
    if (indexes.empty()) throw std::invalid_argument("score-sum over zero indexes");
    std::vector<double> total(indexes.front()->doc_count(), 0.0);
    for (const auto* index : indexes) {
        if (index->doc_count() != total.size()) throw std::invalid_argument("score-sum indexes cover different docs");
        const auto s = index->score_all(query_tokens);
        for (std::size_t d = 0; d < s.size(); ++d) total[d] += s[d];
    }
    return total;
}

RankedList retrieve_score_sum(std::span<const InvertedIndex* const> indexes, std::string_view query_text,
                              std::size_t top_n) {
    if (top_n == 0) throw std::invalid_argument("top_n must be >= 1");
    const auto tokens = tokenize(query_text);
    const auto scores = score_sum_all(indexes, tokens);
    std::vector<std::string> ids;
    ids.reserve(scores.size());
    for (std::size_t d = 0; d < scores.size(); ++d) ids.push_back(indexes.front()->doc_id(d));
    return ranked_from_scores(scores, ids, top_n, true);
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    json j;
    j["format"] = kIndexFormat;
    j["version"] = kIndexVersion;
    j["field"] = std::string(field_name(field_));
    j["k1"] = params_.k1;
    j["b"] = params_.b;
    j["doc_ids"] = doc_ids_;
    j["doc_lengths"] = doc_lengths_;
    json post = json::object();
    for (const auto& [term, plist] : postings_) {
        json arr = json::array();
        for (const auto& p : plist) arr.push_back({p.doc, p.tf});
        post[term] = std::move(arr);
    }
    j["postings"] = std::move(post);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write index file: " + path.string());
    out << j.dump() << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index file: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, std::string("invalid index JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kIndexFormat) throw ParseError(path.string(), 0, "not a BM25 index");
        if (j.at("version").get<int>() != kIndexVersion)
            throw ParseError(path.string(), 0, "unsupported index version " + j.at("version").dump());
        InvertedIndex index;
        index.field_ = parse_field(j.at("field").get<std::string>());
        index.params_ = {j.at("k1").get<double>(), j.at("b").get<double>()};
        index.doc_ids_ = j.at("doc_ids").get<std::vector<std::string>>();
        index.doc_lengths_ = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
        if (index.doc_ids_.size() != index.doc_lengths_.size())
            throw ParseError(path.string(), 0, "doc_ids / doc_lengths size mismatch");
        std::vector<std::uint64_t> tf_sum(index.doc_ids_.size(), 0);
        for (const auto& [term, arr] : j.at("postings").items()) {
            auto& plist = index.postings_[term];
            for (const auto& entry : arr) {
                Posting p{entry.at(0).get<std::uint32_t>(), entry.at(1).get<std::uint32_t>()};
                if (p.doc >= index.doc_ids_.size() || p.tf == 0 || (!plist.empty() && plist.back().doc >= p.doc))
                    throw ParseError(path.string(), 0, "corrupt posting list for term '" + term + "'");
                tf_sum[p.doc] += p.tf;
                plist.push_back(p);
            }
        }
        for (std::size_t d = 0; d < tf_sum.size(); ++d)
            if (tf_sum[d] != index.doc_lengths_[d])
                throw ParseError(path.string(), 0, "postings do not sum to the length of doc '" + index.doc_ids_[d] + "'");
        index.finalize();
        return index;
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, std::string("malformed index: ") + e.what());
    }
}

bool operator==(const InvertedIndex& a, const InvertedIndex& b) {
    return a.field_ == b.field_ && a.params_.k1 == b.params_.k1 && a.params_.b == b.params_.b &&
           a.doc_ids_ == b.doc_ids_ && a.doc_lengths_ == b.doc_lengths_ && a.postings_ == b.postings_;
}

}  // namespace claimrank
