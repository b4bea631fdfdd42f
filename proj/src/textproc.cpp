#include "claimrank/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "claimrank/config.hpp"

namespace claimrank {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }
bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view prefix) {
    if (text.size() - pos < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(text[pos + i])) != prefix[i]) return false;
    return true;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        const bool at_word_start = i == 0 || !is_word_byte(static_cast<unsigned char>(text[i - 1]));
        if (at_word_start &&
            (starts_with_ci(text, i, "http://") || starts_with_ci(text, i, "https://") || starts_with_ci(text, i, "www."))) {
            while (i < n && !is_space(static_cast<unsigned char>(text[i]))) ++i;
            tokens.emplace_back(kUrlToken);
            continue;
        }
        if (c == '@' && i + 1 < n && is_word_byte(static_cast<unsigned char>(text[i + 1])) &&
            (i == 0 || !is_word_byte(static_cast<unsigned char>(text[i - 1])))) {
            ++i;
            while (i < n && (is_word_byte(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
            tokens.emplace_back(kMentionToken);
            continue;
        }
        if (!is_word_byte(c)) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::string_view word = text.substr(start, i - start);
        if (word == kUrlToken || word == kMentionToken) {
            tokens.emplace_back(word);
            continue;
        }
        std::string tok(word);
        for (auto& ch : tok) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

SparseVector::SparseVector(std::vector<std::pair<std::string, double>> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& e : entries) {
        if (!entries_.empty() && entries_.back().first == e.first) {
            entries_.back().second += e.second;
        } else {
            entries_.push_back(std::move(e));
        }
    }
    std::erase_if(entries_, [](const auto& e) { return e.second == 0.0; });
}

double SparseVector::weight(std::string_view term) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), term,
                               [](const auto& e, std::string_view t) { return e.first < t; });
    return (it != entries_.end() && it->first == term) ? it->second : 0.0;
}

double SparseVector::norm() const {
    double sum = 0.0;
    for (const auto& e : entries_) sum += e.second * e.second;
    return std::sqrt(sum);
}

double SparseVector::dot(const SparseVector& other) const {
    double sum = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            sum += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return sum;
}

TfidfModel TfidfModel::fit(std::span<const std::string> corpus) {
    if (corpus.empty()) throw std::invalid_argument("tfidf fit on an empty corpus");
    TfidfModel model;
    model.doc_count_ = corpus.size();
    for (const auto& doc : corpus) {
        auto tokens = tokenize(doc);
        std::sort(tokens.begin(), tokens.end());
        tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
        for (auto& t : tokens) ++model.df_[std::move(t)];
    }
    return model;
}

double TfidfModel::idf(std::string_view term) const {
    auto it = df_.find(std::string(term));
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(doc_count_)) / (1.0 + df)) + 1.0;
}

SparseVector TfidfModel::transform(std::string_view text) const {
    std::map<std::string, double> tf;
    for (auto& t : tokenize(text)) tf[std::move(t)] += 1.0;
    std::vector<std::pair<std::string, double>> entries;
    entries.reserve(tf.size());
    for (auto& [term, count] : tf) entries.emplace_back(term, count * idf(term));
    return SparseVector(std::move(entries));
}

namespace {

template <typename T>
CosineResult dense_cosine(std::span<const T> u, std::span<const T> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                                    std::to_string(v.size()) + ")");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i];
        const double b = v[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) return {0.0, true};
    return {std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0), false};
}

}  // namespace

CosineResult cosine(std::span<const double> u, std::span<const double> v) { return dense_cosine(u, v); }
CosineResult cosine(std::span<const float> u, std::span<const float> v) { return dense_cosine(u, v); }

CosineResult cosine(const SparseVector& u, const SparseVector& v) {
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) return {0.0, true};
    return {std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0), false};
}

std::vector<double> pair_similarities(const PairSet& pairs, const VerifiedClaimStore& claims) {
    std::vector<std::string> corpus;
    corpus.reserve(pairs.inputs().size() + claims.size());
    for (const auto& in : pairs.inputs()) corpus.push_back(in.text);
    for (const auto& c : claims) corpus.push_back(c.ver_claim);
    if (corpus.empty()) return {};
    const auto model = TfidfModel::fit(corpus);

    std::vector<double> sims;
    sims.reserve(pairs.size());
    for (const auto& p : pairs.pairs()) {
        const auto* input = pairs.find_input(p.input_id);
        const auto* claim = claims.find(p.verified_id);
        sims.push_back(cosine(model.transform(input->text), model.transform(claim->ver_claim)).value);
    }
    return sims;
}

std::vector<HistogramRow> histogram_from_similarities(std::span<const double> similarities,
                                                      std::span<const double> thresholds) {
    std::vector<HistogramRow> rows;
    rows.reserve(thresholds.size());
    for (double t : thresholds) {
        HistogramRow row;
        row.threshold = t;
        row.count = static_cast<std::size_t>(
            std::count_if(similarities.begin(), similarities.end(), [t](double s) { return s > t; }));
        row.percent = similarities.empty() ? 0.0 : 100.0 * static_cast<double>(row.count) /
                                                       static_cast<double>(similarities.size());
        rows.push_back(row);
    }
    return rows;
}

std::vector<HistogramRow> similarity_histogram(const PairSet& pairs, const VerifiedClaimStore& claims,
                                               std::span<const double> thresholds) {
    const auto sims = pair_similarities(pairs, claims);
    return histogram_from_similarities(sims, thresholds);
}

std::string format_histogram_tsv(std::span<const HistogramRow> rows) {
    std::ostringstream out;
    out << "threshold\tcount\tpercent\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.2f\t%zu\t%.0f\n", r.threshold, r.count, r.percent);
        out << buf;
    }
    return out.str();
}

namespace {

const std::set<std::string, std::less<>>& abbreviations() {
    static const std::set<std::string, std::less<>> kAbbrev = {
        "mr", "mrs", "ms", "dr", "prof", "sen", "sens", "rep", "reps", "gov", "lt", "col", "gen", "sgt", "capt",
        "cmdr", "adm", "maj", "rev", "hon", "pres", "st", "jr", "sr", "vs", "etc", "inc", "ltd", "co", "corp",
        "dept", "est", "fig", "vol", "approx", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep",
        "sept", "oct", "nov", "dec", "mt", "ft", "ave", "blvd", "gop"};
    return kAbbrev;
}

bool is_closing(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opening(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

// True when the period at `dot` terminates an abbreviation rather than a sentence.
bool abbreviation_before(std::string_view text, std::size_t dot) {
    std::size_t start = dot;
    while (start > 0 && !is_space(static_cast<unsigned char>(text[start - 1])) && !is_opening(text[start - 1]))
        --start;
    std::string_view word = text.substr(start, dot - start);
    if (word.empty()) return false;
    if (word.find('.') != std::string_view::npos) return true;  // U.S., D.C., a.m.
    if (word.size() == 1 && word[0] >= 'A' && word[0] <= 'Z') return true;  // initials
    std::string w(word);
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return abbreviations().count(w) > 0;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view body) {
    std::vector<std::string> out;
    const std::size_t n = body.size();
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        auto s = trim(body.substr(start, end - start));
        if (!s.empty()) out.push_back(std::move(s));
        start = end;
    };
    std::size_t i = 0;
    while (i < n) {
        const char c = body[i];
        if (c != '.' && c != '!' && c != '?') {
            ++i;
            continue;
        }
        std::size_t end = i;
        bool has_bang = false;
        while (end < n && (body[end] == '.' || body[end] == '!' || body[end] == '?')) {
            has_bang = has_bang || body[end] != '.';
            ++end;
        }
        while (end < n && is_closing(body[end])) ++end;
        std::size_t j = end;
        if (j >= n || !is_space(static_cast<unsigned char>(body[j]))) {
            i = end;
            continue;
        }
        while (j < n && is_space(static_cast<unsigned char>(body[j]))) ++j;
        while (j < n && is_opening(body[j])) ++j;
        const bool capital_next = j < n && body[j] >= 'A' && body[j] <= 'Z';
        const bool single_period = !has_bang && end > i && body[i] == '.' && (end == i + 1 || is_closing(body[i + 1]));
        if (capital_next && !(single_period && abbreviation_before(body, i))) emit(end);
        i = end;
    }
    emit(n);
    return out;
}

}  // namespace claimrank
