#include "claimrank/embed.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "claimrank/error.hpp"
#include "claimrank/textproc.hpp"

namespace claimrank {

std::string_view vector_field_name(VectorField field) {
    switch (field) {
        case VectorField::VerClaim: return "verclaim";
        case VectorField::Title: return "title";
        case VectorField::Body: return "body";
        case VectorField::Input: return "input";
    }
    return "?";
}

VectorField parse_vector_field(std::string_view name) {
    if (name == "verclaim" || name == "ver_claim") return VectorField::VerClaim;
    if (name == "title") return VectorField::Title;
    if (name == "body") return VectorField::Body;
    if (name == "input") return VectorField::Input;
    throw std::invalid_argument("unknown vector field '" + std::string(name) + "'");
}

std::string format_key(const EmbeddingKey& key) {
    std::string out = key.doc_id + "/" + std::string(vector_field_name(key.field));
    if (key.sentence) out += "/" + std::to_string(*key.sentence);
    return out;
}

EmbeddingStore::EmbeddingStore(std::size_t dim, std::string encoder_id)
    : dim_(dim), encoder_id_(std::move(encoder_id)) {}

void EmbeddingStore::add(EmbeddingKey key, std::span<const float> vec) {
    if (vec.size() != dim_)
        throw ValidationError("vector " + format_key(key) + " has length " + std::to_string(vec.size()) +
                              ", store dim is " + std::to_string(dim_));
    if ((key.field == VectorField::Body) != key.sentence.has_value())
        throw ValidationError("vector " + format_key(key) + ": sentence index is required for body vectors only");
    if (key.doc_id.empty() || key.doc_id.find_first_of("\t\n") != std::string::npos)
        throw ValidationError("vector key with empty id or an id containing tab/newline");
    double norm2 = 0.0;
    for (float x : vec) {
        if (!std::isfinite(x)) throw ValidationError("vector " + format_key(key) + " has a non-finite component");
        norm2 += static_cast<double>(x) * x;
    }
    auto& doc = docs_[key.doc_id];
    const std::size_t row = keys_.size();
    switch (key.field) {
        case VectorField::VerClaim:
        case VectorField::Title:
        case VectorField::Input: {
            auto& slot = key.field == VectorField::VerClaim ? doc.verclaim
                         : key.field == VectorField::Title  ? doc.title
                                                            : doc.input;
            if (slot) throw ValidationError("duplicate vector key " + format_key(key));
            slot = row;
            break;
        }
        case VectorField::Body: {
            auto it = std::lower_bound(doc.body.begin(), doc.body.end(), std::make_pair(*key.sentence, std::size_t{0}));
            if (it != doc.body.end() && it->first == *key.sentence)
                throw ValidationError("duplicate vector key " + format_key(key));
            doc.body.insert(it, {*key.sentence, row});
            doc.body_sorted.clear();
            for (const auto& [s, r] : doc.body) doc.body_sorted.push_back(r);
            break;
        }
    }
    field_rows_[static_cast<int>(key.field)].push_back(row);
    keys_.push_back(std::move(key));
    data_.insert(data_.end(), vec.begin(), vec.end());
    norms_.push_back(std::sqrt(norm2));
}

std::span<const float> EmbeddingStore::row(std::size_t r) const {
    if (r >= keys_.size()) throw std::out_of_range("embedding row out of range");
    return {data_.data() + r * dim_, dim_};
}

std::optional<std::size_t> EmbeddingStore::find(const EmbeddingKey& key) const {
    if (key.field == VectorField::Body) {
        auto it = docs_.find(key.doc_id);
        if (it == docs_.end() || !key.sentence) return std::nullopt;
        for (const auto& [s, r] : it->second.body)
            if (s == *key.sentence) return r;
        return std::nullopt;
    }
    return field_row(key.doc_id, key.field);
}

std::optional<std::span<const float>> EmbeddingStore::vector(const EmbeddingKey& key) const {
    auto r = find(key);
    if (!r) return std::nullopt;
    return row(*r);
}

std::optional<std::size_t> EmbeddingStore::field_row(std::string_view doc_id, VectorField field) const {
    auto it = docs_.find(std::string(doc_id));
    if (it == docs_.end()) return std::nullopt;
    switch (field) {
        case VectorField::VerClaim: return it->second.verclaim;
        case VectorField::Title: return it->second.title;
        case VectorField::Input: return it->second.input;
        case VectorField::Body: return std::nullopt;
    }
    return std::nullopt;
}

std::span<const std::size_t> EmbeddingStore::body_rows(std::string_view doc_id) const {
    auto it = docs_.find(std::string(doc_id));
    if (it == docs_.end()) return {};
    return it->second.body_sorted;
}

std::span<const std::size_t> EmbeddingStore::rows_of(VectorField field) const {
    return field_rows_[static_cast<int>(field)];
}

bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
    if (a.dim_ != b.dim_ || a.encoder_id_ != b.encoder_id_ || a.keys_ != b.keys_) return false;
    return std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

namespace {

std::vector<std::string> split_tab(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::size_t parse_size(const std::string& s, const std::string& source, std::size_t line, const char* what) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || errno == ERANGE || s[0] == '-')
        throw ParseError(source, line, std::string("invalid ") + what + " '" + s + "'");
    return static_cast<std::size_t>(v);
}

EmbeddingKey parse_key(const std::vector<std::string>& f, const std::string& source, std::size_t line) {
    EmbeddingKey key;
    key.doc_id = f[0];
    try {
        key.field = parse_vector_field(f[1]);
    } catch (const std::invalid_argument& e) {
        throw ParseError(source, line, e.what());
    }
    if (f[2] != "-") key.sentence = static_cast<std::uint32_t>(parse_size(f[2], source, line, "sentence index"));
    return key;
}

float load_le_float(const unsigned char* p) {
    std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(bits);
}

void store_le_float(float v, unsigned char* p) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    p[0] = static_cast<unsigned char>(bits & 0xff);
    p[1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((bits >> 24) & 0xff);
}

}  // namespace

EmbeddingStore read_vectors(std::istream& in, const std::string& source, std::optional<std::size_t> expected_dim) {
    std::string line;
    if (!std::getline(in, line)) {
        if (expected_dim) return EmbeddingStore(*expected_dim);
        throw ParseError(source, 1, "empty vector file without a header");
    }
    auto header = split_tab(line);
    if (header.size() < 5 || header[0] != kVectorMagic) throw ParseError(source, 1, "not a claimrank vector file");
    if (parse_size(header[1], source, 1, "format version") != static_cast<std::size_t>(kVectorFormatVersion))
        throw ParseError(source, 1, "unsupported vector format version " + header[1]);
    const std::size_t dim = parse_size(header[2], source, 1, "dim");
    const std::size_t count = parse_size(header[3], source, 1, "count");
    const bool binary = header[4] == "binary";
    if (!binary && header[4] != "text") throw ParseError(source, 1, "unknown encoding '" + header[4] + "'");
    if (dim == 0) throw ParseError(source, 1, "dim must be positive");
    if (expected_dim && *expected_dim != dim)
        throw ValidationError(source + ": file dim " + std::to_string(dim) + " differs from expected " +
                              std::to_string(*expected_dim));
    EmbeddingStore store(dim, header.size() > 5 ? header[5] : std::string{});

    std::vector<float> vec;
    std::vector<unsigned char> raw;
    std::size_t line_no = 1;
    for (std::size_t rec = 0; rec < count; ++rec) {
        ++line_no;
        const auto offset = static_cast<long long>(in.tellg());
        if (!std::getline(in, line))
            throw ParseError(source, line_no,
                             "expected " + std::to_string(count) + " records, found " + std::to_string(rec));
        auto f = split_tab(line);
        if (f.size() < 4) throw ParseError(source, line_no, "malformed record key at byte offset " + std::to_string(offset));
        auto key = parse_key(f, source, line_no);
        const std::size_t len = parse_size(f[3], source, line_no, "vector length");
        if (len != dim)
            throw ValidationError(source + ": vector " + format_key(key) + " has length " + std::to_string(len) +
                                  ", file dim is " + std::to_string(dim));
        vec.assign(len, 0.0f);
        if (binary) {
            if (f.size() != 4) throw ParseError(source, line_no, "binary record key has extra fields");
            raw.resize(len * 4);
            const auto data_offset = static_cast<long long>(in.tellg());
            in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
            if (in.gcount() != static_cast<std::streamsize>(raw.size()))
                throw ParseError(source, 0,
                                 "truncated float record for " + format_key(key) + " at byte offset " +
                                     std::to_string(data_offset));
            for (std::size_t i = 0; i < len; ++i) vec[i] = load_le_float(raw.data() + 4 * i);
            ++line_no;  // binary payload occupies no text line but keep a monotone counter
        } else {
            if (f.size() != 5) throw ParseError(source, line_no, "text record must have 5 tab-separated fields");
            const char* p = f[4].c_str();
            for (std::size_t i = 0; i < len; ++i) {
                char* end = nullptr;
                vec[i] = std::strtof(p, &end);
                if (end == p)
                    throw ParseError(source, line_no,
                                     "bad float #" + std::to_string(i) + " in " + format_key(key) + " at byte offset " +
                                         std::to_string(offset));
                p = end;
            }
            while (*p == ' ') ++p;
            if (*p != '\0' && *p != '\r')
                throw ValidationError(source + ": vector " + format_key(key) + " has more than " +
                                      std::to_string(len) + " components");
        }
        for (float x : vec)
            if (!std::isfinite(x))
                throw ValidationError(source + ": vector " + format_key(key) + " has a non-finite component");
        store.add(std::move(key), vec);
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw ParseError(source, line_no, "trailing data after " + std::to_string(count) + " records");
    return store;
}

EmbeddingStore import_vectors(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vector file: " + path.string());
    return read_vectors(in, path.string(), expected_dim);
}

void write_vectors(const EmbeddingStore& store, std::ostream& out, VectorEncoding encoding) {
    const bool binary = encoding == VectorEncoding::Binary;
    out << kVectorMagic << '\t' << kVectorFormatVersion << '\t' << store.dim() << '\t' << store.size() << '\t'
        << (binary ? "binary" : "text") << '\t' << store.encoder_id() << '\n';
    std::vector<unsigned char> raw(store.dim() * 4);
    char buf[32];
    for (std::size_t r = 0; r < store.size(); ++r) {
        const auto& key = store.key(r);
        out << key.doc_id << '\t' << vector_field_name(key.field) << '\t'
            << (key.sentence ? std::to_string(*key.sentence) : std::string("-")) << '\t' << store.dim();
        auto v = store.row(r);
        if (binary) {
            out << '\n';
            for (std::size_t i = 0; i < v.size(); ++i) store_le_float(v[i], raw.data() + 4 * i);
            out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        } else {
            out << '\t';
            for (std::size_t i = 0; i < v.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v[i]));
                if (i) out << ' ';
                out << buf;
            }
            out << '\n';
        }
    }
}

void export_vectors(const EmbeddingStore& store, const std::filesystem::path& path, VectorEncoding encoding) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write vector file: " + path.string());
    write_vectors(store, out, encoding);
    if (!out) throw IoError("write failure on " + path.string());
}

namespace {

std::uint64_t fnv1a(std::string_view a, std::string_view b = {}) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    mix(a);
    if (!b.empty()) {
        mix(std::string_view("\x1f", 1));
        mix(b);
    }
    // splitmix64 finaliser spreads the low bits used for bucketing
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

}  // namespace

std::vector<double> hash_embed(std::string_view text, std::size_t dim) {
    if (dim < 8) throw std::invalid_argument("hash_embed needs dim >= 8");
    std::vector<double> v(dim, 0.0);
    const auto tokens = tokenize(text);
    auto bump = [&](std::uint64_t h) {
        const double sign = (h >> 63) ? -1.0 : 1.0;
        v[static_cast<std::size_t>(h % dim)] += sign;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        bump(fnv1a(tokens[i]));
        if (i + 1 < tokens.size()) bump(fnv1a(tokens[i], tokens[i + 1]));
    }
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 == 0.0) {
        v[0] = 1.0;
        return v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

std::vector<float> to_float(std::span<const double> v) {
    return std::vector<float>(v.begin(), v.end());
}

EmbeddingStore hash_embed_claims(const VerifiedClaimStore& claims, std::size_t dim, std::size_t max_sentences) {
    EmbeddingStore store(dim, "hash-" + std::to_string(dim));
    for (const auto& c : claims) {
        store.add({c.id, VectorField::VerClaim, std::nullopt}, to_float(hash_embed(c.ver_claim, dim)));
        store.add({c.id, VectorField::Title, std::nullopt}, to_float(hash_embed(c.title, dim)));
        const auto sentences = split_sentences(c.body);
        const std::size_t limit = max_sentences ? std::min(max_sentences, sentences.size()) : sentences.size();
        for (std::size_t i = 0; i < limit; ++i)
            store.add({c.id, VectorField::Body, static_cast<std::uint32_t>(i)}, to_float(hash_embed(sentences[i], dim)));
    }
    return store;
}

void hash_embed_inputs(EmbeddingStore& store, const PairSet& pairs) {
    for (const auto& in : pairs.inputs())
        if (!store.field_row(in.id, VectorField::Input))
            store.add({in.id, VectorField::Input, std::nullopt}, to_float(hash_embed(in.text, store.dim())));
}

double cosine_to_row(std::span<const float> query, double query_norm, const EmbeddingStore& store, std::size_t row) {
    const double rn = store.row_norm(row);
    if (query_norm == 0.0 || rn == 0.0) return 0.0;
    const auto v = store.row(row);
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += static_cast<double>(query[i]) * v[i];
    return std::clamp(dot / (query_norm * rn), -1.0, 1.0);
}

namespace {

double norm_of(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

void check_dim(std::span<const float> query, const EmbeddingStore& store) {
    if (query.size() != store.dim())
        throw std::invalid_argument("query vector has dim " + std::to_string(query.size()) + ", store dim is " +
                                    std::to_string(store.dim()));
}

}  // namespace

RankedList rank_by_cosine(std::span<const float> query, const EmbeddingStore& store, VectorField field,
                          std::size_t top_n) {
    check_dim(query, store);
    if (field == VectorField::Body) throw std::invalid_argument("rank_by_cosine ranks whole-document fields only");
    if (top_n == 0) throw std::invalid_argument("top_n must be >= 1");
    const double qn = norm_of(query);
    RankedList list;
    const auto rows = store.rows_of(field);
    list.reserve(rows.size());
    for (auto r : rows) list.push_back({store.key(r).doc_id, cosine_to_row(query, qn, store, r)});
    sort_and_truncate(list, top_n);
    return list;
}

std::vector<double> SentenceScoreSet::features() const {
    std::vector<double> f{cos_verclaim, cos_title};
    f.insert(f.end(), body_top.begin(), body_top.end());
    return f;
}

SentenceScoreSet body_sentence_scores(std::span<const float> query, std::string_view doc_id,
                                      const EmbeddingStore& store, std::size_t n, std::size_t max_sentences) {
    check_dim(query, store);
    const auto vr = store.field_row(doc_id, VectorField::VerClaim);
    const auto tr = store.field_row(doc_id, VectorField::Title);
    if (!vr) throw ValidationError("missing verclaim vector for '" + std::string(doc_id) + "'");
    if (!tr) throw ValidationError("missing title vector for '" + std::string(doc_id) + "'");
    const double qn = norm_of(query);
    SentenceScoreSet out;
    out.doc_id = std::string(doc_id);
    out.cos_verclaim = cosine_to_row(query, qn, store, *vr);
    out.cos_title = cosine_to_row(query, qn, store, *tr);
    auto rows = store.body_rows(doc_id);
    if (max_sentences && rows.size() > max_sentences) rows = rows.first(max_sentences);
    std::vector<double> sims;
    sims.reserve(rows.size());
    for (auto r : rows) sims.push_back(cosine_to_row(query, qn, store, r));
    const std::size_t keep = std::min(n, sims.size());
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(keep), sims.end(), std::greater<>());
    out.body_top.assign(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(keep));
    out.body_top.resize(n, 0.0);
    // padding can outrank negative cosines
    std::sort(out.body_top.begin(), out.body_top.end(), std::greater<>());
    return out;
}

}  // namespace claimrank
