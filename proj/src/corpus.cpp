#include "claimrank/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "claimrank/config.hpp"
#include "claimrank/error.hpp"

namespace claimrank {

using json = nlohmann::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

enum class ClaimColumn { Id, VerClaim, Title, Body, TruthValue, Unknown };

ClaimColumn claim_column(std::string_view name) {
    const auto n = lower(trim(name));
    if (n == "id" || n == "vclaim_id" || n == "verified_id" || n == "claim_id") return ClaimColumn::Id;
    if (n == "ver_claim" || n == "vclaim" || n == "verclaim" || n == "claim") return ClaimColumn::VerClaim;
    if (n == "title") return ClaimColumn::Title;
    if (n == "body" || n == "article" || n == "text") return ClaimColumn::Body;
    if (n == "truth_value" || n == "truthvalue" || n == "label" || n == "rating") return ClaimColumn::TruthValue;
    return ClaimColumn::Unknown;
}

enum class PairColumn { InputId, VerifiedId, InputText, Unknown };

PairColumn pair_column(std::string_view name) {
    const auto n = lower(trim(name));
    if (n == "input_id" || n == "iclaim_id" || n == "query_id") return PairColumn::InputId;
    if (n == "verified_id" || n == "vclaim_id" || n == "ver_claim_id") return PairColumn::VerifiedId;
    if (n == "input_text" || n == "iclaim" || n == "input_claim" || n == "text") return PairColumn::InputText;
    return PairColumn::Unknown;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') fields.back().pop_back();
    return fields;
}

std::string unescape_tsv(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            switch (s[i + 1]) {
                case 't': out.push_back('\t'); ++i; continue;
                case 'n': out.push_back('\n'); ++i; continue;
                case '\\': out.push_back('\\'); ++i; continue;
                default: break;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

std::string escape_tsv(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\t') out += "\\t";
        else if (c == '\n') out += "\\n";
        else if (c == '\\') out += "\\\\";
        else out.push_back(c);
    }
    return out;
}

std::string json_string(const json& v, const std::string& source, std::size_t line) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_null()) return {};
    throw ParseError(source, line, "expected a string value, got " + std::string(v.type_name()));
}

bool blank(std::string_view s) { return trim(s).empty(); }

void check_claim(const VerifiedClaim& c, const std::string& source, std::size_t line) {
    if (blank(c.id)) throw ParseError(source, line, "verified claim without id");
    if (blank(c.ver_claim)) throw ParseError(source, line, "empty ver_claim for id '" + c.id + "'");
    if (blank(c.title)) throw ParseError(source, line, "empty title for id '" + c.id + "'");
}

const std::set<std::string> kNoRelevant;

}  // namespace

VerifiedClaimStore::VerifiedClaimStore(std::vector<VerifiedClaim> claims) : claims_(std::move(claims)) {
    std::sort(claims_.begin(), claims_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    by_id_.reserve(claims_.size());
    for (std::size_t i = 0; i < claims_.size(); ++i) {
        const auto& c = claims_[i];
        if (blank(c.id)) throw ValidationError("verified claim without id");
        if (blank(c.ver_claim)) throw ValidationError("empty ver_claim for id '" + c.id + "'");
        if (blank(c.title)) throw ValidationError("empty title for id '" + c.id + "'");
        if (!by_id_.emplace(c.id, i).second) throw ValidationError("duplicate verified claim id '" + c.id + "'");
    }
}

const VerifiedClaim* VerifiedClaimStore::find(std::string_view id) const {
    auto idx = index_of(id);
    return idx ? &claims_[*idx] : nullptr;
}

std::optional<std::size_t> VerifiedClaimStore::index_of(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

ClaimFormat claim_format_from_path(const std::filesystem::path& path) {
    const auto ext = lower(path.extension().string());
    if (ext == ".tsv" || ext == ".tab" || ext == ".txt") return ClaimFormat::Tsv;
    return ClaimFormat::JsonLines;
}

ClaimFormat parse_claim_format(std::string_view name) {
    const auto n = lower(name);
    if (n == "tsv") return ClaimFormat::Tsv;
    if (n == "jsonl" || n == "json-lines" || n == "json") return ClaimFormat::JsonLines;
    throw ValidationError("unknown claim format '" + std::string(name) + "' (expected jsonl or tsv)");
}

VerifiedClaimStore parse_verified_claims(std::istream& in, ClaimFormat format, const std::string& source,
                                         std::vector<std::string>* warnings) {
    std::vector<VerifiedClaim> claims;
    std::unordered_map<std::string, std::size_t> seen;  // id -> line
    std::string line;
    std::size_t line_no = 0;

    std::vector<ClaimColumn> columns;
    auto add = [&](VerifiedClaim c) {
        check_claim(c, source, line_no);
        c.truth_value = lower(c.truth_value);
        auto [it, inserted] = seen.emplace(c.id, line_no);
        if (!inserted)
            throw ParseError(source, line_no,
                             "duplicate id '" + c.id + "' (first seen on line " + std::to_string(it->second) + ")");
        claims.push_back(std::move(c));
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        if (format == ClaimFormat::JsonLines) {
            json obj;
            try {
                obj = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
            }
            if (!obj.is_object()) throw ParseError(source, line_no, "expected a JSON object");
            VerifiedClaim c;
            for (const auto& [key, value] : obj.items()) {
                switch (claim_column(key)) {
                    case ClaimColumn::Id: c.id = json_string(value, source, line_no); break;
                    case ClaimColumn::VerClaim: c.ver_claim = json_string(value, source, line_no); break;
                    case ClaimColumn::Title: c.title = json_string(value, source, line_no); break;
                    case ClaimColumn::Body: c.body = json_string(value, source, line_no); break;
                    case ClaimColumn::TruthValue: c.truth_value = json_string(value, source, line_no); break;
                    case ClaimColumn::Unknown: break;
                }
            }
            add(std::move(c));
        } else {
            auto fields = split_tabs(line);
            if (columns.empty()) {
                for (const auto& f : fields) columns.push_back(claim_column(f));
                if (std::find(columns.begin(), columns.end(), ClaimColumn::Id) == columns.end() ||
                    std::find(columns.begin(), columns.end(), ClaimColumn::VerClaim) == columns.end())
                    throw ParseError(source, line_no, "TSV header must name at least id and ver_claim columns");
                continue;
            }
            if (fields.size() > columns.size())
                throw ParseError(source, line_no,
                                 "expected " + std::to_string(columns.size()) + " columns, got " +
                                     std::to_string(fields.size()));
            VerifiedClaim c;
            for (std::size_t i = 0; i < fields.size(); ++i) {
                auto v = unescape_tsv(fields[i]);
                switch (columns[i]) {
                    case ClaimColumn::Id: c.id = std::move(v); break;
                    case ClaimColumn::VerClaim: c.ver_claim = std::move(v); break;
                    case ClaimColumn::Title: c.title = std::move(v); break;
                    case ClaimColumn::Body: c.body = std::move(v); break;
                    case ClaimColumn::TruthValue: c.truth_value = std::move(v); break;
                    case ClaimColumn::Unknown: break;
                }
            }
            add(std::move(c));
        }
    }
    if (in.bad()) throw IoError("read failure on " + source);
    if (claims.empty() && warnings) warnings->push_back(source + ": no verified claims found");
    return VerifiedClaimStore(std::move(claims));
}

VerifiedClaimStore load_verified_claims(const std::filesystem::path& path, ClaimFormat format,
                                        std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open claims file: " + path.string());
    return parse_verified_claims(in, format, path.string(), warnings);
}

void write_verified_claims(const VerifiedClaimStore& store, std::ostream& out) {
    for (const auto& c : store) {
        json obj = {{"id", c.id}, {"ver_claim", c.ver_claim}, {"title", c.title}, {"body", c.body},
                    {"truth_value", c.truth_value}};
        out << obj.dump() << '\n';
    }
}

void save_verified_claims(const VerifiedClaimStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write claims file: " + path.string());
    write_verified_claims(store, out);
    if (!out) throw IoError("write failure on " + path.string());
}

PairSet::PairSet(std::vector<InputClaim> inputs, std::vector<ClaimPair> pairs, const VerifiedClaimStore& claims) {
    std::map<std::string, std::string> texts;
    for (auto& in : inputs) {
        if (blank(in.id)) throw ValidationError("input claim without id");
        if (blank(in.text)) throw ValidationError("empty text for input claim '" + in.id + "'");
        auto [it, inserted] = texts.emplace(in.id, in.text);
        if (!inserted && it->second != in.text)
            throw ValidationError("input claim '" + in.id + "' appears with two different texts");
    }
    for (auto& [id, text] : texts) inputs_.push_back({id, std::move(text)});

    for (auto& p : pairs) {
        if (!texts.count(p.input_id)) throw ValidationError("pair references unknown input id '" + p.input_id + "'");
        if (!claims.find(p.verified_id))
            throw ValidationError("dangling reference: pair (" + p.input_id + ", " + p.verified_id +
                                  ") names unknown verified id '" + p.verified_id + "'");
        relevant_[p.input_id].insert(p.verified_id);
    }
    pairs_ = std::move(pairs);
    std::sort(pairs_.begin(), pairs_.end());
}

const InputClaim* PairSet::find_input(std::string_view id) const {
    auto it = std::lower_bound(inputs_.begin(), inputs_.end(), id,
                               [](const InputClaim& c, std::string_view key) { return c.id < key; });
    return (it != inputs_.end() && it->id == id) ? &*it : nullptr;
}

const std::set<std::string>& PairSet::relevant(std::string_view input_id) const {
    auto it = relevant_.find(input_id);
    return it == relevant_.end() ? kNoRelevant : it->second;
}

bool PairSet::is_relevant(std::string_view input_id, std::string_view verified_id) const {
    const auto& rel = relevant(input_id);
    return rel.find(std::string(verified_id)) != rel.end();
}

std::size_t PairSet::distinct_verified() const {
    std::set<std::string_view> ids;
    for (const auto& p : pairs_) ids.insert(p.verified_id);
    return ids.size();
}

PairSet PairSet::merge(const PairSet& a, const PairSet& b, const VerifiedClaimStore& claims) {
    auto inputs = a.inputs_;
    inputs.insert(inputs.end(), b.inputs_.begin(), b.inputs_.end());
    auto pairs = a.pairs_;
    pairs.insert(pairs.end(), b.pairs_.begin(), b.pairs_.end());
    return PairSet(std::move(inputs), std::move(pairs), claims);
}

PairSet parse_pairs(std::istream& in, const VerifiedClaimStore& claims, const std::string& source, bool json_lines) {
    std::vector<InputClaim> inputs;
    std::vector<ClaimPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    std::vector<PairColumn> columns{PairColumn::InputId, PairColumn::VerifiedId, PairColumn::InputText};
    bool first = true;

    auto add = [&](std::string input_id, std::string verified_id, std::string text) {
        if (blank(input_id)) throw ParseError(source, line_no, "missing input id");
        if (blank(verified_id)) throw ParseError(source, line_no, "missing verified id");
        if (blank(text)) throw ParseError(source, line_no, "empty input text for '" + input_id + "'");
        if (!claims.find(verified_id))
            throw ParseError(source, line_no, "dangling reference to unknown verified id '" + verified_id + "'");
        inputs.push_back({input_id, std::move(text)});
        pairs.push_back({std::move(input_id), std::move(verified_id)});
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        if (json_lines) {
            json obj;
            try {
                obj = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
            }
            if (!obj.is_object()) throw ParseError(source, line_no, "expected a JSON object");
            std::string iid, vid, text;
            for (const auto& [key, value] : obj.items()) {
                switch (pair_column(key)) {
                    case PairColumn::InputId: iid = json_string(value, source, line_no); break;
                    case PairColumn::VerifiedId: vid = json_string(value, source, line_no); break;
                    case PairColumn::InputText: text = json_string(value, source, line_no); break;
                    case PairColumn::Unknown: break;
                }
            }
            add(std::move(iid), std::move(vid), std::move(text));
            continue;
        }
        auto fields = split_tabs(line);
        if (first) {
            first = false;
            if (!fields.empty() && pair_column(fields[0]) != PairColumn::Unknown) {
                columns.clear();
                for (const auto& f : fields) columns.push_back(pair_column(f));
                continue;
            }
        }
        if (fields.size() < columns.size())
            throw ParseError(source, line_no,
                             "expected " + std::to_string(columns.size()) + " columns, got " +
                                 std::to_string(fields.size()));
        std::string iid, vid, text;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            auto v = unescape_tsv(fields[i]);
            switch (columns[i]) {
                case PairColumn::InputId: iid = std::move(v); break;
                case PairColumn::VerifiedId: vid = std::move(v); break;
                case PairColumn::InputText: text = std::move(v); break;
                case PairColumn::Unknown: break;
            }
        }
        add(std::move(iid), std::move(vid), std::move(text));
    }
    if (in.bad()) throw IoError("read failure on " + source);
    try {
        return PairSet(std::move(inputs), std::move(pairs), claims);
    } catch (const ValidationError& e) {
        throw ParseError(source, 0, e.what());
    }
}

PairSet load_pairs(const std::filesystem::path& path, const VerifiedClaimStore& claims) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open pairs file: " + path.string());
    const auto ext = lower(path.extension().string());
    return parse_pairs(in, claims, path.string(), ext == ".jsonl" || ext == ".json");
}

void write_pairs_tsv(const PairSet& pairs, std::ostream& out) {
    out << "input_id\tverified_id\tinput_text\n";
    for (const auto& p : pairs.pairs()) {
        const auto* input = pairs.find_input(p.input_id);
        out << escape_tsv(p.input_id) << '\t' << escape_tsv(p.verified_id) << '\t' << escape_tsv(input->text)
            << '\n';
    }
}

DatasetSplit make_split(const PairSet& train, const PairSet& test) {
    DatasetSplit split;
    for (const auto& in : train.inputs()) split.train.insert(in.id);
    for (const auto& in : test.inputs()) split.test.insert(in.id);
    return split;
}

bool ValidationReport::passed() const {
    return issues.empty() && std::all_of(counts.begin(), counts.end(), [](const auto& e) { return e.ok(); });
}

std::string ValidationReport::format() const {
    std::ostringstream out;
    out << "check\texpected\tactual\tdelta\tstatus\n";
    for (const auto& e : counts) {
        out << e.name << '\t' << e.expected << '\t' << e.actual << '\t' << (e.delta() > 0 ? "+" : "") << e.delta()
            << '\t' << (e.ok() ? "ok" : "MISMATCH") << '\n';
    }
    for (const auto& issue : issues) out << "issue: " << issue << '\n';
    out << (passed() ? "PASS" : "FAIL") << '\n';
    return out.str();
}

ValidationReport validate_dataset(const VerifiedClaimStore& claims, const PairSet& pairs, const DatasetSplit& split,
                                  const ExpectedCounts& expected) {
    ValidationReport report;
    std::size_t train_pairs = 0;
    std::size_t test_pairs = 0;
    for (const auto& p : pairs.pairs()) {
        if (split.train.count(p.input_id)) ++train_pairs;
        if (split.test.count(p.input_id)) ++test_pairs;
    }
    auto check = [&](const char* name, const std::optional<std::size_t>& want, std::size_t actual) {
        if (want) report.counts.push_back({name, *want, actual});
    };
    check("verified_claims", expected.claims, claims.size());
    check("pairs", expected.pairs, pairs.size());
    check("train_pairs", expected.train, train_pairs);
    check("test_pairs", expected.test, test_pairs);

    for (const auto& id : split.train)
        if (split.test.count(id)) report.issues.push_back("input claim '" + id + "' is in both train and test");
    for (const auto& in : pairs.inputs())
        if (!split.train.count(in.id) && !split.test.count(in.id))
            report.issues.push_back("input claim '" + in.id + "' is in neither split");
    for (const auto* part : {&split.train, &split.test})
        for (const auto& id : *part)
            if (!pairs.find_input(id)) report.issues.push_back("split names unpaired input claim '" + id + "'");
    return report;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("manifest not found: " + path.string());
    auto cfg = KeyValueConfig::load(path);
    DatasetManifest m;
    m.name = cfg.get_or("name", path.stem().string());
    auto require = [&](const char* key) {
        auto v = cfg.get(key);
        if (!v) throw ParseError(path.string(), 0, std::string("manifest is missing '") + key + "'");
        return cfg.resolve_path(*v);
    };
    m.claims = require("claims");
    m.claims_format = cfg.contains("claims_format") ? parse_claim_format(*cfg.get("claims_format"))
                                                    : claim_format_from_path(m.claims);
    m.pairs_train = require("pairs_train");
    m.pairs_test = require("pairs_test");
    auto count = [&](const char* key) -> std::optional<std::size_t> {
        if (!cfg.contains(key)) return std::nullopt;
        auto v = cfg.get_int(key, 0);
        if (v < 0) throw ParseError(path.string(), 0, std::string("negative count for '") + key + "'");
        return static_cast<std::size_t>(v);
    };
    m.expected.claims = count("expected.claims");
    m.expected.pairs = count("expected.pairs");
    m.expected.train = count("expected.train");
    m.expected.test = count("expected.test");
    return m;
}

Dataset load_dataset(const DatasetManifest& manifest) {
    for (const auto* p : {&manifest.claims, &manifest.pairs_train, &manifest.pairs_test})
        if (!std::filesystem::exists(*p)) throw IoError("missing dataset file: " + p->string());
    Dataset ds;
    ds.name = manifest.name;
    ds.claims = load_verified_claims(manifest.claims, manifest.claims_format, &ds.warnings);
    ds.train = load_pairs(manifest.pairs_train, ds.claims);
    ds.test = load_pairs(manifest.pairs_test, ds.claims);
    ds.all = PairSet::merge(ds.train, ds.test, ds.claims);
    ds.split = make_split(ds.train, ds.test);
    return ds;
}

}  // namespace claimrank
