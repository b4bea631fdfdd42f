#include "claimrank/engine.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "claimrank/error.hpp"
#include "claimrank/textproc.hpp"

namespace claimrank {

namespace {

std::vector<std::size_t> parse_cutoffs(const std::vector<std::string>& items) {
    std::vector<std::size_t> out;
    for (const auto& s : items) out.push_back(parse_cutoff(s));
    return out;
}

std::size_t positive_size(const KeyValueConfig& cfg, std::string_view key, std::size_t fallback) {
    const auto v = cfg.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ValidationError("config key '" + std::string(key) + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

bool is_bm25(std::string_view name) { return name.rfind("bm25:", 0) == 0; }

}  // namespace

PipelineConfig PipelineConfig::from_config(const KeyValueConfig& cfg) {
    PipelineConfig pc;
    auto manifest = cfg.get("manifest");
    if (!manifest) throw ValidationError("config is missing 'manifest'");
    pc.manifest = cfg.resolve_path(*manifest);
    pc.workspace = cfg.resolve_path(cfg.get_or("workspace", "workspace"));
    pc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 42));

    pc.bm25.k1 = cfg.get_double("bm25.k1", pc.bm25.k1);
    pc.bm25.b = cfg.get_double("bm25.b", pc.bm25.b);
    if (cfg.contains("bm25.fields")) {
        pc.fields.clear();
        for (const auto& f : cfg.get_list("bm25.fields", {})) pc.fields.push_back(parse_field(f));
    }
    const auto combination = cfg.get_or("bm25.combination", "concat");
    if (combination == "concat") pc.combination = FieldCombination::Concatenate;
    else if (combination == "sum") pc.combination = FieldCombination::ScoreSum;
    else throw ValidationError("bm25.combination must be concat or sum");

    if (auto v = cfg.get("embed.vectors"); v && !v->empty()) pc.vectors = cfg.resolve_path(*v);
    if (cfg.contains("embed.dim")) pc.vector_dim = positive_size(cfg, "embed.dim", 0);
    pc.hash_dim = positive_size(cfg, "embed.hash_dim", 0);
    pc.max_sentences = positive_size(cfg, "embed.max_sentences", 0);

    pc.mlp_sentences = positive_size(cfg, "mlp.n", pc.mlp_sentences);
    pc.mlp.epochs = static_cast<int>(cfg.get_int("mlp.epochs", pc.mlp.epochs));
    pc.mlp.batch_size = positive_size(cfg, "mlp.batch_size", pc.mlp.batch_size);
    pc.mlp.learning_rate = cfg.get_double("mlp.learning_rate", pc.mlp.learning_rate);
    pc.mlp.class_weighting = cfg.get_bool("mlp.class_weighting", true);
    pc.mlp_negative_ratio = cfg.get_double("mlp.negative_ratio", pc.mlp_negative_ratio);
    pc.mlp.seed = pc.seed;

    pc.rerank_base = cfg.get_or("rerank.base", pc.rerank_base);
    pc.rerank_depth = positive_size(cfg, "rerank.depth", pc.rerank_depth);
    pc.rerank_sources = cfg.get_list("rerank.sources", pc.rerank_sources);
    pc.svm.gamma = cfg.get_double("rerank.gamma", 0.0);
    pc.svm.c = cfg.get_double("rerank.c", pc.svm.c);
    pc.svm.tolerance = cfg.get_double("rerank.tolerance", pc.svm.tolerance);
    pc.svm.max_iterations = positive_size(cfg, "rerank.max_iterations", pc.svm.max_iterations);
    const auto rr = cfg.get_or("rerank.rr", "pool");
    if (rr == "pool") pc.rr_mode = ReciprocalRankMode::Pool;
    else if (rr == "global") pc.rr_mode = ReciprocalRankMode::Global;
    else throw ValidationError("rerank.rr must be pool or global");

    if (cfg.contains("eval.map_cutoffs")) pc.eval.map_cutoffs = parse_cutoffs(cfg.get_list("eval.map_cutoffs", {}));
    if (cfg.contains("eval.has_positives_cutoffs"))
        pc.eval.has_positives_cutoffs = parse_cutoffs(cfg.get_list("eval.has_positives_cutoffs", {}));
    const auto norm = cfg.get_or("eval.normalizer", "min");
    if (norm == "min") pc.eval.normalizer = ApNormalizer::MinRelevantK;
    else if (norm == "relevant") pc.eval.normalizer = ApNormalizer::Relevant;
    else throw ValidationError("eval.normalizer must be min or relevant");

    pc.rank_stage = cfg.get_or("rank.stage", pc.rank_stage);
    pc.rank_depth = positive_size(cfg, "rank.depth", pc.rank_depth);
    return pc;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    auto cfg = KeyValueConfig::load(path);
    for (const auto& o : overrides) cfg.apply_override(o);
    return from_config(cfg);
}

void PipelineConfig::validate() const {
    if (!std::filesystem::exists(manifest)) throw IoError("manifest not found: " + manifest.string());
    if (vectors && !std::filesystem::exists(*vectors)) throw IoError("vector file not found: " + vectors->string());
    if (!(bm25.k1 > 0.0)) throw ValidationError("bm25.k1 must be > 0");
    if (!(bm25.b >= 0.0 && bm25.b <= 1.0)) throw ValidationError("bm25.b must be in [0, 1]");
    if (hash_dim != 0 && hash_dim < 8) throw ValidationError("embed.hash_dim must be 0 or >= 8");
    if (mlp_sentences == 0) throw ValidationError("mlp.n must be >= 1");
    if (mlp.epochs < 1) throw ValidationError("mlp.epochs must be >= 1");
    if (mlp.batch_size < 1) throw ValidationError("mlp.batch_size must be >= 1");
    if (!(mlp.learning_rate > 0.0)) throw ValidationError("mlp.learning_rate must be > 0");
    if (!(mlp_negative_ratio > 0.0 && mlp_negative_ratio <= 1.0))
        throw ValidationError("mlp.negative_ratio must be in (0, 1]");
    if (rerank_depth < 1) throw ValidationError("rerank.depth must be >= 1");
    if (rank_depth < 1) throw ValidationError("rank.depth must be >= 1");
    if (!(svm.c > 0.0)) throw ValidationError("rerank.c must be > 0");
    if (rerank_sources.empty()) throw ValidationError("rerank.sources must not be empty");
    for (const auto& s : rerank_sources) {
        if (is_bm25(s)) {
            parse_field(s.substr(5));
        } else if (s != "embed:verclaim" && s != "embed:title" && s != "mlp") {
            throw ValidationError("unknown rerank source '" + s + "'");
        }
    }
    if (eval.map_cutoffs.empty() || eval.has_positives_cutoffs.empty())
        throw ValidationError("metric cutoff lists must not be empty");
}

Engine::Engine(PipelineConfig config) : config_(std::move(config)) {
    config_.validate();
    dataset_ = load_dataset(DatasetManifest::load(config_.manifest));
    if (dataset_.claims.empty()) throw ValidationError("dataset has no verified claims");
    build_indexes();
    load_vectors();
    load_models();
    rebuild_sources();
}

std::string Engine::canonical_stage(std::string_view stage) const {
    if (stage == "bm25") return "bm25:verclaim";
    if (stage == "embed") return "embed:verclaim";
    if (is_bm25(stage)) return "bm25:" + std::string(field_name(parse_field(stage.substr(5))));
    return std::string(stage);
}

void Engine::build_indexes() {
    std::set<Field> wanted(config_.fields.begin(), config_.fields.end());
    auto want_name = [&](const std::string& name) {
        if (is_bm25(name)) wanted.insert(parse_field(name.substr(5)));
    };
    want_name(canonical_stage(config_.rerank_base));
    want_name(canonical_stage(config_.rank_stage));
    for (const auto& s : config_.rerank_sources) want_name(canonical_stage(s));
    if (config_.combination == FieldCombination::ScoreSum) {
        std::set<Field> expanded;
        for (auto f : wanted) {
            if (f == Field::TitleVerClaim || f == Field::TitleVerClaimBody) {
                expanded.insert(Field::Title);
                expanded.insert(Field::VerClaim);
                if (f == Field::TitleVerClaimBody) expanded.insert(Field::Body);
            } else {
                expanded.insert(f);
            }
        }
        wanted = std::move(expanded);
    }
    for (auto f : wanted) {
        const auto path = index_path(f);
        if (std::filesystem::exists(path)) {
            try {
                auto idx = InvertedIndex::load(path);
                bool same = idx.field() == f && idx.params().k1 == config_.bm25.k1 &&
                            idx.params().b == config_.bm25.b && idx.doc_count() == dataset_.claims.size();
                for (std::size_t d = 0; same && d < idx.doc_count(); ++d)
                    same = idx.doc_id(d) == dataset_.claims[d].id;
                if (same) {
                    indexes_[f] = std::make_unique<InvertedIndex>(std::move(idx));
                    continue;
                }
                dataset_.warnings.push_back("stale index " + path.string() + " ignored; rebuilding");
            } catch (const Error& e) {
                dataset_.warnings.push_back(std::string("unreadable index ignored: ") + e.what());
            }
        }
        indexes_[f] = std::make_unique<InvertedIndex>(InvertedIndex::build(dataset_.claims, f, config_.bm25));
    }
}

void Engine::load_vectors() {
    if (config_.vectors) {
        vectors_ = std::make_unique<EmbeddingStore>(import_vectors(*config_.vectors, config_.vector_dim));
        hash_vectors_ = vectors_->encoder_id() == "hash-" + std::to_string(vectors_->dim());
    } else if (config_.hash_dim > 0) {
        vectors_ = std::make_unique<EmbeddingStore>(
            hash_embed_claims(dataset_.claims, config_.hash_dim, config_.max_sentences));
        hash_embed_inputs(*vectors_, dataset_.all);
        hash_vectors_ = true;
    }
}

void Engine::load_models() {
    if (std::filesystem::exists(mlp_model_path())) {
        auto a = load_mlp(mlp_model_path());
        if (a.model.input_dim() != 2 + config_.mlp_sentences)
            throw ValidationError("MLP model " + mlp_model_path().string() + " expects " +
                                  std::to_string(a.model.input_dim()) + " features but mlp.n = " +
                                  std::to_string(config_.mlp_sentences));
        mlp_ = std::make_unique<MlpArtifact>(std::move(a));
    }
    if (std::filesystem::exists(rerank_model_path()))
        ranksvm_ = std::make_unique<RankSvmModel>(RankSvmModel::load(rerank_model_path()));
}

void Engine::rebuild_sources() {
    sources_.clear();
    for (const auto& [field, idx] : indexes_) {
        auto name = "bm25:" + std::string(field_name(field));
        sources_[name] = std::make_unique<Bm25Source>(name, *idx);
    }
    if (config_.combination == FieldCombination::ScoreSum) {
        for (auto f : config_.fields) {
            if (f != Field::TitleVerClaim && f != Field::TitleVerClaimBody) continue;
            std::vector<const InvertedIndex*> parts{indexes_.at(Field::Title).get(), indexes_.at(Field::VerClaim).get()};
            if (f == Field::TitleVerClaimBody) parts.push_back(indexes_.at(Field::Body).get());
            auto name = "bm25:" + std::string(field_name(f));
            sources_[name] = std::make_unique<Bm25SumSource>(name, std::move(parts));
        }
    }
    if (vectors_) {
        for (auto [name, field] : {std::pair{"embed:verclaim", VectorField::VerClaim},
                                   std::pair{"embed:title", VectorField::Title}}) {
            try {
                sources_[name] = std::make_unique<CosineSource>(name, *vectors_, field, dataset_.claims);
            } catch (const ValidationError& e) {
                dataset_.warnings.push_back(e.what());
            }
        }
        if (mlp_)
            sources_["mlp"] = std::make_unique<MlpSource>("mlp", mlp_->model, *vectors_, dataset_.claims,
                                                          config_.mlp_sentences, config_.max_sentences);
    }
}

const InvertedIndex& Engine::index(Field field) const {
    auto it = indexes_.find(field);
    if (it == indexes_.end()) throw MissingArtifactError("no BM25 index for field " + std::string(field_name(field)));
    return *it->second;
}

QueryContext Engine::query_for_input(const InputClaim& input) const {
    std::vector<float> vec;
    if (vectors_) {
        if (auto r = vectors_->field_row(input.id, VectorField::Input)) {
            auto v = vectors_->row(*r);
            vec.assign(v.begin(), v.end());
        } else if (hash_vectors_) {
            vec = to_float(hash_embed(input.text, vectors_->dim()));
        }
    }
    return QueryContext::make(input.id, input.text, std::move(vec));
}

QueryContext Engine::query_for_text(std::string id, std::string text, std::vector<float> vector) const {
    if (vector.empty() && vectors_ && hash_vectors_) vector = to_float(hash_embed(text, vectors_->dim()));
    return QueryContext::make(std::move(id), std::move(text), std::move(vector));
}

std::vector<std::string> Engine::available_stages() const {
    std::vector<std::string> out;
    for (const auto& [name, src] : sources_) out.push_back(name);
    if (ranksvm_) out.push_back("rerank");
    return out;
}

bool Engine::has_source(std::string_view name) const { return sources_.find(canonical_stage(name)) != sources_.end(); }

const ScoreSource& Engine::source(std::string_view name) const {
    const auto canon = canonical_stage(name);
    auto it = sources_.find(canon);
    if (it != sources_.end()) return *it->second;
    if (canon == "mlp") throw MissingArtifactError("stage mlp needs a trained model: run `claimrank train mlp` first");
    if (canon.rfind("embed:", 0) == 0 || canon == "mlp")
        throw MissingArtifactError("stage " + canon + " needs vectors: set embed.vectors or embed.hash_dim");
    if (is_bm25(canon)) throw MissingArtifactError("no index for " + canon + " (add it to bm25.fields)");
    throw std::invalid_argument("unknown stage or source '" + std::string(name) + "'");
}

RankedList Engine::rank(const QueryContext& query, std::string_view stage, std::size_t top_k) const {
    if (top_k == 0) throw std::invalid_argument("top_k must be >= 1");
    if (stage != "rerank") return rank_with_source(source(stage), query, dataset_.claims, top_k);

    if (!ranksvm_)
        throw MissingArtifactError("stage rerank needs a trained model: run `claimrank train rerank` first");
    std::vector<const ScoreSource*> srcs;
    for (const auto& name : ranksvm_->sources()) srcs.push_back(&source(name));
    const auto& base_source = source(config_.rerank_base);
    auto base = rank_with_source(base_source, query, dataset_.claims, std::max(config_.rerank_depth, top_k));
    const std::size_t depth = std::min(config_.rerank_depth, base.size());
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < depth; ++i) candidates.push_back(*dataset_.claims.index_of(base[i].doc_id));
    const auto features = candidate_features(query, candidates, srcs, config_.rr_mode);
    auto out = claimrank::rerank(*ranksvm_, base, features);
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

std::map<std::string, double> Engine::source_scores(const QueryContext& query, std::string_view doc_id) const {
    std::map<std::string, double> out;
    const auto idx = dataset_.claims.index_of(doc_id);
    if (!idx) throw std::out_of_range("unknown doc id '" + std::string(doc_id) + "'");
    for (const auto& [name, src] : sources_) {
        const bool needs_vector = name.rfind("embed:", 0) == 0 || name == "mlp";
        if (needs_vector && query.vector.empty()) continue;
        out[name] = src->score(query, *idx);
    }
    return out;
}

namespace {

std::string file_safe(std::string_view name) {
    std::string s(name);
    std::replace(s.begin(), s.end(), '+', '_');
    return s;
}

}  // namespace

std::filesystem::path Engine::index_path(Field field) const {
    return config_.workspace / ("bm25_" + file_safe(field_name(field)) + ".json");
}
std::filesystem::path Engine::mlp_model_path() const { return config_.workspace / "mlp_model.json"; }
std::filesystem::path Engine::mlp_log_path() const { return config_.workspace / "mlp_train_log.csv"; }
std::filesystem::path Engine::rerank_model_path() const { return config_.workspace / "ranksvm_model.json"; }

std::vector<std::filesystem::path> Engine::save_indexes() const {
    std::filesystem::create_directories(config_.workspace);
    std::vector<std::filesystem::path> written;
    for (const auto& [field, idx] : indexes_) {
        idx->save(index_path(field));
        written.push_back(index_path(field));
    }
    return written;
}

MlpTrainSummary Engine::train_mlp() {
    if (!vectors_) throw MissingArtifactError("MLP training needs vectors: set embed.vectors or embed.hash_dim");
    std::unordered_map<std::string, std::vector<float>> query_vectors;
    for (const auto& in : dataset_.train.inputs()) {
        auto q = query_for_input(in);
        if (q.vector.empty()) throw MissingArtifactError("no vector for training input claim '" + in.id + "'");
        query_vectors.emplace(in.id, std::move(q.vector));
    }
    const auto& store = *vectors_;
    const std::size_t n = config_.mlp_sentences;
    const std::size_t cap = config_.max_sentences;
    PairFeatureFn features = [&](const InputClaim& input, const VerifiedClaim& claim) {
        return body_sentence_scores(query_vectors.at(input.id), claim.id, store, n, cap).features();
    };
    const auto data = generate_training_pairs(dataset_.train.inputs(), dataset_.claims, dataset_.train, features,
                                              {config_.mlp_negative_ratio, config_.seed});
    auto result = claimrank::train_mlp(data, config_.mlp);

    std::filesystem::create_directories(config_.workspace);
    MlpArtifact artifact{result.model, config_.mlp, result.weights, n};
    save_mlp(artifact, mlp_model_path());
    {
        std::ofstream log(mlp_log_path(), std::ios::binary);
        if (!log) throw IoError("cannot write " + mlp_log_path().string());
        log << format_training_log(result.log);
    }
    mlp_ = std::make_unique<MlpArtifact>(std::move(artifact));
    rebuild_sources();
    return {data.rows(), data.positives(), result.log, mlp_model_path()};
}

std::vector<RankingList> Engine::rerank_lists(const PairSet& pairs) const {
    std::vector<const ScoreSource*> srcs;
    for (const auto& name : config_.rerank_sources) srcs.push_back(&source(name));
    const auto& base_source = source(config_.rerank_base);
    std::vector<RankingList> lists;
    for (const auto& in : pairs.inputs()) {
        const auto q = query_for_input(in);
        const auto base = rank_with_source(base_source, q, dataset_.claims, config_.rerank_depth);
        if (base.empty()) continue;
        RankingList list;
        list.query_id = in.id;
        std::vector<std::size_t> candidates;
        for (const auto& e : base) {
            candidates.push_back(*dataset_.claims.index_of(e.doc_id));
            list.doc_ids.push_back(e.doc_id);
            list.labels.push_back(pairs.is_relevant(in.id, e.doc_id) ? 1 : 0);
        }
        list.features = candidate_features(q, candidates, srcs, config_.rr_mode);
        lists.push_back(std::move(list));
    }
    return lists;
}

RerankTrainSummary Engine::train_rerank() {
    std::vector<std::string> names;
    for (const auto& s : config_.rerank_sources) names.push_back(canonical_stage(s));
    for (const auto& n : names) (void)source(n);
    auto lists = rerank_lists(dataset_.train);
    RerankTrainSummary summary;
    summary.lists = lists.size();
    for (const auto& l : lists) {
        const bool pos = std::any_of(l.labels.begin(), l.labels.end(), [](auto y) { return y != 0; });
        const bool neg = std::any_of(l.labels.begin(), l.labels.end(), [](auto y) { return y == 0; });
        if (pos && neg) ++summary.lists_with_pairs;
    }
    auto model = train_ranksvm(lists, config_.svm, names);
    std::filesystem::create_directories(config_.workspace);
    model.save(rerank_model_path());
    summary.diagnostics = model.diagnostics;
    summary.model_path = rerank_model_path();
    ranksvm_ = std::make_unique<RankSvmModel>(std::move(model));
    return summary;
}

}  // namespace claimrank
