#include "claimrank/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "claimrank/error.hpp"
#include "claimrank/textproc.hpp"

namespace claimrank {

using json = nlohmann::json;

QueryContext QueryContext::make(std::string id, std::string text, std::vector<float> vector) {
    QueryContext q;
    q.id = std::move(id);
    q.tokens = tokenize(text);
    q.text = std::move(text);
    q.vector = std::move(vector);
    return q;
}

std::vector<double> ScoreSource::score_all(const QueryContext& query) const {
    std::vector<double> out(doc_count());
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = score(query, d);
    return out;
}

double Bm25Source::score(const QueryContext& query, std::size_t doc) const { return index_.score(query.tokens, doc); }

std::vector<double> Bm25Source::score_all(const QueryContext& query) const { return index_.score_all(query.tokens); }

Bm25SumSource::Bm25SumSource(std::string name, std::vector<const InvertedIndex*> indexes)
    : name_(std::move(name)), indexes_(std::move(indexes)) {
    if (indexes_.empty()) throw std::invalid_argument("score-sum source needs at least one index");
}

double Bm25SumSource::score(const QueryContext& query, std::size_t doc) const {
    double s = 0.0;
    for (const auto* idx : indexes_) s += idx->score(query.tokens, doc);
    return s;
}

std::vector<double> Bm25SumSource::score_all(const QueryContext& query) const {
    return score_sum_all(indexes_, query.tokens);
}

CosineSource::CosineSource(std::string name, const EmbeddingStore& store, VectorField field,
                           const VerifiedClaimStore& claims)
    : name_(std::move(name)), store_(store) {
    rows_.reserve(claims.size());
    for (const auto& c : claims) {
        auto r = store.field_row(c.id, field);
        if (!r)
            throw ValidationError("source " + name_ + ": no " + std::string(vector_field_name(field)) +
                                  " vector for claim '" + c.id + "'");
        rows_.push_back(*r);
    }
}

namespace {

double norm_of(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

void require_vector(const QueryContext& q, const EmbeddingStore& store, const std::string& source) {
    if (q.vector.empty()) throw MissingArtifactError("source " + source + " needs a query vector for '" + q.id + "'");
    if (q.vector.size() != store.dim())
        throw std::invalid_argument("query vector dim " + std::to_string(q.vector.size()) + " != store dim " +
                                    std::to_string(store.dim()));
}

}  // namespace

double CosineSource::score(const QueryContext& query, std::size_t doc) const {
    require_vector(query, store_, name_);
    return cosine_to_row(query.vector, norm_of(query.vector), store_, rows_.at(doc));
}

std::vector<double> CosineSource::score_all(const QueryContext& query) const {
    require_vector(query, store_, name_);
    const double qn = norm_of(query.vector);
    std::vector<double> out(rows_.size());
    for (std::size_t d = 0; d < rows_.size(); ++d) out[d] = cosine_to_row(query.vector, qn, store_, rows_[d]);
    return out;
}

MlpSource::MlpSource(std::string name, const MlpModel& model, const EmbeddingStore& store,
                     const VerifiedClaimStore& claims, std::size_t body_sentences, std::size_t max_sentences)
    : name_(std::move(name)), model_(model), store_(store), claims_(claims), body_sentences_(body_sentences),
      max_sentences_(max_sentences) {
    if (model.input_dim() != 2 + body_sentences)
        throw std::invalid_argument("MLP expects " + std::to_string(model.input_dim()) + " features but n = " +
                                    std::to_string(body_sentences) + " gives " + std::to_string(2 + body_sentences));
}

std::vector<double> MlpSource::features(const QueryContext& query, std::size_t doc) const {
    require_vector(query, store_, name_);
    return body_sentence_scores(query.vector, claims_[doc].id, store_, body_sentences_, max_sentences_).features();
}

double MlpSource::score(const QueryContext& query, std::size_t doc) const {
    const auto f = features(query, doc);
    return model_.score(std::span<const double>(f));
}

RankedList rank_with_source(const ScoreSource& source, const QueryContext& query, const VerifiedClaimStore& claims,
                            std::size_t top_n) {
    if (top_n == 0) throw std::invalid_argument("top_n must be >= 1");
    const auto scores = source.score_all(query);
    RankedList list;
    list.reserve(scores.size());
    for (std::size_t d = 0; d < scores.size(); ++d) {
        if (source.drops_non_positive() && !(scores[d] > 0.0)) continue;
        list.push_back({claims[d].id, scores[d]});
    }
    sort_and_truncate(list, top_n);
    return list;
}

std::vector<FeatureVector> candidate_features(const QueryContext& query, std::span<const std::size_t> candidates,
                                              std::span<const ScoreSource* const> sources, ReciprocalRankMode mode) {
    const std::size_t width = 2 * sources.size();
    std::vector<FeatureVector> out(candidates.size(), FeatureVector(width, 0.0));
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const auto& src = *sources[s];
        const bool drops = src.drops_non_positive();
        auto present = [drops](double v) { return !drops || v > 0.0; };
        // ties ordered by store index, which is id order
        auto before = [](double sa, std::size_t da, double sb, std::size_t db) {
            return sa != sb ? sa > sb : da < db;
        };

        std::vector<double> scores(candidates.size());
        if (mode == ReciprocalRankMode::Global) {
            const auto all = src.score_all(query);
            for (std::size_t i = 0; i < candidates.size(); ++i) scores[i] = all.at(candidates[i]);
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                out[i][2 * s] = scores[i];
                if (!present(scores[i])) continue;
                std::size_t rank = 1;
                for (std::size_t d = 0; d < all.size(); ++d)
                    if (present(all[d]) && before(all[d], d, scores[i], candidates[i])) ++rank;
                out[i][2 * s + 1] = 1.0 / static_cast<double>(rank);
            }
            continue;
        }
        for (std::size_t i = 0; i < candidates.size(); ++i) scores[i] = src.score(query, candidates[i]);
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (present(scores[i])) order.push_back(i);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return before(scores[a], candidates[a], scores[b], candidates[b]);
        });
        for (std::size_t i = 0; i < candidates.size(); ++i) out[i][2 * s] = scores[i];
        for (std::size_t r = 0; r < order.size(); ++r) out[order[r]][2 * s + 1] = 1.0 / static_cast<double>(r + 1);
    }
    return out;
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    if (x.size() != y.size()) throw std::invalid_argument("rbf_kernel: length mismatch");
    if (!(gamma > 0.0)) throw std::invalid_argument("rbf_kernel: gamma must be > 0");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

Standardizer Standardizer::fit(std::span<const FeatureVector> rows) {
    Standardizer s;
    if (rows.empty()) return s;
    const std::size_t dim = rows.front().size();
    s.mean.assign(dim, 0.0);
    s.stddev.assign(dim, 0.0);
    for (const auto& r : rows) {
        if (r.size() != dim) throw std::invalid_argument("inconsistent feature lengths");
        for (std::size_t j = 0; j < dim; ++j) s.mean[j] += r[j];
    }
    const double n = static_cast<double>(rows.size());
    for (auto& m : s.mean) m /= n;
    for (const auto& r : rows)
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = r[j] - s.mean[j];
            s.stddev[j] += d * d;
        }
    for (auto& sd : s.stddev) {
        sd = std::sqrt(sd / n);
        if (!(sd > 1e-12)) sd = 1.0;
    }
    return s;
}

FeatureVector Standardizer::apply(std::span<const double> x) const {
    if (x.size() != mean.size())
        throw std::invalid_argument("expected " + std::to_string(mean.size()) + " features, got " +
                                    std::to_string(x.size()));
    FeatureVector out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / stddev[j];
    return out;
}

RankSvmModel::RankSvmModel(Standardizer standardizer, double gamma, double c, std::vector<FeatureVector> support_vectors,
                           std::vector<SupportPair> pairs, std::vector<std::string> sources)
    : standardizer_(std::move(standardizer)), gamma_(gamma), c_(c), support_(std::move(support_vectors)),
      pairs_(std::move(pairs)), sources_(std::move(sources)) {
    beta_.assign(support_.size(), 0.0);
    for (const auto& p : pairs_) {
        if (p.positive >= support_.size() || p.negative >= support_.size())
            throw std::invalid_argument("support pair references a missing support vector");
        beta_[p.positive] += p.alpha;
        beta_[p.negative] -= p.alpha;
    }
}

double RankSvmModel::score(std::span<const double> raw_features) const {
    const auto x = standardizer_.apply(raw_features);
    double f = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i)
        if (beta_[i] != 0.0) f += beta_[i] * rbf_kernel(x, support_[i], gamma_);
    return f;
}

namespace {

// Columns K(., x_j) over all training vectors, computed on demand and kept
// within a memory budget with FIFO eviction.
class KernelCache {
public:
    KernelCache(const std::vector<FeatureVector>& vectors, double gamma, std::size_t budget_bytes)
        : vectors_(vectors), gamma_(gamma), rows_(vectors.size()) {
        const std::size_t row_bytes = std::max<std::size_t>(1, vectors.size() * sizeof(double));
        capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
    }

    const std::vector<double>& row(std::size_t j) {
        if (rows_[j].empty()) {
            if (fifo_.size() >= capacity_) {
                std::vector<double>().swap(rows_[fifo_.front()]);
                fifo_.pop_front();
            }
            auto& r = rows_[j];
            r.resize(vectors_.size());
            for (std::size_t i = 0; i < vectors_.size(); ++i) r[i] = rbf_kernel(vectors_[i], vectors_[j], gamma_);
            fifo_.push_back(j);
        }
        return rows_[j];
    }

private:
    const std::vector<FeatureVector>& vectors_;
    double gamma_;
    std::size_t capacity_;
    std::vector<std::vector<double>> rows_;
    std::deque<std::size_t> fifo_;
};

}  // namespace

RankSvmModel train_ranksvm(std::span<const RankingList> lists, const RankSvmConfig& config,
                           std::vector<std::string> sources) {
    if (!(config.c > 0.0)) throw std::invalid_argument("RankSVM C must be > 0");
    std::vector<FeatureVector> raw;
    for (const auto& l : lists) {
        if (l.features.size() != l.labels.size()) throw std::invalid_argument("list '" + l.query_id + "': label count mismatch");
        raw.insert(raw.end(), l.features.begin(), l.features.end());
    }
    if (raw.empty()) throw ValidationError("RankSVM training set is empty");
    const auto standardizer = Standardizer::fit(raw);
    const std::size_t dim = standardizer.mean.size();
    if (!sources.empty() && 2 * sources.size() != dim)
        throw std::invalid_argument("source list does not match feature length");
    const double gamma = config.gamma > 0.0 ? config.gamma : 1.0 / static_cast<double>(dim);

    std::vector<FeatureVector> vectors;
    vectors.reserve(raw.size());
    struct Pair {
        std::size_t pos, neg;
    };
    std::vector<Pair> pairs;
    RankSvmDiagnostics diag;
    for (const auto& l : lists) {
        const std::size_t base = vectors.size();
        for (const auto& f : l.features) vectors.push_back(standardizer.apply(f));
        for (std::size_t i = 0; i < l.labels.size(); ++i) {
            if (!l.labels[i]) continue;
            for (std::size_t j = 0; j < l.labels.size(); ++j) {
                if (l.labels[j]) continue;
                if (vectors[base + i] == vectors[base + j]) {
                    ++diag.degenerate_pairs;
                    continue;
                }
                pairs.push_back({base + i, base + j});
            }
        }
    }
    if (pairs.empty()) throw ValidationError("no usable training pairs: no list has both a positive and a negative");
    diag.pairs = pairs.size();

    KernelCache cache(vectors, gamma, config.cache_megabytes << 20);
    std::vector<double> f(vectors.size(), 0.0);  // current decision value per training vector
    std::vector<double> alpha(pairs.size(), 0.0);
    std::vector<double> qdiag(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p)
        qdiag[p] = 2.0 - 2.0 * rbf_kernel(vectors[pairs[p].pos], vectors[pairs[p].neg], gamma);

    const double c = config.c;
    auto violation = [&](std::size_t p) {
        const double g = 1.0 - (f[pairs[p].pos] - f[pairs[p].neg]);
        if (g > 0.0 && alpha[p] < c) return g;
        if (g < 0.0 && alpha[p] > 0.0) return -g;
        return 0.0;
    };

    while (true) {
        std::size_t best = 0;
        double worst = -1.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const double v = violation(p);
            if (v > worst) {
                worst = v;
                best = p;
            }
        }
        diag.max_violation = worst;
        if (worst < config.tolerance) {
            diag.converged = true;
            break;
        }
        if (diag.iterations >= config.max_iterations) break;
        ++diag.iterations;

        const auto& pr = pairs[best];
        const double g = 1.0 - (f[pr.pos] - f[pr.neg]);
        const double next = std::clamp(alpha[best] + g / std::max(qdiag[best], 1e-12), 0.0, c);
        const double delta = next - alpha[best];
        if (delta == 0.0) continue;
        alpha[best] = next;
        const auto& kp = cache.row(pr.pos);
        const auto& kn = cache.row(pr.neg);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += delta * (kp[i] - kn[i]);
    }

    // dual objective: sum(alpha) - 1/2 sum_p alpha_p (f(x+_p) - f(x-_p))
    double dual = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p)
        dual += alpha[p] - 0.5 * alpha[p] * (f[pairs[p].pos] - f[pairs[p].neg]);
    diag.dual_objective = dual;

    std::map<std::size_t, std::uint32_t> sv_index;
    std::vector<FeatureVector> support;
    std::vector<SupportPair> support_pairs;
    auto intern = [&](std::size_t v) {
        auto [it, inserted] = sv_index.emplace(v, static_cast<std::uint32_t>(support.size()));
        if (inserted) support.push_back(vectors[v]);
        return it->second;
    };
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (alpha[p] <= 0.0) continue;
        const auto pos = intern(pairs[p].pos);
        const auto neg = intern(pairs[p].neg);
        support_pairs.push_back({pos, neg, alpha[p]});
    }
    RankSvmModel model(standardizer, gamma, c, std::move(support), std::move(support_pairs), std::move(sources));
    model.diagnostics = diag;
    return model;
}

RankedList rerank(const RankSvmModel& model, const RankedList& base, std::span<const FeatureVector> features) {
    if (features.size() > base.size()) throw std::invalid_argument("more feature rows than candidates");
    RankedList head;
    head.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != model.feature_count())
            throw std::invalid_argument("feature/source mismatch: model expects " +
                                        std::to_string(model.feature_count()) + " features, got " +
                                        std::to_string(features[i].size()));
        head.push_back({base[i].doc_id, model.score(features[i])});
    }
    std::sort(head.begin(), head.end(), ranks_before);
    head.insert(head.end(), base.begin() + static_cast<std::ptrdiff_t>(features.size()), base.end());
    return head;
}

namespace {

double list_mrr(const RankSvmModel& model, std::span<const RankingList> lists) {
    if (lists.empty()) return 0.0;
    double total = 0.0;
    for (const auto& l : lists) {
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t i = 0; i < l.features.size(); ++i) scored.push_back({model.score(l.features[i]), i});
        std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : l.doc_ids[a.second] < l.doc_ids[b.second];
        });
        for (std::size_t r = 0; r < scored.size(); ++r)
            if (l.labels[scored[r].second]) {
                total += 1.0 / static_cast<double>(r + 1);
                break;
            }
    }
    return total / static_cast<double>(lists.size());
}

bool has_pair(const RankingList& l) {
    bool pos = false, neg = false;
    for (auto y : l.labels) (y ? pos : neg) = true;
    return pos && neg;
}

}  // namespace

GridSearchResult grid_search_ranksvm(std::span<const RankingList> lists, std::span<const double> gammas,
                                     std::span<const double> cs, std::size_t folds, RankSvmConfig base) {
    if (folds < 2) throw std::invalid_argument("grid search needs at least 2 folds");
    if (gammas.empty() || cs.empty()) throw std::invalid_argument("empty grid");
    GridSearchResult result;
    result.best.mrr = -1.0;
    for (double gamma : gammas) {
        for (double c : cs) {
            auto cfg = base;
            cfg.gamma = gamma;
            cfg.c = c;
            double sum = 0.0;
            std::size_t used = 0;
            for (std::size_t k = 0; k < folds; ++k) {
                std::vector<RankingList> train, held;
                for (std::size_t i = 0; i < lists.size(); ++i) (i % folds == k ? held : train).push_back(lists[i]);
                if (held.empty() || std::none_of(train.begin(), train.end(), has_pair)) continue;
                sum += list_mrr(train_ranksvm(train, cfg), held);
                ++used;
            }
            GridPoint point{gamma, c, used ? sum / static_cast<double>(used) : 0.0};
            result.points.push_back(point);
            if (point.mrr > result.best.mrr) result.best = point;
        }
    }
    return result;
}

void RankSvmModel::save(const std::filesystem::path& path) const {
    json j;
    j["format"] = "claimrank-ranksvm";
    j["version"] = 1;
    j["gamma"] = gamma_;
    j["c"] = c_;
    j["sources"] = sources_;
    j["mean"] = standardizer_.mean;
    j["stddev"] = standardizer_.stddev;
    j["support_vectors"] = support_;
    json pairs = json::array();
    for (const auto& p : pairs_) pairs.push_back({p.positive, p.negative, p.alpha});
    j["pairs"] = std::move(pairs);
    j["diagnostics"] = {{"pairs", diagnostics.pairs},
                        {"degenerate_pairs", diagnostics.degenerate_pairs},
                        {"iterations", diagnostics.iterations},
                        {"converged", diagnostics.converged},
                        {"max_violation", diagnostics.max_violation},
                        {"dual_objective", diagnostics.dual_objective}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file: " + path.string());
    out << j.dump() << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

RankSvmModel RankSvmModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("format").get<std::string>() != "claimrank-ranksvm")
            throw ParseError(path.string(), 0, "not a RankSVM model");
        Standardizer s{j.at("mean").get<std::vector<double>>(), j.at("stddev").get<std::vector<double>>()};
        std::vector<SupportPair> pairs;
        for (const auto& p : j.at("pairs"))
            pairs.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>(), p.at(2).get<double>()});
        RankSvmModel m(std::move(s), j.at("gamma").get<double>(), j.at("c").get<double>(),
                       j.at("support_vectors").get<std::vector<FeatureVector>>(), std::move(pairs),
                       j.at("sources").get<std::vector<std::string>>());
        const auto& d = j.at("diagnostics");
        m.diagnostics.pairs = d.at("pairs").get<std::size_t>();
        m.diagnostics.degenerate_pairs = d.at("degenerate_pairs").get<std::size_t>();
        m.diagnostics.iterations = d.at("iterations").get<std::size_t>();
        m.diagnostics.converged = d.at("converged").get<bool>();
        m.diagnostics.max_violation = d.at("max_violation").get<double>();
        m.diagnostics.dual_objective = d.at("dual_objective").get<double>();
        return m;
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, std::string("malformed model: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

}  // namespace claimrank
