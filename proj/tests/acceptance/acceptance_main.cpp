// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exit status is
// non-zero when any criterion fails.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <thread>

#include "claimrank/article_scorer.hpp"
#include "claimrank/bm25.hpp"
#include "claimrank/engine.hpp"
#include "claimrank/eval.hpp"
#include "claimrank/rerank.hpp"
#include "claimrank/server.hpp"
#include "claimrank/textproc.hpp"
#include "cli.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace claimrank;

namespace {

// Pinned tolerances and budgets.
constexpr double kMetricTolerance = 1e-9;
constexpr double kBm25Tolerance = 1e-10;
constexpr double kGradientTolerance = 1e-4;
constexpr double kRerankMargin = 0.05;
constexpr double kHistogramBand = 0.10;
constexpr double kLatencyBudgetMs = 100.0;
constexpr double kMetricBudgetS = 5.0;
constexpr double kBm25BudgetS = 5.0;
constexpr double kGradientBudgetS = 10.0;
constexpr double kPipelineBudgetS = 180.0;
constexpr double kMarginBudgetS = 30.0;
constexpr double kHistogramBudgetS = 60.0;

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome timed(bool ok, double elapsed, double budget, std::string detail) {
    detail += ", " + fmt("%.2f", elapsed) + " s (budget " + fmt("%.0f", budget) + " s)";
    return {ok && elapsed < budget ? Status::Pass : Status::Fail, detail};
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240501);
    const std::vector<std::size_t> map_k{1, 3, 5, 10, 20, kAllRanks};
    const std::vector<std::size_t> hp_k{1, 3, 5, 10, 20, 50};
    double worst = 0.0;
    std::size_t compared = 0;
    for (int inst = 0; inst < 500; ++inst) {
        const std::size_t docs = 1 + rng() % 30;
        const std::size_t queries = 1 + rng() % 6;
        Run run;
        Qrels qrels;
        for (std::size_t q = 0; q < queries; ++q) {
            const std::string qid = "q" + std::to_string(q);
            std::vector<std::string> pool;
            for (std::size_t d = 0; d < docs; ++d) pool.push_back("d" + std::to_string(d));
            std::shuffle(pool.begin(), pool.end(), rng);
            const std::size_t depth = rng() % (docs + 1);
            std::set<std::string> rel;
            const std::size_t nrel = 1 + rng() % 5;
            for (std::size_t r = 0; r < nrel; ++r) rel.insert("d" + std::to_string(rng() % (docs + 3)));
            qrels[qid] = rel;
            if (rng() % 10) run[qid] = std::vector<std::string>(pool.begin(), pool.begin() + depth);
        }
        for (auto normalizer : {ApNormalizer::MinRelevantK, ApNormalizer::Relevant}) {
            EvalOptions opt;
            opt.normalizer = normalizer;
            const auto report = evaluate_run(run, qrels, opt);
            double mrr = 0.0;
            std::vector<double> map(map_k.size(), 0.0), hp(hp_k.size(), 0.0);
            for (const auto& [qid, rel] : qrels) {
                const auto it = run.find(qid);
                const std::vector<std::string> ranking = it == run.end() ? std::vector<std::string>{} : it->second;
                mrr += oracle::reciprocal_rank(ranking, rel);
                for (std::size_t i = 0; i < map_k.size(); ++i)
                    map[i] += oracle::average_precision(ranking, rel, map_k[i], normalizer == ApNormalizer::Relevant);
                for (std::size_t i = 0; i < hp_k.size(); ++i) hp[i] += oracle::has_positives(ranking, rel, hp_k[i]);
            }
            const double n = static_cast<double>(qrels.size());
            worst = std::max(worst, std::abs(report.mrr - mrr / n));
            for (std::size_t i = 0; i < map_k.size(); ++i) worst = std::max(worst, std::abs(report.map[i] - map[i] / n));
            for (std::size_t i = 0; i < hp_k.size(); ++i)
                worst = std::max(worst, std::abs(report.has_positives[i] - hp[i] / n));
            compared += 1 + map_k.size() + hp_k.size();
        }
    }
    return timed(worst <= kMetricTolerance, seconds_since(t0), kMetricBudgetS,
                 "500 instances, " + std::to_string(compared) + " aggregate values, max |diff| " + fmt("%.1e", worst));
}

Outcome bm25_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    double worst = 0.0;
    std::size_t prefix_checks = 0, prefix_failures = 0, scores = 0;
    for (int corpus = 0; corpus < 60; ++corpus) {
        const std::size_t n = 1 + rng() % 50;
        const std::size_t vocab = 3 + rng() % 15;
        std::vector<std::string> ids, texts;
        std::vector<std::vector<std::string>> docs;
        for (std::size_t d = 0; d < n; ++d) {
            char id[8];
            std::snprintf(id, sizeof id, "d%03zu", d);
            ids.push_back(id);
            std::vector<std::string> toks;
            const std::size_t len = rng() % 12;
            std::string text;
            for (std::size_t j = 0; j < len; ++j) {
                toks.push_back("t" + std::to_string(rng() % vocab));
                text += (j ? " " : "") + toks.back();
            }
            docs.push_back(toks);
            texts.push_back(text);
        }
        const Bm25Params params{0.5 + (rng() % 100) / 50.0, (rng() % 101) / 100.0};
        const auto index = InvertedIndex::build(ids, texts, Field::Body, params);
        for (int qi = 0; qi < 10; ++qi) {
            std::vector<std::string> query;
            const std::size_t qlen = 1 + rng() % 10;
            for (std::size_t j = 0; j < qlen; ++j) query.push_back("t" + std::to_string(rng() % (vocab + 2)));
            for (std::size_t d = 0; d < n; ++d) {
                worst = std::max(worst, std::abs(index.score(query, d) - oracle::bm25(docs, d, query, params.k1, params.b)));
                ++scores;
            }
            const auto full = index.retrieve_tokens(query, n + 2);
            for (std::size_t a = 1; a <= n + 2; ++a) {
                const auto shorter = index.retrieve_tokens(query, a);
                for (std::size_t m = a; m <= n + 2; m += std::max<std::size_t>(1, n / 7)) {
                    const auto longer = m == n + 2 ? full : index.retrieve_tokens(query, m);
                    ++prefix_checks;
                    if (shorter.size() > longer.size() || !std::equal(shorter.begin(), shorter.end(), longer.begin()))
                        ++prefix_failures;
                }
            }
        }
    }
    return timed(worst <= kBm25Tolerance && prefix_failures == 0, seconds_since(t0), kBm25BudgetS,
                 std::to_string(scores) + " scores, max |diff| " + fmt("%.1e", worst) + ", " +
                     std::to_string(prefix_checks) + " prefix checks, " + std::to_string(prefix_failures) +
                     " failures");
}

Outcome mlp_gradient() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    std::size_t checked = 0, kinks = 0;
    for (int draw = 0; draw < 100; ++draw) {
        const std::size_t in = 2 + rng() % 7;
        std::vector<std::size_t> hidden{1 + rng() % 20, 1 + rng() % 10};
        auto model = MlpModel::initialize(in, rng(), hidden);
        // Non-zero biases so the check also covers them.
        auto params = model.parameters();
        for (auto& p : params) p += 0.1 * u(rng);
        model.set_parameters(params);
        std::vector<double> x(in);
        for (auto& v : x) v = u(rng);
        const auto r = mlp_gradient_check(model, x, static_cast<double>(rng() % 2), 0.5 + (rng() % 100) / 50.0);
        worst = std::max(worst, r.max_relative_error);
        checked += r.checked;
        kinks += r.skipped_kinks;
    }
    return timed(worst < kGradientTolerance, seconds_since(t0), kGradientBudgetS,
                 "100 draws, " + std::to_string(checked) + " parameters, " + std::to_string(kinks) +
                     " kink-straddling skipped, max rel err " + fmt("%.2e", worst));
}

double stage_mrr(const Engine& engine, const std::string& stage, std::size_t depth) {
    Run run;
    for (const auto& in : engine.dataset().test.inputs())
        run[in.id] = doc_ids(engine.rank(engine.query_for_input(in), stage, depth));
    return evaluate_run(run, engine.dataset().test.qrels()).mrr;
}

Outcome synthetic_pipeline() {
    const auto t0 = Clock::now();
    synth::CorpusSpec spec;
    const auto corpus = synth::generate(spec);
    const auto dir = synth::scratch_dir("acceptance-pipeline");
    const auto files = synth::write_dataset(corpus, dir);
    {
        std::ofstream cfg(dir / "pipeline.cfg");
        cfg << "manifest = manifest.cfg\nworkspace = ws\nseed = 11\n"
            << "embed.vectors = vectors.bin\n"
            << "mlp.n = 4\nmlp.negative_ratio = 0.25\n"
            << "rerank.base = bm25:title+verclaim+body\nrerank.depth = 50\n"
            << "rerank.sources = bm25:title, bm25:verclaim, bm25:body, mlp\n";
    }
    Engine engine(PipelineConfig::load(dir / "pipeline.cfg"));
    engine.train_mlp();
    const auto svm = engine.train_rerank();

    std::string best_stage;
    double best = -1.0;
    std::string detail;
    for (const auto& stage : engine.available_stages()) {
        if (stage == "rerank") continue;
        const double mrr = stage_mrr(engine, stage, 100);
        detail += stage + " " + fmt("%.3f", mrr) + "; ";
        if (mrr > best) {
            best = mrr;
            best_stage = stage;
        }
    }
    const double reranked = stage_mrr(engine, "rerank", 100);
    std::filesystem::remove_all(dir);
    return timed(reranked >= best + kRerankMargin, seconds_since(t0), kPipelineBudgetS,
                 "rerank@50 MRR " + fmt("%.3f", reranked) + " vs best single " + best_stage + " " +
                     fmt("%.3f", best) + " (needs +" + fmt("%.2f", kRerankMargin) + "); " + detail +
                     std::to_string(svm.diagnostics.pairs) + " training pairs" +
                     (svm.diagnostics.converged ? "" : ", solver hit iteration cap"));
}

Outcome ranksvm_margin() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::vector<double> w{1.5, -1.0, 0.5};
    const double w_norm2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    constexpr double kGap = 1.0;
    auto make_list = [&](int q) {
        RankingList list;
        list.query_id = "q" + std::to_string(q);
        const std::size_t n = 8 + rng() % 8;
        std::vector<double> utility;
        for (std::size_t i = 0; i < n; ++i) {
            FeatureVector x{g(rng), g(rng), g(rng)};
            list.doc_ids.push_back("d" + std::to_string(i));
            list.features.push_back(x);
            utility.push_back(w[0] * x[0] + w[1] * x[1] + w[2] * x[2]);
        }
        // The top-utility candidate is relevant; a gap keeps the set separable.
        const auto best = static_cast<std::size_t>(std::max_element(utility.begin(), utility.end()) - utility.begin());
        list.labels.assign(n, 0);
        list.labels[best] = 1;
        for (std::size_t i = 0; i < n; ++i)
            if (i != best && utility[i] > utility[best] - kGap) {
                const double shift = (utility[i] - utility[best] + kGap) / w_norm2;
                for (std::size_t f = 0; f < w.size(); ++f) list.features[i][f] -= shift * w[f];
            }
        return list;
    };
    std::vector<RankingList> train, test;
    for (int q = 0; q < 80; ++q) train.push_back(make_list(q));
    for (int q = 0; q < 20; ++q) test.push_back(make_list(100 + q));
    RankSvmConfig cfg;
    cfg.c = 10.0;
    cfg.gamma = 0.05;
    const auto model = train_ranksvm(train, cfg);
    std::size_t pairs = 0, violated = 0;
    for (const auto& l : train)
        for (std::size_t i = 0; i < l.labels.size(); ++i)
            for (std::size_t j = 0; j < l.labels.size(); ++j)
                if (l.labels[i] && !l.labels[j]) {
                    ++pairs;
                    if (!(model.score(l.features[i]) > model.score(l.features[j]))) ++violated;
                }
    Run run;
    Qrels qrels;
    for (const auto& l : test) {
        RankedList base;
        for (const auto& d : l.doc_ids) base.push_back({d, 0.0});
        run[l.query_id] = doc_ids(rerank(model, base, l.features));
        for (std::size_t i = 0; i < l.labels.size(); ++i)
            if (l.labels[i]) qrels[l.query_id].insert(l.doc_ids[i]);
    }
    const double mrr = evaluate_run(run, qrels).mrr;
    return timed(violated == 0 && mrr == 1.0, seconds_since(t0), kMarginBudgetS,
                 std::to_string(pairs - violated) + "/" + std::to_string(pairs) +
                     " training pairs with positive margin, held-out MRR " + fmt("%.3f", mrr));
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const std::filesystem::path cfg = std::filesystem::path(CLAIMRANK_TEST_DATA) / "data/tiny/pipeline.cfg";
    const auto dir = synth::scratch_dir("acceptance-determinism");
    std::vector<std::vector<std::string>> outputs;
    std::string failure;
    for (int pass = 0; pass < 2; ++pass) {
        const auto ws = dir / ("ws" + std::to_string(pass));
        const std::vector<std::string> base{"--config", cfg.string(), "--set", "workspace=" + ws.string()};
        auto run_cli = [&](std::vector<std::string> extra) {
            auto args = base;
            args.insert(args.end(), extra.begin(), extra.end());
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            if (code != 0 && failure.empty()) failure = extra.front() + " exited " + std::to_string(code) + ": " + err.str();
            return out.str();
        };
        run_cli({"train", "mlp"});
        run_cli({"train", "rerank"});
        std::vector<std::string> got;
        for (const std::string stage : {"bm25", "embed", "mlp", "rerank"}) {
            const auto run = (ws / ("run_" + stage + ".txt")).string();
            run_cli({"rank", "--split", "test", "--stage", stage, "--run", run});
            got.push_back(slurp(run));
            got.push_back(run_cli({"eval", "--run", run, "--split", "test", "--csv", (ws / "report.csv").string(),
                                   "--per-query", (ws / "per_query.csv").string()}));
            got.push_back(slurp(ws / "report.csv"));
            got.push_back(slurp(ws / "per_query.csv"));
        }
        got.push_back(slurp(ws / "mlp_model.json"));
        got.push_back(slurp(ws / "ranksvm_model.json"));
        outputs.push_back(std::move(got));
    }
    std::filesystem::remove_all(dir);
    if (!failure.empty()) return {Status::Fail, failure};
    std::size_t differing = 0, bytes = 0;
    for (std::size_t i = 0; i < outputs[0].size(); ++i) {
        differing += outputs[0][i] != outputs[1][i];
        bytes += outputs[0][i].size();
    }
    return {differing == 0 && bytes > 0 ? Status::Pass : Status::Fail,
            std::to_string(outputs[0].size()) + " artifacts (" + std::to_string(bytes) + " bytes) compared, " +
                std::to_string(differing) + " differ"};
}

Outcome histogram_reproduction() {
    const char* manifest = std::getenv("CLAIMRANK_POLITIFACT_MANIFEST");
    if (!manifest || !*manifest)
        return {Status::Skip, "set CLAIMRANK_POLITIFACT_MANIFEST to the released PolitiFact manifest to run"};
    const auto t0 = Clock::now();
    const auto ds = load_dataset(DatasetManifest::load(manifest));
    const std::vector<double> thresholds{0.75, 0.50, 0.25};
    const std::vector<double> expected{55, 128, 201};
    const auto rows = similarity_histogram(ds.all, ds.claims, thresholds);
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double rel = std::abs(static_cast<double>(rows[i].count) - expected[i]) / expected[i];
        ok = ok && rel <= kHistogramBand;
        detail += fmt("t=%.2f ", rows[i].threshold) + std::to_string(rows[i].count) + " vs " +
                  fmt("%.0f", expected[i]) + "; ";
    }
    return timed(ok, seconds_since(t0), kHistogramBudgetS, detail + "band " + fmt("%.0f%%", kHistogramBand * 100));
}

Outcome directional() {
    const char* config = std::getenv("CLAIMRANK_REPLICATION_CONFIG");
    if (!config || !*config)
        return {Status::Skip, "set CLAIMRANK_REPLICATION_CONFIG to a pipeline config over a released dataset to run"};
    Engine engine(PipelineConfig::load(config));
    if (!std::filesystem::exists(engine.mlp_model_path())) engine.train_mlp();
    if (!std::filesystem::exists(engine.rerank_model_path())) engine.train_rerank();
    double best = -1.0;
    std::string best_stage;
    for (const auto& stage : engine.available_stages()) {
        if (stage.rfind("bm25:", 0) != 0) continue;
        const double mrr = stage_mrr(engine, stage, 100);
        if (mrr > best) {
            best = mrr;
            best_stage = stage;
        }
    }
    const double reranked = stage_mrr(engine, "rerank", 100);
    return {reranked > best ? Status::Pass : Status::Fail,
            "rerank MRR " + fmt("%.3f", reranked) + " vs best IR " + best_stage + " " + fmt("%.3f", best)};
}

Outcome serving_latency() {
    synth::CorpusSpec spec;
    spec.claims = 20000;
    spec.queries = 50;
    spec.train_queries = 25;
    spec.sentences_per_body = 3;
    auto corpus = synth::generate(spec);
    corpus.vectors = EmbeddingStore();
    const auto dir = synth::scratch_dir("acceptance-serving");
    synth::write_dataset(corpus, dir);
    {
        std::ofstream cfg(dir / "pipeline.cfg");
        cfg << "manifest = manifest.cfg\nworkspace = ws\nembed.hash_dim = 256\nembed.max_sentences = 1\n"
            << "bm25.fields = verclaim\nrerank.base = bm25:verclaim\nrerank.sources = bm25:verclaim\n";
    }
    Engine engine(PipelineConfig::load(dir / "pipeline.cfg"));
    RankServer server(engine);
    const int port = server.bind_any_port("127.0.0.1");
    if (port <= 0) return {Status::Fail, "could not bind a local port"};
    std::thread worker([&] { server.listen_after_bind(); });
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(10, 0);

    std::string detail;
    bool ok = true;
    for (const std::string stage : {"bm25", "embed"}) {
        std::vector<double> ms;
        std::size_t errors = 0;
        for (std::size_t i = 0; i < corpus.queries.size(); ++i) {
            const nlohmann::json body{{"text", corpus.queries[i].text}, {"top_k", 10}, {"stage", stage}};
            const auto t0 = Clock::now();
            auto res = client.Post("/rank", body.dump(), "application/json");
            ms.push_back(seconds_since(t0) * 1000.0);
            if (!res || res->status != 200) ++errors;
        }
        std::nth_element(ms.begin(), ms.begin() + ms.size() / 2, ms.end());
        const double median = ms[ms.size() / 2];
        ok = ok && errors == 0 && median < kLatencyBudgetMs;
        detail += stage + " median " + fmt("%.2f", median) + " ms (" + std::to_string(errors) + " errors); ";
    }
    server.stop();
    worker.join();
    std::filesystem::remove_all(dir);
    return {ok ? Status::Pass : Status::Fail,
            detail + "20000 claims, " + std::to_string(corpus.queries.size()) + " requests per stage, budget " +
                fmt("%.0f", kLatencyBudgetMs) + " ms"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"metric-oracle-equivalence", metric_oracle},
        {"bm25-oracle-equivalence", bm25_oracle},
        {"mlp-gradient-check", mlp_gradient},
        {"synthetic-pipeline-rerank-gain", synthetic_pipeline},
        {"ranksvm-margin", ranksvm_margin},
        {"determinism", determinism},
        {"tfidf-histogram-reproduction", histogram_reproduction},
        {"directional-replication", directional},
        {"serving-latency", serving_latency},
    };
    const std::string only = argc > 1 ? argv[1] : "";
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        if (!only.empty() && name != only) continue;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {Status::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
        failures += o.status == Status::Fail;
        std::cout << tag << "  " << name << "  " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
