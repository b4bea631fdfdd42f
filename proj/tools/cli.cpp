#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "claimrank/engine.hpp"
#include "claimrank/error.hpp"
#include "claimrank/run_file.hpp"
#include "claimrank/server.hpp"
#include "claimrank/textproc.hpp"

namespace claimrank::cli {

namespace {

struct GlobalOptions {
    std::string config;
    std::vector<std::string> overrides;
};

PipelineConfig load_config(const GlobalOptions& g) {
    if (g.config.empty()) throw ValidationError("this command needs --config");
    return PipelineConfig::load(g.config, g.overrides);
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
}

std::ofstream open_output(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    return f;
}

const PairSet& split_pairs(const Dataset& ds, const std::string& split) {
    if (split == "train") return ds.train;
    if (split == "test") return ds.test;
    if (split == "all") return ds.all;
    throw ValidationError("split must be train, test or all");
}

std::vector<InputClaim> read_query_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open query file " + path);
    std::vector<InputClaim> queries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(path, lineno, "expected `id<TAB>text`");
        InputClaim q{line.substr(0, tab), line.substr(tab + 1)};
        if (q.id.empty() || trim(q.text).empty()) throw ParseError(path, lineno, "empty query id or text");
        queries.push_back(std::move(q));
    }
    return queries;
}

int cmd_ingest(const GlobalOptions& g, const std::string& manifest_arg, const std::string& workspace_arg,
               std::ostream& out, std::ostream& err) {
    std::filesystem::path manifest = manifest_arg;
    std::filesystem::path workspace = workspace_arg;
    if (manifest.empty() || (workspace.empty() && !g.config.empty())) {
        const auto pc = load_config(g);
        if (manifest.empty()) manifest = pc.manifest;
        if (workspace.empty()) workspace = pc.workspace;
    }
    if (!std::filesystem::exists(manifest)) throw IoError("manifest not found: " + manifest.string());
    const auto m = DatasetManifest::load(manifest);
    const auto ds = load_dataset(m);
    print_warnings(ds.warnings, err);
    const auto report = validate_dataset(ds.claims, ds.all, ds.split, m.expected);
    out << "dataset: " << (ds.name.empty() ? manifest.stem().string() : ds.name) << '\n' << report.format();
    if (!workspace.empty()) {
        std::filesystem::create_directories(workspace);
        save_verified_claims(ds.claims, workspace / "verified_claims.jsonl");
        auto train = open_output((workspace / "pairs_train.tsv").string());
        write_pairs_tsv(ds.train, train);
        auto test = open_output((workspace / "pairs_test.tsv").string());
        write_pairs_tsv(ds.test, test);
        auto rep = open_output((workspace / "validation_report.txt").string());
        rep << report.format();
    }
    return report.passed() ? kOk : kValidation;
}

int cmd_index(const GlobalOptions& g, std::ostream& out) {
    Engine engine(load_config(g));
    for (const auto& p : engine.save_indexes()) out << "wrote " << p.string() << '\n';
    return kOk;
}

struct ImportOptions {
    std::string in;
    std::string out;
    std::string encoding = "binary";
    std::size_t dim = 0;
    std::size_t hash_dim = 0;
};

int cmd_import_vectors(const GlobalOptions& g, const ImportOptions& o, std::ostream& out, std::ostream& err) {
    const auto encoding = o.encoding == "text" ? VectorEncoding::Text : VectorEncoding::Binary;
    if (o.encoding != "text" && o.encoding != "binary") throw ValidationError("--encoding must be binary or text");
    EmbeddingStore store;
    if (o.hash_dim > 0) {
        const auto pc = load_config(g);
        const auto ds = load_dataset(DatasetManifest::load(pc.manifest));
        print_warnings(ds.warnings, err);
        store = hash_embed_claims(ds.claims, o.hash_dim, pc.max_sentences);
        hash_embed_inputs(store, ds.all);
    } else {
        if (o.in.empty()) throw ValidationError("import-vectors needs --in or --hash-dim");
        store = import_vectors(o.in, o.dim ? std::optional<std::size_t>(o.dim) : std::nullopt);
        if (!g.config.empty()) {
            const auto pc = load_config(g);
            const auto ds = load_dataset(DatasetManifest::load(pc.manifest));
            std::size_t missing = 0;
            for (const auto& c : ds.claims)
                if (!store.field_row(c.id, VectorField::VerClaim)) ++missing;
            if (missing) err << "warning: " << missing << " verified claims have no verclaim vector\n";
        }
    }
    std::size_t by_field[4] = {0, 0, 0, 0};
    for (std::size_t r = 0; r < store.size(); ++r) ++by_field[static_cast<int>(store.key(r).field)];
    out << "encoder: " << store.encoder_id() << "\ndim: " << store.dim() << "\nrecords: " << store.size()
        << "\nverclaim: " << by_field[0] << "\ntitle: " << by_field[1] << "\nbody: " << by_field[2]
        << "\ninput: " << by_field[3] << '\n';
    if (!o.out.empty()) {
        export_vectors(store, o.out, encoding);
        out << "wrote " << o.out << '\n';
    }
    return kOk;
}

int cmd_analyze(const GlobalOptions& g, const std::string& split, const std::vector<double>& thresholds,
                const std::string& out_path, std::ostream& out, std::ostream& err) {
    const auto pc = load_config(g);
    const auto ds = load_dataset(DatasetManifest::load(pc.manifest));
    print_warnings(ds.warnings, err);
    const auto rows = similarity_histogram(split_pairs(ds, split), ds.claims, thresholds);
    const auto tsv = format_histogram_tsv(rows);
    out << tsv;
    if (!out_path.empty()) open_output(out_path) << tsv;
    return kOk;
}

int cmd_train(const GlobalOptions& g, const std::string& what, std::ostream& out) {
    Engine engine(load_config(g));
    if (what == "mlp") {
        const auto s = engine.train_mlp();
        out << "training rows: " << s.rows << " (positives " << s.positives << ")\n";
        if (!s.log.empty())
            out << "final epoch loss: " << s.log.back().weighted_loss << " accuracy: " << s.log.back().accuracy << '\n';
        out << "wrote " << s.model_path.string() << '\n' << "wrote " << engine.mlp_log_path().string() << '\n';
        return kOk;
    }
    if (what == "rerank") {
        const auto s = engine.train_rerank();
        out << "lists: " << s.lists << " (with pairs " << s.lists_with_pairs << ")\n"
            << "pairs: " << s.diagnostics.pairs << " degenerate: " << s.diagnostics.degenerate_pairs
            << " iterations: " << s.diagnostics.iterations << (s.diagnostics.converged ? "" : " (not converged)")
            << '\n'
            << "wrote " << s.model_path.string() << '\n';
        return kOk;
    }
    throw ValidationError("train expects mlp or rerank");
}

struct RankOptions {
    std::string query;
    std::string query_id = "query";
    std::string queries;
    std::string split;
    std::string stage;
    std::size_t top_k = 0;
    std::string run_out;
    std::string tag;
};

int cmd_rank(const GlobalOptions& g, const RankOptions& o, std::ostream& out) {
    Engine engine(load_config(g));
    const std::string stage = o.stage.empty() ? engine.config().rank_stage : o.stage;
    const std::size_t top_k = o.top_k ? o.top_k : engine.config().rank_depth;
    const std::string tag = o.tag.empty() ? "claimrank-" + stage : o.tag;
    const int modes = !o.query.empty() + !o.queries.empty() + !o.split.empty();
    if (modes != 1) throw ValidationError("rank needs exactly one of --query, --queries, --split");

    if (!o.query.empty()) {
        const auto q = engine.query_for_text(o.query_id, o.query);
        const auto ranked = engine.rank(q, stage, top_k);
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            const auto& c = *engine.claims().find(ranked[r].doc_id);
            char score[32];
            std::snprintf(score, sizeof score, "%.6f", ranked[r].score);
            out << (r + 1) << '\t' << c.id << '\t' << score << '\t' << c.ver_claim << '\n';
        }
        if (!o.run_out.empty()) {
            auto f = open_output(o.run_out);
            write_trec_run(f, q.id, ranked, tag);
        }
        return kOk;
    }

    std::vector<QueryContext> queries;
    if (!o.queries.empty()) {
        for (auto& in : read_query_file(o.queries)) {
            const auto* known = engine.dataset().all.find_input(in.id);
            queries.push_back(known && known->text == in.text ? engine.query_for_input(*known)
                                                              : engine.query_for_text(in.id, in.text));
        }
    } else {
        for (const auto& in : split_pairs(engine.dataset(), o.split).inputs()) queries.push_back(engine.query_for_input(in));
    }
    std::ostringstream run;
    for (const auto& q : queries) write_trec_run(run, q.id, engine.rank(q, stage, top_k), tag);
    if (o.run_out.empty()) out << run.str();
    else {
        open_output(o.run_out) << run.str();
        out << "wrote " << queries.size() << " queries to " << o.run_out << '\n';
    }
    return kOk;
}

struct EvalOpts {
    std::vector<std::string> runs;
    std::vector<std::string> names;
    std::string qrels;
    std::string split;
    std::string cutoffs;
    std::string normalizer;
    std::size_t depth = 0;
    std::string csv_out;
    std::string per_query_out;
};

int cmd_eval(const GlobalOptions& g, const EvalOpts& o, std::ostream& out, std::ostream& err) {
    EvalOptions options;
    std::optional<Dataset> ds;
    std::unordered_set<std::string> corpus;
    if (!g.config.empty()) {
        const auto pc = load_config(g);
        options = pc.eval;
        ds = load_dataset(DatasetManifest::load(pc.manifest));
        for (const auto& c : ds->claims) corpus.insert(c.id);
        options.corpus_ids = &corpus;
    }
    if (!o.cutoffs.empty()) {
        options.map_cutoffs.clear();
        for (const auto& s : split_list(o.cutoffs)) options.map_cutoffs.push_back(parse_cutoff(s));
    }
    if (o.normalizer == "relevant") options.normalizer = ApNormalizer::Relevant;
    else if (o.normalizer == "min") options.normalizer = ApNormalizer::MinRelevantK;
    else if (!o.normalizer.empty()) throw ValidationError("--normalizer must be min or relevant");

    Qrels qrels;
    if (!o.qrels.empty()) qrels = load_qrels(o.qrels);
    else if (!o.split.empty()) {
        if (!ds) throw ValidationError("--split needs --config");
        qrels = split_pairs(*ds, o.split).qrels();
    } else {
        throw ValidationError("eval needs --qrels or --split");
    }
    std::vector<MetricReport> reports;
    for (std::size_t i = 0; i < o.runs.size(); ++i) {
        const auto name = i < o.names.size() ? o.names[i] : std::filesystem::path(o.runs[i]).stem().string();
        reports.push_back(evaluate_run(load_trec_run(o.runs[i]), qrels, options, name));
        print_warnings(reports.back().warnings, err);
    }
    out << format_report_table(reports, o.depth ? std::optional<std::size_t>(o.depth) : std::nullopt);
    if (!o.csv_out.empty()) open_output(o.csv_out) << format_report_csv(reports);
    if (!o.per_query_out.empty()) {
        auto f = open_output(o.per_query_out);
        for (const auto& r : reports) f << format_per_query_csv(r);
    }
    return kOk;
}

int cmd_serve(const GlobalOptions& g, const std::string& host, int port, std::ostream& out) {
    Engine engine(load_config(g));
    RankServer server(engine);
    out << "serving " << engine.claims().size() << " claims on http://" << host << ':' << port << '\n'
        << std::flush;
    if (!server.listen(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"claimrank: retrieve previously fact-checked claims", "claimrank"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    app.add_option("-c,--config", g.config, "pipeline config file")->check(CLI::ExistingFile);
    app.add_option("--set", g.overrides, "override a config key (key=value); repeatable");

    std::string manifest, workspace;
    auto* ingest = app.add_subcommand("ingest", "load and validate a dataset");
    ingest->add_option("--manifest", manifest, "dataset manifest (defaults to the config's)");
    ingest->add_option("--workspace", workspace, "write canonical dataset files here");

    auto* index = app.add_subcommand("index", "build and save BM25 indexes");

    ImportOptions imp;
    auto* importv = app.add_subcommand("import-vectors", "validate, convert or generate a vector file");
    importv->add_option("--in", imp.in, "vector file to read");
    importv->add_option("--out", imp.out, "write the vectors here");
    importv->add_option("--encoding", imp.encoding, "output encoding: binary or text");
    importv->add_option("--dim", imp.dim, "expected dimension");
    importv->add_option("--hash-dim", imp.hash_dim, "generate hashed bag-of-words vectors of this dimension");

    std::string split = "all", hist_out;
    std::vector<double> thresholds{0.75, 0.50, 0.25};
    auto* analyze = app.add_subcommand("analyze", "TF.IDF cosine histogram of the gold pairs");
    analyze->add_option("--split", split, "train, test or all");
    analyze->add_option("--thresholds", thresholds, "thresholds")->delimiter(',');
    analyze->add_option("--out", hist_out, "also write the TSV here");

    std::string train_what;
    auto* train = app.add_subcommand("train", "train the article scorer or the re-ranker");
    train->add_option("model", train_what, "mlp or rerank")->required()->check(CLI::IsMember({"mlp", "rerank"}));

    RankOptions ro;
    auto* rank = app.add_subcommand("rank", "rank verified claims for queries");
    rank->add_option("--query", ro.query, "query text");
    rank->add_option("--query-id", ro.query_id, "id used for --query in the run file");
    rank->add_option("--queries", ro.queries, "TSV file of id<TAB>text queries");
    rank->add_option("--split", ro.split, "rank the input claims of a dataset split");
    rank->add_option("--stage", ro.stage, "bm25[:field] | embed[:verclaim|title] | mlp | rerank");
    rank->add_option("-k,--top-k", ro.top_k, "results per query");
    rank->add_option("--run", ro.run_out, "write a TREC run file here");
    rank->add_option("--tag", ro.tag, "run tag");

    EvalOpts eo;
    auto* eval = app.add_subcommand("eval", "score run files");
    eval->add_option("--run", eo.runs, "TREC run file; repeatable")->required();
    eval->add_option("--name", eo.names, "display name per run; repeatable");
    eval->add_option("--qrels", eo.qrels, "qrels file");
    eval->add_option("--split", eo.split, "use the gold pairs of a dataset split");
    eval->add_option("--cutoffs", eo.cutoffs, "MAP cutoffs, e.g. 1,3,5,10,20,all");
    eval->add_option("--normalizer", eo.normalizer, "min or relevant");
    eval->add_option("--depth", eo.depth, "ranking depth of the runs; deeper cutoffs print ---");
    eval->add_option("--csv", eo.csv_out, "write the summary CSV here");
    eval->add_option("--per-query", eo.per_query_out, "write per-query metrics here");

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "serve POST /rank and GET /health");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "port");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*ingest) return cmd_ingest(g, manifest, workspace, out, err);
        if (*index) return cmd_index(g, out);
        if (*importv) return cmd_import_vectors(g, imp, out, err);
        if (*analyze) return cmd_analyze(g, split, thresholds, hist_out, out, err);
        if (*train) return cmd_train(g, train_what, out);
        if (*rank) return cmd_rank(g, ro, out);
        if (*eval) return cmd_eval(g, eo, out, err);
        if (*serve) return cmd_serve(g, host, port, out);
    } catch (const MissingArtifactError& e) {
        err << "error: " << e.what() << '\n';
        return kMissingArtifact;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kValidation;
}

}  // namespace claimrank::cli
