#include "synthetic.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <unistd.h>

namespace synth {

namespace {

std::string word(const char* prefix, std::size_t i) {
    // Letters only so that no tokenizer rule treats the words specially.
    std::string w = prefix;
    do {
        w += static_cast<char>('a' + i % 26);
        i /= 26;
    } while (i);
    return w;
}

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

}  // namespace

Corpus generate(const CorpusSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    constexpr std::size_t kTopicWords = 6;
    constexpr std::size_t kFiller = 3000;
    const std::size_t topics = (spec.claims + spec.claims_per_topic - 1) / spec.claims_per_topic;

    auto topic_word = [&](std::size_t topic, std::size_t j) { return word("tp", topic * kTopicWords + j); };
    auto filler = [&]() { return word("fw", pick(kFiller)); };

    Corpus c;
    c.train_queries = spec.train_queries;
    std::vector<std::vector<std::string>> sentences(spec.claims);
    std::vector<std::string> unique(spec.claims);
    for (std::size_t i = 0; i < spec.claims; ++i) {
        const std::size_t topic = i / spec.claims_per_topic;
        claimrank::VerifiedClaim v;
        char id[32];
        std::snprintf(id, sizeof id, "vc%05zu", i);
        v.id = id;
        unique[i] = word("uq", i);
        std::string text = topic_word(topic, pick(kTopicWords));
        for (int j = 0; j < 3; ++j) text += " " + topic_word(topic, pick(kTopicWords));
        text += " " + unique[i];
        for (int j = 0; j < 3; ++j) text += " " + filler();
        v.ver_claim = capitalize(text) + ".";
        std::string title = topic_word(topic, pick(kTopicWords));
        for (int j = 0; j < 4; ++j) title += " " + filler();
        v.title = capitalize(title);
        for (std::size_t s = 0; s < spec.sentences_per_body; ++s) {
            std::string sent = filler();
            sent += " " + topic_word(topic, pick(kTopicWords));
            for (int j = 0; j < 6; ++j) sent += " " + filler();
            sentences[i].push_back(capitalize(sent) + ".");
            v.body += (s ? " " : "") + sentences[i].back();
        }
        v.truth_value = (i % 3 == 0) ? "true" : "false";
        c.claims.push_back(std::move(v));
    }

    c.vectors = claimrank::EmbeddingStore(spec.dim, "synthetic-planted");
    for (std::size_t i = 0; i < spec.claims; ++i) {
        const auto& v = c.claims[i];
        c.vectors.add({v.id, claimrank::VectorField::VerClaim, {}},
                      claimrank::to_float(claimrank::hash_embed(v.ver_claim, spec.dim)));
        c.vectors.add({v.id, claimrank::VectorField::Title, {}},
                      claimrank::to_float(claimrank::hash_embed(v.title, spec.dim)));
        for (std::size_t s = 0; s < sentences[i].size(); ++s)
            c.vectors.add({v.id, claimrank::VectorField::Body, static_cast<std::uint32_t>(s)},
                          claimrank::to_float(claimrank::hash_embed(sentences[i][s], spec.dim)));
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution with_unique(spec.unique_word_rate);
    for (std::size_t q = 0; q < spec.queries; ++q) {
        // Queries spread over distinct topics so the split never leaks a topic.
        const std::size_t topic = (q * 7919) % topics;
        const std::size_t target = std::min(topic * spec.claims_per_topic + pick(spec.claims_per_topic),
                                            spec.claims - 1);
        char id[32];
        std::snprintf(id, sizeof id, "q%04zu", q);
        std::string text = topic_word(target / spec.claims_per_topic, pick(kTopicWords));
        for (int j = 0; j < 2; ++j) text += " " + topic_word(target / spec.claims_per_topic, pick(kTopicWords));
        if (with_unique(rng)) text += " " + unique[target];
        for (int j = 0; j < 2; ++j) text += " " + filler();
        c.queries.push_back({id, text});
        c.targets.push_back(c.claims[target].id);

        const auto& sentence = sentences[target][pick(sentences[target].size())];
        auto signal = claimrank::hash_embed(sentence, spec.dim);
        const double scale = spec.noise / std::sqrt(static_cast<double>(spec.dim));
        double norm = 0.0;
        for (auto& x : signal) {
            x += scale * gauss(rng);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : signal) x /= norm;
        c.vectors.add({id, claimrank::VectorField::Input, {}}, claimrank::to_float(signal));
    }
    return c;
}

WrittenDataset write_dataset(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    claimrank::save_verified_claims(claimrank::VerifiedClaimStore(corpus.claims), dir / "claims.jsonl");
    auto write_pairs = [&](const std::filesystem::path& path, std::size_t from, std::size_t to) {
        std::ofstream out(path, std::ios::binary);
        out << "input_id\tverified_id\tinput_text\n";
        for (std::size_t q = from; q < to; ++q)
            out << corpus.queries[q].id << '\t' << corpus.targets[q] << '\t' << corpus.queries[q].text << '\n';
    };
    write_pairs(dir / "train.tsv", 0, corpus.train_queries);
    write_pairs(dir / "test.tsv", corpus.train_queries, corpus.queries.size());
    {
        std::ofstream m(dir / "manifest.cfg", std::ios::binary);
        m << "name = synthetic\nclaims = claims.jsonl\npairs_train = train.tsv\npairs_test = test.tsv\n"
          << "expected.claims = " << corpus.claims.size() << "\nexpected.pairs = " << corpus.queries.size()
          << "\nexpected.train = " << corpus.train_queries
          << "\nexpected.test = " << corpus.queries.size() - corpus.train_queries << '\n';
    }
    WrittenDataset out{dir / "manifest.cfg", {}};
    if (!corpus.vectors.empty()) {
        out.vectors = dir / "vectors.bin";
        claimrank::export_vectors(corpus.vectors, out.vectors, claimrank::VectorEncoding::Binary);
    }
    return out;
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("claimrank-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace synth
