#include "claimrank/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "claimrank/error.hpp"

namespace claimrank {

double reciprocal_rank(std::span<const std::string> ranking, const std::set<std::string>& relevant) {
    for (std::size_t i = 0; i < ranking.size(); ++i)
        if (relevant.count(ranking[i])) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

double average_precision_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant,
                              std::size_t k, ApNormalizer normalizer) {
    if (k == 0) throw std::invalid_argument("cutoff k must be >= 1");
    if (relevant.empty()) return 0.0;
    const std::size_t depth = std::min(k, ranking.size());
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (!relevant.count(ranking[i])) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
    if (hits == 0) return 0.0;
    const std::size_t denom =
        normalizer == ApNormalizer::MinRelevantK ? std::min(relevant.size(), k) : relevant.size();
    return sum / static_cast<double>(denom);
}

int has_positives_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant, std::size_t k) {
    if (k == 0) throw std::invalid_argument("cutoff k must be >= 1");
    const std::size_t depth = std::min(k, ranking.size());
    for (std::size_t i = 0; i < depth; ++i)
        if (relevant.count(ranking[i])) return 1;
    return 0;
}

MetricReport evaluate_run(const Run& run, const Qrels& qrels, const EvalOptions& options, std::string name) {
    MetricReport report;
    report.name = std::move(name);
    report.map_cutoffs = options.map_cutoffs;
    report.has_positives_cutoffs = options.has_positives_cutoffs;
    report.map.assign(options.map_cutoffs.size(), 0.0);
    report.has_positives.assign(options.has_positives_cutoffs.size(), 0.0);

    const std::vector<std::string> empty;
    for (const auto& [qid, relevant] : qrels) {
        if (relevant.empty()) throw ValidationError("qrels query '" + qid + "' has no relevant documents");
        if (options.corpus_ids)
            for (const auto& doc : relevant)
                if (!options.corpus_ids->count(doc))
                    throw ValidationError("qrels doc '" + doc + "' (query '" + qid + "') is not in the corpus");
        auto it = run.find(qid);
        if (it == run.end()) report.warnings.push_back("query '" + qid + "' missing from run; scored as 0");
        const auto& ranking = it == run.end() ? empty : it->second;

        QueryMetrics q;
        q.query_id = qid;
        q.reciprocal_rank = reciprocal_rank(ranking, relevant);
        for (auto k : options.map_cutoffs) q.map.push_back(average_precision_at_k(ranking, relevant, k, options.normalizer));
        for (auto k : options.has_positives_cutoffs) q.has_positives.push_back(has_positives_at_k(ranking, relevant, k));
        report.per_query.push_back(std::move(q));
    }
    report.queries = report.per_query.size();
    if (report.queries == 0) return report;
    const double n = static_cast<double>(report.queries);
    for (const auto& q : report.per_query) {
        report.mrr += q.reciprocal_rank;
        for (std::size_t i = 0; i < q.map.size(); ++i) report.map[i] += q.map[i];
        for (std::size_t i = 0; i < q.has_positives.size(); ++i) report.has_positives[i] += q.has_positives[i];
    }
    report.mrr /= n;
    for (auto& v : report.map) v /= n;
    for (auto& v : report.has_positives) v /= n;
    return report;
}

std::string cutoff_label(std::size_t k) { return k == kAllRanks ? "all" : std::to_string(k); }

std::size_t parse_cutoff(const std::string& text) {
    if (text == "all") return kAllRanks;
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || v == 0) throw std::invalid_argument("invalid cutoff '" + text + "'");
    return v;
}

namespace {

std::string three_decimals(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    return s;
}

std::string pad(const std::string& s, std::size_t width, bool left = false) {
    if (s.size() >= width) return s;
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string format_report_table(std::span<const MetricReport> reports, std::optional<std::size_t> depth) {
    if (reports.empty()) return {};
    const auto& first = reports.front();
    std::size_t name_width = 10;
    for (const auto& r : reports) name_width = std::max(name_width, r.name.size());
    std::size_t max_numeric = 0;
    for (auto k : first.map_cutoffs)
        if (k != kAllRanks) max_numeric = std::max(max_numeric, k);
    for (auto k : first.has_positives_cutoffs) max_numeric = std::max(max_numeric, k);

    constexpr std::size_t cell = 6;
    std::ostringstream out;
    out << pad("Experiment", name_width, true) << "  " << pad("MRR", cell) << "  |";
    std::string map_title = " MAP@k";
    std::string hp_title = " HasPositives@k";
    out << map_title << std::string(first.map_cutoffs.size() * (cell + 1) + 1 - map_title.size(), ' ') << "|"
        << hp_title << '\n';
    out << pad("", name_width, true) << "  " << pad("", cell) << "  |";
    for (auto k : first.map_cutoffs) out << pad(cutoff_label(k), cell) << ' ';
    out << " |";
    for (auto k : first.has_positives_cutoffs) out << pad(cutoff_label(k), cell) << ' ';
    out << '\n';

    auto shown = [&](std::size_t k) {
        if (!depth) return true;
        if (k == kAllRanks) return *depth >= max_numeric;
        return k <= *depth;
    };
    for (const auto& r : reports) {
        if (r.map_cutoffs != first.map_cutoffs || r.has_positives_cutoffs != first.has_positives_cutoffs)
            throw std::invalid_argument("reports with different cutoffs cannot share a table");
        out << pad(r.name, name_width, true) << "  " << pad(three_decimals(r.mrr), cell) << "  |";
        for (std::size_t i = 0; i < r.map.size(); ++i)
            out << pad(shown(r.map_cutoffs[i]) ? three_decimals(r.map[i]) : "---", cell) << ' ';
        out << " |";
        for (std::size_t i = 0; i < r.has_positives.size(); ++i)
            out << pad(shown(r.has_positives_cutoffs[i]) ? three_decimals(r.has_positives[i]) : "---", cell) << ' ';
        out << '\n';
    }
    return out.str();
}

std::string format_report_csv(std::span<const MetricReport> reports) {
    std::ostringstream out;
    if (reports.empty()) return {};
    const auto& first = reports.front();
    out << "experiment,queries,mrr";
    for (auto k : first.map_cutoffs) out << ",map@" << cutoff_label(k);
    for (auto k : first.has_positives_cutoffs) out << ",haspositives@" << cutoff_label(k);
    out << '\n';
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    for (const auto& r : reports) {
        out << r.name << ',' << r.queries << ',' << num(r.mrr);
        for (double v : r.map) out << ',' << num(v);
        for (double v : r.has_positives) out << ',' << num(v);
        out << '\n';
    }
    return out.str();
}

std::string format_per_query_csv(const MetricReport& report) {
    std::ostringstream out;
    out << "query_id,rr";
    for (auto k : report.map_cutoffs) out << ",ap@" << cutoff_label(k);
    for (auto k : report.has_positives_cutoffs) out << ",haspositives@" << cutoff_label(k);
    out << '\n';
    char buf[32];
    for (const auto& q : report.per_query) {
        std::snprintf(buf, sizeof buf, "%.6f", q.reciprocal_rank);
        out << q.query_id << ',' << buf;
        for (double v : q.map) {
            std::snprintf(buf, sizeof buf, "%.6f", v);
            out << ',' << buf;
        }
        for (int v : q.has_positives) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

}  // namespace claimrank
