#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace claimrank {

/// query id -> relevant doc ids
using Qrels = std::map<std::string, std::set<std::string>, std::less<>>;
/// query id -> doc ids in rank order
using Run = std::map<std::string, std::vector<std::string>, std::less<>>;

/// Cutoff meaning "no truncation".
inline constexpr std::size_t kAllRanks = std::numeric_limits<std::size_t>::max();

enum class ApNormalizer {
    /// divide by min(|relevant|, k)
    MinRelevantK,
    /// divide by |relevant|
    Relevant,
};

double reciprocal_rank(std::span<const std::string> ranking, const std::set<std::string>& relevant);
double average_precision_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant,
                              std::size_t k, ApNormalizer normalizer = ApNormalizer::MinRelevantK);
int has_positives_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant, std::size_t k);

struct EvalOptions {
    std::vector<std::size_t> map_cutoffs{1, 3, 5, 10, 20, kAllRanks};
    std::vector<std::size_t> has_positives_cutoffs{1, 3, 5, 10, 20, 50};
    ApNormalizer normalizer = ApNormalizer::MinRelevantK;
    /// When set, every qrels doc id must be in this set.
    const std::unordered_set<std::string>* corpus_ids = nullptr;
};

struct QueryMetrics {
    std::string query_id;
    double reciprocal_rank = 0.0;
    std::vector<double> map;
    std::vector<int> has_positives;
};

struct MetricReport {
    std::string name;
    std::vector<std::size_t> map_cutoffs;
    std::vector<std::size_t> has_positives_cutoffs;
    double mrr = 0.0;
    std::vector<double> map;
    std::vector<double> has_positives;
    std::vector<QueryMetrics> per_query;
    std::vector<std::string> warnings;
    std::size_t queries = 0;
};

/// Macro-averages over the qrels queries. Run queries without qrels are
/// ignored; qrels queries missing from the run score 0 (with a warning).
/// Throws ValidationError if a qrels doc id is missing from options.corpus_ids.
MetricReport evaluate_run(const Run& run, const Qrels& qrels, const EvalOptions& options = {},
                          std::string name = "run");

/// Aligned table: Experiment, MRR, MAP@k..., HasPositives@k..., values as ".565".
/// With `depth`, cells at k > depth print "---" (and MAP@all when depth is
/// below the largest numeric cutoff), the convention for reranked top-N runs.
std::string format_report_table(std::span<const MetricReport> reports, std::optional<std::size_t> depth = {});
std::string format_report_csv(std::span<const MetricReport> reports);
std::string format_per_query_csv(const MetricReport& report);
std::string cutoff_label(std::size_t k);
std::size_t parse_cutoff(const std::string& text);

}  // namespace claimrank
