#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "claimrank/eval.hpp"
#include "claimrank/ranking.hpp"

namespace claimrank {

/// TREC run lines: `query_id Q0 doc_id rank score tag`, rank 1-based, score
/// printed with 10 significant digits.
void write_trec_run(std::ostream& out, std::string_view query_id, const RankedList& list, std::string_view tag);

/// Reads a TREC run, ordering each query's docs by the rank column.
Run read_trec_run(std::istream& in, const std::string& source);
Run load_trec_run(const std::filesystem::path& path);

/// Qrels lines: `query_id doc_id` (tab or space separated) or the 4-column TREC
/// form `query_id 0 doc_id relevance`, where relevance <= 0 lines are skipped.
Qrels read_qrels(std::istream& in, const std::string& source);
Qrels load_qrels(const std::filesystem::path& path);
void write_qrels(std::ostream& out, const Qrels& qrels);

}  // namespace claimrank
