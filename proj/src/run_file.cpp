#include "claimrank/run_file.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "claimrank/error.hpp"

namespace claimrank {

void write_trec_run(std::ostream& out, std::string_view query_id, const RankedList& list, std::string_view tag) {
    char buf[40];
    for (std::size_t i = 0; i < list.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", list[i].score);
        out << query_id << " Q0 " << list[i].doc_id << ' ' << (i + 1) << ' ' << buf << ' ' << tag << '\n';
    }
}

Run read_trec_run(std::istream& in, const std::string& source) {
    std::map<std::string, std::vector<std::pair<long, std::string>>, std::less<>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, q0, doc, tag;
        long rank = 0;
        double score = 0.0;
        if (!(fields >> qid)) continue;
        if (!(fields >> q0 >> doc >> rank >> score))
            throw ParseError(source, line_no, "expected: query_id Q0 doc_id rank score tag");
        if (rank < 1) throw ParseError(source, line_no, "rank must be >= 1");
        rows[qid].emplace_back(rank, doc);
    }
    Run run;
    for (auto& [qid, docs] : rows) {
        std::stable_sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& ranking = run[qid];
        for (auto& [rank, doc] : docs) ranking.push_back(std::move(doc));
    }
    return run;
}

Run load_trec_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run file: " + path.string());
    return read_trec_run(in, path.string());
}

Qrels read_qrels(std::istream& in, const std::string& source) {
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::vector<std::string> parts;
        for (std::string f; fields >> f;) parts.push_back(f);
        if (parts.empty() || parts[0].front() == '#') continue;
        if (parts.size() == 2) {
            qrels[parts[0]].insert(parts[1]);
        } else if (parts.size() == 4) {
            try {
                if (std::stod(parts[3]) > 0) qrels[parts[0]].insert(parts[2]);
            } catch (const std::exception&) {
                throw ParseError(source, line_no, "bad relevance value '" + parts[3] + "'");
            }
        } else {
            throw ParseError(source, line_no, "expected 2 or 4 columns");
        }
    }
    return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open qrels file: " + path.string());
    return read_qrels(in, path.string());
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
    for (const auto& [qid, docs] : qrels)
        for (const auto& d : docs) out << qid << '\t' << d << '\n';
}

}  // namespace claimrank
