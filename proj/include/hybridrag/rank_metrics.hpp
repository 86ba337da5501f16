#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hybridrag/corpus.hpp"
#include "hybridrag/error.hpp"
#include "hybridrag/ranked_list.hpp"

namespace hybridrag {

/// query_id -> relevant doc_ids (binary relevance).
using RelevanceJudgments = std::map<std::string, std::set<std::string>>;

/// query_id -> ranked list.
using RunFile = std::map<std::string, RankedList>;

struct QueryMetrics {
  double ap = 0.0;
  double ndcg = 0.0;
};

struct MetricsReport {
  double map_at_k = 0.0;
  double ndcg_at_k = 0.0;
  std::size_t k = 3;
  std::map<std::string, QueryMetrics> per_query;
};

namespace detail {
inline void require_relevant(const std::set<std::string>& relevant) {
  if (relevant.empty()) throw Error(ErrorCategory::validation, "relevance judgment set is empty");
}
}  // namespace detail

/// (1/|Rel|) * sum_{i<=k} P@i * rel_i, with |Rel| counting every relevant
/// doc, retrieved or not.
inline double average_precision(const RankedList& ranked, const std::set<std::string>& relevant, std::size_t k) {
  detail::require_relevant(relevant);
  if (k == 0) throw Error(ErrorCategory::validation, "k must be >= 1");
  double sum = 0.0;
  std::size_t hits = 0;
  const auto depth = std::min(k, ranked.entries.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (!relevant.contains(ranked.entries[i].doc_id)) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(relevant.size());
}

/// DCG@k / IDCG@k with gain 2^rel - 1 and discount log2(i + 1).
inline double ndcg(const RankedList& ranked, const std::set<std::string>& relevant, std::size_t k) {
  detail::require_relevant(relevant);
  if (k == 0) throw Error(ErrorCategory::validation, "k must be >= 1");
  auto gain = [](int rel) { return std::exp2(static_cast<double>(rel)) - 1.0; };
  double dcg = 0.0;
  const auto depth = std::min(k, ranked.entries.size());
  for (std::size_t i = 0; i < depth; ++i) {
    const int rel = relevant.contains(ranked.entries[i].doc_id) ? 1 : 0;
    dcg += gain(rel) / std::log2(static_cast<double>(i + 2));
  }
  double idcg = 0.0;
  const auto ideal = std::min(k, relevant.size());
  for (std::size_t i = 0; i < ideal; ++i) idcg += gain(1) / std::log2(static_cast<double>(i + 2));
  return dcg / idcg;
}

/// Per-query AP / NDCG plus unweighted means over the judged queries. A judged
/// query missing from the run scores 0; a run query without judgments is an
/// error.
inline MetricsReport evaluate_run(const RunFile& run, const RelevanceJudgments& judgments, std::size_t k = 3) {
  std::vector<std::string> unjudged;
  for (const auto& [qid, _] : run)
    if (!judgments.contains(qid)) unjudged.push_back(qid);
  if (!unjudged.empty()) {
    std::string msg = "run queries without judgments:";
    for (const auto& q : unjudged) msg += " " + q;
    throw Error(ErrorCategory::validation, msg);
  }

  MetricsReport report;
  report.k = k;
  static const RankedList kEmpty;
  double ap_sum = 0.0, ndcg_sum = 0.0;
  for (const auto& [qid, relevant] : judgments) {
    auto it = run.find(qid);
    const auto& ranked = it == run.end() ? kEmpty : it->second;
    QueryMetrics m{average_precision(ranked, relevant, k), ndcg(ranked, relevant, k)};
    ap_sum += m.ap;
    ndcg_sum += m.ndcg;
    report.per_query.emplace(qid, m);
  }
  if (!judgments.empty()) {
    report.map_at_k = ap_sum / static_cast<double>(judgments.size());
    report.ndcg_at_k = ndcg_sum / static_cast<double>(judgments.size());
  }
  return report;
}

/// Each query is relevant to exactly its own context document.
inline RelevanceJudgments derive_judgments(const std::vector<QueryRecord>& records) {
  RelevanceJudgments j;
  for (const auto& r : records) {
    if (r.doc_id.empty()) throw Error(ErrorCategory::validation, "record '" + r.id + "' is not linked to a document");
    j[r.id] = {r.doc_id};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Text interchange. Lines starting with '#' are provenance/comment lines.

/// `query_id doc_id rank score tag`, queries in id order, entries in rank order.
inline void write_run(std::ostream& out, const RunFile& run, std::string_view tag) {
  for (const auto& [qid, list] : run)
    for (std::size_t i = 0; i < list.entries.size(); ++i)
      out << qid << ' ' << list.entries[i].doc_id << ' ' << (i + 1) << ' ' << format_score(list.entries[i].score)
          << ' ' << tag << '\n';
}

inline RunFile read_run(std::istream& in) {
  std::map<std::string, std::map<std::size_t, ScoredDoc>> rows;
  std::map<std::string, std::string> tags;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string qid, doc, tag;
    long long rank = 0;
    double score = 0.0;
    if (!(ss >> qid >> doc >> rank >> score >> tag) || rank < 1)
      throw Error(ErrorCategory::format, "run line " + std::to_string(line_no) + ": expected `qid doc rank score tag`");
    if (!rows[qid].emplace(static_cast<std::size_t>(rank), ScoredDoc{doc, score}).second)
      throw Error(ErrorCategory::format, "run line " + std::to_string(line_no) + ": duplicate rank for " + qid);
    tags[qid] = tag;
  }
  RunFile run;
  for (auto& [qid, by_rank] : rows) {
    RankedList list;
    list.produced_by = parse_retriever_kind(tags[qid]).value_or(RetrieverKind::hybrid);
    for (auto& [_, e] : by_rank) list.entries.push_back(std::move(e));
    run.emplace(qid, std::move(list));
  }
  return run;
}

inline RunFile read_run_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::missing_artifact, "run file not found: " + path + " (run `hybridrag retrieve`)");
  return read_run(in);
}

/// `query_id doc_id relevance` (qrels style).
inline void write_qrels(std::ostream& out, const RelevanceJudgments& j) {
  for (const auto& [qid, docs] : j)
    for (const auto& d : docs) out << qid << ' ' << d << " 1\n";
}

inline RelevanceJudgments read_qrels(std::istream& in) {
  RelevanceJudgments j;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string qid, doc;
    int rel = 0;
    if (!(ss >> qid >> doc >> rel))
      throw Error(ErrorCategory::format, "qrels line " + std::to_string(line_no) + ": expected `qid doc relevance`");
    if (rel > 0) j[qid].insert(doc);
    else j.try_emplace(qid);
  }
  for (const auto& [qid, docs] : j)
    if (docs.empty()) throw Error(ErrorCategory::validation, "query '" + qid + "' has no relevant documents");
  return j;
}

inline RelevanceJudgments read_qrels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::input, "cannot open judgments: " + path);
  return read_qrels(in);
}

}  // namespace hybridrag
