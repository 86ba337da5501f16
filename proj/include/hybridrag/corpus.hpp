#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hybridrag/error.hpp"
#include "hybridrag/hash.hpp"
#include "hybridrag/text.hpp"

namespace hybridrag {

enum class Label { pass, fail };

enum class SourceDataset { halu_eval, drop, rag_truth, finance_bench, pubmed_qa, covid_qa };

inline constexpr std::array kAllSourceDatasets = {
    SourceDataset::halu_eval,     SourceDataset::drop,      SourceDataset::rag_truth,
    SourceDataset::finance_bench, SourceDataset::pubmed_qa, SourceDataset::covid_qa,
};

inline std::string_view to_string(Label l) { return l == Label::pass ? "PASS" : "FAIL"; }

inline std::optional<Label> parse_label(std::string_view s) {
  std::string up(s);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "PASS") return Label::pass;
  if (up == "FAIL") return Label::fail;
  return std::nullopt;
}

inline std::string_view to_string(SourceDataset d) {
  switch (d) {
    case SourceDataset::halu_eval: return "HaluEval";
    case SourceDataset::drop: return "DROP";
    case SourceDataset::rag_truth: return "RAGTruth";
    case SourceDataset::finance_bench: return "FinanceBench";
    case SourceDataset::pubmed_qa: return "PubMedQA";
    case SourceDataset::covid_qa: return "CovidQA";
  }
  return "";
}

/// Case-insensitive; accepts the spellings used by the published HaluBench
/// files ("halueval", "DROP", "pubmedQA", "covidQA", ...).
inline std::optional<SourceDataset> parse_source_dataset(std::string_view s) {
  std::string key;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "halueval") return SourceDataset::halu_eval;
  if (key == "drop") return SourceDataset::drop;
  if (key == "ragtruth") return SourceDataset::rag_truth;
  if (key == "financebench") return SourceDataset::finance_bench;
  if (key == "pubmedqa" || key == "pubmed") return SourceDataset::pubmed_qa;
  if (key == "covidqa") return SourceDataset::covid_qa;
  return std::nullopt;
}

struct QueryRecord {
  std::string id;
  std::string context;
  std::string question;
  std::string answer;
  Label label = Label::pass;
  SourceDataset source_ds = SourceDataset::halu_eval;
  std::string doc_id;  // filled by ingestion; empty means "not linked"
};

struct Document {
  std::string doc_id;
  std::string text;
  TermList tokens;

  std::size_t length() const { return tokens.size(); }
};

struct CorpusStats {
  std::size_t n_docs = 0;
  double avg_doc_len = 0.0;
  std::map<Term, std::size_t> doc_freq;
  std::size_t total_terms = 0;

  std::size_t df(const Term& t) const {
    auto it = doc_freq.find(t);
    return it == doc_freq.end() ? 0 : it->second;
  }
};

/// Immutable document collection plus the statistics BM25 and the
/// specificity score need.
class Corpus {
 public:
  Corpus() = default;

  explicit Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
    for (std::size_t i = 0; i < docs_.size(); ++i) {
      if (!by_id_.emplace(docs_[i].doc_id, i).second)
        throw Error(ErrorCategory::validation, "duplicate doc_id: " + docs_[i].doc_id);
      by_text_.emplace(docs_[i].text, i);
    }
    stats_.n_docs = docs_.size();
    for (const auto& d : docs_) {
      stats_.total_terms += d.length();
      std::vector<Term> uniq = d.tokens;
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      for (auto& t : uniq) ++stats_.doc_freq[t];
    }
    stats_.avg_doc_len =
        docs_.empty() ? 0.0 : static_cast<double>(stats_.total_terms) / static_cast<double>(docs_.size());
  }

  const std::vector<Document>& documents() const { return docs_; }
  const CorpusStats& stats() const { return stats_; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }

  const Document* find(const std::string& doc_id) const {
    auto it = by_id_.find(doc_id);
    return it == by_id_.end() ? nullptr : &docs_[it->second];
  }

  const Document* find_by_text(const std::string& text) const {
    auto it = by_text_.find(text);
    return it == by_text_.end() ? nullptr : &docs_[it->second];
  }

  /// Fingerprint over (doc_id, text) pairs in doc_id order.
  std::uint64_t content_hash() const {
    std::vector<const Document*> sorted;
    for (const auto& d : docs_) sorted.push_back(&d);
    std::sort(sorted.begin(), sorted.end(),
              [](const Document* a, const Document* b) { return a->doc_id < b->doc_id; });
    Fnv1a h;
    for (const auto* d : sorted) {
      h.update(d->doc_id).update_char('\0').update(d->text).update_char('\0');
    }
    return h.digest();
  }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_text_;
  CorpusStats stats_;
};

struct IngestResult {
  Corpus corpus;
  std::vector<QueryRecord> records;
};

namespace detail {

inline std::string required_string(const nlohmann::json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end())
    throw Error(ErrorCategory::format,
                "line " + std::to_string(line_no) + ": missing field '" + field + "'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw Error(ErrorCategory::format,
              "line " + std::to_string(line_no) + ": field '" + field + "' is not a string");
}

}  // namespace detail

/// Parses HaluBench JSON-lines. One Document per distinct context string (the
/// doc_id is the id of the first record carrying it); every record is linked
/// to its context's doc_id.
inline IngestResult ingest_halubench(std::istream& in, const Tokenizer& tokenizer) {
  IngestResult result;
  std::vector<Document> docs;
  std::unordered_map<std::string, std::string> doc_for_context;
  std::unordered_map<std::string, std::size_t> seen_ids;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCategory::format, "line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!obj.is_object())
      throw Error(ErrorCategory::format, "line " + std::to_string(line_no) + ": expected a JSON object");
    if (obj.contains("provenance")) continue;

    QueryRecord rec;
    rec.id = detail::required_string(obj, "id", line_no);
    rec.context = detail::required_string(obj, "context", line_no);
    rec.question = detail::required_string(obj, "question", line_no);
    rec.answer = detail::required_string(obj, "answer", line_no);
    const auto label = detail::required_string(obj, "label", line_no);
    const auto source = detail::required_string(obj, "source_ds", line_no);

    auto parsed_label = parse_label(label);
    if (!parsed_label)
      throw Error(ErrorCategory::validation,
                  "line " + std::to_string(line_no) + ": unknown label '" + label + "'");
    rec.label = *parsed_label;
    auto parsed_source = parse_source_dataset(source);
    if (!parsed_source)
      throw Error(ErrorCategory::validation,
                  "line " + std::to_string(line_no) + ": unknown source_ds '" + source + "'");
    rec.source_ds = *parsed_source;

    if (rec.context.empty())
      throw Error(ErrorCategory::validation, "line " + std::to_string(line_no) + ": empty context");
    if (auto [it, inserted] = seen_ids.emplace(rec.id, line_no); !inserted)
      throw Error(ErrorCategory::validation, "line " + std::to_string(line_no) + ": duplicate id '" +
                                                 rec.id + "' (first seen on line " +
                                                 std::to_string(it->second) + ")");

    auto [it, inserted] = doc_for_context.emplace(rec.context, rec.id);
    if (inserted) docs.push_back(Document{rec.id, rec.context, tokenizer.tokenize(rec.context)});
    rec.doc_id = it->second;
    result.records.push_back(std::move(rec));
  }
  result.corpus = Corpus(std::move(docs));
  return result;
}

inline IngestResult ingest_halubench(const std::string& path, const Tokenizer& tokenizer) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::input, "cannot open HaluBench file: " + path);
  return ingest_halubench(in, tokenizer);
}

/// Re-links records ingested from a different file (e.g. a sampled subset)
/// to `corpus` by exact context match.
inline void link_records(std::vector<QueryRecord>& records, const Corpus& corpus) {
  for (auto& r : records) {
    const auto* doc = corpus.find_by_text(r.context);
    if (!doc) throw Error(ErrorCategory::mismatch, "query '" + r.id + "' has a context that is not in the corpus");
    r.doc_id = doc->doc_id;
  }
}

inline nlohmann::json to_json(const QueryRecord& r) {
  return nlohmann::json{{"id", r.id},
                        {"context", r.context},
                        {"question", r.question},
                        {"answer", r.answer},
                        {"label", std::string(to_string(r.label))},
                        {"source_ds", std::string(to_string(r.source_ds))}};
}

inline void write_halubench(std::ostream& out, const std::vector<QueryRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

/// Stratified sample: for every source dataset present in `records`, draw
/// per_label PASS and per_label FAIL records. Output is grouped by dataset
/// (canonical order) then label, preserving input order inside a stratum.
inline std::vector<QueryRecord> sample_balanced(const std::vector<QueryRecord>& records,
                                                std::size_t per_dataset, std::size_t per_label,
                                                std::uint64_t seed) {
  if (per_dataset != 2 * per_label)
    throw Error(ErrorCategory::config, "per_dataset (" + std::to_string(per_dataset) +
                                           ") must equal 2 x per_label (" + std::to_string(per_label) + ")");
  std::map<std::pair<SourceDataset, Label>, std::vector<const QueryRecord*>> strata;
  std::vector<bool> present(kAllSourceDatasets.size(), false);
  for (const auto& r : records) {
    strata[{r.source_ds, r.label}].push_back(&r);
    present[static_cast<std::size_t>(r.source_ds)] = true;
  }

  std::mt19937_64 rng(seed);
  std::vector<QueryRecord> out;
  for (auto ds : kAllSourceDatasets) {
    if (!present[static_cast<std::size_t>(ds)]) continue;
    for (auto label : {Label::pass, Label::fail}) {
      const auto& pool = strata[{ds, label}];
      if (pool.size() < per_label)
        throw Error(ErrorCategory::validation,
                    "stratum " + std::string(to_string(ds)) + "/" + std::string(to_string(label)) + " has " +
                        std::to_string(pool.size()) + " records, need " + std::to_string(per_label));
      std::vector<const QueryRecord*> picked;
      std::sample(pool.begin(), pool.end(), std::back_inserter(picked), per_label, rng);
      for (const auto* r : picked) out.push_back(*r);
    }
  }
  return out;
}

}  // namespace hybridrag
