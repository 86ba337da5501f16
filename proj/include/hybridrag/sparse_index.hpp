#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridrag/binary_io.hpp"
#include "hybridrag/corpus.hpp"
#include "hybridrag/error.hpp"
#include "hybridrag/expansion.hpp"
#include "hybridrag/ranked_list.hpp"

namespace hybridrag {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const {
    if (!(k1 >= 0.0)) throw Error(ErrorCategory::config, "bm25 k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw Error(ErrorCategory::config, "bm25 b must be in [0,1]");
  }
};

/// Non-negative BM25 idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
inline double bm25_idf(std::size_t n_docs, std::size_t df) {
  const auto n = static_cast<double>(n_docs);
  const auto d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

/// Saturated, length-normalized term frequency component.
inline double bm25_tf(double tf, double doc_len, double avg_doc_len, const Bm25Params& p) {
  const double norm = avg_doc_len > 0.0 ? doc_len / avg_doc_len : 1.0;
  return tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

struct Posting {
  std::uint32_t doc = 0;  // ordinal into the index's doc table (sorted by doc_id)
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Immutable inverted index with BM25 scoring. Carries its own doc table so
/// it can be persisted and reloaded without the corpus.
class InvertedIndex {
 public:
  static constexpr std::string_view kMagic = "HRAGIDX1";
  static constexpr std::uint32_t kVersion = 1;

  InvertedIndex() = default;

  static InvertedIndex build(const Corpus& corpus, const Bm25Params& params = {}) {
    if (corpus.empty()) throw Error(ErrorCategory::validation, "cannot index an empty corpus");
    params.validate();
    InvertedIndex idx;
    idx.params_ = params;
    idx.corpus_hash_ = corpus.content_hash();

    std::vector<const Document*> docs;
    for (const auto& d : corpus.documents()) docs.push_back(&d);
    std::sort(docs.begin(), docs.end(),
              [](const Document* a, const Document* b) { return a->doc_id < b->doc_id; });
    for (std::uint32_t ord = 0; ord < docs.size(); ++ord) {
      const auto* d = docs[ord];
      idx.doc_ids_.push_back(d->doc_id);
      idx.doc_lengths_.push_back(static_cast<std::uint32_t>(d->length()));
      std::map<Term, std::uint32_t> counts;
      for (const auto& t : d->tokens) ++counts[t];
      // Ordinals increase monotonically, so each postings list stays sorted.
      for (const auto& [term, tf] : counts) idx.postings_[term].push_back(Posting{ord, tf});
    }
    idx.finish();
    return idx;
  }

  const Bm25Params& params() const { return params_; }
  const CorpusStats& stats() const { return stats_; }
  std::uint64_t corpus_hash() const { return corpus_hash_; }
  std::size_t num_docs() const { return doc_ids_.size(); }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const std::map<Term, std::vector<Posting>>& postings() const { return postings_; }

  std::size_t df(const Term& t) const {
    auto it = postings_.find(t);
    return it == postings_.end() ? 0 : it->second.size();
  }

  std::uint32_t tf(const Term& t, const std::string& doc_id) const {
    const auto ord = ordinal(doc_id);
    auto it = postings_.find(t);
    if (!ord || it == postings_.end()) return 0;
    auto p = std::lower_bound(it->second.begin(), it->second.end(), *ord,
                              [](const Posting& x, std::uint32_t o) { return x.doc < o; });
    return (p != it->second.end() && p->doc == *ord) ? p->tf : 0;
  }

  std::optional<std::uint32_t> ordinal(const std::string& doc_id) const {
    auto it = ordinal_.find(doc_id);
    if (it == ordinal_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t doc_length(std::uint32_t ord) const { return doc_lengths_.at(ord); }

  double idf(const Term& t) const { return bm25_idf(num_docs(), df(t)); }

  /// Sum over query terms (multiset) of idf x saturated tf. Terms are visited
  /// in sorted order so this matches `retrieve` bit for bit.
  double score(const TermList& query_terms, const std::string& doc_id) const {
    const auto ord = ordinal(doc_id);
    if (!ord) throw Error(ErrorCategory::validation, "unknown doc_id: " + doc_id);
    double total = 0.0;
    for (const auto& [term, mult] : multiset(query_terms)) {
      const auto f = tf(term, doc_id);
      if (f == 0) continue;
      total += static_cast<double>(mult) * idf(term) *
               bm25_tf(f, doc_lengths_[*ord], stats_.avg_doc_len, params_);
    }
    return total;
  }

  /// Top-k documents with a positive score, canonical order.
  RankedList retrieve(const TermList& query_terms, std::size_t k) const {
    if (k == 0) throw Error(ErrorCategory::validation, "k must be >= 1");
    std::vector<double> acc(num_docs(), 0.0);
    std::vector<bool> hit(num_docs(), false);
    for (const auto& [term, mult] : multiset(query_terms)) {
      auto it = postings_.find(term);
      if (it == postings_.end()) continue;
      const double w = idf(term);
      for (const auto& p : it->second) {
        acc[p.doc] += static_cast<double>(mult) * w *
                      bm25_tf(p.tf, doc_lengths_[p.doc], stats_.avg_doc_len, params_);
        hit[p.doc] = true;
      }
    }
    std::vector<ScoredDoc> candidates;
    for (std::uint32_t d = 0; d < acc.size(); ++d)
      if (hit[d] && acc[d] > 0.0) candidates.push_back({doc_ids_[d], acc[d]});
    return make_ranked_list(std::move(candidates), k, RetrieverKind::sparse);
  }

  void save(std::ostream& out) const {
    out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    binary::put_u32(out, kVersion);
    binary::put_u64(out, corpus_hash_);
    binary::put_f64(out, params_.k1);
    binary::put_f64(out, params_.b);
    binary::put_u32(out, static_cast<std::uint32_t>(doc_ids_.size()));
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
      binary::put_string(out, doc_ids_[i]);
      binary::put_u32(out, doc_lengths_[i]);
    }
    binary::put_u32(out, static_cast<std::uint32_t>(postings_.size()));
    for (const auto& [term, list] : postings_) {
      binary::put_string(out, term);
      binary::put_u32(out, static_cast<std::uint32_t>(list.size()));
      for (const auto& p : list) {
        binary::put_u32(out, p.doc);
        binary::put_u32(out, p.tf);
      }
    }
  }

  static InvertedIndex load(std::istream& in) {
    binary::expect_magic(in, kMagic, "hybridrag index");
    const auto version = binary::get_u32(in);
    if (version != kVersion)
      throw Error(ErrorCategory::format, "unsupported index version " + std::to_string(version));
    InvertedIndex idx;
    idx.corpus_hash_ = binary::get_u64(in);
    idx.params_.k1 = binary::get_f64(in);
    idx.params_.b = binary::get_f64(in);
    const auto n = binary::get_u32(in);
    for (std::uint32_t i = 0; i < n; ++i) {
      idx.doc_ids_.push_back(binary::get_string(in));
      idx.doc_lengths_.push_back(binary::get_u32(in));
    }
    const auto terms = binary::get_u32(in);
    for (std::uint32_t i = 0; i < terms; ++i) {
      auto term = binary::get_string(in);
      const auto len = binary::get_u32(in);
      if (len == 0 || len > n) throw Error(ErrorCategory::format, "bad postings length for '" + term + "'");
      std::vector<Posting> list(len);
      for (auto& p : list) {
        p.doc = binary::get_u32(in);
        p.tf = binary::get_u32(in);
        if (p.doc >= n || p.tf == 0) throw Error(ErrorCategory::format, "corrupt posting for '" + term + "'");
      }
      idx.postings_.emplace(std::move(term), std::move(list));
    }
    idx.finish();
    return idx;
  }

  std::string serialize() const {
    std::ostringstream out(std::ios::binary);
    save(out);
    return out.str();
  }

  void save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::input, "cannot write index: " + path);
    save(out);
  }

  static InvertedIndex load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::missing_artifact, "index not found: " + path + " (run `hybridrag index`)");
    return load(in);
  }

 private:
  static std::map<Term, std::size_t> multiset(const TermList& terms) {
    std::map<Term, std::size_t> m;
    for (const auto& t : terms) ++m[t];
    return m;
  }

  void finish() {
    ordinal_.clear();
    for (std::uint32_t i = 0; i < doc_ids_.size(); ++i) ordinal_.emplace(doc_ids_[i], i);
    stats_ = CorpusStats{};
    stats_.n_docs = doc_ids_.size();
    for (auto len : doc_lengths_) stats_.total_terms += len;
    stats_.avg_doc_len =
        doc_ids_.empty() ? 0.0 : static_cast<double>(stats_.total_terms) / static_cast<double>(doc_ids_.size());
    for (const auto& [term, list] : postings_) stats_.doc_freq.emplace(term, list.size());
  }

  Bm25Params params_;
  std::uint64_t corpus_hash_ = 0;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  std::unordered_map<std::string, std::uint32_t> ordinal_;
  std::map<Term, std::vector<Posting>> postings_;
  CorpusStats stats_;
};

inline InvertedIndex build_index(const Corpus& corpus, const Bm25Params& params = {}) {
  return InvertedIndex::build(corpus, params);
}

inline double bm25_score(const InvertedIndex& index, const TermList& query_terms, const std::string& doc_id) {
  return index.score(query_terms, doc_id);
}

/// Ret_S: BM25 over the expanded term multiset; synonyms weigh the same as
/// original terms.
inline RankedList sparse_retrieve(const InvertedIndex& index, const ExpandedQuery& query, std::size_t k) {
  return index.retrieve(query.all_terms, k);
}

}  // namespace hybridrag
