#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridrag/corpus.hpp"
#include "hybridrag/dense_store.hpp"
#include "hybridrag/error.hpp"
#include "hybridrag/expansion.hpp"
#include "hybridrag/ranked_list.hpp"
#include "hybridrag/sparse_index.hpp"

namespace hybridrag {

struct FusionConfig {
  double alpha = 1.0;
  double epsilon = 60.0;
  std::size_t k = 3;
  double weight_floor = 0.1;

  void validate() const {
    if (!(alpha > 0.0)) throw Error(ErrorCategory::config, "alpha must be > 0");
    if (!(epsilon > 0.0)) throw Error(ErrorCategory::config, "epsilon must be > 0");
    if (k == 0) throw Error(ErrorCategory::config, "k must be >= 1");
    if (!(weight_floor >= 0.0 && weight_floor < 0.5))
      throw Error(ErrorCategory::config, "weight_floor must be in [0, 0.5)");
  }
};

struct Specificity {
  double raw = 0.0;
  double normalized = 0.0;
};

struct RetrieverWeights {
  double w_sparse = 0.5;
  double w_dense = 0.5;
  double specificity = 0.0;
  double specificity_norm = 0.0;
};

/// Mean tf-idf over the expanded query: tf is the term's count inside q',
/// idf = ln(N / df) with unseen terms getting 0. Each distinct term is counted
/// once with its tf, and the sum is divided by |q'| (multiset size), so the
/// raw score never exceeds ln(N). The normalized score divides by ln(N).
inline Specificity specificity(const ExpandedQuery& query, const CorpusStats& stats) {
  if (query.all_terms.empty() || stats.n_docs == 0) return {};
  std::map<Term, std::size_t> tf;
  for (const auto& t : query.all_terms) ++tf[t];
  const auto n = static_cast<double>(stats.n_docs);
  double sum = 0.0;
  for (const auto& [term, count] : tf) {
    const auto df = stats.df(term);
    const double idf = df == 0 ? 0.0 : std::log(n / static_cast<double>(df));
    sum += static_cast<double>(count) * idf;
  }
  Specificity s;
  s.raw = sum / static_cast<double>(query.all_terms.size());
  s.normalized = stats.n_docs > 1 ? std::clamp(s.raw / std::log(n), 0.0, 1.0) : 0.0;
  return s;
}

/// w_sparse = clamp(alpha * S, floor, 1 - floor); w_dense = 1 - w_sparse.
inline RetrieverWeights compute_weights(double spec_normalized, const FusionConfig& config) {
  RetrieverWeights w;
  w.specificity_norm = spec_normalized;
  w.w_sparse = std::clamp(config.alpha * spec_normalized, config.weight_floor, 1.0 - config.weight_floor);
  // 1 - (1 - floor) can land one ulp under the floor.
  w.w_dense = std::clamp(1.0 - w.w_sparse, config.weight_floor, 1.0 - config.weight_floor);
  return w;
}

struct WeightedList {
  const RankedList* list = nullptr;
  double weight = 0.0;
};

/// Weighted reciprocal rank fusion: score(d) = sum over lists containing d of
/// weight / (epsilon + rank). Only ranks matter. A list with weight 0
/// contributes no candidates. Output is the full fused list, canonical order.
inline RankedList weighted_rrf(const std::vector<WeightedList>& lists, const FusionConfig& config) {
  if (!(config.epsilon > 0.0)) throw Error(ErrorCategory::config, "epsilon must be > 0");
  std::unordered_map<std::string, double> fused;
  std::vector<std::string> order;
  for (const auto& [list, weight] : lists) {
    if (!(weight >= 0.0)) throw Error(ErrorCategory::validation, "fusion weights must be >= 0");
    if (weight == 0.0) continue;
    for (std::size_t i = 0; i < list->entries.size(); ++i) {
      const auto& id = list->entries[i].doc_id;
      auto [it, inserted] = fused.emplace(id, 0.0);
      if (inserted) order.push_back(id);
      it->second += weight / (config.epsilon + static_cast<double>(i + 1));
    }
  }
  std::vector<ScoredDoc> candidates;
  candidates.reserve(order.size());
  for (const auto& id : order) candidates.push_back({id, fused[id]});
  const auto n = candidates.size();
  return make_ranked_list(std::move(candidates), n, RetrieverKind::hybrid);
}

inline RankedList weighted_rrf(const RankedList& sparse, double w_sparse, const RankedList& dense, double w_dense,
                               const FusionConfig& config) {
  return weighted_rrf({{&sparse, w_sparse}, {&dense, w_dense}}, config);
}

struct HybridResult {
  RankedList fused;  // truncated to k
  RankedList sparse;
  RankedList dense;
  Specificity specificity;
  RetrieverWeights weights;
};

/// Specificity -> weights -> independent top-k from both retrievers ->
/// weighted RRF -> top-k.
inline HybridResult hybrid_retrieve_detailed(const InvertedIndex& index, const VectorStore& store,
                                             const ExpandedQuery& query, const EmbeddingVector& query_vec,
                                             const FusionConfig& config) {
  config.validate();
  HybridResult r;
  r.specificity = specificity(query, index.stats());
  r.weights = compute_weights(r.specificity.normalized, config);
  r.weights.specificity = r.specificity.raw;
  r.sparse = sparse_retrieve(index, query, config.k);
  r.dense = dense_retrieve(store, query_vec, config.k);
  r.fused = weighted_rrf(r.sparse, r.weights.w_sparse, r.dense, r.weights.w_dense, config);
  if (r.fused.entries.size() > config.k) r.fused.entries.resize(config.k);
  return r;
}

inline RankedList hybrid_retrieve(const InvertedIndex& index, const VectorStore& store, const ExpandedQuery& query,
                                  const EmbeddingVector& query_vec, const FusionConfig& config) {
  return hybrid_retrieve_detailed(index, store, query, query_vec, config).fused;
}

}  // namespace hybridrag
