#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hybridrag {

enum class RetrieverKind { sparse, dense, hybrid };

inline std::string_view to_string(RetrieverKind k) {
  switch (k) {
    case RetrieverKind::sparse: return "sparse";
    case RetrieverKind::dense: return "dense";
    case RetrieverKind::hybrid: return "hybrid";
  }
  return "";
}

inline std::optional<RetrieverKind> parse_retriever_kind(std::string_view s) {
  if (s == "sparse") return RetrieverKind::sparse;
  if (s == "dense") return RetrieverKind::dense;
  if (s == "hybrid") return RetrieverKind::hybrid;
  return std::nullopt;
}

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Canonical result order: score descending, ties by ascending doc_id.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

struct RankedList {
  std::vector<ScoredDoc> entries;
  RetrieverKind produced_by = RetrieverKind::sparse;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  /// 1-based rank of doc_id, or nullopt when absent.
  std::optional<std::size_t> rank_of(std::string_view doc_id) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].doc_id == doc_id) return i + 1;
    return std::nullopt;
  }

  std::vector<std::string> doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) ids.push_back(e.doc_id);
    return ids;
  }

  /// Non-increasing scores, distinct ids, doc_id tie-break.
  bool well_formed() const {
    for (std::size_t i = 1; i < entries.size(); ++i)
      if (!ranks_before(entries[i - 1], entries[i])) return false;
    std::vector<std::string> ids = doc_ids();
    std::sort(ids.begin(), ids.end());
    return std::adjacent_find(ids.begin(), ids.end()) == ids.end();
  }
};

/// Sorts candidates into canonical order and keeps the first k.
inline RankedList make_ranked_list(std::vector<ScoredDoc> candidates, std::size_t k, RetrieverKind kind) {
  const auto keep = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), ranks_before);
  candidates.resize(keep);
  return RankedList{std::move(candidates), kind};
}

/// Fixed-point rendering used by every text artifact so files are stable.
inline std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10f", v);
  return buf;
}

}  // namespace hybridrag
