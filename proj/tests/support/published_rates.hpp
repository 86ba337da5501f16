#pragma once

// Published per-dataset hallucination table and helpers that rebuild
// annotation rows from its percentages.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hybridrag/hallu_metrics.hpp"

namespace published_rates {

struct Row {
  hybridrag::SourceDataset dataset;
  hybridrag::RetrieverKind retriever;
  double acc, hall, rej, adjusted;
};

using hybridrag::RetrieverKind;
using hybridrag::SourceDataset;

inline const std::array<Row, 18> kRows{{
    {SourceDataset::halu_eval, RetrieverKind::sparse, 56.00, 22.00, 22.00, 71.79},
    {SourceDataset::halu_eval, RetrieverKind::dense, 64.00, 22.00, 14.00, 74.42},
    {SourceDataset::halu_eval, RetrieverKind::hybrid, 92.00, 6.00, 2.00, 93.88},
    {SourceDataset::drop, RetrieverKind::sparse, 30.61, 48.98, 20.41, 38.46},
    {SourceDataset::drop, RetrieverKind::dense, 48.98, 38.78, 12.24, 55.81},
    {SourceDataset::drop, RetrieverKind::hybrid, 77.55, 14.29, 8.16, 84.44},
    {SourceDataset::rag_truth, RetrieverKind::sparse, 68.00, 12.00, 20.00, 85.00},
    {SourceDataset::rag_truth, RetrieverKind::dense, 76.00, 10.00, 14.00, 88.37},
    {SourceDataset::rag_truth, RetrieverKind::hybrid, 88.00, 4.00, 8.00, 95.65},
    {SourceDataset::pubmed_qa, RetrieverKind::sparse, 60.00, 16.00, 24.00, 78.95},
    {SourceDataset::pubmed_qa, RetrieverKind::dense, 66.00, 20.00, 14.00, 76.74},
    {SourceDataset::pubmed_qa, RetrieverKind::hybrid, 92.00, 4.00, 4.00, 95.83},
    {SourceDataset::covid_qa, RetrieverKind::sparse, 30.00, 20.00, 50.00, 60.00},
    {SourceDataset::covid_qa, RetrieverKind::dense, 14.00, 58.02, 28.10, 19.44},
    {SourceDataset::covid_qa, RetrieverKind::hybrid, 70.02, 22.00, 8.00, 76.09},
    {SourceDataset::finance_bench, RetrieverKind::sparse, 8.00, 8.02, 84.00, 50.00},
    {SourceDataset::finance_bench, RetrieverKind::dense, 26.00, 24.30, 50.00, 52.00},
    {SourceDataset::finance_bench, RetrieverKind::hybrid, 62.90, 6.00, 32.00, 91.18},
}};

inline hybridrag::VerdictCounts counts_for(const Row& r, std::size_t n) {
  auto c = [n](double pct) { return static_cast<std::size_t>(std::llround(pct * static_cast<double>(n) / 100.0)); };
  return {c(r.acc), c(r.hall), c(r.rej)};
}

inline bool reproduces(const Row& r, const hybridrag::SliceMetrics& m, double tol = 0.01) {
  auto near = [tol](double got, double want) { return std::fabs(hybridrag::round_half_up_2(got) - want) <= tol + 1e-9; };
  return near(m.accuracy_pct, r.acc) && near(m.hallucination_rate_pct, r.hall) && near(m.rejection_rate_pct, r.rej) &&
         m.adjusted_accuracy_pct &&
         near(*m.adjusted_accuracy_pct, r.adjusted);
}

/// Annotation rows for one table row: `counts` verdicts, labels alternating
/// PASS/FAIL in query order.
inline std::vector<hybridrag::Annotation> annotations_for(const Row& r, const hybridrag::VerdictCounts& counts) {
  std::vector<hybridrag::Annotation> out;
  std::size_t i = 0;
  auto emit = [&](hybridrag::Verdict v, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j, ++i)
      out.push_back({std::string(hybridrag::to_string(r.dataset)) + "-" + std::to_string(i + 1), r.retriever, v,
                     r.dataset, i % 2 == 0 ? hybridrag::Label::pass : hybridrag::Label::fail});
  };
  emit(hybridrag::Verdict::correct, counts.correct);
  emit(hybridrag::Verdict::hallucinated, counts.hallucinated);
  emit(hybridrag::Verdict::insufficient_context, counts.insufficient);
  return out;
}

}  // namespace published_rates
