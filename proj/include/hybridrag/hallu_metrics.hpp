#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridrag/corpus.hpp"
#include "hybridrag/error.hpp"
#include "hybridrag/ranked_list.hpp"

namespace hybridrag {

enum class Verdict { correct, hallucinated, insufficient_context };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::correct: return "correct";
    case Verdict::hallucinated: return "hallucinated";
    case Verdict::insufficient_context: return "insufficient_context";
  }
  return "";
}

inline std::optional<Verdict> parse_verdict(std::string_view s) {
  if (s == "correct") return Verdict::correct;
  if (s == "hallucinated") return Verdict::hallucinated;
  if (s == "insufficient_context") return Verdict::insufficient_context;
  return std::nullopt;
}

struct Annotation {
  std::string query_id;
  RetrieverKind retriever = RetrieverKind::hybrid;
  Verdict verdict = Verdict::correct;
  SourceDataset source_ds = SourceDataset::halu_eval;
  Label original_label = Label::pass;
};

namespace detail {

// RFC 4180-ish: quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back().push_back(c);
    }
  }
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return fields;
}

}  // namespace detail

/// CSV with header `query_id,retriever,verdict,source_ds,original_label`
/// (column order taken from the header).
inline std::vector<Annotation> ingest_annotations(std::istream& in) {
  std::vector<Annotation> out;
  std::string line;
  std::size_t row = 0;
  std::map<std::string, std::size_t> col;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::split_csv_line(line);
    if (col.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
      for (const char* name : {"query_id", "retriever", "verdict", "source_ds", "original_label"})
        if (!col.contains(name))
          throw Error(ErrorCategory::format, std::string("annotation header lacks column '") + name + "'");
      continue;
    }
    auto field = [&](const char* name) -> const std::string& {
      const auto i = col.at(name);
      if (i >= fields.size())
        throw Error(ErrorCategory::format, "annotation row " + std::to_string(row) + ": too few columns");
      return fields[i];
    };
    Annotation a;
    a.query_id = field("query_id");
    auto retriever = parse_retriever_kind(field("retriever"));
    if (!retriever)
      throw Error(ErrorCategory::validation,
                  "annotation row " + std::to_string(row) + ": unknown retriever '" + field("retriever") + "'");
    a.retriever = *retriever;
    auto verdict = parse_verdict(field("verdict"));
    if (!verdict)
      throw Error(ErrorCategory::validation,
                  "annotation row " + std::to_string(row) + ": unknown verdict '" + field("verdict") + "'");
    a.verdict = *verdict;
    auto ds = parse_source_dataset(field("source_ds"));
    if (!ds)
      throw Error(ErrorCategory::validation,
                  "annotation row " + std::to_string(row) + ": unknown source_ds '" + field("source_ds") + "'");
    a.source_ds = *ds;
    auto label = parse_label(field("original_label"));
    if (!label)
      throw Error(ErrorCategory::validation,
                  "annotation row " + std::to_string(row) + ": unknown label '" + field("original_label") + "'");
    a.original_label = *label;
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<Annotation> ingest_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::input, "cannot open annotations: " + path);
  return ingest_annotations(in);
}

inline void write_annotations(std::ostream& out, const std::vector<Annotation>& rows) {
  out << "query_id,retriever,verdict,source_ds,original_label\n";
  for (const auto& a : rows)
    out << a.query_id << ',' << to_string(a.retriever) << ',' << to_string(a.verdict) << ','
        << to_string(a.source_ds) << ',' << to_string(a.original_label) << '\n';
}

struct VerdictCounts {
  std::size_t correct = 0;
  std::size_t hallucinated = 0;
  std::size_t insufficient = 0;

  std::size_t total() const { return correct + hallucinated + insufficient; }
};

/// The four rates of one slice, full precision. adjusted_accuracy_pct is
/// empty when correct + hallucinated == 0.
struct SliceMetrics {
  VerdictCounts counts;
  double accuracy_pct = 0.0;
  double hallucination_rate_pct = 0.0;
  double rejection_rate_pct = 0.0;
  std::optional<double> adjusted_accuracy_pct;
};

inline SliceMetrics slice_metrics(const VerdictCounts& c) {
  if (c.total() == 0) throw Error(ErrorCategory::validation, "empty annotation slice");
  SliceMetrics m;
  m.counts = c;
  const auto n = static_cast<double>(c.total());
  m.accuracy_pct = 100.0 * static_cast<double>(c.correct) / n;
  m.hallucination_rate_pct = 100.0 * static_cast<double>(c.hallucinated) / n;
  m.rejection_rate_pct = 100.0 * static_cast<double>(c.insufficient) / n;
  if (const auto answered = c.correct + c.hallucinated; answered > 0)
    m.adjusted_accuracy_pct = 100.0 * static_cast<double>(c.correct) / static_cast<double>(answered);
  return m;
}

struct SliceSelector {
  std::optional<SourceDataset> dataset;
  std::optional<RetrieverKind> retriever;
  bool fails_only = false;

  bool matches(const Annotation& a) const {
    if (dataset && a.source_ds != *dataset) return false;
    if (retriever && a.retriever != *retriever) return false;
    if (fails_only && a.original_label != Label::fail) return false;
    return true;
  }
};

struct HallucinationReport {
  std::size_t n = 0;
  SliceMetrics overall;
  // "overall", each source dataset present, and "fails_only" when FAIL rows exist.
  std::map<std::string, SliceMetrics> slices;
};

inline VerdictCounts count_verdicts(const std::vector<const Annotation*>& rows) {
  VerdictCounts c;
  for (const auto* a : rows) {
    switch (a->verdict) {
      case Verdict::correct: ++c.correct; break;
      case Verdict::hallucinated: ++c.hallucinated; break;
      case Verdict::insufficient_context: ++c.insufficient; break;
    }
  }
  return c;
}

inline HallucinationReport compute_report(const std::vector<Annotation>& annotations, const SliceSelector& slice = {}) {
  std::vector<const Annotation*> rows;
  for (const auto& a : annotations)
    if (slice.matches(a)) rows.push_back(&a);
  if (rows.empty()) throw Error(ErrorCategory::validation, "no annotations in the selected slice");

  HallucinationReport r;
  r.n = rows.size();
  r.overall = slice_metrics(count_verdicts(rows));
  r.slices.emplace("overall", r.overall);
  for (auto ds : kAllSourceDatasets) {
    std::vector<const Annotation*> sub;
    for (const auto* a : rows)
      if (a->source_ds == ds) sub.push_back(a);
    if (!sub.empty()) r.slices.emplace(std::string(to_string(ds)), slice_metrics(count_verdicts(sub)));
  }
  std::vector<const Annotation*> fails;
  for (const auto* a : rows)
    if (a->original_label == Label::fail) fails.push_back(a);
  if (!fails.empty()) r.slices.emplace("fails_only", slice_metrics(count_verdicts(fails)));
  return r;
}

/// Restricts to rows whose benchmark label was FAIL.
inline HallucinationReport fails_only_report(const std::vector<Annotation>& annotations,
                                             std::optional<RetrieverKind> retriever = std::nullopt) {
  SliceSelector sel;
  sel.retriever = retriever;
  sel.fails_only = true;
  bool any = false;
  for (const auto& a : annotations) any = any || sel.matches(a);
  if (!any) throw Error(ErrorCategory::validation, "no FAIL-labelled annotations to report on");
  return compute_report(annotations, sel);
}

/// Half-up rounding to two decimals, applied only when printing.
inline double round_half_up_2(double v) { return std::floor(v * 100.0 + 0.5 + 1e-9) / 100.0; }

inline std::string format_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up_2(v));
  return buf;
}

inline std::string format_pct(const std::optional<double>& v) { return v ? format_pct(*v) : "undefined"; }

/// "acc hall rej adj" as printed in report tables.
inline std::string format_row_values(const SliceMetrics& m) {
  return format_pct(m.accuracy_pct) + " " + format_pct(m.hallucination_rate_pct) + " " +
         format_pct(m.rejection_rate_pct) + " " + format_pct(m.adjusted_accuracy_pct);
}

inline nlohmann::json to_json(const SliceMetrics& m) {
  nlohmann::json j{{"n", m.counts.total()},
                   {"correct", m.counts.correct},
                   {"hallucinated", m.counts.hallucinated},
                   {"insufficient_context", m.counts.insufficient},
                   {"accuracy_pct", round_half_up_2(m.accuracy_pct)},
                   {"hallucination_rate_pct", round_half_up_2(m.hallucination_rate_pct)},
                   {"rejection_rate_pct", round_half_up_2(m.rejection_rate_pct)}};
  if (m.adjusted_accuracy_pct) j["adjusted_accuracy_pct"] = round_half_up_2(*m.adjusted_accuracy_pct);
  else j["adjusted_accuracy_pct"] = "undefined";
  return j;
}

inline nlohmann::json to_json(const HallucinationReport& r) {
  nlohmann::json slices = nlohmann::json::object();
  for (const auto& [name, m] : r.slices) slices[name] = to_json(m);
  return {{"n", r.n}, {"overall", to_json(r.overall)}, {"slices", slices}};
}

}  // namespace hybridrag
