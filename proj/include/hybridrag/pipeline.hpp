#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hybridrag/config.hpp"
#include "hybridrag/corpus.hpp"
#include "hybridrag/dense_store.hpp"
#include "hybridrag/embedding_client.hpp"
#include "hybridrag/expansion.hpp"
#include "hybridrag/fusion.hpp"
#include "hybridrag/generation.hpp"
#include "hybridrag/hallu_metrics.hpp"
#include "hybridrag/rank_metrics.hpp"
#include "hybridrag/sparse_index.hpp"

namespace hybridrag {

// ---------------------------------------------------------------------------
// Provenance

struct Provenance {
  std::string command;
  std::string retriever;  // optional
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string corpus_hash;

  std::string to_line() const {
    std::string s = "# hybridrag-provenance command=" + command;
    if (!retriever.empty()) s += " retriever=" + retriever;
    s += " config_hash=" + config_hash + " seed=" + std::to_string(seed) + " corpus_hash=" + corpus_hash;
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"command", command}, {"config_hash", config_hash}, {"seed", seed}, {"corpus_hash", corpus_hash}};
    if (!retriever.empty()) j["retriever"] = retriever;
    return j;
  }
};

/// Key/value pairs of the first provenance comment line, or empty.
inline std::map<std::string, std::string> read_provenance(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# hybridrag-provenance", 0) == 0) {
      std::istringstream ss(line.substr(22));
      std::string tok;
      while (ss >> tok)
        if (auto eq = tok.find('='); eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      break;
    }
    if (line.empty() || line[0] != '#') break;
  }
  return kv;
}

inline std::map<std::string, std::string> read_provenance_file(const std::string& path) {
  std::ifstream in(path);
  return in ? read_provenance(in) : std::map<std::string, std::string>{};
}

// ---------------------------------------------------------------------------
// Retrieval

/// Key used to look up a precomputed query embedding for `text`.
inline std::string query_text_key(const std::string& text) { return hex64(fnv1a(text)); }

/// Resolves query embeddings either from a precomputed store keyed by
/// query_text_key() or from the embedding service.
class QueryEncoder {
 public:
  QueryEncoder() = default;
  explicit QueryEncoder(VectorStore precomputed) : store_(std::move(precomputed)) {}
  explicit QueryEncoder(std::shared_ptr<EmbeddingClient> client) : client_(std::move(client)) {}

  bool available() const { return store_.has_value() || client_ != nullptr; }

  /// Fetches any texts not yet resolved; call before encode() from threads.
  void prefetch(const std::vector<std::string>& texts) {
    if (!client_) return;
    auto vecs = client_->fetch(texts);
    for (std::size_t i = 0; i < texts.size(); ++i) fetched_.insert_or_assign(texts[i], vecs[i]);
  }

  EmbeddingVector encode(const std::string& text) const {
    if (store_) {
      const auto key = query_text_key(text);
      if (!store_->contains(key))
        throw Error(ErrorCategory::missing_artifact,
                    "no query embedding for text key " + key + " (run `hybridrag retrieve --dump-query-texts` and embed them)");
      return store_->embedding(key);
    }
    if (auto it = fetched_.find(text); it != fetched_.end()) return it->second;
    throw Error(ErrorCategory::config, "no query embeddings configured (set paths.query_embeddings or embedding.endpoint)");
  }

 private:
  std::optional<VectorStore> store_;
  std::shared_ptr<EmbeddingClient> client_;
  std::map<std::string, EmbeddingVector> fetched_;
};

/// Everything needed to answer one question with any of the three retrievers.
class RetrievalEngine {
 public:
  RetrievalEngine(const InvertedIndex& index, const VectorStore* store, const Tokenizer& tokenizer,
                  const SynonymLexicon& lexicon, FusionConfig fusion, std::size_t max_synonyms,
                  bool expand_baselines = false)
      : index_(index),
        store_(store),
        tokenizer_(tokenizer),
        lexicon_(lexicon),
        fusion_(fusion),
        max_synonyms_(max_synonyms),
        expand_baselines_(expand_baselines) {
    fusion_.validate();
  }

  ExpandedQuery expand_question(const std::string& question, bool with_synonyms = true) const {
    auto terms = tokenizer_.tokenize(question);
    return with_synonyms ? expand(terms, lexicon_, max_synonyms_) : expand(terms, SynonymLexicon{}, 0);
  }

  /// Text the dense encoder must see for this retriever.
  std::string dense_query_text(RetrieverKind kind, const std::string& question) const {
    if (kind == RetrieverKind::hybrid || expand_baselines_)
      return expanded_query_text(question, expand_question(question));
    return question;
  }

  RankedList retrieve(RetrieverKind kind, const std::string& question, const QueryEncoder& encoder) const {
    switch (kind) {
      case RetrieverKind::sparse:
        return sparse_retrieve(index_, expand_question(question, expand_baselines_), fusion_.k);
      case RetrieverKind::dense:
        return dense_retrieve(require_store(), encoder.encode(dense_query_text(kind, question)), fusion_.k);
      case RetrieverKind::hybrid: {
        const auto q = expand_question(question);
        return hybrid_retrieve(index_, require_store(), q, encoder.encode(expanded_query_text(question, q)), fusion_);
      }
    }
    return {};
  }

  /// Runs every record, with up to `threads` queries in flight.
  RunFile run(RetrieverKind kind, const std::vector<QueryRecord>& records, QueryEncoder& encoder,
              std::size_t threads = 1) const {
    if (kind != RetrieverKind::sparse) {
      std::vector<std::string> texts;
      for (const auto& r : records) texts.push_back(dense_query_text(kind, r.question));
      encoder.prefetch(texts);
    }
    std::vector<RankedList> lists(records.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (;;) {
        const auto i = next.fetch_add(1);
        if (i >= records.size()) return;
        try {
          lists[i] = retrieve(kind, records[i].question, encoder);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = records.size();
          return;
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < std::max<std::size_t>(1, threads); ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    RunFile run;
    for (std::size_t i = 0; i < records.size(); ++i) run.insert_or_assign(records[i].id, std::move(lists[i]));
    return run;
  }

  const FusionConfig& fusion() const { return fusion_; }

 private:
  const VectorStore& require_store() const {
    if (!store_) throw Error(ErrorCategory::missing_artifact, "dense retrieval needs a vector store (run `hybridrag embed-import`)");
    return *store_;
  }

  const InvertedIndex& index_;
  const VectorStore* store_;
  const Tokenizer& tokenizer_;
  const SynonymLexicon& lexicon_;
  FusionConfig fusion_;
  std::size_t max_synonyms_;
  bool expand_baselines_;
};

// ---------------------------------------------------------------------------
// Commands. Each returns its in-memory result and writes its artifacts under
// the configured paths; `log` receives warnings and progress lines.

namespace detail {

inline void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw Error(ErrorCategory::config, what + " path is not configured");
  if (!std::filesystem::exists(path)) throw Error(ErrorCategory::input, what + " not found: " + path);
}

inline void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

}  // namespace detail

inline Tokenizer make_tokenizer(const PipelineConfig& cfg) {
  return cfg.paths.stopwords.empty() ? Tokenizer::english() : Tokenizer::from_file(cfg.paths.stopwords);
}

inline SynonymLexicon make_lexicon(const PipelineConfig& cfg) {
  return cfg.paths.lexicon.empty() ? SynonymLexicon{} : load_lexicon(cfg.paths.lexicon);
}

inline EmbeddingClientConfig embedding_client_config(const PipelineConfig& cfg) {
  EmbeddingClientConfig ec;
  ec.endpoint = cfg.embedding_endpoint;
  ec.dim = cfg.embedding_dim;
  ec.batch_size = cfg.embedding_batch;
  ec.max_in_flight = cfg.parallelism;
  ec.auth_token = cfg.generation.auth_token;
  return ec;
}

inline IngestResult load_corpus(const PipelineConfig& cfg, const Tokenizer& tok) {
  detail::require_file(cfg.paths.corpus, "corpus");
  return ingest_halubench(cfg.paths.corpus, tok);
}

/// Query records: the configured subset (linked to the corpus by context) or
/// every corpus record.
inline std::vector<QueryRecord> load_queries(const PipelineConfig& cfg, const IngestResult& corpus,
                                             const Tokenizer& tok) {
  if (cfg.paths.queries.empty()) return corpus.records;
  detail::require_file(cfg.paths.queries, "queries");
  auto subset = ingest_halubench(cfg.paths.queries, tok);
  link_records(subset.records, corpus.corpus);
  return subset.records;
}

inline Provenance make_provenance(const PipelineConfig& cfg, const Tokenizer& tok, std::string command,
                                  std::uint64_t corpus_hash, std::string retriever = {}) {
  Provenance p;
  p.command = std::move(command);
  p.retriever = std::move(retriever);
  p.config_hash = hex64(fnv1a(retrieval_fingerprint(cfg, tok)));
  p.seed = cfg.seed;
  p.corpus_hash = hex64(corpus_hash);
  return p;
}

inline void check_corpus_hash(const std::map<std::string, std::string>& prov, std::uint64_t corpus_hash,
                              const std::string& artifact) {
  auto it = prov.find("corpus_hash");
  if (it != prov.end() && it->second != hex64(corpus_hash))
    throw Error(ErrorCategory::mismatch, artifact + " was built from corpus " + it->second + ", current corpus is " +
                                             hex64(corpus_hash));
}

inline nlohmann::json stats_json(const CorpusStats& s) {
  return {{"n_docs", s.n_docs}, {"avg_doc_len", s.avg_doc_len}, {"vocabulary", s.doc_freq.size()},
          {"total_terms", s.total_terms}};
}

inline InvertedIndex cmd_index(const PipelineConfig& cfg, std::ostream& log) {
  const auto tok = make_tokenizer(cfg);
  const auto ingest = load_corpus(cfg, tok);
  auto index = build_index(ingest.corpus, cfg.bm25);
  detail::ensure_dir(std::filesystem::path(cfg.paths.index_path()).parent_path().string());
  index.save_file(cfg.paths.index_path());
  std::ofstream stats(cfg.paths.index_path() + ".stats.json");
  nlohmann::json j{{"provenance", make_provenance(cfg, tok, "index", ingest.corpus.content_hash()).to_json()},
                   {"stats", stats_json(index.stats())},
                   {"records", ingest.records.size()}};
  stats << j.dump(2) << '\n';
  log << "indexed " << index.num_docs() << " documents (" << ingest.records.size() << " records, "
      << index.stats().doc_freq.size() << " terms) -> " << cfg.paths.index_path() << '\n';
  return index;
}

inline VectorStore cmd_embed_import(const PipelineConfig& cfg, std::ostream& log) {
  const auto tok = make_tokenizer(cfg);
  const auto ingest = load_corpus(cfg, tok);
  const auto& corpus = ingest.corpus;

  VectorStore store(cfg.embedding_dim);
  if (!cfg.paths.embeddings.empty()) {
    detail::require_file(cfg.paths.embeddings, "embeddings");
    store = load_embeddings(cfg.paths.embeddings, cfg.embedding_dim);
  } else if (!cfg.embedding_endpoint.empty()) {
    EmbeddingClient client(embedding_client_config(cfg));
    std::vector<std::string> ids, texts;
    for (const auto& d : corpus.documents()) {
      ids.push_back(d.doc_id);
      texts.push_back(d.text);
    }
    auto vecs = client.fetch(texts);
    for (std::size_t i = 0; i < ids.size(); ++i) store.add(ids[i], vecs[i]);
  } else {
    throw Error(ErrorCategory::config, "embed-import needs paths.embeddings or embedding.endpoint");
  }

  std::set<std::string> known;
  for (const auto& d : corpus.documents()) known.insert(d.doc_id);
  const auto dropped = store.restrict_to(known);
  if (!dropped.empty())
    log << "warning: " << dropped.size() << " embedding(s) have no corpus document and are ignored (first: "
        << dropped.front() << ")\n";
  std::size_t missing = 0;
  for (const auto& id : known) missing += store.contains(id) ? 0 : 1;
  if (missing) log << "warning: " << missing << " corpus document(s) have no embedding\n";

  // Persist only the vectors that belong to the corpus.
  VectorStore out(store.dim());
  for (const auto& id : store.ids())
    if (known.contains(id)) out.add(id, store.embedding(id));
  out.set_corpus_hash(corpus.content_hash());
  detail::ensure_dir(std::filesystem::path(cfg.paths.store_path()).parent_path().string());
  out.save_file(cfg.paths.store_path());
  log << "stored " << out.size() << " vectors of dim " << out.dim() << " -> " << cfg.paths.store_path() << '\n';
  return out;
}

inline std::string run_file_path(const PipelineConfig& cfg, RetrieverKind kind) {
  return cfg.paths.output_dir + "/run." + std::string(to_string(kind)) + ".txt";
}

inline std::string render_run(const RunFile& run, const Provenance& prov) {
  std::ostringstream out;
  out << prov.to_line() << '\n';
  write_run(out, run, prov.retriever);
  return out.str();
}

/// Writes {"id": query_text_key(text), "text": text} for every distinct text
/// the dense side will need, so an external encoder can embed them.
inline std::size_t cmd_dump_query_texts(const PipelineConfig& cfg, const std::vector<RetrieverKind>& kinds,
                                        const std::string& out_path) {
  const auto tok = make_tokenizer(cfg);
  const auto lex = make_lexicon(cfg);
  const auto ingest = load_corpus(cfg, tok);
  const auto records = load_queries(cfg, ingest, tok);
  // The engine only needs the tokenizer and lexicon to produce texts.
  const auto index = build_index(ingest.corpus, cfg.bm25);
  RetrievalEngine engine(index, nullptr, tok, lex, cfg.fusion, cfg.max_synonyms, cfg.expand_baselines);
  std::set<std::string> seen;
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorCategory::input, "cannot write " + out_path);
  for (const auto& r : records)
    for (auto kind : kinds) {
      if (kind == RetrieverKind::sparse) continue;
      auto text = engine.dense_query_text(kind, r.question);
      if (seen.insert(text).second) out << nlohmann::json{{"id", query_text_key(text)}, {"text", text}}.dump() << '\n';
    }
  return seen.size();
}

inline std::map<RetrieverKind, RunFile> cmd_retrieve(const PipelineConfig& cfg, const std::vector<RetrieverKind>& kinds,
                                                     std::ostream& log) {
  const auto tok = make_tokenizer(cfg);
  const auto lex = make_lexicon(cfg);
  const auto ingest = load_corpus(cfg, tok);
  const auto corpus_hash = ingest.corpus.content_hash();
  const auto records = load_queries(cfg, ingest, tok);

  if (!std::filesystem::exists(cfg.paths.index_path()))
    throw Error(ErrorCategory::missing_artifact,
                "index not found at " + cfg.paths.index_path() + " (produced by `hybridrag index`)");
  const auto index = InvertedIndex::load_file(cfg.paths.index_path());
  if (index.corpus_hash() != corpus_hash)
    throw Error(ErrorCategory::mismatch, "index was built from a different corpus (rerun `hybridrag index`)");

  const bool needs_dense = std::any_of(kinds.begin(), kinds.end(), [](auto k) { return k != RetrieverKind::sparse; });
  std::optional<VectorStore> store;
  QueryEncoder encoder;
  if (needs_dense) {
    if (!std::filesystem::exists(cfg.paths.store_path()))
      throw Error(ErrorCategory::missing_artifact,
                  "vector store not found at " + cfg.paths.store_path() + " (produced by `hybridrag embed-import`)");
    store = load_embeddings(cfg.paths.store_path(), cfg.embedding_dim);
    if (store->corpus_hash() != 0 && store->corpus_hash() != corpus_hash)
      throw Error(ErrorCategory::mismatch, "vector store was built from a different corpus (rerun `hybridrag embed-import`)");
    if (!cfg.paths.query_embeddings.empty()) {
      detail::require_file(cfg.paths.query_embeddings, "query embeddings");
      encoder = QueryEncoder(load_embeddings(cfg.paths.query_embeddings, cfg.embedding_dim));
    } else if (!cfg.embedding_endpoint.empty()) {
      encoder = QueryEncoder(std::make_shared<EmbeddingClient>(embedding_client_config(cfg)));
    } else {
      throw Error(ErrorCategory::config, "dense retrieval needs paths.query_embeddings or embedding.endpoint");
    }
  }

  RetrievalEngine engine(index, store ? &*store : nullptr, tok, lex, cfg.fusion, cfg.max_synonyms,
                         cfg.expand_baselines);
  detail::ensure_dir(cfg.paths.output_dir);
  std::map<RetrieverKind, RunFile> out;
  for (auto kind : kinds) {
    auto run = engine.run(kind, records, encoder, cfg.parallelism);
    const auto prov = make_provenance(cfg, tok, "retrieve", corpus_hash, std::string(to_string(kind)));
    std::ofstream f(run_file_path(cfg, kind), std::ios::binary);
    if (!f) throw Error(ErrorCategory::input, "cannot write " + run_file_path(cfg, kind));
    f << render_run(run, prov);
    log << to_string(kind) << ": " << run.size() << " queries -> " << run_file_path(cfg, kind) << '\n';
    out.emplace(kind, std::move(run));
  }
  return out;
}

struct NamedMetrics {
  std::string name;
  MetricsReport report;
};

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

/// One column per run, MAP@k and NDCG@k rows.
inline std::string render_retrieval_table(const std::vector<NamedMetrics>& rows) {
  std::ostringstream out;
  const auto k = rows.empty() ? std::size_t{3} : rows.front().report.k;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  out << pad("Metric", 10);
  for (const auto& r : rows) out << pad(r.name, 10);
  out << '\n' << pad("MAP@" + std::to_string(k), 10);
  for (const auto& r : rows) out << pad(format_metric(r.report.map_at_k), 10);
  out << '\n' << pad("NDCG@" + std::to_string(k), 10);
  for (const auto& r : rows) out << pad(format_metric(r.report.ndcg_at_k), 10);
  out << '\n';
  return out.str();
}

inline std::vector<NamedMetrics> cmd_eval_retrieval(const PipelineConfig& cfg, const std::vector<std::string>& run_paths,
                                                    const std::string& qrels_path, std::ostream& out) {
  const auto tok = make_tokenizer(cfg);
  RelevanceJudgments judgments;
  std::optional<std::uint64_t> corpus_hash;
  if (!qrels_path.empty()) {
    judgments = read_qrels_file(qrels_path);
  } else {
    const auto ingest = load_corpus(cfg, tok);
    corpus_hash = ingest.corpus.content_hash();
    judgments = derive_judgments(load_queries(cfg, ingest, tok));
  }
  std::vector<NamedMetrics> rows;
  for (const auto& path : run_paths) {
    auto prov = read_provenance_file(path);
    if (corpus_hash) check_corpus_hash(prov, *corpus_hash, path);
    const auto run = read_run_file(path);
    std::string name = prov.contains("retriever") ? prov["retriever"] : std::filesystem::path(path).stem().string();
    rows.push_back({name, evaluate_run(run, judgments, cfg.fusion.k)});
  }
  Provenance p = make_provenance(cfg, tok, "eval-retrieval", corpus_hash.value_or(0));
  out << p.to_line() << '\n' << render_retrieval_table(rows);
  return rows;
}

inline std::vector<GeneratedAnswer> cmd_generate(const PipelineConfig& cfg, const std::string& run_path,
                                                 std::ostream& log) {
  const auto tok = make_tokenizer(cfg);
  const auto ingest = load_corpus(cfg, tok);
  const auto corpus_hash = ingest.corpus.content_hash();
  const auto records = load_queries(cfg, ingest, tok);
  if (!std::filesystem::exists(run_path))
    throw Error(ErrorCategory::missing_artifact, "run file not found: " + run_path + " (produced by `hybridrag retrieve`)");
  auto prov = read_provenance_file(run_path);
  check_corpus_hash(prov, corpus_hash, run_path);
  const auto run = read_run_file(run_path);
  const auto kind = parse_retriever_kind(prov.contains("retriever") ? prov["retriever"] : "hybrid")
                        .value_or(RetrieverKind::hybrid);
  if (cfg.generation.endpoint.empty()) throw Error(ErrorCategory::config, "generation.endpoint is not configured");

  BatchOptions opts;
  opts.retriever = kind;
  opts.contexts_per_query = cfg.fusion.k;
  opts.answers_path = cfg.paths.output_dir + "/answers." + std::string(to_string(kind)) + ".jsonl";
  opts.provenance = make_provenance(cfg, tok, "generate", corpus_hash, std::string(to_string(kind))).to_json();
  detail::ensure_dir(cfg.paths.output_dir);
  auto answers = run_generation_batch(records, run, ingest.corpus, cfg.generation, opts);
  std::size_t failed = 0;
  for (const auto& a : answers) failed += a.ok ? 0 : 1;
  log << to_string(kind) << ": " << answers.size() << " answers (" << failed << " failed) -> " << opts.answers_path
      << '\n';
  return answers;
}

/// Report tables: per dataset x retriever, overall per retriever, and
/// a FAIL-only section.
inline std::string render_hallucination_tables(const std::vector<Annotation>& annotations) {
  std::ostringstream out;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::set<RetrieverKind> retrievers;
  for (const auto& a : annotations) retrievers.insert(a.retriever);
  auto row = [&](const std::string& label, RetrieverKind kind, const SliceMetrics& m) {
    out << pad(label, 14) << pad(std::string(to_string(kind)), 8) << "| " << format_row_values(m)
        << " | n=" << m.counts.total() << '\n';
  };
  out << pad("Dataset", 14) << pad("Retr.", 8) << "| Acc% Hall% Rej% AdjAcc%\n";
  for (auto ds : kAllSourceDatasets)
    for (auto kind : retrievers) {
      SliceSelector sel{ds, kind, false};
      std::vector<const Annotation*> rows;
      for (const auto& a : annotations)
        if (sel.matches(a)) rows.push_back(&a);
      if (!rows.empty()) row(std::string(to_string(ds)), kind, slice_metrics(count_verdicts(rows)));
    }
  out << "\nOverall\n";
  for (auto kind : retrievers) row("all", kind, compute_report(annotations, SliceSelector{std::nullopt, kind, false}).overall);
  bool any_fail = false;
  for (const auto& a : annotations) any_fail = any_fail || a.original_label == Label::fail;
  if (any_fail) {
    out << "\nFAIL-only\n";
    for (auto kind : retrievers) {
      SliceSelector sel{std::nullopt, kind, true};
      bool has = false;
      for (const auto& a : annotations) has = has || sel.matches(a);
      if (has) row("fails", kind, fails_only_report(annotations, kind).overall);
    }
  }
  return out.str();
}

inline nlohmann::json cmd_report(const PipelineConfig& cfg, const std::string& annotations_path, std::ostream& out) {
  const auto annotations = ingest_annotations(annotations_path);
  if (annotations.empty()) throw Error(ErrorCategory::validation, "annotation file has no rows: " + annotations_path);
  const auto tok = make_tokenizer(cfg);
  Provenance p = make_provenance(cfg, tok, "report", 0);
  p.corpus_hash = hex64(file_hash(annotations_path));
  out << p.to_line() << '\n' << render_hallucination_tables(annotations);

  nlohmann::json j{{"provenance", p.to_json()}};
  std::set<RetrieverKind> retrievers;
  for (const auto& a : annotations) retrievers.insert(a.retriever);
  for (auto kind : retrievers) {
    j["retrievers"][std::string(to_string(kind))] = to_json(compute_report(annotations, SliceSelector{std::nullopt, kind, false}));
  }
  detail::ensure_dir(cfg.paths.output_dir);
  std::ofstream(cfg.paths.output_dir + "/report.json") << j.dump(2) << '\n';
  return j;
}

inline std::vector<QueryRecord> cmd_sample(const PipelineConfig& cfg, std::size_t per_dataset, std::size_t per_label,
                                           const std::string& out_path, std::ostream& log) {
  const auto tok = make_tokenizer(cfg);
  const auto ingest = load_corpus(cfg, tok);
  auto picked = sample_balanced(ingest.records, per_dataset, per_label, cfg.seed);
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorCategory::input, "cannot write " + out_path);
  out << nlohmann::json{{"provenance", make_provenance(cfg, tok, "sample", ingest.corpus.content_hash()).to_json()}}.dump()
      << '\n';
  write_halubench(out, picked);
  log << "sampled " << picked.size() << " records (seed " << cfg.seed << ") -> " << out_path << '\n';
  return picked;
}

}  // namespace hybridrag
