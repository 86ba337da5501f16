#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hybridrag/embedding_client.hpp"
#include "hybridrag/error.hpp"
#include "hybridrag/fusion.hpp"
#include "hybridrag/generation.hpp"
#include "hybridrag/hash.hpp"
#include "hybridrag/sparse_index.hpp"

namespace hybridrag {

inline constexpr const char* kAuthTokenEnv = "HYBRIDRAG_API_TOKEN";

struct PipelinePaths {
  std::string corpus;            // HaluBench JSON-lines
  std::string queries;           // optional subset (HaluBench JSON-lines); defaults to corpus
  std::string lexicon;           // optional synonym TSV; empty disables expansion
  std::string embeddings;        // document embeddings (JSON-lines or binary)
  std::string query_embeddings;  // optional, keyed by query-text hash
  std::string stopwords;         // optional; built-in English list otherwise
  std::string index;             // defaults to <output_dir>/index.bin
  std::string store;             // defaults to <output_dir>/embeddings.bin
  std::string output_dir = "out";

  std::string index_path() const { return index.empty() ? output_dir + "/index.bin" : index; }
  std::string store_path() const { return store.empty() ? output_dir + "/embeddings.bin" : store; }
};

struct PipelineConfig {
  PipelinePaths paths;
  Bm25Params bm25;
  FusionConfig fusion;
  std::size_t max_synonyms = 2;
  bool expand_baselines = false;  // sparse/dense baselines see the unexpanded query
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  std::string embedding_endpoint;
  std::size_t embedding_batch = 32;
  GenerationConfig generation;
  std::size_t parallelism = 4;
  std::uint64_t seed = 42;

  void validate() const {
    bm25.validate();
    fusion.validate();
    generation.validate();
    if (embedding_dim == 0) throw Error(ErrorCategory::config, "embedding dim must be >= 1");
    if (parallelism == 0) throw Error(ErrorCategory::config, "parallelism must be >= 1");
  }
};

namespace detail {
template <class T>
void read_if(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key) && !j[key].is_null()) dst = j[key].get<T>();
}
}  // namespace detail

/// Overlays a JSON config document onto `cfg`. Unknown keys are ignored.
inline void apply_config_json(PipelineConfig& cfg, const nlohmann::json& j) {
  using detail::read_if;
  try {
    if (auto p = j.find("paths"); p != j.end()) {
      read_if(*p, "corpus", cfg.paths.corpus);
      read_if(*p, "queries", cfg.paths.queries);
      read_if(*p, "lexicon", cfg.paths.lexicon);
      read_if(*p, "embeddings", cfg.paths.embeddings);
      read_if(*p, "query_embeddings", cfg.paths.query_embeddings);
      read_if(*p, "stopwords", cfg.paths.stopwords);
      read_if(*p, "index", cfg.paths.index);
      read_if(*p, "store", cfg.paths.store);
      read_if(*p, "output_dir", cfg.paths.output_dir);
    }
    if (auto b = j.find("bm25"); b != j.end()) {
      read_if(*b, "k1", cfg.bm25.k1);
      read_if(*b, "b", cfg.bm25.b);
    }
    if (auto f = j.find("fusion"); f != j.end()) {
      read_if(*f, "alpha", cfg.fusion.alpha);
      read_if(*f, "epsilon", cfg.fusion.epsilon);
      read_if(*f, "k", cfg.fusion.k);
      read_if(*f, "weight_floor", cfg.fusion.weight_floor);
    }
    if (auto e = j.find("expansion"); e != j.end()) {
      read_if(*e, "max_synonyms", cfg.max_synonyms);
      read_if(*e, "apply_to_baselines", cfg.expand_baselines);
    }
    if (auto e = j.find("embedding"); e != j.end()) {
      read_if(*e, "dim", cfg.embedding_dim);
      read_if(*e, "endpoint", cfg.embedding_endpoint);
      read_if(*e, "batch_size", cfg.embedding_batch);
    }
    if (auto g = j.find("generation"); g != j.end()) {
      read_if(*g, "endpoint", cfg.generation.endpoint);
      read_if(*g, "model", cfg.generation.model_name);
      read_if(*g, "max_new_tokens", cfg.generation.max_new_tokens);
      read_if(*g, "temperature", cfg.generation.temperature);
      read_if(*g, "top_p", cfg.generation.top_p);
      read_if(*g, "retries", cfg.generation.retries);
      read_if(*g, "max_in_flight", cfg.generation.max_in_flight);
      read_if(*g, "chat_messages", cfg.generation.chat_messages);
      if (g->contains("timeout_ms")) cfg.generation.timeout = std::chrono::milliseconds((*g)["timeout_ms"].get<long long>());
      if (g->contains("backoff_ms"))
        cfg.generation.initial_backoff = std::chrono::milliseconds((*g)["backoff_ms"].get<long long>());
    }
    read_if(j, "parallelism", cfg.parallelism);
    read_if(j, "seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::config, std::string("bad config value: ") + e.what());
  }
}

inline void load_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::input, "cannot open config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCategory::config, "config is not valid JSON: " + std::string(e.what()));
  }
  apply_config_json(cfg, j);
}

/// Token from the environment when the config does not carry one.
inline void apply_env(PipelineConfig& cfg) {
  if (cfg.generation.auth_token.empty())
    if (const char* tok = std::getenv(kAuthTokenEnv)) cfg.generation.auth_token = tok;
}

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t file_hash(const std::string& path) {
  if (path.empty()) return 0;
  std::ifstream in(path, std::ios::binary);
  if (!in) return 0;
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

/// Fingerprint of everything that changes retrieval output: BM25 and fusion
/// parameters, expansion settings, the lexicon bytes and the stopword set.
inline std::string retrieval_fingerprint(const PipelineConfig& cfg, const Tokenizer& tokenizer) {
  std::string stop;
  for (const auto& w : tokenizer.sorted_stopwords()) stop += w + "\n";
  std::string s;
  s += "bm25.k1=" + g17(cfg.bm25.k1) + ";";
  s += "bm25.b=" + g17(cfg.bm25.b) + ";";
  s += "fusion.alpha=" + g17(cfg.fusion.alpha) + ";";
  s += "fusion.epsilon=" + g17(cfg.fusion.epsilon) + ";";
  s += "fusion.k=" + std::to_string(cfg.fusion.k) + ";";
  s += "fusion.weight_floor=" + g17(cfg.fusion.weight_floor) + ";";
  s += "expansion.max_synonyms=" + std::to_string(cfg.max_synonyms) + ";";
  s += "expansion.apply_to_baselines=" + std::string(cfg.expand_baselines ? "1" : "0") + ";";
  s += "embedding.dim=" + std::to_string(cfg.embedding_dim) + ";";
  s += "lexicon=" + hex64(file_hash(cfg.paths.lexicon)) + ";";
  s += "stopwords=" + hex64(fnv1a(stop)) + ";";
  return s;
}

inline nlohmann::json to_json(const PipelineConfig& cfg) {
  return {
      {"paths",
       {{"corpus", cfg.paths.corpus},
        {"queries", cfg.paths.queries},
        {"lexicon", cfg.paths.lexicon},
        {"embeddings", cfg.paths.embeddings},
        {"query_embeddings", cfg.paths.query_embeddings},
        {"stopwords", cfg.paths.stopwords},
        {"index", cfg.paths.index_path()},
        {"store", cfg.paths.store_path()},
        {"output_dir", cfg.paths.output_dir}}},
      {"bm25", {{"k1", cfg.bm25.k1}, {"b", cfg.bm25.b}}},
      {"fusion",
       {{"alpha", cfg.fusion.alpha},
        {"epsilon", cfg.fusion.epsilon},
        {"k", cfg.fusion.k},
        {"weight_floor", cfg.fusion.weight_floor}}},
      {"expansion", {{"max_synonyms", cfg.max_synonyms}, {"apply_to_baselines", cfg.expand_baselines}}},
      {"embedding", {{"dim", cfg.embedding_dim}, {"endpoint", cfg.embedding_endpoint}, {"batch_size", cfg.embedding_batch}}},
      {"generation",
       {{"endpoint", cfg.generation.endpoint},
        {"model", cfg.generation.model_name},
        {"max_new_tokens", cfg.generation.max_new_tokens},
        {"temperature", cfg.generation.temperature},
        {"top_p", cfg.generation.top_p},
        {"retries", cfg.generation.retries},
        {"max_in_flight", cfg.generation.max_in_flight},
        {"chat_messages", cfg.generation.chat_messages},
        {"timeout_ms", cfg.generation.timeout.count()},
        {"backoff_ms", cfg.generation.initial_backoff.count()}}},
      {"parallelism", cfg.parallelism},
      {"seed", cfg.seed},
  };
}

}  // namespace hybridrag
