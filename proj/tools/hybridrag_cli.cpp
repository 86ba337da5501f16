#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hybridrag/hybridrag.hpp"

namespace {

using namespace hybridrag;

struct Overrides {
  std::optional<std::string> corpus, queries, lexicon, embeddings, query_embeddings, stopwords, index, store, output_dir;
  std::optional<double> k1, b, alpha, epsilon, weight_floor;
  std::optional<std::size_t> k, max_synonyms, dim, parallelism;
  std::optional<std::string> embedding_endpoint, generation_endpoint, model;
  std::optional<std::uint64_t> seed;
  bool expand_baselines = false;

  void apply(PipelineConfig& cfg) const {
    auto set = [](auto& dst, const auto& src) {
      if (src) dst = *src;
    };
    set(cfg.paths.corpus, corpus);
    set(cfg.paths.queries, queries);
    set(cfg.paths.lexicon, lexicon);
    set(cfg.paths.embeddings, embeddings);
    set(cfg.paths.query_embeddings, query_embeddings);
    set(cfg.paths.stopwords, stopwords);
    set(cfg.paths.index, index);
    set(cfg.paths.store, store);
    set(cfg.paths.output_dir, output_dir);
    set(cfg.bm25.k1, k1);
    set(cfg.bm25.b, b);
    set(cfg.fusion.alpha, alpha);
    set(cfg.fusion.epsilon, epsilon);
    set(cfg.fusion.weight_floor, weight_floor);
    set(cfg.fusion.k, k);
    set(cfg.max_synonyms, max_synonyms);
    set(cfg.embedding_dim, dim);
    set(cfg.parallelism, parallelism);
    set(cfg.embedding_endpoint, embedding_endpoint);
    set(cfg.generation.endpoint, generation_endpoint);
    set(cfg.generation.model_name, model);
    set(cfg.seed, seed);
    if (expand_baselines) cfg.expand_baselines = true;
  }
};

std::vector<RetrieverKind> parse_kinds(const std::string& s) {
  if (s == "all") return {RetrieverKind::sparse, RetrieverKind::dense, RetrieverKind::hybrid};
  auto k = parse_retriever_kind(s);
  if (!k) throw Error(ErrorCategory::config, "unknown retriever '" + s + "' (sparse, dense, hybrid or all)");
  return {*k};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid sparse/dense retrieval and hallucination evaluation pipeline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path;
  Overrides ov;
  app.add_option("--config", config_path, "JSON config file (flags override it)");
  app.add_option("--corpus", ov.corpus, "HaluBench JSON-lines corpus");
  app.add_option("--queries", ov.queries, "query subset (JSON-lines); defaults to the corpus");
  app.add_option("--lexicon", ov.lexicon, "synonym lexicon TSV");
  app.add_option("--embeddings", ov.embeddings, "document embeddings (JSON-lines or binary)");
  app.add_option("--query-embeddings", ov.query_embeddings, "query embeddings keyed by text hash");
  app.add_option("--stopwords", ov.stopwords, "stopword list, one per line");
  app.add_option("--index", ov.index, "index file");
  app.add_option("--store", ov.store, "vector store file");
  app.add_option("--output-dir", ov.output_dir, "output directory");
  app.add_option("--k1", ov.k1, "BM25 k1");
  app.add_option("--b", ov.b, "BM25 b");
  app.add_option("--alpha", ov.alpha, "specificity scale");
  app.add_option("--epsilon", ov.epsilon, "RRF smoothing constant");
  app.add_option("--k", ov.k, "retrieval depth");
  app.add_option("--weight-floor", ov.weight_floor, "minimum weight per retriever");
  app.add_option("--max-synonyms", ov.max_synonyms, "synonyms per query term");
  app.add_flag("--expand-baselines", ov.expand_baselines, "feed the expanded query to sparse/dense baselines too");
  app.add_option("--dim", ov.dim, "embedding dimension");
  app.add_option("--embedding-endpoint", ov.embedding_endpoint, "embedding service URL");
  app.add_option("--generation-endpoint", ov.generation_endpoint, "LLM completion URL");
  app.add_option("--model", ov.model, "generator model name");
  app.add_option("--parallelism", ov.parallelism, "concurrent queries/requests");
  app.add_option("--seed", ov.seed, "random seed");

  auto* index_cmd = app.add_subcommand("index", "build the BM25 index and corpus stats");
  auto* embed_cmd = app.add_subcommand("embed-import", "import or compute document embeddings");

  auto* retrieve_cmd = app.add_subcommand("retrieve", "produce run files");
  std::string retriever = "hybrid";
  std::string dump_path;
  retrieve_cmd->add_option("--retriever", retriever, "sparse, dense, hybrid or all")->capture_default_str();
  retrieve_cmd->add_option("--dump-query-texts", dump_path,
                           "write the query texts the dense side needs (JSON-lines) and exit");

  auto* eval_cmd = app.add_subcommand("eval-retrieval", "MAP@k and NDCG@k for run files");
  std::vector<std::string> run_paths;
  std::string qrels_path;
  eval_cmd->add_option("runs", run_paths, "run files")->required();
  eval_cmd->add_option("--qrels", qrels_path, "judgments file; derived from the queries otherwise");

  auto* generate_cmd = app.add_subcommand("generate", "answer queries from a run file");
  std::string gen_run;
  generate_cmd->add_option("run", gen_run, "run file")->required();

  auto* report_cmd = app.add_subcommand("report", "hallucination metrics from annotations");
  std::string annotations_path;
  report_cmd->add_option("annotations", annotations_path, "annotation CSV")->required();

  auto* sample_cmd = app.add_subcommand("sample", "balanced PASS/FAIL subset per dataset");
  std::size_t per_dataset = 50, per_label = 25;
  std::string sample_out;
  sample_cmd->add_option("--per-dataset", per_dataset)->capture_default_str();
  sample_cmd->add_option("--per-label", per_label)->capture_default_str();
  sample_cmd->add_option("-o,--out", sample_out, "output JSON-lines")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) load_config_file(cfg, config_path);
    ov.apply(cfg);
    apply_env(cfg);
    cfg.validate();

    if (*index_cmd) {
      cmd_index(cfg, std::cerr);
    } else if (*embed_cmd) {
      cmd_embed_import(cfg, std::cerr);
    } else if (*retrieve_cmd) {
      const auto kinds = parse_kinds(retriever);
      if (!dump_path.empty()) {
        auto n = cmd_dump_query_texts(cfg, kinds, dump_path);
        std::cerr << "wrote " << n << " query texts -> " << dump_path << '\n';
      } else {
        cmd_retrieve(cfg, kinds, std::cerr);
      }
    } else if (*eval_cmd) {
      cmd_eval_retrieval(cfg, run_paths, qrels_path, std::cout);
    } else if (*generate_cmd) {
      cmd_generate(cfg, gen_run, std::cerr);
    } else if (*report_cmd) {
      cmd_report(cfg, annotations_path, std::cout);
    } else if (*sample_cmd) {
      cmd_sample(cfg, per_dataset, per_label, sample_out, std::cerr);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.category()) << ": " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: format: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: input: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
