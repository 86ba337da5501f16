#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "hybridrag/corpus.hpp"
#include "hybridrag/error.hpp"
#include "hybridrag/http_util.hpp"
#include "hybridrag/rank_metrics.hpp"

namespace hybridrag {

/// Zero-shot instruction prompt with one Context and one Question slot.
struct PromptTemplate {
  static constexpr std::string_view kDefaultInstructions =
      "[INST] You are a precise and helpful assistant. When responding:\n"
      "- Provide a single, clear answer without repetition\n"
      "- Don't restate the question or context. DO NOT REPEAT THE PROMPT IN THE RESPONSE AND DO NOT WRITE ANY "
      "CODE.\n"
      "- Search if you can find the relevant answer in the provided context.\n"
      "- If uncertain, say \"The context doesn't provide sufficient information to answer the question\"\n"
      "- Avoid unnecessary formatting tokens in the response\n"
      "- Be direct and concise while maintaining a friendly tone, avoid long explanations\n"
      "- Only provide the answer to the question\n";

  std::string instruction_block{kDefaultInstructions};

  std::string render(std::string_view context, std::string_view question) const {
    std::string out = instruction_block;
    out += "Context: ";
    out += context;
    out += "\nQuestion: ";
    out += question;
    out += "\nAnswer: [/INST]";
    return out;
  }
};

inline constexpr std::string_view kContextSeparator = "\n\n";

/// Contexts are joined in rank order with a blank line between them. The
/// question slot receives the original question text.
inline std::string build_prompt(std::string_view question, const std::vector<std::string>& contexts,
                                const PromptTemplate& tmpl = {}) {
  if (contexts.empty()) throw Error(ErrorCategory::validation, "cannot build a prompt without context documents");
  std::string joined;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    if (i) joined += kContextSeparator;
    joined += contexts[i];
  }
  return tmpl.render(joined, question);
}

struct GenerationConfig {
  std::string endpoint;  // full URL, e.g. http://127.0.0.1:8080/v1/completions
  std::string model_name = "Llama-3-8B-Instruct";
  std::size_t max_new_tokens = 8132;
  double temperature = 0.8;
  double top_p = 0.9;
  std::chrono::milliseconds timeout{120000};
  std::size_t retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  std::size_t max_in_flight = 4;
  bool chat_messages = false;  // send {"messages": [...]} instead of {"prompt": ...}
  std::string auth_token;      // sent as a bearer token when non-empty

  void validate() const {
    if (!(temperature >= 0.0)) throw Error(ErrorCategory::config, "temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCategory::config, "top_p must be in (0, 1]");
    if (max_in_flight == 0) throw Error(ErrorCategory::config, "max_in_flight must be >= 1");
  }

  nlohmann::json request_body(const std::string& prompt) const {
    nlohmann::json body{{"model", model_name},
                        {"max_tokens", max_new_tokens},
                        {"temperature", temperature},
                        {"top_p", top_p}};
    if (chat_messages) body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    else body["prompt"] = prompt;
    return body;
  }
};

struct GeneratedAnswer {
  std::string query_id;
  RetrieverKind retriever_tag = RetrieverKind::hybrid;
  std::string prompt;
  std::string answer;
  double latency_ms = 0.0;
  std::string model_name;
  bool ok = false;
  std::string error;
  std::size_t attempts = 0;
};

inline nlohmann::json to_json(const GeneratedAnswer& a) {
  nlohmann::json j{{"query_id", a.query_id},
                   {"retriever", std::string(to_string(a.retriever_tag))},
                   {"model", a.model_name},
                   {"status", a.ok ? "ok" : "failed"},
                   {"attempts", a.attempts},
                   {"prompt", a.prompt},
                   {"answer", a.answer}};
  if (!a.ok) j["error"] = a.error;
  return j;
}

inline GeneratedAnswer answer_from_json(const nlohmann::json& j) {
  GeneratedAnswer a;
  a.query_id = j.at("query_id").get<std::string>();
  a.retriever_tag = parse_retriever_kind(j.at("retriever").get<std::string>()).value_or(RetrieverKind::hybrid);
  a.model_name = j.value("model", "");
  a.ok = j.value("status", "") == "ok";
  a.attempts = j.value("attempts", std::size_t{0});
  a.prompt = j.value("prompt", "");
  a.answer = j.value("answer", "");
  a.error = j.value("error", "");
  return a;
}

namespace detail {

/// Accepts the common completion response shapes.
inline std::optional<std::string> extract_generated_text(const nlohmann::json& j) {
  if (!j.is_object()) return std::nullopt;
  if (auto it = j.find("choices"); it != j.end() && it->is_array() && !it->empty()) {
    const auto& c = (*it)[0];
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
    if (c.contains("message") && c["message"].is_object() && c["message"].contains("content") &&
        c["message"]["content"].is_string())
      return c["message"]["content"].get<std::string>();
  }
  for (const char* key : {"text", "response", "generated_text", "content"})
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  return std::nullopt;
}

}  // namespace detail

/// One completion call with bounded retry. Transport failures, timeouts, 429
/// and 5xx are retried up to config.retries times; exhaustion produces a
/// failure record rather than an exception. A 2xx body without generated
/// text is an error.
inline GeneratedAnswer generate_answer(const GenerationConfig& config, const std::string& prompt,
                                       const std::string& query_id = {},
                                       RetrieverKind tag = RetrieverKind::hybrid) {
  config.validate();
  const auto url = split_url(config.endpoint);
  const std::string body = config.request_body(prompt).dump();

  GeneratedAnswer out;
  out.query_id = query_id;
  out.retriever_tag = tag;
  out.prompt = prompt;
  out.model_name = config.model_name;

  const auto start = std::chrono::steady_clock::now();
  auto backoff = config.initial_backoff;
  for (std::size_t attempt = 0; attempt <= config.retries; ++attempt) {
    if (attempt) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    ++out.attempts;
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(config.timeout);
    cli.set_read_timeout(config.timeout);
    cli.set_write_timeout(config.timeout);
    if (!config.auth_token.empty()) cli.set_bearer_token_auth(config.auth_token);
    auto res = cli.Post(url.path, body, "application/json");
    if (!res) {
      out.error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      out.error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      out.error = "HTTP " + std::to_string(res->status);
      break;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorCategory::format, "malformed LLM endpoint response (not JSON)");
    }
    auto text = detail::extract_generated_text(j);
    if (!text) throw Error(ErrorCategory::format, "malformed LLM endpoint response (no generated text)");
    out.answer = std::move(*text);
    out.ok = true;
    out.error.clear();
    break;
  }
  out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Reads an answers file, skipping the provenance line. Missing file -> empty.
inline std::vector<GeneratedAnswer> read_answers(const std::string& path) {
  std::vector<GeneratedAnswer> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      // A torn final line from an interrupted run is dropped; the query is redone.
      continue;
    }
    if (j.contains("provenance")) continue;
    try {
      out.push_back(answer_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCategory::format, path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

struct BatchOptions {
  RetrieverKind retriever = RetrieverKind::hybrid;
  std::size_t contexts_per_query = 3;
  PromptTemplate prompt_template;
  std::string answers_path;          // empty: no persistence
  nlohmann::json provenance;         // written as the first line when non-null
};

/// Builds prompts from each record's top contexts in `run`, queries the
/// endpoint with up to config.max_in_flight requests in flight and appends
/// each answer to options.answers_path as it arrives. Records whose query_id
/// already has an ok answer in that file are not re-requested. When the batch
/// finishes the file is rewritten in record order so reruns are byte-stable;
/// latencies go to "<answers_path>.timing.tsv".
inline std::vector<GeneratedAnswer> run_generation_batch(const std::vector<QueryRecord>& records, const RunFile& run,
                                                         const Corpus& corpus, const GenerationConfig& config,
                                                         const BatchOptions& options = {}) {
  config.validate();

  // Resolve every prompt up front so data errors surface before any request.
  struct Job {
    std::size_t slot;
    std::string prompt;
  };
  std::vector<std::optional<GeneratedAnswer>> results(records.size());
  std::unordered_map<std::string, GeneratedAnswer> previous;
  if (!options.answers_path.empty())
    for (auto& a : read_answers(options.answers_path))
      if (a.ok && a.retriever_tag == options.retriever) previous.insert_or_assign(a.query_id, std::move(a));

  std::vector<Job> jobs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (auto it = previous.find(rec.id); it != previous.end()) {
      results[i] = it->second;
      continue;
    }
    auto rit = run.find(rec.id);
    if (rit == run.end())
      throw Error(ErrorCategory::validation, "run has no entry for query '" + rec.id + "'");
    std::vector<std::string> contexts;
    for (const auto& e : rit->second.entries) {
      if (contexts.size() >= options.contexts_per_query) break;
      const auto* doc = corpus.find(e.doc_id);
      if (!doc) throw Error(ErrorCategory::validation, "run references unknown doc '" + e.doc_id + "'");
      contexts.push_back(doc->text);
    }
    if (contexts.empty()) {
      GeneratedAnswer rejected;
      rejected.query_id = rec.id;
      rejected.retriever_tag = options.retriever;
      rejected.model_name = config.model_name;
      rejected.error = "no retrieved context";
      results[i] = std::move(rejected);
      continue;
    }
    jobs.push_back({i, build_prompt(rec.question, contexts, options.prompt_template)});
  }

  std::mutex io_mutex;
  std::ofstream log;
  if (!options.answers_path.empty()) {
    const bool fresh = !std::filesystem::exists(options.answers_path);
    log.open(options.answers_path, std::ios::app);
    if (!log) throw Error(ErrorCategory::input, "cannot write answers file: " + options.answers_path);
    if (fresh && !options.provenance.is_null())
      log << nlohmann::json{{"provenance", options.provenance}}.dump() << '\n' << std::flush;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const auto j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        auto ans = generate_answer(config, jobs[j].prompt, records[jobs[j].slot].id, options.retriever);
        std::lock_guard lock(io_mutex);
        if (log.is_open()) log << to_json(ans).dump() << '\n' << std::flush;
        results[jobs[j].slot] = std::move(ans);
      } catch (...) {
        std::lock_guard lock(io_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto n = std::min(config.max_in_flight, std::max<std::size_t>(jobs.size(), 1));
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<GeneratedAnswer> out;
  out.reserve(records.size());
  for (auto& r : results) out.push_back(std::move(*r));

  if (!options.answers_path.empty()) {
    log.close();
    std::ofstream canon(options.answers_path, std::ios::trunc);
    if (!options.provenance.is_null()) canon << nlohmann::json{{"provenance", options.provenance}}.dump() << '\n';
    for (const auto& a : out) canon << to_json(a).dump() << '\n';
    std::ofstream timing(options.answers_path + ".timing.tsv", std::ios::trunc);
    timing << "query_id\tattempts\tlatency_ms\n";
    for (const auto& a : out) timing << a.query_id << '\t' << a.attempts << '\t' << a.latency_ms << '\n';
  }
  return out;
}

}  // namespace hybridrag
