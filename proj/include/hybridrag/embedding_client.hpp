#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "hybridrag/dense_store.hpp"
#include "hybridrag/error.hpp"
#include "hybridrag/hash.hpp"
#include "hybridrag/http_util.hpp"

namespace hybridrag {

struct EmbeddingClientConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8000 (POST <endpoint>/embed)
  std::size_t dim = kDefaultEmbeddingDim;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  std::size_t attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::seconds timeout{60};
  std::string auth_token;
};

/// Client for the `/embed` contract:
///   POST {"texts": [...]}  ->  {"dim": D, "vectors": [[...], ...]}
/// Results are cached per text (keyed by content hash) for the client's
/// lifetime; the cache is safe under the client's own parallel batches.
class EmbeddingClient {
 public:
  explicit EmbeddingClient(EmbeddingClientConfig config) : config_(std::move(config)) {
    if (config_.batch_size == 0 || config_.max_in_flight == 0 || config_.attempts == 0)
      throw Error(ErrorCategory::config, "embedding client limits must be >= 1");
    url_ = split_url(config_.endpoint, "/embed");
    if (url_.path == "/") url_.path = "/embed";
  }

  std::vector<EmbeddingVector> fetch(const std::vector<std::string>& texts) {
    std::vector<std::optional<EmbeddingVector>> out(texts.size());
    std::vector<std::size_t> missing;
    {
      std::lock_guard lock(mutex_);
      for (std::size_t i = 0; i < texts.size(); ++i) {
        if (auto hit = lookup_locked(texts[i])) out[i] = *hit;
        else missing.push_back(i);
      }
    }

    // Deduplicate so one text is requested once per call.
    std::vector<std::string> unique;
    std::unordered_map<std::string, std::size_t> slot;
    for (auto i : missing)
      if (slot.emplace(texts[i], unique.size()).second) unique.push_back(texts[i]);

    std::vector<std::vector<std::string>> batches;
    for (std::size_t i = 0; i < unique.size(); i += config_.batch_size)
      batches.emplace_back(unique.begin() + static_cast<std::ptrdiff_t>(i),
                           unique.begin() + static_cast<std::ptrdiff_t>(std::min(unique.size(), i + config_.batch_size)));

    for (std::size_t wave = 0; wave < batches.size(); wave += config_.max_in_flight) {
      std::vector<std::future<std::vector<EmbeddingVector>>> inflight;
      const auto end = std::min(batches.size(), wave + config_.max_in_flight);
      for (std::size_t b = wave; b < end; ++b)
        inflight.push_back(std::async(std::launch::async, [this, &batch = batches[b]] { return request(batch); }));
      for (std::size_t b = wave; b < end; ++b) {
        auto vectors = inflight[b - wave].get();
        std::lock_guard lock(mutex_);
        for (std::size_t j = 0; j < vectors.size(); ++j) insert_locked(batches[b][j], vectors[j]);
      }
    }

    std::lock_guard lock(mutex_);
    for (auto i : missing) out[i] = *lookup_locked(texts[i]);
    std::vector<EmbeddingVector> result;
    result.reserve(out.size());
    for (auto& v : out) result.push_back(std::move(*v));
    return result;
  }

  std::size_t cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
  }

  std::size_t requests_sent() const { return requests_.load(); }

 private:
  std::vector<EmbeddingVector> request(const std::vector<std::string>& batch) {
    const std::string body = nlohmann::json{{"texts", batch}}.dump();
    std::string last_error;
    auto backoff = config_.initial_backoff;
    for (std::size_t attempt = 0; attempt < config_.attempts; ++attempt) {
      if (attempt) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      httplib::Client cli(url_.origin);
      cli.set_connection_timeout(config_.timeout);
      cli.set_read_timeout(config_.timeout);
      if (!config_.auth_token.empty()) cli.set_bearer_token_auth(config_.auth_token);
      ++requests_;
      auto res = cli.Post(url_.path, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw Error(ErrorCategory::transport, "embedding service returned HTTP " + std::to_string(res->status) +
                                                  ": " + res->body);
      return parse_response(res->body, batch.size());
    }
    throw Error(ErrorCategory::transport, "embedding service unreachable after " +
                                              std::to_string(config_.attempts) + " attempts: " + last_error);
  }

  std::vector<EmbeddingVector> parse_response(const std::string& body, std::size_t expected_rows) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCategory::format, std::string("malformed /embed response: ") + e.what());
    }
    if (!j.is_object() || !j.contains("vectors") || !j["vectors"].is_array())
      throw Error(ErrorCategory::format, "malformed /embed response: missing 'vectors'");
    if (j.contains("dim") && j["dim"].get<std::size_t>() != config_.dim)
      throw Error(ErrorCategory::validation, "embedding service dim " + j["dim"].dump() + " != configured " +
                                                 std::to_string(config_.dim));
    if (j["vectors"].size() != expected_rows)
      throw Error(ErrorCategory::format, "embedding service returned " + std::to_string(j["vectors"].size()) +
                                             " rows for " + std::to_string(expected_rows) + " texts");
    std::vector<EmbeddingVector> out;
    for (const auto& row : j["vectors"]) {
      auto values = row.get<std::vector<double>>();
      if (values.size() != config_.dim)
        throw Error(ErrorCategory::validation, "embedding service returned a vector of dim " +
                                                   std::to_string(values.size()));
      out.emplace_back(std::span<const double>(values));
    }
    return out;
  }

  std::optional<EmbeddingVector> lookup_locked(const std::string& text) const {
    auto it = cache_.find(fnv1a(text));
    if (it == cache_.end() || it->second.first != text) return std::nullopt;
    return it->second.second;
  }

  void insert_locked(const std::string& text, const EmbeddingVector& v) {
    cache_.insert_or_assign(fnv1a(text), std::pair{text, v});
  }

  EmbeddingClientConfig config_;
  UrlParts url_;
  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, std::pair<std::string, EmbeddingVector>> cache_;
  std::atomic<std::size_t> requests_{0};
};

/// One vector per text, order preserved.
inline std::vector<EmbeddingVector> fetch_embeddings(EmbeddingClient& client, const std::vector<std::string>& texts) {
  return client.fetch(texts);
}

}  // namespace hybridrag
