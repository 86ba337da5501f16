#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hybridrag/binary_io.hpp"
#include "hybridrag/error.hpp"
#include "hybridrag/ranked_list.hpp"

namespace hybridrag {

inline constexpr std::size_t kDefaultEmbeddingDim = 768;

/// Unit-length embedding. Normalization happens at construction, so cosine
/// similarity between two EmbeddingVectors is a plain dot product.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  explicit EmbeddingVector(std::span<const double> raw) : values_(raw.begin(), raw.end()) { normalize(); }
  explicit EmbeddingVector(std::span<const float> raw) : values_(raw.begin(), raw.end()) { normalize(); }
  EmbeddingVector(std::initializer_list<double> raw) : values_(raw) { normalize(); }

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

 private:
  void normalize() {
    double s = 0.0;
    for (double v : values_) {
      if (!std::isfinite(v)) throw Error(ErrorCategory::validation, "embedding contains a non-finite value");
      s += v * v;
    }
    if (values_.empty()) throw Error(ErrorCategory::validation, "embedding has dimension 0");
    if (s == 0.0) throw Error(ErrorCategory::validation, "embedding has zero norm");
    const double inv = 1.0 / std::sqrt(s);
    for (double& v : values_) v *= inv;
  }

  std::vector<double> values_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorCategory::validation,
                "dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  return std::clamp(dot(a.values(), b.values()), -1.0, 1.0);
}

/// doc_id -> unit vector, exhaustive cosine search.
class VectorStore {
 public:
  static constexpr std::string_view kMagic = "HRAGEMB1";
  static constexpr std::uint32_t kVersion = 1;

  explicit VectorStore(std::size_t dim = kDefaultEmbeddingDim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::uint64_t corpus_hash() const { return corpus_hash_; }
  void set_corpus_hash(std::uint64_t h) { corpus_hash_ = h; }

  void add(const std::string& doc_id, const EmbeddingVector& v) {
    if (v.dim() != dim_)
      throw Error(ErrorCategory::validation, "embedding for '" + doc_id + "' has dim " + std::to_string(v.dim()) +
                                                 ", expected " + std::to_string(dim_));
    if (!index_.emplace(doc_id, ids_.size()).second)
      throw Error(ErrorCategory::validation, "duplicate embedding id: " + doc_id);
    ids_.push_back(doc_id);
    active_.push_back(true);
    values_.insert(values_.end(), v.values().begin(), v.values().end());
  }

  bool contains(const std::string& doc_id) const { return index_.contains(doc_id); }

  std::span<const double> vector(const std::string& doc_id) const {
    auto it = index_.find(doc_id);
    if (it == index_.end()) throw Error(ErrorCategory::validation, "no embedding for '" + doc_id + "'");
    return row(it->second);
  }

  EmbeddingVector embedding(const std::string& doc_id) const { return EmbeddingVector(vector(doc_id)); }

  /// Deactivates vectors whose id is not in `known`; they stay stored but are
  /// skipped by retrieval. Returns the deactivated ids for warning.
  std::vector<std::string> restrict_to(const std::set<std::string>& known) {
    std::vector<std::string> dropped;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      active_[i] = known.contains(ids_[i]);
      if (!active_[i]) dropped.push_back(ids_[i]);
    }
    return dropped;
  }

  std::size_t active_count() const { return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true)); }

  RankedList retrieve(const EmbeddingVector& query, std::size_t k) const {
    if (k == 0) throw Error(ErrorCategory::validation, "k must be >= 1");
    if (ids_.empty()) return RankedList{{}, RetrieverKind::dense};
    if (query.dim() != dim_)
      throw Error(ErrorCategory::validation, "query dim " + std::to_string(query.dim()) + " != store dim " +
                                                 std::to_string(dim_));
    std::vector<ScoredDoc> candidates;
    candidates.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!active_[i]) continue;
      candidates.push_back({ids_[i], std::clamp(dot(query.values(), row(i)), -1.0, 1.0)});
    }
    return make_ranked_list(std::move(candidates), k, RetrieverKind::dense);
  }

  void save(std::ostream& out) const {
    out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    binary::put_u32(out, kVersion);
    binary::put_u32(out, static_cast<std::uint32_t>(dim_));
    binary::put_u32(out, static_cast<std::uint32_t>(ids_.size()));
    binary::put_u64(out, corpus_hash_);
    for (const auto& id : ids_) binary::put_string(out, id);
    for (double v : values_) binary::put_f32(out, static_cast<float>(v));
  }

  void save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::input, "cannot write vector store: " + path);
    save(out);
  }

  static VectorStore load_binary(std::istream& in, std::size_t expected_dim) {
    binary::expect_magic(in, kMagic, "hybridrag embedding");
    const auto version = binary::get_u32(in);
    if (version != kVersion) throw Error(ErrorCategory::format, "unsupported embedding file version");
    const auto dim = binary::get_u32(in);
    const auto count = binary::get_u32(in);
    if (dim != expected_dim)
      throw Error(ErrorCategory::validation,
                  "embedding file dim " + std::to_string(dim) + " != expected " + std::to_string(expected_dim));
    VectorStore store(dim);
    store.corpus_hash_ = binary::get_u64(in);
    std::vector<std::string> ids(count);
    for (auto& id : ids) id = binary::get_string(in);
    std::vector<float> row(dim);
    for (const auto& id : ids) {
      for (auto& v : row) v = binary::get_f32(in);
      store.add(id, EmbeddingVector(std::span<const float>(row)));
    }
    return store;
  }

  /// `{"id": "...", "vector": [...]}` per line.
  static VectorStore load_jsonl(std::istream& in, std::size_t expected_dim) {
    VectorStore store(expected_dim);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCategory::format, "embedding line " + std::to_string(line_no) + ": " + e.what());
      }
      if (!obj.is_object() || !obj.contains("id") || !obj.contains("vector") || !obj["vector"].is_array())
        throw Error(ErrorCategory::format,
                    "embedding line " + std::to_string(line_no) + ": expected {\"id\", \"vector\"}");
      const auto id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
      std::vector<double> values;
      try {
        values = obj["vector"].get<std::vector<double>>();
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCategory::format, "embedding line " + std::to_string(line_no) + ": non-numeric vector");
      }
      if (values.size() != expected_dim)
        throw Error(ErrorCategory::validation, "embedding for '" + id + "' has dim " +
                                                   std::to_string(values.size()) + ", expected " +
                                                   std::to_string(expected_dim));
      store.add(id, EmbeddingVector(std::span<const double>(values)));
    }
    return store;
  }

 private:
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<bool> active_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t corpus_hash_ = 0;
};

/// Loads either format, sniffing the binary magic. Every vector is
/// L2-normalized and its dimension checked.
inline VectorStore load_embeddings(const std::string& path, std::size_t expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::input, "cannot open embeddings: " + path);
  std::string head(VectorStore::kMagic.size(), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  const bool is_binary = static_cast<std::size_t>(in.gcount()) == head.size() && head == VectorStore::kMagic;
  in.clear();
  in.seekg(0);
  return is_binary ? VectorStore::load_binary(in, expected_dim) : VectorStore::load_jsonl(in, expected_dim);
}

/// Ret_D: exact top-k by cosine.
inline RankedList dense_retrieve(const VectorStore& store, const EmbeddingVector& query, std::size_t k) {
  return store.retrieve(query, k);
}

}  // namespace hybridrag
