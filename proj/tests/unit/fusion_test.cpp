#include "hybridrag/fusion.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "pipeline_oracle.hpp"

using namespace hybridrag;

namespace {

RankedList list_of(const std::vector<std::string>& ids, RetrieverKind kind = RetrieverKind::sparse) {
  RankedList r;
  r.produced_by = kind;
  double s = 10.0;
  for (const auto& id : ids) r.entries.push_back({id, s -= 1.0});
  return r;
}

Corpus make_corpus(const std::vector<std::pair<std::string, TermList>>& docs) {
  std::vector<Document> out;
  for (const auto& [id, toks] : docs) out.push_back(Document{id, join_terms(toks), toks});
  return Corpus(std::move(out));
}

ExpandedQuery plain(TermList t) { return expand(t, SynonymLexicon{}, 0); }

}  // namespace

TEST(Specificity, UbiquitousTermsScoreZero) {
  auto c = make_corpus({{"a", {"x", "y"}}, {"b", {"x", "y", "z"}}, {"c", {"y", "x"}}});
  auto s = specificity(plain({"x", "y"}), c.stats());
  EXPECT_EQ(s.raw, 0.0);
  EXPECT_EQ(s.normalized, 0.0);
}

TEST(Specificity, TwoRareTerms) {
  auto c = make_corpus({{"a", {"photosynthesis", "leaf"}}, {"b", {"chlorophyll", "leaf"}}, {"c", {"leaf"}},
                        {"d", {"root"}}});
  auto s = specificity(plain({"photosynthesis", "chlorophyll"}), c.stats());
  EXPECT_NEAR(s.raw, std::log(4.0), 1e-12);
  EXPECT_NEAR(s.raw, 1.3863, 1e-4);
  EXPECT_NEAR(s.normalized, 1.0, 1e-12);
}

TEST(Specificity, OneRareOneUbiquitous) {
  auto c = make_corpus({{"a", {"rare", "common"}}, {"b", {"common"}}, {"c", {"common"}}, {"d", {"common"}}});
  auto s = specificity(plain({"rare", "common"}), c.stats());
  EXPECT_NEAR(s.raw, std::log(4.0) / 2, 1e-12);
  EXPECT_NEAR(s.raw, 0.6931, 1e-4);
  EXPECT_NEAR(s.normalized, 0.5, 1e-12);
}

TEST(Specificity, UnseenAndEmptyAreZero) {
  auto c = make_corpus({{"a", {"x"}}, {"b", {"y"}}});
  EXPECT_EQ(specificity(plain({"nothing"}), c.stats()).normalized, 0.0);
  EXPECT_EQ(specificity(plain({}), c.stats()).raw, 0.0);
  auto single = make_corpus({{"a", {"x"}}});
  EXPECT_EQ(specificity(plain({"x"}), single.stats()).normalized, 0.0);
}

TEST(Weights, FloorCeilingMidpoint) {
  FusionConfig cfg;
  auto lo = compute_weights(0.0, cfg);
  EXPECT_DOUBLE_EQ(lo.w_sparse, 0.1);
  EXPECT_DOUBLE_EQ(lo.w_dense, 0.9);
  auto hi = compute_weights(1.0, cfg);
  EXPECT_DOUBLE_EQ(hi.w_sparse, 0.9);
  EXPECT_NEAR(hi.w_dense, 0.1, 1e-15);
  auto mid = compute_weights(0.5, cfg);
  EXPECT_DOUBLE_EQ(mid.w_sparse, 0.5);
  EXPECT_DOUBLE_EQ(mid.w_dense, 0.5);
}

TEST(Weights, AlphaScales) {
  FusionConfig cfg;
  cfg.alpha = 2.0;
  EXPECT_DOUBLE_EQ(compute_weights(0.3, cfg).w_sparse, 0.6);
  EXPECT_DOUBLE_EQ(compute_weights(0.6, cfg).w_sparse, 0.9);
}

TEST(WeightsProperties, SimplexAndMonotone) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FusionConfig cfg;
  std::vector<double> specs(1000);
  for (auto& s : specs) s = u(rng);
  std::sort(specs.begin(), specs.end());
  double prev = -1;
  for (double s : specs) {
    auto w = compute_weights(s, cfg);
    EXPECT_NEAR(w.w_sparse + w.w_dense, 1.0, 1e-12);
    EXPECT_GE(w.w_sparse, 0.1);
    EXPECT_LE(w.w_sparse, 0.9);
    EXPECT_GE(w.w_dense, 0.1 - 1e-12);
    EXPECT_LE(w.w_dense, 0.9 + 1e-12);
    EXPECT_GE(w.w_sparse, prev);
    prev = w.w_sparse;
  }
}

TEST(FusionConfig, Validation) {
  FusionConfig c;
  c.epsilon = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.k = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.weight_floor = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.alpha = -1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(WeightedRrf, HandComputedExample) {
  FusionConfig cfg;
  auto fused = weighted_rrf(list_of({"d1", "d2", "d3"}), 0.5, list_of({"d2", "d1", "d3"}), 0.5, cfg);
  ASSERT_EQ(fused.size(), 3u);
  EXPECT_EQ(fused.doc_ids(), (std::vector<std::string>{"d1", "d2", "d3"}));
  EXPECT_NEAR(fused.entries[0].score, 0.5 / 61 + 0.5 / 62, 1e-15);
  EXPECT_NEAR(fused.entries[0].score, 0.0162612, 1e-7);
  EXPECT_EQ(fused.entries[0].score, fused.entries[1].score);
  EXPECT_NEAR(fused.entries[2].score, 1.0 / 63, 1e-15);
  EXPECT_EQ(fused.produced_by, RetrieverKind::hybrid);
}

TEST(WeightedRrf, ZeroDenseWeightReproducesSparse) {
  FusionConfig cfg;
  auto sparse = list_of({"c", "a", "b"});
  auto fused = weighted_rrf(sparse, 1.0, list_of({"x", "a", "y"}), 0.0, cfg);
  EXPECT_EQ(fused.doc_ids(), sparse.doc_ids());
}

TEST(WeightedRrf, SingleListContribution) {
  FusionConfig cfg;
  auto fused = weighted_rrf(list_of({"a"}), 0.5, list_of({"only_dense"}), 0.5, cfg);
  auto r = fused.rank_of("only_dense");
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(fused.entries[*r - 1].score, 0.5 / 61, 1e-15);
}

TEST(WeightedRrf, RejectsNegativeWeights) {
  FusionConfig cfg;
  EXPECT_THROW(weighted_rrf(list_of({"a"}), -0.1, list_of({"b"}), 1.1, cfg), Error);
}

TEST(WeightedRrfProperties, DegenerateWeightsBothWays) {
  std::mt19937 rng(2);
  FusionConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> pool;
    for (int i = 0; i < 12; ++i) pool.push_back("d" + std::to_string(i));
    std::shuffle(pool.begin(), pool.end(), rng);
    auto a = list_of({pool.begin(), pool.begin() + 1 + static_cast<long>(rng() % 6)});
    std::shuffle(pool.begin(), pool.end(), rng);
    auto b = list_of({pool.begin(), pool.begin() + 1 + static_cast<long>(rng() % 6)});
    EXPECT_EQ(weighted_rrf(a, 1.0, b, 0.0, cfg).doc_ids(), a.doc_ids());
    EXPECT_EQ(weighted_rrf(a, 0.0, b, 1.0, cfg).doc_ids(), b.doc_ids());
  }
}

TEST(WeightedRrfProperties, BothListsBeatOneList) {
  FusionConfig cfg;
  for (std::size_t r = 1; r <= 5; ++r) {
    std::vector<std::string> a, b;
    for (std::size_t i = 1; i <= 5; ++i) {
      a.push_back(i == r ? "shared" : "a" + std::to_string(i));
      b.push_back(i == r ? "shared" : "b" + std::to_string(i));
    }
    auto fused = weighted_rrf(list_of(a), 0.5, list_of(b), 0.5, cfg);
    EXPECT_EQ(fused.entries[0].doc_id, "shared");
  }
}

TEST(WeightedRrfProperties, RankOnlyDependence) {
  std::mt19937 rng(4);
  FusionConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    auto a = list_of({"p", "q", "r", "s"});
    auto b = list_of({"s", "t", "p"});
    auto base = weighted_rrf(a, 0.3, b, 0.7, cfg);
    for (auto& e : a.entries) e.score = std::exp(e.score) * 1000.0;
    for (auto& e : b.entries) e.score = e.score * e.score * e.score - 5.0;
    auto after = weighted_rrf(a, 0.3, b, 0.7, cfg);
    ASSERT_EQ(base.size(), after.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_EQ(base.entries[i].doc_id, after.entries[i].doc_id);
      EXPECT_EQ(base.entries[i].score, after.entries[i].score);
    }
  }
}

namespace {

struct Fixture5 {
  std::vector<std::pair<std::string, TermList>> docs = {
      {"d1", {"heart", "attack", "symptoms", "chest", "pain"}},
      {"d2", {"cardiac", "arrest", "treatment", "hospital"}},
      {"d3", {"stock", "market", "crash", "1987"}},
      {"d4", {"myocardial", "infarction", "risk", "factors", "heart"}},
      {"d5", {"chest", "xray", "imaging", "lungs"}}};
  std::map<std::string, std::vector<double>> vectors = {{"d1", {0.9, 0.1, 0.0}},
                                                        {"d2", {0.8, 0.2, 0.1}},
                                                        {"d3", {0.0, 0.1, 0.95}},
                                                        {"d4", {0.85, 0.3, 0.0}},
                                                        {"d5", {0.3, 0.9, 0.0}}};
  std::map<std::string, std::vector<std::string>> lexicon = {{"heart", {"cardiac", "myocardial"}},
                                                             {"attack", {"infarction", "arrest"}}};
};

}  // namespace

TEST(HybridRetrieve, FiveDocMatchesStraightLineOracle) {
  Fixture5 f;
  std::vector<Document> docs;
  for (const auto& [id, t] : f.docs) docs.push_back(Document{id, join_terms(t), t});
  Corpus corpus(docs);
  auto idx = build_index(corpus);
  VectorStore store(3);
  for (const auto& [id, v] : f.vectors) store.add(id, EmbeddingVector(std::span<const double>(v)));
  SynonymLexicon lex;
  for (const auto& [k, v] : f.lexicon) lex.add(k, v);

  oracle::HybridInputs in;
  for (const auto& [id, t] : f.docs) in.docs.push_back({id, t});
  in.doc_vectors = f.vectors;
  in.lexicon = f.lexicon;

  const std::vector<std::pair<TermList, std::vector<double>>> queries = {
      {{"heart", "attack"}, {0.9, 0.2, 0.0}},
      {{"chest", "pain"}, {0.5, 0.6, 0.0}},
      {{"1987", "crash"}, {0.1, 0.1, 0.9}},
      {{"lungs"}, {0.8, 0.1, 0.1}},
      {{"unknown"}, {0.0, 1.0, 0.0}}};
  FusionConfig cfg;
  for (const auto& [terms, qv] : queries) {
    auto q = expand(terms, lex);
    auto got = hybrid_retrieve_detailed(idx, store, q, EmbeddingVector(std::span<const double>(qv)), cfg);
    auto want = oracle::hybrid(terms, qv, in);
    EXPECT_NEAR(got.weights.w_sparse, want.w_sparse, 1e-12);
    ASSERT_EQ(got.fused.size(), want.fused.size());
    for (std::size_t i = 0; i < want.fused.size(); ++i) {
      EXPECT_EQ(got.fused.entries[i].doc_id, want.fused[i].first);
      EXPECT_NEAR(got.fused.entries[i].score, want.fused[i].second, 1e-12);
    }
    EXPECT_EQ(got.fused.produced_by, RetrieverKind::hybrid);
    EXPECT_LE(got.fused.size(), cfg.k);
  }
}

TEST(HybridRetrieve, DenseRescuesVocabularyMismatch) {
  Fixture5 f;
  std::vector<Document> docs;
  for (const auto& [id, t] : f.docs) docs.push_back(Document{id, join_terms(t), t});
  auto idx = build_index(Corpus(docs));
  VectorStore store(3);
  for (const auto& [id, v] : f.vectors) store.add(id, EmbeddingVector(std::span<const double>(v)));
  // "pulmonary" occurs nowhere; d5's vector is the match.
  auto r = hybrid_retrieve(idx, store, plain({"pulmonary"}), EmbeddingVector{0.3, 0.9, 0.0}, FusionConfig{});
  ASSERT_FALSE(r.empty());
  EXPECT_EQ(r.entries[0].doc_id, "d5");
}

TEST(HybridRetrieve, SharedSingletonIsRankOne) {
  auto idx = build_index(make_corpus({{"only", {"word"}}}));
  VectorStore store(2);
  store.add("only", EmbeddingVector{1, 0});
  auto r = hybrid_retrieve(idx, store, plain({"word"}), EmbeddingVector{1, 0}, FusionConfig{});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.entries[0].doc_id, "only");
}
