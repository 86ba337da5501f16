#include "hybridrag/expansion.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace hybridrag;

namespace {

SynonymLexicon parse(const std::string& text) {
  std::istringstream in(text);
  return load_lexicon(in);
}

std::string error_message(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const SynonymLexicon& car_lexicon() {
  static const SynonymLexicon lex = parse("car\tautomobile,vehicle,motorcar\n");
  return lex;
}

}  // namespace

TEST(Lexicon, ParsesCandidatesInOrder) {
  ASSERT_NE(car_lexicon().candidates("car"), nullptr);
  EXPECT_EQ(*car_lexicon().candidates("car"), (TermList{"automobile", "vehicle", "motorcar"}));
  EXPECT_EQ(car_lexicon().candidates("bus"), nullptr);
}

TEST(Lexicon, KeyIsFilteredFromItsOwnSynonyms) {
  auto lex = parse("car\tcar,automobile,Car\n");
  EXPECT_EQ(*lex.candidates("car"), (TermList{"automobile"}));
}

TEST(Lexicon, EmptyFileIsValid) {
  EXPECT_TRUE(parse("").entries().empty());
  EXPECT_TRUE(parse("# only a comment\n\n").entries().empty());
}

TEST(Lexicon, NormalizesCaseAndWhitespace) {
  auto lex = parse("Car\t Automobile , VEHICLE,,auto mobile\r\n");
  EXPECT_EQ(*lex.candidates("car"), (TermList{"automobile", "vehicle"}));
}

TEST(Lexicon, MalformedLinesNameTheLine) {
  EXPECT_NE(error_message("car\tauto\nbus coach\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_message("big car\tauto\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_message("car\tauto\tvehicle\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_message("car\tauto\ncar\tvehicle\n").find("line 2"), std::string::npos);
}

TEST(Lexicon, MissingFile) { EXPECT_THROW(load_lexicon("/nonexistent/lexicon.tsv"), Error); }

TEST(Expand, CarGetsTwoSynonyms) {
  auto q = expand({"car"}, car_lexicon());
  EXPECT_EQ(q.all_terms, (TermList{"car", "automobile", "vehicle"}));
  EXPECT_EQ(q.expansion_terms(), (TermList{"automobile", "vehicle"}));
  ASSERT_EQ(q.expansions.size(), 1u);
  EXPECT_EQ(q.expansions[0].first, "car");
}

TEST(Expand, UnknownTermIsIdentity) {
  auto q = expand({"bus", "route"}, car_lexicon());
  EXPECT_EQ(q.all_terms, q.original_terms);
  EXPECT_TRUE(q.expansions.empty());
}

TEST(Expand, PresentTermIsNotAddedTwice) {
  auto q = expand({"car", "vehicle"}, car_lexicon());
  EXPECT_EQ(q.all_terms, (TermList{"car", "vehicle", "automobile", "motorcar"}));
  EXPECT_EQ(std::count(q.all_terms.begin(), q.all_terms.end(), "vehicle"), 1);
}

TEST(Expand, MaxSynonymsZeroAndOne) {
  EXPECT_EQ(expand({"car"}, car_lexicon(), 0).all_terms, (TermList{"car"}));
  EXPECT_EQ(expand({"car"}, car_lexicon(), 1).all_terms, (TermList{"car", "automobile"}));
}

TEST(Expand, RepeatedQueryTermExpandsOnce) {
  auto q = expand({"car", "car"}, car_lexicon());
  EXPECT_EQ(q.all_terms, (TermList{"car", "car", "automobile", "vehicle"}));
}

TEST(Expand, SharedCandidatesAreNotDuplicatedAcrossTerms) {
  auto lex = parse("car\tautomobile,vehicle\ntruck\tvehicle,lorry\n");
  auto q = expand({"car", "truck"}, lex);
  EXPECT_EQ(q.all_terms, (TermList{"car", "truck", "automobile", "vehicle", "lorry"}));
}

TEST(Expand, ExpandedQueryText) {
  EXPECT_EQ(expanded_query_text("Which car?", expand({"car"}, car_lexicon())), "Which car? automobile vehicle");
  EXPECT_EQ(expanded_query_text("Which bus?", expand({"bus"}, car_lexicon())), "Which bus?");
}

TEST(ExpandProperties, SupersetBoundedDeterministic) {
  auto lex = parse(
      "a\tb,c,d\nb\ta,e\nc\tf,g,h\nd\ta\ne\tf\nf\tg,h,a\ng\th\nh\tb,c\n");
  std::mt19937 rng(5);
  const TermList vocab = {"a", "b", "c", "d", "e", "f", "g", "h", "x", "y"};
  for (int trial = 0; trial < 500; ++trial) {
    TermList q;
    for (int i = 0, n = static_cast<int>(rng() % 6); i < n; ++i) q.push_back(vocab[rng() % vocab.size()]);
    const std::size_t m = rng() % 4;
    auto e = expand(q, lex, m);
    ASSERT_GE(e.all_terms.size(), q.size());
    EXPECT_TRUE(std::equal(q.begin(), q.end(), e.all_terms.begin()));
    EXPECT_LE(e.all_terms.size(), q.size() * (1 + m));
    EXPECT_EQ(expand(q, SynonymLexicon{}, m).all_terms, q);
    auto again = expand(q, lex, m);
    EXPECT_EQ(again.all_terms, e.all_terms);
    EXPECT_EQ(again.expansions, e.expansions);
  }
}
