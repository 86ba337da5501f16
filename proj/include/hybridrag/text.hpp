#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hybridrag/error.hpp"

namespace hybridrag {

using Term = std::string;
using TermList = std::vector<Term>;

namespace detail {

// Mirrors data/stopwords.txt; a unit test keeps the two in sync.
inline constexpr std::array kEnglishStopwords = {
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
};

struct Utf8Char {
  char32_t code;
  std::size_t width;
};

// Invalid sequences decode as a single U+FFFD byte so the scan always advances.
inline Utf8Char decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0)
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
  }
  return {0xFFFD, 1};
}

inline bool is_separator(char32_t c) {
  if (c < 0x80) {
    return !((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'));
  }
  // Latin-1 punctuation and symbols (letters such as U+00AA, U+00B5, U+00BA are kept).
  if (c >= 0x00A0 && c <= 0x00BF) return c != 0x00AA && c != 0x00B5 && c != 0x00BA;
  if (c == 0x00D7 || c == 0x00F7) return true;
  if (c >= 0x2000 && c <= 0x206F) return true;  // general punctuation and spaces
  if (c >= 0x20A0 && c <= 0x20CF) return true;  // currency
  if (c >= 0x2190 && c <= 0x2BFF) return true;  // arrows, math operators, shapes
  if (c >= 0x3000 && c <= 0x303F) return true;  // CJK punctuation
  if (c >= 0xFE30 && c <= 0xFE4F) return true;
  if (c >= 0xFF01 && c <= 0xFF0F) return true;  // fullwidth punctuation
  if (c >= 0xFF1A && c <= 0xFF20) return true;
  if (c == 0xFFFD || c == 0xFEFF) return true;
  return false;
}

}  // namespace detail

/// Lowercases ASCII letters, treats ASCII and Unicode punctuation as
/// whitespace, splits on whitespace and drops stopwords. Digits are kept and
/// there is no stemming.
class Tokenizer {
 public:
  Tokenizer() = default;
  explicit Tokenizer(std::unordered_set<std::string> stopwords) : stopwords_(std::move(stopwords)) {}

  /// The built-in English list (same content as data/stopwords.txt).
  static Tokenizer english() {
    std::unordered_set<std::string> words(detail::kEnglishStopwords.begin(),
                                          detail::kEnglishStopwords.end());
    return Tokenizer(std::move(words));
  }

  /// One word per line; blank lines and lines starting with '#' are skipped.
  static Tokenizer from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::input, "cannot open stopword file: " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
        line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      for (char& c : line)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      words.insert(line);
    }
    return Tokenizer(std::move(words));
  }

  TermList tokenize(std::string_view text) const {
    TermList out;
    std::string current;
    auto flush = [&] {
      if (!current.empty() && !is_stopword(current)) out.push_back(current);
      current.clear();
    };
    for (std::size_t i = 0; i < text.size();) {
      const auto ch = detail::decode_utf8(text, i);
      if (detail::is_separator(ch.code)) {
        flush();
      } else if (ch.code < 0x80) {
        char c = static_cast<char>(ch.code);
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        current.push_back(c);
      } else {
        current.append(text.substr(i, ch.width));
      }
      i += ch.width;
    }
    flush();
    return out;
  }

  bool is_stopword(std::string_view term) const { return stopwords_.contains(std::string(term)); }

  std::size_t stopword_count() const { return stopwords_.size(); }

  /// Sorted copy of the stopword set, mostly for fingerprinting.
  std::vector<std::string> sorted_stopwords() const {
    std::set<std::string> s(stopwords_.begin(), stopwords_.end());
    return {s.begin(), s.end()};
  }

 private:
  std::unordered_set<std::string> stopwords_;
};

inline std::string join_terms(const TermList& terms, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out.append(sep);
    out.append(terms[i]);
  }
  return out;
}

}  // namespace hybridrag
