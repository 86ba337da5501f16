#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hybridrag/error.hpp"
#include "hybridrag/text.hpp"

namespace hybridrag {

/// term -> candidate synonyms, most relevant first. Candidate lists never
/// contain duplicates or the key itself.
class SynonymLexicon {
 public:
  SynonymLexicon() = default;

  /// Normalizes and filters `candidates` (lowercase, no self, no duplicates,
  /// no multi-word entries). Returns false if `key` was already present.
  bool add(std::string key, const std::vector<std::string>& candidates) {
    key = lower(trim(key));
    std::vector<Term> kept;
    for (const auto& raw : candidates) {
      auto c = lower(trim(raw));
      if (c.empty() || c == key) continue;
      if (c.find_first_of(" \t") != std::string::npos) continue;
      if (std::find(kept.begin(), kept.end(), c) != kept.end()) continue;
      kept.push_back(std::move(c));
    }
    return entries_.emplace(std::move(key), std::move(kept)).second;
  }

  const std::vector<Term>* candidates(const Term& term) const {
    auto it = entries_.find(term);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const std::map<Term, std::vector<Term>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::string lower(std::string s) {
    for (char& c : s)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
  }

 private:
  std::map<Term, std::vector<Term>> entries_;
};

/// Reads `term<TAB>syn1,syn2,...` lines. '#' starts a comment line.
inline SynonymLexicon load_lexicon(std::istream& in) {
  SynonymLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorCategory::format, "lexicon line " + std::to_string(line_no) + ": missing TAB separator");
    const auto key = SynonymLexicon::trim(line.substr(0, tab));
    if (key.empty() || key.find(' ') != std::string::npos)
      throw Error(ErrorCategory::format,
                  "lexicon line " + std::to_string(line_no) + ": key must be a single token");
    if (line.find('\t', tab + 1) != std::string::npos)
      throw Error(ErrorCategory::format, "lexicon line " + std::to_string(line_no) + ": more than one TAB");

    std::vector<std::string> candidates;
    std::stringstream ss(line.substr(tab + 1));
    std::string item;
    while (std::getline(ss, item, ',')) candidates.push_back(item);
    if (!lex.add(key, candidates))
      throw Error(ErrorCategory::format,
                  "lexicon line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return lex;
}

inline SynonymLexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::input, "cannot open lexicon: " + path);
  return load_lexicon(in);
}

struct ExpandedQuery {
  TermList original_terms;
  // (q_j, chosen synonyms) in order of first appearance of q_j; only terms
  // that received at least one synonym are listed.
  std::vector<std::pair<Term, TermList>> expansions;
  TermList all_terms;  // original_terms followed by every chosen synonym

  TermList expansion_terms() const {
    TermList out;
    for (const auto& [_, syns] : expansions) out.insert(out.end(), syns.begin(), syns.end());
    return out;
  }
};

/// Adds up to max_synonyms lexicon candidates per distinct query term,
/// skipping candidates already in the query or already added.
inline ExpandedQuery expand(const TermList& query_terms, const SynonymLexicon& lexicon,
                            std::size_t max_synonyms = 2) {
  ExpandedQuery q;
  q.original_terms = query_terms;
  q.all_terms = query_terms;

  std::set<Term> present(query_terms.begin(), query_terms.end());
  std::set<Term> visited;
  for (const auto& term : query_terms) {
    if (!visited.insert(term).second) continue;
    const auto* cands = lexicon.candidates(term);
    if (!cands) continue;
    TermList chosen;
    for (const auto& c : *cands) {
      if (chosen.size() >= max_synonyms) break;
      if (present.contains(c)) continue;
      chosen.push_back(c);
      present.insert(c);
    }
    if (chosen.empty()) continue;
    q.all_terms.insert(q.all_terms.end(), chosen.begin(), chosen.end());
    q.expansions.emplace_back(term, std::move(chosen));
  }
  return q;
}

/// Text handed to the dense encoder: the question followed by the expansion
/// terms, space-joined.
inline std::string expanded_query_text(const std::string& question, const ExpandedQuery& q) {
  auto extra = q.expansion_terms();
  if (extra.empty()) return question;
  return question + " " + join_terms(extra);
}

}  // namespace hybridrag
