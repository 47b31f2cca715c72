#pragma once

#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace perturbkit {

struct Token {
  int id = 0;  // 1-based
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos = "_";
  std::string feats = "_";
  int head = 0;  // 0 = root
  std::string deprel;
  std::string deps = "_";
  std::string misc = "_";

  bool operator==(const Token&) const = default;
};

struct DepSentence {
  std::string sent_id;
  std::string text;
  std::vector<std::string> comments;  // raw "# ..." lines in input order
  std::vector<Token> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  const Token& at(int id) const { return tokens.at(static_cast<std::size_t>(id - 1)); }
  std::vector<int> heads() const;
  std::vector<std::string> forms() const;
  int root() const;

  bool operator==(const DepSentence&) const = default;
};

/// Throws ValidationError (naming the sent_id) unless ids are 1..n, heads are
/// in range without self-loops, exactly one token is attached to 0, and the
/// head relation is acyclic.
void validate(const DepSentence& sentence);

/// True when `heads` (1-based values, 0 = root) encodes a single-rooted tree.
bool is_tree(const std::vector<int>& heads);

/// Multiword-token ranges ("3-4") and empty nodes ("5.1") are skipped.
std::vector<DepSentence> parse_conllu(std::istream& input);
std::vector<DepSentence> parse_conllu_string(std::string_view text);
std::vector<DepSentence> read_conllu_file(const std::string& path);

std::string serialize_conllu(const std::vector<DepSentence>& sentences);
std::string serialize_conllu(const DepSentence& sentence);

struct SubtreeSpan {
  int first = 0;
  int last = 0;
  bool contiguous = true;  // subtree covers every index in first..last
};

/// Sorted 1-based indices of the subtree rooted at `node` (node included).
std::vector<int> subtree_nodes(const DepSentence& sentence, int node);
SubtreeSpan subtree_span(const DepSentence& sentence, int node);

using Edge = std::pair<int, int>;  // unordered pair stored as (min, max)
using EdgeSet = std::set<Edge>;

EdgeSet undirected_edges(const std::vector<int>& heads);
EdgeSet gold_edges(const DepSentence& sentence);

} // namespace perturbkit
