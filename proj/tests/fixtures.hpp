#pragma once

// Test-only builders and brute-force oracles. Nothing here calls into the
// code paths it is used to check.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "perturbkit/conllu.hpp"

namespace fixtures {

using perturbkit::DepSentence;
using perturbkit::Token;

inline DepSentence make_sentence(const std::vector<int>& heads,
                                 std::vector<std::string> forms = {},
                                 std::vector<std::string> deprels = {},
                                 std::vector<std::string> upos = {}, std::string sent_id = "s") {
  DepSentence s;
  s.sent_id = std::move(sent_id);
  for (std::size_t i = 0; i < heads.size(); ++i) {
    Token t;
    t.id = static_cast<int>(i) + 1;
    t.form = i < forms.size() ? forms[i] : "w" + std::to_string(i + 1);
    t.lemma = t.form;
    t.upos = i < upos.size() ? upos[i] : "X";
    t.head = heads[i];
    t.deprel = i < deprels.size() ? deprels[i] : (heads[i] == 0 ? "root" : "dep");
    s.tokens.push_back(std::move(t));
  }
  return s;
}

/// Random head vector: random root, remaining nodes attached in random order
/// to an already placed node. Produces non-projective trees too.
inline std::vector<int> random_heads(std::mt19937_64& rng, int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[i] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> heads(static_cast<std::size_t>(n), 0);
  for (int k = 1; k < n; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    heads[order[k] - 1] = order[pick(rng)];
  }
  return heads;
}

inline const std::vector<std::string>& relation_pool() {
  static const std::vector<std::string> pool{
      "case", "det", "nummod", "compound", "amod", "nsubj", "obj", "obl", "advmod", "mark",
      "ccomp", "xcomp", "advcl", "acl", "conj", "parataxis", "csubj", "aux", "nmod:poss", "cc"};
  return pool;
}

/// Random sentence of n words with random relations and a vocabulary small
/// enough to produce repeated n-grams; optionally ends in punctuation.
inline DepSentence random_sentence(std::mt19937_64& rng, int n, const std::string& sent_id) {
  auto heads = random_heads(rng, n);
  std::vector<std::string> forms, rels, upos;
  std::uniform_int_distribution<int> word(0, 11);
  std::uniform_int_distribution<std::size_t> rel(0, relation_pool().size() - 1);
  std::bernoulli_distribution punct_end(0.5);
  const bool with_punct = n >= 3 && punct_end(rng);
  int root = 0;
  for (int i = 0; i < n; ++i)
    if (heads[i] == 0) root = i + 1;
  for (int i = 0; i < n; ++i) {
    forms.push_back("w" + std::to_string(word(rng)));
    rels.push_back(heads[i] == 0 ? "root" : relation_pool()[rel(rng)]);
    upos.push_back("X");
  }
  if (with_punct && heads[n - 1] != 0) {
    // Re-attach the last token as punctuation of the root; any tokens that
    // hung off it move to the root too, keeping the tree valid.
    for (int i = 0; i < n; ++i)
      if (heads[i] == n) heads[i] = root;
    heads[n - 1] = root;
    forms[n - 1] = ".";
    rels[n - 1] = "punct";
    upos[n - 1] = "PUNCT";
  }
  return make_sentence(heads, forms, rels, upos, sent_id);
}

inline bool is_arborescence(const std::vector<int>& heads, int root) {
  const int n = static_cast<int>(heads.size());
  for (int i = 1; i <= n; ++i) {
    if ((i == root) != (heads[i - 1] == 0)) return false;
    int cur = i;
    for (int steps = 0; cur != root; ++steps) {
      if (steps > n || cur == 0) return false;
      cur = heads[cur - 1];
    }
  }
  return true;
}

struct BruteForceTree {
  double weight = -1e300;
  long long head_sum = 0;
  std::vector<int> heads;
  int optimal_count = 0;  // trees attaining the maximum weight
};

/// Exhaustive search over all rooted arborescences. Among max-weight trees
/// (weights compared exactly) keeps the one with the smallest head-index sum.
template <typename Derived>
BruteForceTree brute_force_arborescence(const Eigen::MatrixBase<Derived>& w, int root) {
  const int n = static_cast<int>(w.rows());
  BruteForceTree best;
  std::vector<int> heads(static_cast<std::size_t>(n), 1);
  heads[root - 1] = 0;
  std::vector<int> free_nodes;
  for (int i = 1; i <= n; ++i)
    if (i != root) free_nodes.push_back(i);
  for (int v : free_nodes) heads[v - 1] = v == 1 ? 2 : 1;
  if (n == 1) {
    best.weight = 0;
    best.heads = heads;
    best.optimal_count = 1;
    return best;
  }
  auto advance = [&]() {
    for (int v : free_nodes) {
      int& h = heads[v - 1];
      do {
        ++h;
      } while (h == v);
      if (h <= n) return true;
      h = v == 1 ? 2 : 1;
    }
    return false;
  };
  do {
    if (!is_arborescence(heads, root)) continue;
    double total = 0;
    long long hs = 0;
    for (int i = 1; i <= n; ++i)
      if (heads[i - 1] != 0) {
        total += static_cast<double>(w(i - 1, heads[i - 1] - 1));
        hs += heads[i - 1];
      }
    if (total > best.weight) {
      best = {total, hs, heads, 1};
    } else if (total == best.weight) {
      ++best.optimal_count;
      if (hs < best.head_sum) {
        best.head_sum = hs;
        best.heads = heads;
      }
    }
  } while (advance());
  return best;
}

/// Descendants of `node` by explicit DFS over a child table.
inline std::set<int> descendants(const DepSentence& s, int node) {
  std::set<int> out{node};
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& t : s.tokens)
      if (t.head != 0 && out.count(t.head) && !out.count(t.id)) {
        out.insert(t.id);
        grew = true;
      }
  }
  return out;
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("perturbkit-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

} // namespace fixtures
