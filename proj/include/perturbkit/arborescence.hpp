#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "perturbkit/conllu.hpp"
#include "perturbkit/error.hpp"

namespace perturbkit {

/// heads[i] is the 1-based head of token i+1; the root carries 0.
using HeadAssignment = std::vector<int>;

namespace detail {

// Edge score ordered lexicographically: total weight first, then a
// tie-breaking term that is the negated sum of head indices. Both components
// are additive, so the contraction step of Chu-Liu-Edmonds stays exact for the
// second component.
template <typename Scalar>
struct EdgeKey {
  Scalar weight;
  long long tie;

  EdgeKey operator-(const EdgeKey& o) const { return {weight - o.weight, tie - o.tie}; }
  bool operator>(const EdgeKey& o) const {
    return weight > o.weight || (weight == o.weight && tie > o.tie);
  }
};

template <typename Scalar>
struct DenseDigraph {
  int n = 0;
  // key[dep * n + head]; valid marks candidate edges head -> dep
  std::vector<EdgeKey<Scalar>> key;
  std::vector<char> valid;

  const EdgeKey<Scalar>& at(int dep, int head) const { return key[static_cast<std::size_t>(dep * n + head)]; }
  bool has(int dep, int head) const { return valid[static_cast<std::size_t>(dep * n + head)] != 0; }
  void set(int dep, int head, EdgeKey<Scalar> k) {
    key[static_cast<std::size_t>(dep * n + head)] = k;
    valid[static_cast<std::size_t>(dep * n + head)] = 1;
  }
};

// Returns parent[v] (0-based), -1 for the root.
template <typename Scalar>
std::vector<int> max_arborescence(const DenseDigraph<Scalar>& g, int root) {
  const int n = g.n;
  std::vector<int> best(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v) {
    if (v == root) continue;
    for (int u = 0; u < n; ++u) {
      if (u == v || !g.has(v, u)) continue;
      if (best[v] < 0 || g.at(v, u) > g.at(v, best[v])) best[v] = u;
    }
    if (best[v] < 0) throw ValidationError("node without candidate head");
  }

  // Find a cycle among the greedy choices.
  std::vector<int> color(static_cast<std::size_t>(n), 0);  // 0 new, 1 on path, 2 done
  std::vector<int> cycle;
  for (int start = 0; start < n && cycle.empty(); ++start) {
    if (color[start] != 0) continue;
    std::vector<int> path;
    int v = start;
    while (v >= 0 && color[v] == 0) {
      color[v] = 1;
      path.push_back(v);
      v = best[v];
    }
    if (v >= 0 && color[v] == 1) {
      for (int u = v;;) {
        cycle.push_back(u);
        u = best[u];
        if (u == v) break;
      }
    }
    for (int u : path) color[u] = 2;
  }
  if (cycle.empty()) return best;

  // Contract the cycle into node `c`.
  std::vector<char> in_cycle(static_cast<std::size_t>(n), 0);
  for (int v : cycle) in_cycle[v] = 1;
  std::vector<int> renum(static_cast<std::size_t>(n), -1);
  std::vector<int> original_of;
  for (int v = 0; v < n; ++v)
    if (!in_cycle[v]) {
      renum[v] = static_cast<int>(original_of.size());
      original_of.push_back(v);
    }
  const int c = static_cast<int>(original_of.size());
  for (int v : cycle) renum[v] = c;

  DenseDigraph<Scalar> h;
  h.n = c + 1;
  h.key.resize(static_cast<std::size_t>(h.n * h.n));
  h.valid.assign(static_cast<std::size_t>(h.n * h.n), 0);
  std::vector<int> enters_at(static_cast<std::size_t>(h.n), -1);  // head' -> cycle node entered
  std::vector<int> leaves_from(static_cast<std::size_t>(h.n), -1);  // dep' -> cycle node used as head

  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      if (u == v || !g.has(v, u)) continue;
      const bool vc = in_cycle[v], uc = in_cycle[u];
      if (vc && uc) continue;
      const int dv = renum[v], du = renum[u];
      if (!vc && !uc) {
        h.set(dv, du, g.at(v, u));
      } else if (vc) {
        EdgeKey<Scalar> k = g.at(v, u) - g.at(v, best[v]);
        if (!h.has(c, du) || k > h.at(c, du)) {
          h.set(c, du, k);
          enters_at[du] = v;
        }
      } else {
        const EdgeKey<Scalar>& k = g.at(v, u);
        if (!h.has(dv, c) || k > h.at(dv, c)) {
          h.set(dv, c, k);
          leaves_from[dv] = u;
        }
      }
    }
  }

  std::vector<int> sub = max_arborescence(h, renum[root]);

  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < c; ++i) {
    const int v = original_of[i];
    if (v == root) continue;
    parent[v] = sub[i] == c ? leaves_from[i] : original_of[sub[i]];
  }
  for (int v : cycle) parent[v] = best[v];
  const int entry_head = sub[c];
  parent[enters_at[entry_head]] = original_of[entry_head];
  return parent;
}

} // namespace detail

/// Maximum-weight spanning arborescence rooted at `root` (1-based) over the
/// complete digraph where weights(i, j) scores the edge head j -> dependent i.
/// The diagonal is ignored. Among optimal trees the one with the smallest sum
/// of head indices is returned. Throws ValidationError for non-finite weights,
/// a non-square matrix, or a root outside 1..n.
template <typename Derived>
HeadAssignment cle_arborescence(const Eigen::MatrixBase<Derived>& weights, int root) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(weights.rows());
  if (weights.cols() != weights.rows() || n < 1)
    throw ValidationError("weight matrix must be square and non-empty");
  if (root < 1 || root > n)
    throw ValidationError("root " + std::to_string(root) + " outside 1.." + std::to_string(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && !std::isfinite(static_cast<double>(weights(i, j))))
        throw ValidationError("non-finite weight at (" + std::to_string(i + 1) + ", " +
                              std::to_string(j + 1) + ")");

  detail::DenseDigraph<Scalar> g;
  g.n = n;
  g.key.resize(static_cast<std::size_t>(n * n));
  g.valid.assign(static_cast<std::size_t>(n * n), 0);
  for (int dep = 0; dep < n; ++dep) {
    if (dep == root - 1) continue;
    for (int head = 0; head < n; ++head)
      if (head != dep) g.set(dep, head, {static_cast<Scalar>(weights(dep, head)), -(head + 1LL)});
  }

  std::vector<int> parent = detail::max_arborescence(g, root - 1);
  HeadAssignment heads(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v) heads[v] = parent[v] < 0 ? 0 : parent[v] + 1;
  return heads;
}

/// Sum of weights(i, heads[i]-1) over non-root tokens, in token order.
template <typename Derived>
typename Derived::Scalar tree_weight(const Eigen::MatrixBase<Derived>& weights,
                                     const HeadAssignment& heads) {
  typename Derived::Scalar total(0);
  for (std::size_t i = 0; i < heads.size(); ++i)
    if (heads[i] != 0) total += weights(static_cast<Eigen::Index>(i), heads[i] - 1);
  return total;
}

/// Fraction of gold undirected edges recovered; 1.0 for single-token
/// sentences. Throws ValidationError on a length mismatch.
double uuas(const HeadAssignment& predicted, const DepSentence& gold);

} // namespace perturbkit
