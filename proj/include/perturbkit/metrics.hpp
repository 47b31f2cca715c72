#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "perturbkit/error.hpp"
#include "perturbkit/perturb.hpp"
#include "perturbkit/tensor.hpp"

namespace perturbkit {

enum class TiMode { ArgmaxAccuracy, MeanCosine };

struct MetricConfig {
  double penlp_alpha = 0.8;
  double jsd_log_base = 2.0;
  TiMode ti_mode = TiMode::ArgmaxAccuracy;

  void check() const;
};

/// Jensen-Shannon divergence of two discrete distributions. Inputs are
/// renormalized to sum to one; 0 log 0 = 0. In base 2 the result lies in
/// [0, 1].
template <typename DerivedP, typename DerivedQ>
double jsd(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q,
           double log_base = 2.0) {
  if (p.size() != q.size())
    throw ValidationError("jsd: distributions of length " + std::to_string(p.size()) + " and " +
                          std::to_string(q.size()));
  const auto pd = p.template cast<double>().eval();
  const auto qd = q.template cast<double>().eval();
  if ((pd.array() < 0.0).any() || (qd.array() < 0.0).any())
    throw ValidationError("jsd: negative probability");
  const double ps = pd.sum(), qs = qd.sum();
  if (!(ps > 0.0) || !(qs > 0.0)) throw ValidationError("jsd: distribution has no mass");

  double total = 0.0;
  for (Eigen::Index k = 0; k < pd.size(); ++k) {
    const double pk = pd(k) / ps;
    const double qk = qd(k) / qs;
    const double mk = (pk + qk) / 2.0;
    if (pk > 0.0) total += 0.5 * pk * std::log(pk / mk);
    if (qk > 0.0) total += 0.5 * qk * std::log(qk / mk);
  }
  return std::max(0.0, total / std::log(log_base));
}

/// Per-layer mean of row-wise JSD between attention of s and the attention
/// of s' relabeled back to the token order of s, averaged over heads.
Vector<double> self_attention_distance(const MatrixStack<double>& attn_original,
                                       const MatrixStack<double>& attn_perturbed,
                                       const Permutation& permutation, double log_base = 2.0);

struct IdentifiabilityResult {
  Vector<double> values;           // per layer
  std::size_t degenerate_rows = 0; // zero vectors met
};

/// Token identifiability per layer. ArgmaxAccuracy: share of tokens i whose
/// perturbed representation has original token i as its unique cosine nearest
/// neighbour. MeanCosine: mean cosine between aligned representations, zero
/// vectors skipped.
IdentifiabilityResult token_identifiability(const MatrixStack<double>& hidden_original,
                                            const MatrixStack<double>& hidden_perturbed,
                                            const Permutation& permutation, TiMode mode);

/// Per-layer Frobenius distance between aligned matrices, averaged over heads.
Vector<double> matrix_l2(const MatrixStack<double>& original, const MatrixStack<double>& perturbed,
                         const Permutation& permutation);

inline Vector<double> impact_l2(const MatrixStack<double>& impact_original,
                                const MatrixStack<double>& impact_perturbed,
                                const Permutation& permutation) {
  return matrix_l2(impact_original, impact_perturbed, permutation);
}

double mean_lp(std::span<const double> token_logprobs);

/// sum / ((5 + n) / 6)^alpha
double pen_lp(std::span<const double> token_logprobs, double alpha);

} // namespace perturbkit
