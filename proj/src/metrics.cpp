#include "perturbkit/metrics.hpp"

#include <limits>
#include <numeric>

namespace perturbkit {

namespace {

using Index = Eigen::Index;

void require_same_layout(const MatrixStack<double>& a, const MatrixStack<double>& b,
                         const Permutation& perm, const char* what) {
  if (a.layers != b.layers || a.heads != b.heads || a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError(std::string(what) + ": stacks have different dimensions");
  if (perm.size() != a.rows())
    throw ValidationError(std::string(what) + ": permutation length " +
                          std::to_string(perm.size()) + " != " + std::to_string(a.rows()));
}

} // namespace

void MetricConfig::check() const {
  if (!(penlp_alpha >= 0.0)) throw ValidationError("penlp alpha must be non-negative");
  if (!(jsd_log_base > 1.0)) throw ValidationError("jsd log base must exceed 1");
}

Vector<double> self_attention_distance(const MatrixStack<double>& s, const MatrixStack<double>& p,
                                       const Permutation& perm, double log_base) {
  require_same_layout(s, p, perm, "self_attention_distance");
  Vector<double> out = Vector<double>::Zero(s.layers);
  for (Index l = 0; l < s.layers; ++l) {
    for (Index h = 0; h < s.heads; ++h) {
      const Matrix<double> aligned = to_original_order(p(l, h), perm);
      double rows = 0.0;
      for (Index i = 0; i < aligned.rows(); ++i) rows += jsd(s(l, h).row(i), aligned.row(i), log_base);
      out(l) += rows / static_cast<double>(aligned.rows());
    }
    out(l) /= static_cast<double>(s.heads);
  }
  return out;
}

IdentifiabilityResult token_identifiability(const MatrixStack<double>& s,
                                            const MatrixStack<double>& p, const Permutation& perm,
                                            TiMode mode) {
  require_same_layout(s, p, perm, "token_identifiability");
  const Index n = s.rows();
  IdentifiabilityResult result;
  result.values = Vector<double>::Zero(s.layers);
  for (Index l = 0; l < s.layers; ++l) {
    const Matrix<double>& hs = s(l);
    const Matrix<double>& hp = p(l);
    const Vector<double> norms = hs.rowwise().norm();
    double total = 0.0;
    Index counted = 0;
    for (Index i = 0; i < n; ++i) {
      const auto query = hp.row(perm(static_cast<int>(i) + 1) - 1);
      const double qn = query.norm();
      if (mode == TiMode::MeanCosine) {
        if (qn == 0.0 || norms(i) == 0.0) {
          ++result.degenerate_rows;
          continue;
        }
        total += hs.row(i).dot(query) / (norms(i) * qn);
        ++counted;
        continue;
      }
      ++counted;
      if (qn == 0.0 || norms(i) == 0.0) {
        ++result.degenerate_rows;
        continue;  // failure
      }
      double best = -std::numeric_limits<double>::infinity();
      Index best_j = -1;
      bool tied = false;
      for (Index j = 0; j < n; ++j) {
        if (norms(j) == 0.0) continue;
        const double cos = hs.row(j).dot(query) / (norms(j) * qn);
        if (cos > best) {
          best = cos;
          best_j = j;
          tied = false;
        } else if (cos == best) {
          tied = true;
        }
      }
      if (best_j == i && !tied) total += 1.0;
    }
    result.values(l) = counted == 0 ? std::numeric_limits<double>::quiet_NaN()
                                    : total / static_cast<double>(counted);
  }
  return result;
}

Vector<double> matrix_l2(const MatrixStack<double>& s, const MatrixStack<double>& p,
                         const Permutation& perm) {
  require_same_layout(s, p, perm, "matrix_l2");
  Vector<double> out = Vector<double>::Zero(s.layers);
  for (Index l = 0; l < s.layers; ++l) {
    for (Index h = 0; h < s.heads; ++h) out(l) += (s(l, h) - to_original_order(p(l, h), perm)).norm();
    out(l) /= static_cast<double>(s.heads);
  }
  return out;
}

double mean_lp(std::span<const double> lp) {
  if (lp.empty()) throw ValidationError("mean_lp of an empty sentence");
  return std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
}

double pen_lp(std::span<const double> lp, double alpha) {
  if (lp.empty()) throw ValidationError("pen_lp of an empty sentence");
  const double penalty = std::pow((5.0 + static_cast<double>(lp.size())) / 6.0, alpha);
  return std::accumulate(lp.begin(), lp.end(), 0.0) / penalty;
}

} // namespace perturbkit
