#pragma once

#include <span>

namespace perturbkit {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Survival function of the Kolmogorov distribution,
/// Q(x) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2).
double kolmogorov_survival(double x);

/// Two-sample Kolmogorov-Smirnov: D = sup |F_a - F_b|, asymptotic p-value with
/// effective size n_a n_b / (n_a + n_b). Throws ValidationError on an empty
/// sample.
TestResult ks_test(std::span<const double> sample_a, std::span<const double> sample_b);

/// Wilcoxon signed-rank on paired samples. Zero differences are dropped,
/// tied |d| get average ranks, W = min(W+, W-), and the two-sided p-value uses
/// the tie-corrected normal approximation. Throws ValidationError on unequal
/// lengths and "no signal" when every difference is zero.
TestResult wilcoxon_signed_rank(std::span<const double> paired_a, std::span<const double> paired_b);

} // namespace perturbkit
