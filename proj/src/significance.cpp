#include "perturbkit/significance.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "perturbkit/error.hpp"

namespace perturbkit {

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    // Jacobi-theta form of the CDF converges fast for small x.
    const double pi = 3.14159265358979323846;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * pi * pi / (8.0 * x * x));
      cdf += term;
      if (term < 1e-17) break;
    }
    cdf *= std::sqrt(2.0 * pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_test(std::span<const double> a_in, std::span<const double> b_in) {
  if (a_in.empty() || b_in.empty()) throw ValidationError("ks_test: empty sample");
  std::vector<double> a(a_in.begin(), a_in.end());
  std::vector<double> b(b_in.begin(), b_in.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());

  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  return {d, kolmogorov_survival(std::sqrt(ne) * d)};
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("wilcoxon: paired samples of length " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()));
  std::vector<double> diffs;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] != b[k]) diffs.push_back(a[k] - b[k]);
  if (diffs.empty()) throw ValidationError("wilcoxon: no signal (all differences are zero)");

  std::vector<std::size_t> order(diffs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });

  double w_plus = 0.0, w_minus = 0.0, tie_term = 0.0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end < order.size() && std::abs(diffs[order[end]]) == std::abs(diffs[order[start]])) ++end;
    const double t = static_cast<double>(end - start);
    const double rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t k = start; k < end; ++k) (diffs[order[k]] > 0 ? w_plus : w_minus) += rank;
    tie_term += t * t * t - t;
    start = end;
  }

  const double n = static_cast<double>(diffs.size());
  const double w = std::min(w_plus, w_minus);
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  double p = 1.0;
  if (var > 0.0) {
    const double z = (w - mean) / std::sqrt(var);
    p = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  }
  return {w, p};
}

} // namespace perturbkit
