#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <vector>

#include "perturbkit/error.hpp"
#include "perturbkit/perturb.hpp"

namespace perturbkit {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A layers x heads grid of dense matrices, stored layer-major.
///
/// Attention stacks hold n x n matrices per (layer, head); impact stacks use a
/// single head; hidden-state stacks hold one n x d matrix per layer.
template <typename Scalar>
struct MatrixStack {
  Eigen::Index layers = 0;
  Eigen::Index heads = 0;
  std::vector<Matrix<Scalar>> slices;

  MatrixStack() = default;
  MatrixStack(Eigen::Index layer_count, Eigen::Index head_count, Eigen::Index rows,
              Eigen::Index cols)
      : layers(layer_count),
        heads(head_count),
        slices(static_cast<std::size_t>(layer_count * head_count), Matrix<Scalar>::Zero(rows, cols)) {}

  Matrix<Scalar>& operator()(Eigen::Index layer, Eigen::Index head = 0) {
    return slices[static_cast<std::size_t>(layer * heads + head)];
  }
  const Matrix<Scalar>& operator()(Eigen::Index layer, Eigen::Index head = 0) const {
    return slices[static_cast<std::size_t>(layer * heads + head)];
  }

  Eigen::Index rows() const { return slices.empty() ? 0 : slices.front().rows(); }
  Eigen::Index cols() const { return slices.empty() ? 0 : slices.front().cols(); }
};

using AttentionStack = MatrixStack<double>;
using ImpactStack = MatrixStack<double>;
using HiddenStack = MatrixStack<double>;

/// Moves matrix entries from original to perturbed token order:
/// out(pi(i), pi(j)) = m(i, j).
template <typename Derived>
Matrix<typename Derived::Scalar> to_perturbed_order(const Eigen::MatrixBase<Derived>& m,
                                                    const Permutation& perm) {
  const Eigen::Index n = m.rows();
  Matrix<typename Derived::Scalar> out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(perm(static_cast<int>(i) + 1) - 1, perm(static_cast<int>(j) + 1) - 1) = m(i, j);
  return out;
}

/// Inverse of to_perturbed_order: out(i, j) = m(pi(i), pi(j)).
template <typename Derived>
Matrix<typename Derived::Scalar> to_original_order(const Eigen::MatrixBase<Derived>& m,
                                                   const Permutation& perm) {
  const Eigen::Index n = m.rows();
  Matrix<typename Derived::Scalar> out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = m(perm(static_cast<int>(i) + 1) - 1, perm(static_cast<int>(j) + 1) - 1);
  return out;
}

/// Row relabeling for n x d matrices: out.row(pi(i)) = m.row(i).
template <typename Derived>
Matrix<typename Derived::Scalar> rows_to_perturbed_order(const Eigen::MatrixBase<Derived>& m,
                                                         const Permutation& perm) {
  Matrix<typename Derived::Scalar> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(perm(static_cast<int>(i) + 1) - 1) = m.row(i);
  return out;
}

/// Relabels both axes of every (square) slice.
template <typename Scalar>
MatrixStack<Scalar> stack_to_perturbed_order(const MatrixStack<Scalar>& stack,
                                             const Permutation& perm) {
  MatrixStack<Scalar> out = stack;
  for (auto& s : out.slices) s = to_perturbed_order(s, perm);
  return out;
}

/// Relabels only the rows of every slice (hidden states).
template <typename Scalar>
MatrixStack<Scalar> stack_rows_to_perturbed_order(const MatrixStack<Scalar>& stack,
                                                  const Permutation& perm) {
  MatrixStack<Scalar> out = stack;
  for (auto& s : out.slices) s = rows_to_perturbed_order(s, perm);
  return out;
}

} // namespace perturbkit
