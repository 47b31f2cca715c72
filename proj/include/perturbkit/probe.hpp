#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "perturbkit/arborescence.hpp"
#include "perturbkit/bundle.hpp"
#include "perturbkit/perturb.hpp"
#include "perturbkit/tensor.hpp"

namespace perturbkit {

enum class AttentionDirection {
  DependentToHead,  // row i proposes heads for token i
  HeadToDependent,  // column j proposes heads for token j
};

enum class Statistic { UUAS, DeltaUUAS, SAD, TI, L2 };

struct ProbeOptions {
  AttentionDirection direction = AttentionDirection::DependentToHead;
  bool symmetrize_attention = false;
};

/// layers x heads (heads = 1 for per-layer methods).
struct ProbeGrid {
  Task task = Task::RandomShift;
  Statistic statistic = Statistic::DeltaUUAS;
  Matrix<double> values;

  Eigen::Index layer_count() const { return values.rows(); }
  Eigen::Index head_count() const { return values.cols(); }
};

struct ProbeResult {
  ProbeGrid uuas_original;
  ProbeGrid uuas_perturbed;
  ProbeGrid delta_uuas;
  std::size_t pairs_used = 0;
  std::vector<std::string> warnings;
};

/// Word-level stacks of both sides of one pair.
struct PairStacks {
  const PerturbedPair* pair = nullptr;
  MatrixStack<double> original;
  MatrixStack<double> perturbed;
};

enum class ProbeMethod { SelfAttention, Impact };

/// Weight matrix handed to the arborescence for one slice.
Matrix<double> induction_weights(const Matrix<double>& slice, ProbeMethod method,
                                 const ProbeOptions& options);

/// Gold tree of the original side and the tree induced from `weights`.
HeadAssignment induce_tree(const Matrix<double>& weights, const DepSentence& gold);

/// Mean over pairs of UUAS(s), UUAS(s') and UUAS(s) - UUAS(s') for every
/// slice. s' is scored against the permuted gold tree, with its root found
/// through the permutation. Throws ValidationError on an empty input or
/// stacks whose sizes disagree with the sentence.
ProbeResult probe_stacks(std::span<const PairStacks> inputs, ProbeMethod method,
                         const ProbeOptions& options = {});

/// Loads word-level attention for both sides of each pair from the bundle and
/// probes it. Pairs without tensors are skipped with a warning; throws
/// DataError when no pair has them.
ProbeResult probe_self_attention(const TensorBundle& bundle, std::span<const PerturbedPair> pairs,
                                 const ProbeOptions& options = {});

/// As probe_self_attention over impact stacks (one column per layer), with
/// each matrix symmetrized before induction.
ProbeResult probe_impact(const TensorBundle& bundle, std::span<const PerturbedPair> pairs);

/// CSV with header "layer,head,value"; rows in layer-major order.
void write_grid_csv(std::ostream& out, const ProbeGrid& grid);

} // namespace perturbkit
