#pragma once

#include <optional>
#include <span>
#include <vector>

#include "perturbkit/bundle.hpp"
#include "perturbkit/conllu.hpp"
#include "perturbkit/tensor.hpp"

namespace perturbkit {

/// Word-membership matrix G (words x subwords): G(w, p) = 1 when subword p
/// belongs to word w. Special positions have an all-zero column. Throws
/// ValidationError unless word indices are 0..W-1 in order, each occupying a
/// contiguous run of positions, and at least one word is present.
Matrix<double> word_membership(std::span<const int> alignment);

/// Subword attention (t x t) to word level: drop specials, sum columns and
/// average rows per word, then renormalize rows to 1 (rows with no mass
/// left become uniform).
Matrix<double> attention_to_words(const Eigen::Ref<const Matrix<double>>& attention,
                                  std::span<const int> alignment);

/// As attention_to_words without the renormalization.
Matrix<double> impact_to_words(const Eigen::Ref<const Matrix<double>>& impact,
                               std::span<const int> alignment);

/// Mean-pools the subword rows (t x d) of each word.
Matrix<double> hidden_to_words(const Eigen::Ref<const Matrix<double>>& hidden,
                               std::span<const int> alignment);

/// Sums subword log-probabilities per word.
Vector<double> logprob_to_words(const Eigen::Ref<const Vector<double>>& logprob,
                                std::span<const int> alignment);

// Record-level reduction. The record must have the matching kind.
AttentionStack to_word_level_attention(const TensorBundle& bundle, const Record& record);
ImpactStack to_word_level_impact(const TensorBundle& bundle, const Record& record);
HiddenStack to_word_level_hidden(const TensorBundle& bundle, const Record& record);
Vector<double> to_word_level_logprob(const TensorBundle& bundle, const Record& record);

/// 1-layer, 1-head attention where the row of every non-root token i is
/// signal * e_head(i) + (1 - signal) * uniform, and the root row is uniform.
/// Throws ValidationError unless 0 < signal <= 1.
AttentionStack synth_attention_from_tree(const DepSentence& sentence, double signal);

} // namespace perturbkit
