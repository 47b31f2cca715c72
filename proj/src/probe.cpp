#include "perturbkit/probe.hpp"

#include "perturbkit/csv.hpp"
#include "perturbkit/word_level.hpp"

namespace perturbkit {

namespace {

ProbeGrid make_grid(Task task, Statistic statistic, Eigen::Index layers, Eigen::Index heads) {
  ProbeGrid g;
  g.task = task;
  g.statistic = statistic;
  g.values = Matrix<double>::Zero(layers, heads);
  return g;
}

void check_stack(const MatrixStack<double>& stack, const DepSentence& sentence, const char* side) {
  if (stack.slices.empty() || static_cast<int>(stack.rows()) != sentence.size() ||
      stack.rows() != stack.cols())
    throw ValidationError(std::string(side) + " stack does not match sentence " +
                          sentence.sent_id + " of " + std::to_string(sentence.size()) + " words");
}

} // namespace

Matrix<double> induction_weights(const Matrix<double>& slice, ProbeMethod method,
                                 const ProbeOptions& options) {
  if (method == ProbeMethod::Impact) return (slice + slice.transpose()) / 2.0;
  Matrix<double> w = options.direction == AttentionDirection::DependentToHead
                         ? slice
                         : Matrix<double>(slice.transpose());
  if (options.symmetrize_attention) w = ((w + w.transpose()) / 2.0).eval();
  return w;
}

HeadAssignment induce_tree(const Matrix<double>& weights, const DepSentence& gold) {
  return cle_arborescence(weights, gold.root());
}

ProbeResult probe_stacks(std::span<const PairStacks> inputs, ProbeMethod method,
                         const ProbeOptions& options) {
  if (inputs.empty()) throw ValidationError("no pairs to probe");
  const auto& first = inputs.front();
  const Eigen::Index layers = first.original.layers;
  const Eigen::Index heads = first.original.heads;
  const Task task = first.pair->task;

  ProbeResult result;
  result.uuas_original = make_grid(task, Statistic::UUAS, layers, heads);
  result.uuas_perturbed = make_grid(task, Statistic::UUAS, layers, heads);
  result.delta_uuas = make_grid(task, Statistic::DeltaUUAS, layers, heads);

  for (const auto& in : inputs) {
    const DepSentence& gold_s = in.pair->original;
    const DepSentence gold_p = permute_gold_tree(gold_s, in.pair->permutation);
    for (const auto* stack : {&in.original, &in.perturbed})
      if (stack->layers != layers || stack->heads != heads)
        throw ValidationError("pair " + in.pair->pair_id + " has a stack of different dimensions");
    check_stack(in.original, gold_s, "original");
    check_stack(in.perturbed, gold_p, "perturbed");

    for (Eigen::Index l = 0; l < layers; ++l) {
      for (Eigen::Index h = 0; h < heads; ++h) {
        const double u_s =
            uuas(induce_tree(induction_weights(in.original(l, h), method, options), gold_s), gold_s);
        const double u_p =
            uuas(induce_tree(induction_weights(in.perturbed(l, h), method, options), gold_p), gold_p);
        result.uuas_original.values(l, h) += u_s;
        result.uuas_perturbed.values(l, h) += u_p;
        result.delta_uuas.values(l, h) += u_s - u_p;
      }
    }
  }
  const double count = static_cast<double>(inputs.size());
  result.uuas_original.values /= count;
  result.uuas_perturbed.values /= count;
  result.delta_uuas.values /= count;
  result.pairs_used = inputs.size();
  return result;
}

namespace {

template <typename Loader>
ProbeResult probe_bundle(const TensorBundle& bundle, std::span<const PerturbedPair> pairs,
                         Kind kind, ProbeMethod method, const ProbeOptions& options,
                         Loader load) {
  std::vector<PairStacks> inputs;
  std::vector<std::string> warnings;
  for (const auto& pair : pairs) {
    const Record* rs = bundle.find(pair.pair_id, Side::Original, kind);
    const Record* rp = bundle.find(pair.pair_id, Side::Perturbed, kind);
    if (rs == nullptr || rp == nullptr) {
      warnings.push_back("pair " + pair.pair_id + ": missing " + std::string(to_string(kind)) +
                         " tensors, skipped");
      continue;
    }
    PairStacks ps{&pair, load(bundle, *rs), load(bundle, *rp)};
    if (ps.original.rows() != pair.original.size() || ps.perturbed.rows() != pair.original.size()) {
      warnings.push_back("pair " + pair.pair_id + ": word-level size differs from the sentence, skipped");
      continue;
    }
    if (!inputs.empty() && (ps.original.layers != inputs.front().original.layers ||
                            ps.original.heads != inputs.front().original.heads)) {
      warnings.push_back("pair " + pair.pair_id + ": stack dimensions differ from the bundle, skipped");
      continue;
    }
    inputs.push_back(std::move(ps));
  }
  if (inputs.empty())
    throw DataError("no pair has " + std::string(to_string(kind)) + " tensors for both sides");
  ProbeResult result = probe_stacks(inputs, method, options);
  result.warnings = std::move(warnings);
  return result;
}

} // namespace

ProbeResult probe_self_attention(const TensorBundle& bundle, std::span<const PerturbedPair> pairs,
                                 const ProbeOptions& options) {
  return probe_bundle(bundle, pairs, Kind::Attention, ProbeMethod::SelfAttention, options,
                      to_word_level_attention);
}

ProbeResult probe_impact(const TensorBundle& bundle, std::span<const PerturbedPair> pairs) {
  return probe_bundle(bundle, pairs, Kind::Impact, ProbeMethod::Impact, ProbeOptions{},
                      to_word_level_impact);
}

void write_grid_csv(std::ostream& out, const ProbeGrid& grid) {
  out << "layer,head,value\n";
  for (Eigen::Index l = 0; l < grid.layer_count(); ++l)
    for (Eigen::Index h = 0; h < grid.head_count(); ++h)
      out << l << ',' << h << ',' << format_double(grid.values(l, h)) << '\n';
}

} // namespace perturbkit
