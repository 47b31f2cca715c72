#include "perturbkit/arborescence.hpp"

namespace perturbkit {

double uuas(const HeadAssignment& predicted, const DepSentence& gold) {
  if (static_cast<int>(predicted.size()) != gold.size())
    throw ValidationError("predicted tree has " + std::to_string(predicted.size()) +
                          " tokens, gold sentence " + gold.sent_id + " has " +
                          std::to_string(gold.size()));
  if (gold.size() <= 1) return 1.0;
  const EdgeSet gold_set = gold_edges(gold);
  std::size_t hits = 0;
  for (const Edge& e : undirected_edges(predicted)) hits += gold_set.count(e);
  return static_cast<double>(hits) / static_cast<double>(gold.size() - 1);
}

} // namespace perturbkit
