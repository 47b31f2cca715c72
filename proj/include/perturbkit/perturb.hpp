#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "perturbkit/conllu.hpp"

namespace perturbkit {

enum class Task { NgramShift, ClauseShift, RandomShift };

std::string_view task_name(Task task);  // "ngram-shift", ...
std::string_view task_title(Task task); // "NgramShift", ...
Task parse_task(std::string_view name);  // accepts either spelling

/// map[i-1] = new (1-based) position of original token i.
struct Permutation {
  std::vector<int> map;

  static Permutation identity(int n);
  int size() const { return static_cast<int>(map.size()); }
  int operator()(int original_position) const {
    return map[static_cast<std::size_t>(original_position - 1)];
  }
  bool is_valid() const;  // bijection on 1..n
  bool is_identity() const;
  Permutation inverse() const;

  /// out[map[i]] = items[i]
  template <typename T>
  std::vector<T> apply(const std::vector<T>& items) const {
    std::vector<T> out(items.size());
    for (std::size_t i = 0; i < items.size(); ++i)
      out[static_cast<std::size_t>(map[i] - 1)] = items[i];
    return out;
  }

  bool operator==(const Permutation&) const = default;
};

struct NgramConfig {
  int n_min = 2;
  int n_max = 4;
  std::set<std::string> allowed_relations{"case", "det", "nummod", "compound", "amod"};

  void check() const;  // throws ValidationError unless 2 <= n_min <= n_max
};

struct Provenance {
  // NgramShift: reversed span and its n-gram key and weight.
  // ClauseShift: rotated clause head and its span.
  int span_first = 0;
  int span_last = 0;
  int clause_head = 0;
  std::string ngram;
  double weight = 0.0;
  // RandomShift: user seed and the derived generator seed.
  std::uint64_t seed = 0;
  std::uint64_t rng_seed = 0;

  bool operator==(const Provenance&) const = default;
};

struct PerturbedPair {
  std::string pair_id;
  Task task = Task::RandomShift;
  DepSentence original;
  std::vector<std::string> perturbed_forms;
  Permutation permutation;
  Provenance provenance;

  bool operator==(const PerturbedPair&) const = default;
};

/// Lowercased n-gram (space-joined) -> corpus TF x smoothed IDF.
using TfidfTable = std::map<std::string, double>;

TfidfTable tfidf_ngram_ranks(const std::vector<DepSentence>& corpus, const NgramConfig& config);

/// Ranking view of a TfidfTable: highest weight first, ties lexicographic.
std::vector<std::pair<std::string, double>> ranked(const TfidfTable& table);

std::string ngram_key(const DepSentence& sentence, int first, int last);

struct CandidateSpan {
  int first = 0;  // 1-based inclusive
  int last = 0;

  int length() const { return last - first + 1; }
  bool operator==(const CandidateSpan&) const = default;
};

/// Contiguous spans of n_min..n_max tokens that form a complete subtree
/// (exactly one token attached outside the span, no outside token attached
/// inside it), contain no punctuation, and carry at least one internal arc
/// whose relation is in allowed_relations. Ordered by start, then length.
std::vector<CandidateSpan> find_syntactic_ngrams(const DepSentence& sentence,
                                                 const NgramConfig& config);

std::optional<PerturbedPair> ngram_shift(const DepSentence& sentence, const TfidfTable& ranks,
                                         const NgramConfig& config);

std::optional<PerturbedPair> clause_shift(const DepSentence& sentence);

std::optional<PerturbedPair> random_shift(const DepSentence& sentence, std::uint64_t seed);

/// Generator seed derived from the user seed and the sentence id.
std::uint64_t sentence_seed(std::uint64_t seed, std::string_view sent_id);

/// Moves token i to map[i]; heads are relabeled through the permutation.
DepSentence permute_gold_tree(const DepSentence& sentence, const Permutation& permutation);

struct Dataset {
  std::vector<PerturbedPair> pairs;
  std::optional<std::string> warning;  // set on shortage
};

Dataset build_dataset(const std::vector<DepSentence>& treebank, Task task, int target_count,
                      std::uint64_t seed, const NgramConfig& config = {});

struct DatasetStats {
  std::size_t num_sentences = 0;
  std::size_t num_tokens = 0;
  std::size_t unique_tokens = 0;
  double tokens_per_sentence = 0.0;  // rounded to one decimal
};

DatasetStats dataset_stats(const std::vector<PerturbedPair>& pairs);

struct StatsCell {
  std::string language;
  Task task;
  DatasetStats stats;
};

/// Renders the stats as a table with one block per measure (num. tokens,
/// unique tokens, tokens / sentence), one row per language and one column per
/// task. Counts of 1000 or more are shown as "105.8k".
std::string format_stats_table(const std::vector<StatsCell>& cells);
std::string format_count(std::size_t count);

} // namespace perturbkit
