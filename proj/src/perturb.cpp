#include "perturbkit/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <unordered_set>

#include "perturbkit/error.hpp"
#include "perturbkit/text.hpp"

namespace perturbkit {

namespace {

bool is_punct(const Token& t) { return t.upos == "PUNCT" || base_relation(t.deprel) == "punct"; }

const std::set<std::string, std::less<>> kClausalRelations{
    "ccomp", "xcomp", "advcl", "acl", "csubj", "conj", "parataxis"};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

PerturbedPair make_pair(const DepSentence& sentence, Task task, Permutation permutation) {
  PerturbedPair pair;
  pair.task = task;
  pair.original = sentence;
  pair.perturbed_forms = permutation.apply(sentence.forms());
  pair.permutation = std::move(permutation);
  return pair;
}

} // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::NgramShift: return "ngram-shift";
    case Task::ClauseShift: return "clause-shift";
    case Task::RandomShift: return "random-shift";
  }
  return "";
}

std::string_view task_title(Task task) {
  switch (task) {
    case Task::NgramShift: return "NgramShift";
    case Task::ClauseShift: return "ClauseShift";
    case Task::RandomShift: return "RandomShift";
  }
  return "";
}

Task parse_task(std::string_view name) {
  for (Task t : {Task::NgramShift, Task::ClauseShift, Task::RandomShift})
    if (name == task_name(t) || name == task_title(t)) return t;
  throw ValidationError("unknown task '" + std::string(name) + "'");
}

Permutation Permutation::identity(int n) {
  Permutation p;
  p.map.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p.map[static_cast<std::size_t>(i)] = i + 1;
  return p;
}

bool Permutation::is_valid() const {
  std::vector<char> seen(map.size() + 1, 0);
  for (int v : map) {
    if (v < 1 || v > size() || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = 1;
  }
  return true;
}

bool Permutation::is_identity() const {
  for (int i = 0; i < size(); ++i)
    if (map[static_cast<std::size_t>(i)] != i + 1) return false;
  return true;
}

Permutation Permutation::inverse() const {
  Permutation inv;
  inv.map.resize(map.size());
  for (int i = 0; i < size(); ++i) inv.map[static_cast<std::size_t>(map[static_cast<std::size_t>(i)] - 1)] = i + 1;
  return inv;
}

void NgramConfig::check() const {
  if (n_min < 2 || n_min > n_max)
    throw ValidationError("n-gram range must satisfy 2 <= n_min <= n_max, got [" +
                          std::to_string(n_min) + ", " + std::to_string(n_max) + "]");
}

std::string ngram_key(const DepSentence& sentence, int first, int last) {
  std::string key;
  for (int i = first; i <= last; ++i) {
    if (i > first) key.push_back(' ');
    key += utf8_lower(sentence.at(i).form);
  }
  return key;
}

TfidfTable tfidf_ngram_ranks(const std::vector<DepSentence>& corpus, const NgramConfig& config) {
  config.check();
  if (corpus.empty()) throw ValidationError("cannot rank n-grams of an empty corpus");
  std::map<std::string, std::size_t> term_count;
  std::map<std::string, std::size_t> doc_freq;
  for (const auto& s : corpus) {
    std::set<std::string> in_doc;
    for (int len = config.n_min; len <= config.n_max; ++len) {
      for (int first = 1; first + len - 1 <= s.size(); ++first) {
        auto key = ngram_key(s, first, first + len - 1);
        ++term_count[key];
        in_doc.insert(std::move(key));
      }
    }
    for (const auto& key : in_doc) ++doc_freq[key];
  }
  const double docs = static_cast<double>(corpus.size());
  TfidfTable table;
  for (const auto& [key, tf] : term_count) {
    double idf = std::log((1.0 + docs) / (1.0 + static_cast<double>(doc_freq[key]))) + 1.0;
    table.emplace(key, static_cast<double>(tf) * idf);
  }
  return table;
}

std::vector<std::pair<std::string, double>> ranked(const TfidfTable& table) {
  std::vector<std::pair<std::string, double>> rows(table.begin(), table.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return rows;
}

std::vector<CandidateSpan> find_syntactic_ngrams(const DepSentence& sentence,
                                                 const NgramConfig& config) {
  config.check();
  std::vector<CandidateSpan> spans;
  const int n = sentence.size();
  for (int first = 1; first <= n; ++first) {
    for (int len = config.n_min; len <= config.n_max && first + len - 1 <= n; ++len) {
      const int last = first + len - 1;
      int external = 0;
      bool has_function_relation = false;
      bool punct = false;
      for (int i = first; i <= last; ++i) {
        const Token& t = sentence.at(i);
        punct = punct || is_punct(t);
        bool inside = t.head >= first && t.head <= last;
        if (!inside) ++external;
        if (inside && config.allowed_relations.count(std::string(base_relation(t.deprel))))
          has_function_relation = true;
      }
      // One external attachment plus len-1 internal arcs over an acyclic
      // relation means the span is a connected fragment.
      if (punct || external != 1 || !has_function_relation) continue;
      // The fragment must be a whole subtree: no outside token may hang off it.
      bool complete = true;
      for (const auto& t : sentence.tokens) {
        if (t.id >= first && t.id <= last) continue;
        if (t.head >= first && t.head <= last) {
          complete = false;
          break;
        }
      }
      if (complete) spans.push_back({first, last});
    }
  }
  return spans;
}

std::optional<PerturbedPair> ngram_shift(const DepSentence& sentence, const TfidfTable& ranks,
                                         const NgramConfig& config) {
  auto candidates = find_syntactic_ngrams(sentence, config);
  if (candidates.empty()) return std::nullopt;

  const CandidateSpan* best = nullptr;
  double best_weight = 0.0;
  std::string best_key;
  for (const auto& c : candidates) {
    auto key = ngram_key(sentence, c.first, c.last);
    auto it = ranks.find(key);
    double w = it == ranks.end() ? 0.0 : it->second;
    bool better = best == nullptr || w > best_weight ||
                  (w == best_weight && (c.first < best->first ||
                                        (c.first == best->first && c.length() > best->length())));
    if (better) {
      best = &c;
      best_weight = w;
      best_key = std::move(key);
    }
  }

  Permutation perm = Permutation::identity(sentence.size());
  for (int i = best->first; i <= best->last; ++i)
    perm.map[static_cast<std::size_t>(i - 1)] = best->first + best->last - i;

  auto pair = make_pair(sentence, Task::NgramShift, std::move(perm));
  pair.provenance.span_first = best->first;
  pair.provenance.span_last = best->last;
  pair.provenance.ngram = best_key;
  pair.provenance.weight = best_weight;
  return pair;
}

std::optional<PerturbedPair> clause_shift(const DepSentence& sentence) {
  const int n = sentence.size();
  if (n < 2) return std::nullopt;
  const int root = sentence.root();
  // Sentence-final punctuation stays in place; rotation happens within 1..m.
  const int m = is_punct(sentence.at(n)) ? n - 1 : n;

  int best_head = 0;
  int best_first = 0;
  int best_last = 0;
  for (const auto& t : sentence.tokens) {
    if (t.head != root || !kClausalRelations.count(base_relation(t.deprel))) continue;
    auto nodes = subtree_nodes(sentence, t.id);
    std::erase_if(nodes, [m](int i) { return i > m; });
    if (nodes.size() < 3) continue;
    int first = nodes.front();
    int last = nodes.back();
    if (static_cast<int>(nodes.size()) != last - first + 1) continue;  // non-projective
    if (first != 1 && last != m) continue;                             // not at an edge
    if (last - first + 1 >= m) continue;                               // nothing to swap with
    int len = last - first + 1;
    int best_len = best_last - best_first + 1;
    if (best_head == 0 || len > best_len || (len == best_len && first < best_first)) {
      best_head = t.id;
      best_first = first;
      best_last = last;
    }
  }
  if (best_head == 0) return std::nullopt;

  Permutation perm = Permutation::identity(n);
  auto at = [&perm](int i) -> int& { return perm.map[static_cast<std::size_t>(i - 1)]; };
  if (best_first == 1) {
    const int b = best_last;
    for (int i = 1; i <= b; ++i) at(i) = i + (m - b);
    for (int i = b + 1; i <= m; ++i) at(i) = i - b;
  } else {
    const int a = best_first;
    const int clause_len = m - a + 1;
    for (int i = a; i <= m; ++i) at(i) = i - a + 1;
    for (int i = 1; i < a; ++i) at(i) = i + clause_len;
  }

  auto pair = make_pair(sentence, Task::ClauseShift, std::move(perm));
  if (pair.perturbed_forms == sentence.forms()) return std::nullopt;
  pair.provenance.clause_head = best_head;
  pair.provenance.span_first = best_first;
  pair.provenance.span_last = best_last;
  return pair;
}

std::uint64_t sentence_seed(std::uint64_t seed, std::string_view sent_id) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : sent_id) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

std::optional<PerturbedPair> random_shift(const DepSentence& sentence, std::uint64_t seed) {
  const int n = sentence.size();
  if (n < 2) return std::nullopt;
  const std::uint64_t rng_seed = sentence_seed(seed, sentence.sent_id);
  std::mt19937_64 rng(rng_seed);

  std::vector<int> order(static_cast<std::size_t>(n));
  Permutation perm;
  do {
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i + 1;
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    // order[k] is the original position now at k+1.
    perm = Permutation::identity(n);
    for (int k = 0; k < n; ++k) perm.map[static_cast<std::size_t>(order[static_cast<std::size_t>(k)] - 1)] = k + 1;
  } while (perm.is_identity());

  auto pair = make_pair(sentence, Task::RandomShift, std::move(perm));
  pair.provenance.seed = seed;
  pair.provenance.rng_seed = rng_seed;
  return pair;
}

DepSentence permute_gold_tree(const DepSentence& sentence, const Permutation& permutation) {
  if (permutation.size() != sentence.size())
    throw ValidationError("permutation of length " + std::to_string(permutation.size()) +
                          " does not match sentence " + sentence.sent_id + " of length " +
                          std::to_string(sentence.size()));
  if (!permutation.is_valid()) throw ValidationError("permutation is not a bijection");
  DepSentence out;
  out.sent_id = sentence.sent_id;
  out.tokens.resize(sentence.tokens.size());
  for (const auto& t : sentence.tokens) {
    Token moved = t;
    moved.id = permutation(t.id);
    moved.head = t.head == 0 ? 0 : permutation(t.head);
    out.tokens[static_cast<std::size_t>(moved.id - 1)] = std::move(moved);
  }
  for (const auto& t : out.tokens) {
    if (!out.text.empty()) out.text.push_back(' ');
    out.text += t.form;
  }
  return out;
}

Dataset build_dataset(const std::vector<DepSentence>& treebank, Task task, int target_count,
                      std::uint64_t seed, const NgramConfig& config) {
  if (treebank.empty()) throw ValidationError("treebank is empty");
  Dataset out;
  if (target_count <= 0) return out;

  TfidfTable ranks;
  if (task == Task::NgramShift) ranks = tfidf_ngram_ranks(treebank, config);

  for (const auto& sentence : treebank) {
    if (static_cast<int>(out.pairs.size()) >= target_count) break;
    std::optional<PerturbedPair> pair;
    switch (task) {
      case Task::NgramShift: pair = ngram_shift(sentence, ranks, config); break;
      case Task::ClauseShift: pair = clause_shift(sentence); break;
      case Task::RandomShift: pair = random_shift(sentence, seed); break;
    }
    if (!pair) continue;
    std::ostringstream id;
    id << task_name(task) << '-' << std::setw(6) << std::setfill('0') << out.pairs.size() + 1;
    pair->pair_id = id.str();
    out.pairs.push_back(std::move(*pair));
  }
  if (static_cast<int>(out.pairs.size()) < target_count) {
    out.warning = std::string(task_title(task)) + ": only " + std::to_string(out.pairs.size()) +
                  " of " + std::to_string(target_count) + " requested pairs could be generated";
  }
  return out;
}

DatasetStats dataset_stats(const std::vector<PerturbedPair>& pairs) {
  DatasetStats stats;
  std::unordered_set<std::string> vocab;
  for (const auto& p : pairs) {
    stats.num_tokens += p.original.tokens.size();
    for (const auto& t : p.original.tokens) vocab.insert(utf8_lower(t.form));
  }
  stats.num_sentences = pairs.size();
  stats.unique_tokens = vocab.size();
  if (!pairs.empty()) {
    double mean = static_cast<double>(stats.num_tokens) / static_cast<double>(pairs.size());
    stats.tokens_per_sentence = std::round(mean * 10.0) / 10.0;
  }
  return stats;
}

std::string format_count(std::size_t count) {
  if (count < 1000) return std::to_string(count);
  std::ostringstream out;
  out << std::fixed << std::setprecision(1) << static_cast<double>(count) / 1000.0 << 'k';
  return out.str();
}

std::string format_stats_table(const std::vector<StatsCell>& cells) {
  std::vector<std::string> languages;
  for (const auto& c : cells)
    if (std::find(languages.begin(), languages.end(), c.language) == languages.end())
      languages.push_back(c.language);

  auto lookup = [&](const std::string& lang, Task task) -> const DatasetStats* {
    for (const auto& c : cells)
      if (c.language == lang && c.task == task) return &c.stats;
    return nullptr;
  };

  const Task tasks[] = {Task::NgramShift, Task::ClauseShift, Task::RandomShift};
  std::ostringstream out;
  out << "| | Language | NgramShift | ClauseShift | RandomShift |\n";
  out << "|---|---|---|---|---|\n";
  const char* measures[] = {"num. tokens", "unique tokens", "tokens / sentence"};
  for (int m = 0; m < 3; ++m) {
    for (std::size_t l = 0; l < languages.size(); ++l) {
      out << "| " << (l == 0 ? measures[m] : "") << " | " << languages[l] << " |";
      for (Task task : tasks) {
        const DatasetStats* s = lookup(languages[l], task);
        out << ' ';
        if (s == nullptr) {
          out << '-';
        } else if (m == 0) {
          out << format_count(s->num_tokens);
        } else if (m == 1) {
          out << format_count(s->unique_tokens);
        } else {
          out << std::fixed << std::setprecision(1) << s->tokens_per_sentence;
        }
        out << " |";
      }
      out << '\n';
    }
  }
  return out.str();
}

} // namespace perturbkit
