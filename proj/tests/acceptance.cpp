// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "perturbkit/arborescence.hpp"
#include "perturbkit/bundle.hpp"
#include "perturbkit/cli.hpp"
#include "perturbkit/metrics.hpp"
#include "perturbkit/pair_io.hpp"
#include "perturbkit/perturb.hpp"
#include "perturbkit/probe.hpp"
#include "perturbkit/significance.hpp"
#include "perturbkit/word_level.hpp"

using namespace perturbkit;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kTreeWeightTol = 1e-9;
constexpr double kNullTol = 1e-9;
constexpr double kClosedFormTol = 1e-12;
constexpr double kPenLpTol = 1e-9;
constexpr double kCleBudgetSeconds = 30.0;
constexpr double kFuzzBudgetSeconds = 60.0;
constexpr int kCleMatrices = 1000;
constexpr int kFuzzSentences = 10000;
constexpr int kSyntheticTrees = 100;
constexpr double kSyntheticSignal = 0.9;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(3);
  s << x;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome arborescence_vs_brute_force() {
  Outcome o;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto t0 = Clock::now();
  double worst = 0;
  for (int k = 0; k < kCleMatrices; ++k) {
    const int n = 2 + k % 5;
    Eigen::MatrixXd w(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w(i, j) = u(rng);
    const int root = 1 + static_cast<int>(rng() % n);
    const auto heads = cle_arborescence(w, root);
    if (!fixtures::is_arborescence(heads, root)) {
      fail(o, "not an arborescence at matrix " + std::to_string(k));
      continue;
    }
    const double gap = std::abs(tree_weight(w, heads) - fixtures::brute_force_arborescence(w, root).weight);
    worst = std::max(worst, gap);
    if (gap > kTreeWeightTol) fail(o, "weight gap " + fmt(gap) + " at matrix " + std::to_string(k));
  }
  const double secs = seconds_since(t0);
  if (secs >= kCleBudgetSeconds) fail(o, "took " + fmt(secs) + " s");
  if (o.pass) o.detail = std::to_string(kCleMatrices) + " matrices, max gap " + fmt(worst) + ", " + fmt(secs) + " s";
  return o;
}

Outcome uuas_oracle() {
  Outcome o;
  std::mt19937_64 rng(7);
  for (int k = 0; k < 2000; ++k) {
    auto gold = fixtures::make_sentence(fixtures::random_heads(rng, 1 + k % 30));
    if (uuas(gold.heads(), gold) != 1.0) fail(o, "uuas(gold, gold) != 1 on tree " + std::to_string(k));
  }
  // 8 tokens, 7 dependents; token 8 moves from head 7 to head 2.
  auto gold = fixtures::make_sentence({2, 0, 2, 5, 3, 5, 2, 7});
  auto pred = gold.heads();
  pred[7] = 2;
  int shared = 0;
  for (const auto& e : gold_edges(gold)) shared += undirected_edges(pred).count(e);
  const double direct = shared / 7.0;
  const double got = uuas(pred, gold);
  if (std::abs(got - 6.0 / 7.0) > 1e-15 || std::abs(direct - 6.0 / 7.0) > 1e-15)
    fail(o, "one wrong head scored " + fmt(got));
  if (std::round(got * 100) / 100 != 0.86) fail(o, "6/7 does not round to 0.86");
  if (o.pass) o.detail = "2000 fuzzed trees; one wrong head = " + fmt(got);
  return o;
}

std::vector<DepSentence> fuzz_treebank(std::uint64_t seed, int count, int max_len) {
  std::mt19937_64 rng(seed);
  std::vector<DepSentence> tb;
  for (int k = 0; k < count; ++k)
    tb.push_back(fixtures::random_sentence(rng, 2 + k % (max_len - 1), "f" + std::to_string(k)));
  return tb;
}

// Attention and impact records with [CLS] ... [SEP] around one subword per word.
void append_records(std::vector<RecordData>& out, const PerturbedPair& p, Side side,
                    const MatrixStack<double>& attention, const MatrixStack<double>& impact) {
  const int n = p.original.size();
  const int t = n + 2;
  std::vector<int> a{kSpecialToken};
  for (int w = 0; w < n; ++w) a.push_back(w);
  a.push_back(kSpecialToken);
  auto pack = [&](const MatrixStack<double>& s, Kind kind, std::vector<std::int64_t> shape) {
    RecordData rd;
    rd.record.pair_id = p.pair_id;
    rd.record.side = side;
    rd.record.kind = kind;
    rd.record.shape = std::move(shape);
    rd.record.word_alignment = a;
    for (const auto& m : s.slices)
      for (int i = 0; i < t; ++i)
        for (int j = 0; j < t; ++j) rd.values.push_back(static_cast<float>(m(i, j)));
    out.push_back(std::move(rd));
  };
  pack(attention, Kind::Attention, {attention.layers, attention.heads, t, t});
  pack(impact, Kind::Impact, {impact.layers, t, t});
}

// Relabels a subword stack whose first and last positions are specials.
MatrixStack<double> relabel_subwords(const MatrixStack<double>& s, const Permutation& perm) {
  std::vector<int> map{1};
  for (int v : perm.map) map.push_back(v + 1);
  map.push_back(static_cast<int>(perm.size()) + 2);
  return stack_to_perturbed_order(s, Permutation{map});
}

MatrixStack<double> random_subword_stack(std::mt19937_64& rng, Eigen::Index layers,
                                         Eigen::Index heads, int t) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  MatrixStack<double> s(layers, heads, t, t);
  for (auto& m : s.slices)
    for (int i = 0; i < t; ++i) {
      for (int j = 0; j < t; ++j) m(i, j) = u(rng);
      m.row(i) /= m.row(i).sum();
    }
  return s;
}

Outcome relabeling_null() {
  Outcome o;
  std::mt19937_64 rng(99);
  const auto tb = fuzz_treebank(4242, 5000, 12);
  double worst = 0;
  std::string counts;
  for (Task task : {Task::NgramShift, Task::ClauseShift, Task::RandomShift}) {
    auto data = build_dataset(tb, task, 60, 13);
    if (data.pairs.size() < 60) {
      fail(o, std::string(task_name(task)) + ": only " + std::to_string(data.pairs.size()) + " pairs");
      continue;
    }
    std::vector<RecordData> records;
    for (const auto& p : data.pairs) {
      const int t = p.original.size() + 2;
      auto att = random_subword_stack(rng, 3, 4, t);
      auto imp = random_subword_stack(rng, 3, 1, t);
      append_records(records, p, Side::Original, att, imp);
      append_records(records, p, Side::Perturbed, relabel_subwords(att, p.permutation),
                     relabel_subwords(imp, p.permutation));
    }
    fixtures::TempDir dir("null");
    write_bundle(dir.path, "null-model", PeMode::Absolute, records);
    const auto bundle = read_bundle(dir.path);

    for (bool sym : {false, true}) {
      auto r = probe_self_attention(bundle, data.pairs, {AttentionDirection::DependentToHead, sym});
      worst = std::max(worst, r.delta_uuas.values.cwiseAbs().maxCoeff());
      if (r.pairs_used != data.pairs.size()) fail(o, "pairs skipped");
    }
    auto ri = probe_impact(bundle, data.pairs);
    worst = std::max(worst, ri.delta_uuas.values.cwiseAbs().maxCoeff());
    for (const auto& p : data.pairs) {
      auto as = to_word_level_attention(bundle, *bundle.find(p.pair_id, Side::Original, Kind::Attention));
      auto ap = to_word_level_attention(bundle, *bundle.find(p.pair_id, Side::Perturbed, Kind::Attention));
      auto is = to_word_level_impact(bundle, *bundle.find(p.pair_id, Side::Original, Kind::Impact));
      auto ip = to_word_level_impact(bundle, *bundle.find(p.pair_id, Side::Perturbed, Kind::Impact));
      worst = std::max(worst, self_attention_distance(as, ap, p.permutation).cwiseAbs().maxCoeff());
      worst = std::max(worst, impact_l2(is, ip, p.permutation).cwiseAbs().maxCoeff());
    }
    counts += std::string(counts.empty() ? "" : "/") + std::to_string(data.pairs.size());
  }
  if (worst > kNullTol) fail(o, "max |value| " + fmt(worst));
  if (o.pass) o.detail = "pairs " + counts + ", max |dUUAS, SAD, L2| = " + fmt(worst);
  return o;
}

Outcome synthetic_recovery() {
  Outcome o;
  std::mt19937_64 rng(1234);
  const auto tb = fuzz_treebank(777, kSyntheticTrees, 8);
  std::vector<PerturbedPair> pairs;
  for (const auto& s : tb) {
    auto p = random_shift(s, rng());
    p->pair_id = s.sent_id;
    pairs.push_back(*p);
  }
  std::vector<PairStacks> inputs;
  for (const auto& p : pairs)
    inputs.push_back({&p, synth_attention_from_tree(p.original, kSyntheticSignal),
                      synth_attention_from_tree(permute_gold_tree(p.original, p.permutation),
                                                kSyntheticSignal)});
  auto r = probe_stacks(inputs, ProbeMethod::SelfAttention);
  if (r.uuas_original.values(0, 0) != 1.0) fail(o, "UUAS(s) = " + fmt(r.uuas_original.values(0, 0)));
  if (r.uuas_perturbed.values(0, 0) != 1.0) fail(o, "UUAS(s') = " + fmt(r.uuas_perturbed.values(0, 0)));
  if (r.delta_uuas.values(0, 0) != 0.0) fail(o, "dUUAS = " + fmt(r.delta_uuas.values(0, 0)));
  if (o.pass) o.detail = std::to_string(pairs.size()) + " trees, UUAS 1, dUUAS 0";
  return o;
}

// Multiset of forms, used by every task.
bool same_forms(const PerturbedPair& p) {
  auto a = p.original.forms(), b = p.perturbed_forms;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b && p.permutation.apply(p.original.forms()) == p.perturbed_forms;
}

bool is_bijection(const Permutation& perm) {
  std::vector<bool> seen(perm.size() + 1, false);
  for (int v : perm.map) {
    if (v < 1 || v > static_cast<int>(perm.size()) || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

bool moves_something(const Permutation& perm) {
  for (std::size_t i = 0; i < perm.size(); ++i)
    if (perm.map[i] != static_cast<int>(i) + 1) return true;
  return false;
}

Outcome perturbation_invariants() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto tb = fuzz_treebank(31337, kFuzzSentences, 20);
  NgramConfig cfg;
  const auto ranks = tfidf_ngram_ranks(tb, cfg);
  std::map<Task, int> applied;
  for (const auto& s : tb) {
    const int n = s.size();
    if (auto p = ngram_shift(s, ranks, cfg)) {
      ++applied[Task::NgramShift];
      const auto& m = p->permutation.map;
      int lo = n + 1, hi = 0;
      for (int i = 1; i <= n; ++i)
        if (m[i - 1] != i) lo = std::min(lo, i), hi = std::max(hi, i);
      const int len = hi - lo + 1;
      bool ok = is_bijection(p->permutation) && moves_something(p->permutation) && same_forms(*p) &&
                len >= 2 && len <= 4;
      for (int i = lo; ok && i <= hi; ++i) ok = m[i - 1] == lo + hi - i;  // one reversed span
      if (!ok) fail(o, "NgramShift broke on " + s.sent_id);
    }
    if (auto p = clause_shift(s)) {
      ++applied[Task::ClauseShift];
      const auto& m = p->permutation.map;
      // Two adjacent blocks [1..k] and [k+1..e] exchanged, each in order,
      // positions after e fixed.
      bool ok = is_bijection(p->permutation) && moves_something(p->permutation) && same_forms(*p);
      int e = n;
      while (e > 0 && m[e - 1] == e) --e;
      int k = 0;
      if (ok && e > 0) {
        k = e - m[0] + 1;  // first block length
        for (int i = 1; ok && i <= e; ++i) ok = m[i - 1] == (i <= k ? i + (e - k) : i - k);
        ok = ok && k >= 1 && k < e;
      }
      if (!ok) fail(o, "ClauseShift broke on " + s.sent_id);
    }
    const std::uint64_t seed = 13;
    auto p1 = random_shift(s, seed), p2 = random_shift(s, seed);
    ++applied[Task::RandomShift];
    if (!p1 || !p2 || !(p1->permutation == p2->permutation) || !is_bijection(p1->permutation) ||
        !moves_something(p1->permutation) || !same_forms(*p1))
      fail(o, "RandomShift broke on " + s.sent_id);
  }
  const double secs = seconds_since(t0);
  if (secs >= kFuzzBudgetSeconds) fail(o, "took " + fmt(secs) + " s");
  if (applied[Task::NgramShift] == 0 || applied[Task::ClauseShift] == 0) fail(o, "a task never applied");
  if (o.pass)
    o.detail = std::to_string(kFuzzSentences) + " sentences, applicable " +
               std::to_string(applied[Task::NgramShift]) + "/" + std::to_string(applied[Task::ClauseShift]) +
               "/" + std::to_string(applied[Task::RandomShift]) + ", " + fmt(secs) + " s";
  return o;
}

Outcome metric_closed_forms() {
  Outcome o;
  Eigen::Vector2d p(1, 0), q(0, 1);
  if (std::abs(jsd(p, q) - 1.0) > kClosedFormTol) fail(o, "jsd((1,0),(0,1)) = " + fmt(jsd(p, q)));
  std::vector<double> one{-4.5};
  if (pen_lp(one, 0.8) != -4.5) fail(o, "pen_lp(n=1) changed the value");
  std::vector<double> seven(7, -2.0);
  if (std::abs(pen_lp(seven, 0.8) - (-14.0 / std::pow(2.0, 0.8))) > kPenLpTol)
    fail(o, "pen_lp(-14, 7) = " + fmt(pen_lp(seven, 0.8)));
  std::vector<double> three{-1, -2, -3};
  if (mean_lp(three) != -2.0) fail(o, "mean_lp = " + fmt(mean_lp(three)));
  std::vector<double> a{1, 2, 3, 4}, b{1.5, 2.5, 3.5, 4.5};
  // sup |F_a - F_b| is reached just after each a point: 1/4.
  if (std::abs(ks_test(a, b).statistic - 0.25) > kClosedFormTol) fail(o, "KS D = " + fmt(ks_test(a, b).statistic));
  // |d| = 1, 1, 2, 3 -> ranks 1.5, 1.5, 3, 4; W+ = 6, W- = 4; mean 5,
  // variance 4*5*9/24 - (2^3 - 2)/48 = 7.375.
  std::vector<double> d{1, 1, 2, -3}, zero(4, 0.0);
  auto w = wilcoxon_signed_rank(d, zero);
  const double z = (4.0 - 5.0) / std::sqrt(7.375);
  const double p_hand = std::erfc(std::abs(z) / std::sqrt(2.0));
  if (w.statistic != 4.0 || std::abs(w.p_value - p_hand) > kClosedFormTol)
    fail(o, "Wilcoxon W = " + fmt(w.statistic) + ", p = " + fmt(w.p_value));
  if (o.pass) o.detail = "jsd, pen_lp, mean_lp, KS D, Wilcoxon ties";
  return o;
}

int run_cli_quiet(std::vector<std::string> args) {
  args.insert(args.begin(), "perturbkit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome format_round_trip() {
  Outcome o;
  std::mt19937_64 rng(555);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<RecordData> items;
    for (int k = 0; k < 8; ++k) {
      const int t = 1 + static_cast<int>(rng() % 9);
      const Kind kind = static_cast<Kind>(rng() % 4);
      RecordData rd;
      rd.record.pair_id = "fuzz-" + std::to_string(k / 2);
      rd.record.side = k % 2 ? Side::Perturbed : Side::Original;
      rd.record.kind = kind;
      rd.record.shape = kind == Kind::Attention ? std::vector<std::int64_t>{2, 2, t, t}
                        : kind == Kind::Impact  ? std::vector<std::int64_t>{3, t, t}
                        : kind == Kind::Hidden  ? std::vector<std::int64_t>{3, t, 6}
                                                : std::vector<std::int64_t>{t};
      for (int i = 0; i < t; ++i) rd.record.word_alignment.push_back(i);
      rd.values.resize(rd.record.element_count());
      for (auto& x : rd.values) {
        const std::uint32_t raw = bits(rng);
        std::memcpy(&x, &raw, sizeof x);
      }
      items.push_back(std::move(rd));
    }
    fixtures::TempDir dir("roundtrip");
    write_bundle(dir.path, "fuzz", PeMode::Random, items);
    const auto back = read_bundle(dir.path);
    if (back.records.size() != items.size()) {
      fail(o, "record count changed");
      continue;
    }
    for (std::size_t k = 0; k < items.size(); ++k) {
      const auto v = back.values(back.records[k]);
      if (v.size() != items[k].values.size() ||
          std::memcmp(v.data(), items[k].values.data(), v.size_bytes()) != 0 ||
          back.records[k].shape != items[k].record.shape ||
          back.records[k].word_alignment != items[k].record.word_alignment)
        fail(o, "bundle record " + std::to_string(k) + " differs");
    }
  }

  fixtures::TempDir a("regen-a"), b("regen-b");
  const std::string treebank = (fs::path(PERTURBKIT_DATA_DIR) / "toy_en.conllu").string();
  for (const char* task : {"ngram-shift", "clause-shift", "random-shift"}) {
    for (const auto* dir : {&a, &b})
      if (run_cli_quiet({"generate", "--treebank", treebank, "--task", task, "--seed", "21", "--out",
                         dir->path.string()}) != kExitOk)
        fail(o, std::string("generate failed for ") + task);
    const std::string file = std::string(task) + ".jsonl";
    const auto bytes = slurp(a.path / file);
    if (bytes.empty() || bytes != slurp(b.path / file)) fail(o, file + " differs between runs");
    if (serialize_pairs(read_pair_file(a.path / file)) != bytes) fail(o, file + " does not re-serialize");
  }
  if (o.pass) o.detail = "25 fuzzed bundles bit-exact; 3 pair files byte-identical";
  return o;
}

Outcome stats_table() {
  Outcome o;
  // Hand counts over data/toy_en.conllu and data/toy_ru.conllu.
  const std::string expected =
      "| | Language | NgramShift | ClauseShift | RandomShift |\n"
      "|---|---|---|---|---|\n"
      "| num. tokens | En | 40 | 37 | 64 |\n"
      "|  | Ru | 12 | 7 | 22 |\n"
      "| unique tokens | En | 32 | 29 | 48 |\n"
      "|  | Ru | 11 | 7 | 16 |\n"
      "| tokens / sentence | En | 8.0 | 9.3 | 8.0 |\n"
      "|  | Ru | 6.0 | 7.0 | 5.5 |\n";
  const std::map<std::pair<std::string, Task>, std::vector<std::string>> applicable = {
      {{"En", Task::NgramShift}, {"en-1", "en-3", "en-4", "en-6", "en-7"}},
      {{"En", Task::ClauseShift}, {"en-2", "en-3", "en-5", "en-7"}},
      {{"Ru", Task::NgramShift}, {"ru-1", "ru-3"}},
      {{"Ru", Task::ClauseShift}, {"ru-2"}},
  };
  std::vector<StatsCell> cells;
  for (const auto& [lang, file] : {std::pair{"En", "toy_en.conllu"}, std::pair{"Ru", "toy_ru.conllu"}}) {
    const auto tb = read_conllu_file(fs::path(PERTURBKIT_DATA_DIR) / file);
    for (Task task : {Task::NgramShift, Task::ClauseShift, Task::RandomShift}) {
      const auto data = build_dataset(tb, task, 10000, 13);
      cells.push_back({lang, task, dataset_stats(data.pairs)});
      auto it = applicable.find({lang, task});
      if (it == applicable.end()) continue;
      std::vector<std::string> ids;
      for (const auto& p : data.pairs) ids.push_back(p.original.sent_id);
      if (ids != it->second) fail(o, std::string(lang) + " " + std::string(task_name(task)) + ": unexpected sentences");
    }
  }
  const auto table = format_stats_table(cells);
  if (table != expected) fail(o, "table differs:\n" + table);
  if (o.pass) o.detail = "2 languages x 3 tasks match hand counts";
  return o;
}

} // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"arborescence-vs-brute-force", arborescence_vs_brute_force},
      {"uuas-oracle", uuas_oracle},
      {"relabeling-null", relabeling_null},
      {"synthetic-recovery", synthetic_recovery},
      {"perturbation-invariants", perturbation_invariants},
      {"metric-closed-forms", metric_closed_forms},
      {"format-round-trip", format_round_trip},
      {"stats-table", stats_table},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " (" << o.detail << ")" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed;
}
