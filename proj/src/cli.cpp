#include "perturbkit/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include "perturbkit/bundle.hpp"
#include "perturbkit/csv.hpp"
#include "perturbkit/pair_io.hpp"
#include "perturbkit/significance.hpp"
#include "perturbkit/word_level.hpp"

namespace perturbkit {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string("missing required ") + flag);
}

// Pairs whose pair_id has no record in the bundle are reported and dropped.
std::vector<PerturbedPair> match_pairs(const std::vector<PerturbedPair>& pairs,
                                       const TensorBundle& bundle, std::ostream& log) {
  std::set<std::string> ids;
  for (const auto& r : bundle.records) ids.insert(r.pair_id);
  std::vector<PerturbedPair> matched;
  std::size_t missing = 0;
  for (const auto& p : pairs) {
    if (ids.count(p.pair_id)) {
      matched.push_back(p);
    } else {
      log << "warning: pair " << p.pair_id << " has no tensors in the bundle, skipped\n";
      ++missing;
    }
  }
  if (matched.empty()) throw DataError("no pair_id of the pair file occurs in the bundle");
  return matched;
}

struct SeriesSum {
  Vector<double> sum;
  std::size_t count = 0;

  void add(const Vector<double>& v) {
    if (count == 0) sum = Vector<double>::Zero(v.size());
    if (v.size() != sum.size()) throw DataError("layer count differs between pairs");
    sum += v;
    ++count;
  }
  Vector<double> mean() const { return sum / static_cast<double>(count); }
};

void write_series(std::ostream& out, const std::vector<std::pair<std::string, SeriesSum>>& series) {
  out << "layer,metric,value\n";
  for (const auto& [name, s] : series) {
    if (s.count == 0) continue;
    const Vector<double> m = s.mean();
    for (Eigen::Index l = 0; l < m.size(); ++l) out << l << ',' << name << ',' << format_double(m(l)) << '\n';
  }
}

template <typename Load>
auto load_side(const TensorBundle& bundle, const PerturbedPair& pair, Side side, Kind kind, Load load)
    -> std::optional<decltype(load(bundle, std::declval<const Record&>()))> {
  const Record* r = bundle.find(pair.pair_id, side, kind);
  if (r == nullptr) return std::nullopt;
  return load(bundle, *r);
}

} // namespace

void cmd_generate(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require_path(config.treebank_path, "--treebank");
  const auto treebank = read_conllu_file(config.treebank_path);
  if (treebank.empty()) throw DataError("treebank '" + config.treebank_path + "' holds no sentences");
  Dataset data = build_dataset(treebank, config.task, config.count, config.seed, config.ngram);
  if (data.warning) log << "warning: " << *data.warning << '\n';

  const std::string stem(task_name(config.task));
  {
    auto f = open_output(config.output_dir / (stem + ".jsonl"));
    f << serialize_pairs(data.pairs);
  }
  const std::string table =
      format_stats_table({{config.language, config.task, dataset_stats(data.pairs)}});
  auto f = open_output(config.output_dir / (stem + ".stats.md"));
  f << table;
  out << table;
}

void cmd_stats(const RunConfig& config, std::ostream& out, std::ostream&) {
  if (config.stats_inputs.empty()) throw ValidationError("missing required --pairs");
  std::vector<StatsCell> cells;
  for (const auto& spec : config.stats_inputs) {
    std::string lang = config.language;
    std::string path = spec;
    if (auto eq = spec.find('='); eq != std::string::npos) {
      lang = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    }
    auto pairs = read_pair_file(path);
    std::map<Task, std::vector<PerturbedPair>> by_task;
    for (auto& p : pairs) by_task[p.task].push_back(std::move(p));
    for (const auto& [task, group] : by_task) cells.push_back({lang, task, dataset_stats(group)});
  }
  const std::string table = format_stats_table(cells);
  out << table;
  if (!config.output_dir.empty()) {
    auto md = open_output(config.output_dir / "stats.md");
    md << table;
    auto csv = open_output(config.output_dir / "stats.csv");
    csv << "language,task,num_sentences,num_tokens,unique_tokens,tokens_per_sentence\n";
    for (const auto& c : cells)
      csv << csv_field(c.language) << ',' << task_name(c.task) << ',' << c.stats.num_sentences << ','
          << c.stats.num_tokens << ',' << c.stats.unique_tokens << ','
          << format_double(c.stats.tokens_per_sentence) << '\n';
  }
}

void cmd_induce(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require_path(config.pairs_path, "--pairs");
  require_path(config.bundle_path, "--bundle");
  const auto bundle = read_bundle(config.bundle_path);
  const auto pairs = match_pairs(read_pair_file(config.pairs_path), bundle, log);

  bool any = false;
  auto emit = [&](const std::string& method, const ProbeResult& r) {
    for (const auto& w : r.warnings) log << "warning: " << w << '\n';
    const std::pair<const char*, const ProbeGrid*> grids[] = {
        {"uuas_original", &r.uuas_original},
        {"uuas_perturbed", &r.uuas_perturbed},
        {"delta_uuas", &r.delta_uuas}};
    for (const auto& [name, grid] : grids) {
      auto f = open_output(config.output_dir / (method + "_" + name + ".csv"));
      write_grid_csv(f, *grid);
    }
    out << method << ": " << r.pairs_used << " pairs, " << r.delta_uuas.layer_count() << " layers x "
        << r.delta_uuas.head_count() << " heads, mean delta UUAS "
        << format_double(r.delta_uuas.values.mean()) << '\n';
    any = true;
  };

  if (bundle.has_kind(Kind::Attention))
    emit("self_attention", probe_self_attention(bundle, pairs, config.probe));
  else
    log << "warning: bundle has no attention records, self-attention probing skipped\n";
  if (bundle.has_kind(Kind::Impact))
    emit("impact", probe_impact(bundle, pairs));
  else
    log << "warning: bundle has no impact records, impact probing skipped\n";
  if (!any) throw DataError("bundle has neither attention nor impact records");
}

void cmd_metrics(const RunConfig& config, std::ostream& out, std::ostream& log) {
  require_path(config.pairs_path, "--pairs");
  require_path(config.bundle_path, "--bundle");
  config.metric.check();
  const auto bundle = read_bundle(config.bundle_path);
  if (bundle.records.empty()) throw DataError("bundle holds no records");
  const auto pairs = match_pairs(read_pair_file(config.pairs_path), bundle, log);

  SeriesSum ti, ti_intact, sad, impact_l2_sum, attention_l2_sum;
  std::size_t degenerate = 0;
  struct Acceptability {
    std::string pair_id;
    double mean_s, pen_s, mean_p, pen_p;
  };
  std::vector<Acceptability> acceptability;

  for (const auto& pair : pairs) {
    const Permutation& perm = pair.permutation;
    auto hs = load_side(bundle, pair, Side::Original, Kind::Hidden, to_word_level_hidden);
    auto hp = load_side(bundle, pair, Side::Perturbed, Kind::Hidden, to_word_level_hidden);
    if (hs && hp) {
      auto r = token_identifiability(*hs, *hp, perm, config.metric.ti_mode);
      auto r0 = token_identifiability(*hs, *hs, Permutation::identity(perm.size()), config.metric.ti_mode);
      degenerate += r.degenerate_rows;
      ti.add(r.values);
      ti_intact.add(r0.values);
    }
    auto as = load_side(bundle, pair, Side::Original, Kind::Attention, to_word_level_attention);
    auto ap = load_side(bundle, pair, Side::Perturbed, Kind::Attention, to_word_level_attention);
    if (as && ap) {
      sad.add(self_attention_distance(*as, *ap, perm, config.metric.jsd_log_base));
      attention_l2_sum.add(matrix_l2(*as, *ap, perm));
    }
    auto is = load_side(bundle, pair, Side::Original, Kind::Impact, to_word_level_impact);
    auto ip = load_side(bundle, pair, Side::Perturbed, Kind::Impact, to_word_level_impact);
    if (is && ip) impact_l2_sum.add(impact_l2(*is, *ip, perm));
    auto ls = load_side(bundle, pair, Side::Original, Kind::Logprob, to_word_level_logprob);
    auto lp = load_side(bundle, pair, Side::Perturbed, Kind::Logprob, to_word_level_logprob);
    if (ls && lp) {
      std::span<const double> s(ls->data(), static_cast<std::size_t>(ls->size()));
      std::span<const double> p(lp->data(), static_cast<std::size_t>(lp->size()));
      acceptability.push_back({pair.pair_id, mean_lp(s), pen_lp(s, config.metric.penlp_alpha),
                               mean_lp(p), pen_lp(p, config.metric.penlp_alpha)});
    }
  }
  if (degenerate > 0) log << "warning: " << degenerate << " zero hidden vectors met while computing TI\n";

  auto skipped = [&](const char* what, const char* file) {
    log << "warning: no pair has " << what << " for both sides, " << file << " skipped\n";
  };

  if (ti.count > 0) {
    auto f = open_output(config.output_dir / "ti.csv");
    write_series(f, {{"TI", ti}, {"TI_intact", ti_intact}});
  } else {
    skipped("hidden states", "ti.csv");
  }
  if (sad.count > 0) {
    auto f = open_output(config.output_dir / "sad.csv");
    write_series(f, {{"SAD", sad}});
  } else {
    skipped("attention", "sad.csv");
  }
  if (impact_l2_sum.count > 0 || attention_l2_sum.count > 0) {
    auto f = open_output(config.output_dir / "l2.csv");
    write_series(f, {{"impact_L2", impact_l2_sum}, {"attention_L2", attention_l2_sum}});
  } else {
    skipped("impact or attention", "l2.csv");
  }

  if (acceptability.empty()) {
    skipped("log-probabilities", "acceptability.csv and significance.csv");
  } else {
    auto f = open_output(config.output_dir / "acceptability.csv");
    f << "pair_id,side,mean_lp,pen_lp\n";
    std::vector<double> mean_s, mean_p, pen_s, pen_p;
    for (const auto& a : acceptability) {
      f << csv_field(a.pair_id) << ",original," << format_double(a.mean_s) << ',' << format_double(a.pen_s) << '\n';
      f << csv_field(a.pair_id) << ",perturbed," << format_double(a.mean_p) << ',' << format_double(a.pen_p) << '\n';
      mean_s.push_back(a.mean_s);
      mean_p.push_back(a.mean_p);
      pen_s.push_back(a.pen_s);
      pen_p.push_back(a.pen_p);
    }
    auto g = open_output(config.output_dir / "significance.csv");
    g << "test,measure,statistic,p_value,note\n";
    const std::pair<const char*, std::pair<std::vector<double>*, std::vector<double>*>> measures[] = {
        {"MeanLP", {&mean_s, &mean_p}}, {"PenLP", {&pen_s, &pen_p}}};
    for (const auto& [name, samples] : measures) {
      auto ks = ks_test(*samples.first, *samples.second);
      g << "ks," << name << ',' << format_double(ks.statistic) << ',' << format_double(ks.p_value) << ",\n";
      try {
        auto w = wilcoxon_signed_rank(*samples.first, *samples.second);
        g << "wilcoxon," << name << ',' << format_double(w.statistic) << ',' << format_double(w.p_value) << ",\n";
      } catch (const ValidationError& e) {
        log << "warning: " << name << ": " << e.what() << '\n';
        g << "wilcoxon," << name << ",,," << csv_field(e.what()) << '\n';
      }
    }
  }
  out << "metrics: " << pairs.size() << " pairs (TI " << ti.count << ", SAD " << sad.count
      << ", impact L2 " << impact_l2_sum.count << ", acceptability " << acceptability.size() << ")\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"perturbkit: controlled word-order perturbations and syntactic probing"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string task = "random-shift";
  std::string direction = "dependent-to-head";
  std::string ti_mode = "argmax";
  std::vector<std::string> relations;

  auto* gen = app.add_subcommand("generate", "Build a perturbation dataset from a CoNLL-U treebank");
  gen->add_option("--treebank", cfg.treebank_path, "CoNLL-U treebank")->required();
  gen->add_option("--task", task, "ngram-shift | clause-shift | random-shift")
      ->check(CLI::IsMember({"ngram-shift", "clause-shift", "random-shift"}))
      ->capture_default_str();
  gen->add_option("--count", cfg.count, "Number of pairs to collect")->capture_default_str();
  gen->add_option("--seed", cfg.seed, "Seed for RandomShift")->capture_default_str();
  gen->add_option("--out", cfg.output_dir, "Output directory")->required();
  gen->add_option("--lang", cfg.language, "Language label for the stats table")->capture_default_str();
  gen->add_option("--n-min", cfg.ngram.n_min, "Shortest n-gram")->capture_default_str();
  gen->add_option("--n-max", cfg.ngram.n_max, "Longest n-gram")->capture_default_str();
  gen->add_option("--relations", relations, "Relations qualifying an n-gram as a phrase");

  auto* stats = app.add_subcommand("stats", "Dataset statistics table");
  stats->add_option("--pairs", cfg.stats_inputs, "Pair files, optionally as LANG=path")->required();
  stats->add_option("--lang", cfg.language, "Language for inputs without a LANG= prefix");
  stats->add_option("--out", cfg.output_dir, "Directory for stats.md and stats.csv");

  auto* induce = app.add_subcommand("induce", "Induce trees from attention/impact and score UUAS");
  induce->add_option("--pairs", cfg.pairs_path, "Pair file")->required();
  induce->add_option("--bundle", cfg.bundle_path, "Tensor bundle directory")->required();
  induce->add_option("--out", cfg.output_dir, "Output directory")->required();
  induce->add_option("--attention-direction", direction, "dependent-to-head | head-to-dependent")
      ->check(CLI::IsMember({"dependent-to-head", "head-to-dependent"}))
      ->capture_default_str();
  induce->add_flag("--symmetrize-attention", cfg.probe.symmetrize_attention,
                   "Average attention with its transpose before induction");

  auto* metrics = app.add_subcommand("metrics", "TI, SAD, L2, acceptability and significance");
  metrics->add_option("--pairs", cfg.pairs_path, "Pair file")->required();
  metrics->add_option("--bundle", cfg.bundle_path, "Tensor bundle directory")->required();
  metrics->add_option("--out", cfg.output_dir, "Output directory")->required();
  metrics->add_option("--alpha", cfg.metric.penlp_alpha, "PenLP length-penalty exponent")
      ->capture_default_str();
  metrics->add_option("--ti-mode", ti_mode, "argmax | mean-cosine")
      ->check(CLI::IsMember({"argmax", "mean-cosine"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  cfg.task = parse_task(task);
  cfg.probe.direction = direction == "head-to-dependent" ? AttentionDirection::HeadToDependent
                                                         : AttentionDirection::DependentToHead;
  cfg.metric.ti_mode = ti_mode == "mean-cosine" ? TiMode::MeanCosine : TiMode::ArgmaxAccuracy;
  if (!relations.empty()) cfg.ngram.allowed_relations = {relations.begin(), relations.end()};

  try {
    cfg.ngram.check();
    cfg.metric.check();
    if (cfg.count < 0) throw ValidationError("--count must be non-negative");
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*gen) {
      cmd_generate(cfg, out, err);
    } else if (*stats) {
      cmd_stats(cfg, out, err);
    } else if (*induce) {
      cmd_induce(cfg, out, err);
    } else if (*metrics) {
      cmd_metrics(cfg, out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

} // namespace perturbkit
