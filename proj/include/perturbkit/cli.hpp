#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "perturbkit/metrics.hpp"
#include "perturbkit/perturb.hpp"
#include "perturbkit/probe.hpp"

namespace perturbkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

struct RunConfig {
  Task task = Task::RandomShift;
  std::string treebank_path;
  std::string pairs_path;
  std::string bundle_path;
  std::filesystem::path output_dir;
  std::string language = "xx";
  int count = 10000;
  std::uint64_t seed = 13;
  NgramConfig ngram;
  MetricConfig metric;
  ProbeOptions probe;
  std::vector<std::string> stats_inputs;  // "LANG=path" or "path"
};

// Each command writes into config.output_dir and reports on `log`.
// They throw perturbkit::Error on data problems.
void cmd_generate(const RunConfig& config, std::ostream& out, std::ostream& log);
void cmd_stats(const RunConfig& config, std::ostream& out, std::ostream& log);
void cmd_induce(const RunConfig& config, std::ostream& out, std::ostream& log);
void cmd_metrics(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Entry point of the `perturbkit` executable. Returns the process exit code:
/// 0 success, 1 usage error, 2 data error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace perturbkit
