#pragma once

#include <istream>
#include <string>
#include <vector>

#include "perturbkit/perturb.hpp"

namespace perturbkit {

// One JSON object per line:
//   {"pair_id", "task", "original" (CoNLL-U block), "perturbed" (forms),
//    "permutation" (1-based new positions), "provenance"}
std::string pair_to_json_line(const PerturbedPair& pair);
PerturbedPair pair_from_json_line(const std::string& line);

std::string serialize_pairs(const std::vector<PerturbedPair>& pairs);
std::vector<PerturbedPair> parse_pairs(std::istream& input);

void write_pair_file(const std::string& path, const std::vector<PerturbedPair>& pairs);
std::vector<PerturbedPair> read_pair_file(const std::string& path);

} // namespace perturbkit
