#include "perturbkit/pair_io.hpp"

#include <fstream>
#include <json.hpp>

#include "perturbkit/error.hpp"
#include "perturbkit/text.hpp"

namespace perturbkit {

using nlohmann::json;

std::string pair_to_json_line(const PerturbedPair& pair) {
  json prov = json::object();
  switch (pair.task) {
    case Task::NgramShift:
      prov["span"] = {pair.provenance.span_first, pair.provenance.span_last};
      prov["ngram"] = pair.provenance.ngram;
      prov["weight"] = pair.provenance.weight;
      break;
    case Task::ClauseShift:
      prov["clause_head"] = pair.provenance.clause_head;
      prov["span"] = {pair.provenance.span_first, pair.provenance.span_last};
      break;
    case Task::RandomShift:
      prov["seed"] = pair.provenance.seed;
      prov["rng_seed"] = pair.provenance.rng_seed;
      break;
  }
  json j;
  j["pair_id"] = pair.pair_id;
  j["task"] = std::string(task_name(pair.task));
  j["original"] = serialize_conllu(pair.original);
  j["perturbed"] = pair.perturbed_forms;
  j["permutation"] = pair.permutation.map;
  j["provenance"] = std::move(prov);
  return j.dump();
}

PerturbedPair pair_from_json_line(const std::string& line) {
  PerturbedPair pair;
  try {
    json j = json::parse(line);
    pair.pair_id = j.at("pair_id").get<std::string>();
    pair.task = parse_task(j.at("task").get<std::string>());
    auto sentences = parse_conllu_string(j.at("original").get<std::string>());
    if (sentences.size() != 1)
      throw DataError("pair " + pair.pair_id + ": original must hold exactly one sentence");
    pair.original = std::move(sentences.front());
    pair.perturbed_forms = j.at("perturbed").get<std::vector<std::string>>();
    pair.permutation.map = j.at("permutation").get<std::vector<int>>();
    const json& prov = j.at("provenance");
    if (prov.contains("span")) {
      pair.provenance.span_first = prov["span"].at(0).get<int>();
      pair.provenance.span_last = prov["span"].at(1).get<int>();
    }
    if (prov.contains("ngram")) pair.provenance.ngram = prov["ngram"].get<std::string>();
    if (prov.contains("weight")) pair.provenance.weight = prov["weight"].get<double>();
    if (prov.contains("clause_head")) pair.provenance.clause_head = prov["clause_head"].get<int>();
    if (prov.contains("seed")) pair.provenance.seed = prov["seed"].get<std::uint64_t>();
    if (prov.contains("rng_seed")) pair.provenance.rng_seed = prov["rng_seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed pair record: ") + e.what());
  }
  if (pair.permutation.size() != pair.original.size() || !pair.permutation.is_valid())
    throw DataError("pair " + pair.pair_id + ": permutation is not a bijection on the sentence");
  if (pair.permutation.apply(pair.original.forms()) != pair.perturbed_forms)
    throw DataError("pair " + pair.pair_id + ": perturbed forms disagree with the permutation");
  return pair;
}

std::string serialize_pairs(const std::vector<PerturbedPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += pair_to_json_line(p);
    out.push_back('\n');
  }
  return out;
}

std::vector<PerturbedPair> parse_pairs(std::istream& input) {
  std::vector<PerturbedPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(input, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      pairs.push_back(pair_from_json_line(line));
    } catch (const Error& e) {
      throw DataError("pair file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

void write_pair_file(const std::string& path, const std::vector<PerturbedPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pair file '" + path + "'");
  out << serialize_pairs(pairs);
}

std::vector<PerturbedPair> read_pair_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pair file '" + path + "'");
  return parse_pairs(in);
}

} // namespace perturbkit
