#include "perturbkit/bundle.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <set>
#include <tuple>

#include "perturbkit/error.hpp"

namespace perturbkit {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "perturbkit-bundle";

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xFF00u) | ((v << 8) & 0xFF0000u) | (v << 24);
}

void to_little_endian(std::vector<char>& bytes) {
  if constexpr (std::endian::native == std::endian::little) return;
  for (std::size_t i = 0; i + 4 <= bytes.size(); i += 4) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + i, 4);
    v = byteswap32(v);
    std::memcpy(bytes.data() + i, &v, 4);
  }
}

std::string describe(const Record& r) {
  return "record (" + r.pair_id + ", " + std::string(to_string(r.side)) + ", " +
         std::string(to_string(r.kind)) + ")";
}

} // namespace

std::string_view to_string(PeMode mode) {
  switch (mode) {
    case PeMode::Absolute: return "absolute";
    case PeMode::Random: return "random";
    case PeMode::Zero: return "zero";
  }
  return "";
}

std::string_view to_string(Side side) { return side == Side::Original ? "original" : "perturbed"; }

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::Attention: return "attention";
    case Kind::Impact: return "impact";
    case Kind::Hidden: return "hidden";
    case Kind::Logprob: return "logprob";
  }
  return "";
}

PeMode parse_pe_mode(std::string_view text) {
  for (PeMode m : {PeMode::Absolute, PeMode::Random, PeMode::Zero})
    if (text == to_string(m)) return m;
  throw DataError("unknown pe_mode '" + std::string(text) + "'");
}

Side parse_side(std::string_view text) {
  for (Side s : {Side::Original, Side::Perturbed})
    if (text == to_string(s)) return s;
  throw DataError("unknown side '" + std::string(text) + "'");
}

Kind parse_kind(std::string_view text) {
  for (Kind k : {Kind::Attention, Kind::Impact, Kind::Hidden, Kind::Logprob})
    if (text == to_string(k)) return k;
  throw DataError("unknown record kind '" + std::string(text) + "'");
}

std::uint64_t Record::element_count() const {
  std::uint64_t count = 1;
  for (auto d : shape) count *= static_cast<std::uint64_t>(d < 0 ? 0 : d);
  return count;
}

std::int64_t Record::subword_count() const {
  switch (kind) {
    case Kind::Attention: return shape.size() == 4 ? shape[2] : -1;
    case Kind::Impact:
    case Kind::Hidden: return shape.size() == 3 ? shape[1] : -1;
    case Kind::Logprob: return shape.size() == 1 ? shape[0] : -1;
  }
  return -1;
}

void check_record_shape(const Record& r) {
  const std::size_t rank = r.kind == Kind::Attention ? 4 : r.kind == Kind::Logprob ? 1 : 3;
  if (r.shape.size() != rank)
    throw ValidationError(describe(r) + ": expected rank " + std::to_string(rank) + ", got " +
                          std::to_string(r.shape.size()));
  for (auto d : r.shape)
    if (d < 0) throw ValidationError(describe(r) + ": negative dimension");
  if (r.kind == Kind::Attention && r.shape[2] != r.shape[3])
    throw ValidationError(describe(r) + ": attention matrices must be square");
  if (r.kind == Kind::Impact && r.shape[1] != r.shape[2])
    throw ValidationError(describe(r) + ": impact matrices must be square");
  if (static_cast<std::int64_t>(r.word_alignment.size()) != r.subword_count())
    throw ValidationError(describe(r) + ": word_alignment length " +
                          std::to_string(r.word_alignment.size()) + " != " +
                          std::to_string(r.subword_count()));
}

const Record* TensorBundle::find(std::string_view pair_id, Side side, Kind kind) const {
  for (const auto& r : records)
    if (r.pair_id == pair_id && r.side == side && r.kind == kind) return &r;
  return nullptr;
}

std::span<const float> TensorBundle::values(const Record& record) const {
  return std::span<const float>(payload).subspan(record.offset / sizeof(float),
                                                 record.element_count());
}

bool TensorBundle::has_kind(Kind kind) const {
  return std::any_of(records.begin(), records.end(), [kind](const Record& r) { return r.kind == kind; });
}

void write_bundle(const std::filesystem::path& dir, std::string_view model_id, PeMode pe_mode,
                  std::span<const RecordData> records) {
  std::set<std::tuple<std::string, Side, Kind>> keys;
  json manifest_records = json::array();
  std::vector<char> bytes;
  for (const auto& rd : records) {
    const Record& r = rd.record;
    check_record_shape(r);
    if (rd.values.size() != r.element_count())
      throw ValidationError(describe(r) + ": " + std::to_string(rd.values.size()) +
                            " values for shape of " + std::to_string(r.element_count()));
    if (!keys.emplace(r.pair_id, r.side, r.kind).second)
      throw ValidationError("duplicate " + describe(r));
    json jr;
    jr["pair_id"] = r.pair_id;
    jr["side"] = std::string(to_string(r.side));
    jr["kind"] = std::string(to_string(r.kind));
    jr["shape"] = r.shape;
    jr["offset"] = static_cast<std::uint64_t>(bytes.size());
    jr["nbytes"] = r.byte_length();
    jr["word_alignment"] = r.word_alignment;
    manifest_records.push_back(std::move(jr));
    const auto* raw = reinterpret_cast<const char*>(rd.values.data());
    bytes.insert(bytes.end(), raw, raw + rd.values.size() * sizeof(float));
  }
  to_little_endian(bytes);

  json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = 1;
  manifest["model_id"] = model_id;
  manifest["pe_mode"] = std::string(to_string(pe_mode));
  manifest["records"] = std::move(manifest_records);

  std::filesystem::create_directories(dir);
  std::ofstream mf(dir / "manifest.json", std::ios::binary);
  std::ofstream df(dir / "data.bin", std::ios::binary);
  if (!mf || !df) throw DataError("cannot write bundle to '" + dir.string() + "'");
  mf << manifest.dump(1) << '\n';
  df.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TensorBundle read_bundle(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const auto data_path = dir / "data.bin";
  std::ifstream mf(manifest_path, std::ios::binary);
  if (!mf) throw DataError("missing bundle manifest '" + manifest_path.string() + "'");
  std::ifstream df(data_path, std::ios::binary);
  if (!df) throw DataError("missing bundle payload '" + data_path.string() + "'");

  TensorBundle bundle;
  try {
    json manifest = json::parse(mf);
    if (manifest.contains("format") && manifest["format"] != kFormat)
      throw DataError("unrecognized bundle format " + manifest["format"].dump());
    bundle.model_id = manifest.at("model_id").get<std::string>();
    bundle.pe_mode = parse_pe_mode(manifest.at("pe_mode").get<std::string>());
    for (const auto& jr : manifest.at("records")) {
      Record r;
      r.pair_id = jr.at("pair_id").get<std::string>();
      r.side = parse_side(jr.at("side").get<std::string>());
      r.kind = parse_kind(jr.at("kind").get<std::string>());
      r.shape = jr.at("shape").get<std::vector<std::int64_t>>();
      r.offset = jr.at("offset").get<std::uint64_t>();
      r.word_alignment = jr.at("word_alignment").get<std::vector<int>>();
      try {
        check_record_shape(r);
      } catch (const ValidationError& e) {
        throw DataError(e.what());
      }
      if (jr.contains("nbytes") && jr["nbytes"].get<std::uint64_t>() != r.byte_length())
        throw DataError(describe(r) + ": nbytes disagrees with shape");
      if (r.offset % sizeof(float) != 0)
        throw DataError(describe(r) + ": offset is not 4-byte aligned");
      bundle.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError("malformed bundle manifest: " + std::string(e.what()));
  }

  std::vector<char> bytes((std::istreambuf_iterator<char>(df)), std::istreambuf_iterator<char>());

  std::set<std::tuple<std::string, Side, Kind>> keys;
  std::vector<const Record*> by_offset;
  for (const auto& r : bundle.records) {
    if (!keys.emplace(r.pair_id, r.side, r.kind).second)
      throw DataError("duplicate " + describe(r));
    if (r.offset + r.byte_length() > bytes.size())
      throw DataError(describe(r) + " is truncated: needs bytes [" + std::to_string(r.offset) +
                      ", " + std::to_string(r.offset + r.byte_length()) + ") but data.bin has " +
                      std::to_string(bytes.size()));
    by_offset.push_back(&r);
  }
  std::sort(by_offset.begin(), by_offset.end(),
            [](const Record* a, const Record* b) { return a->offset < b->offset; });
  for (std::size_t i = 1; i < by_offset.size(); ++i) {
    const Record& prev = *by_offset[i - 1];
    if (prev.byte_length() > 0 && prev.offset + prev.byte_length() > by_offset[i]->offset)
      throw DataError(describe(prev) + " overlaps " + describe(*by_offset[i]));
  }

  to_little_endian(bytes);
  bundle.payload.resize(bytes.size() / sizeof(float));
  std::memcpy(bundle.payload.data(), bytes.data(), bundle.payload.size() * sizeof(float));
  return bundle;
}

} // namespace perturbkit
