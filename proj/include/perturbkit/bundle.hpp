#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace perturbkit {

enum class PeMode { Absolute, Random, Zero };
enum class Side { Original, Perturbed };
enum class Kind { Attention, Impact, Hidden, Logprob };

std::string_view to_string(PeMode mode);
std::string_view to_string(Side side);
std::string_view to_string(Kind kind);
PeMode parse_pe_mode(std::string_view text);
Side parse_side(std::string_view text);
Kind parse_kind(std::string_view text);

/// Alignment entry for special tokens ([CLS], </s>, ...).
inline constexpr int kSpecialToken = -1;

/// One tensor in a bundle. Shapes by kind:
///   attention [L, H, t, t], impact [L, t, t], hidden [L, t, d], logprob [t].
/// word_alignment has length t and maps each subword position to a 0-based
/// word index or kSpecialToken.
struct Record {
  std::string pair_id;
  Side side = Side::Original;
  Kind kind = Kind::Attention;
  std::vector<std::int64_t> shape;
  std::uint64_t offset = 0;  // bytes into data.bin
  std::vector<int> word_alignment;

  std::uint64_t element_count() const;
  std::uint64_t byte_length() const { return element_count() * sizeof(float); }
  std::int64_t subword_count() const;  // t

  bool operator==(const Record&) const = default;
};

/// Throws ValidationError when the shape rank/squareness or the alignment
/// length does not match the record kind.
void check_record_shape(const Record& record);

struct TensorBundle {
  std::string model_id;
  PeMode pe_mode = PeMode::Absolute;
  std::vector<Record> records;
  std::vector<float> payload;

  const Record* find(std::string_view pair_id, Side side, Kind kind) const;
  std::span<const float> values(const Record& record) const;
  bool has_kind(Kind kind) const;
};

struct RecordData {
  Record record;  // offset is assigned by write_bundle
  std::vector<float> values;
};

/// Writes <dir>/manifest.json and <dir>/data.bin (little-endian float32,
/// row-major, records concatenated in the given order).
void write_bundle(const std::filesystem::path& dir, std::string_view model_id, PeMode pe_mode,
                  std::span<const RecordData> records);

TensorBundle read_bundle(const std::filesystem::path& dir);

} // namespace perturbkit
