#pragma once

// NPY v1.0 reading and writing: tensors as "<f4"/"<f8", masks as "|u1".

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tcomp/errors.hpp"
#include "tcomp/tensor.hpp"

namespace tcomp {

/// Parse failures, each kind distinct and carrying the byte offset.
class NpyParseError : public IoError {
 public:
  enum class Kind {
    bad_magic,
    unsupported_version,
    bad_header,
    unsupported_dtype,
    bad_shape,
    fortran_order,
    truncated_payload,
  };

  NpyParseError(Kind kind, std::size_t offset, const std::string& source, const std::string& detail);

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

const char* to_string(NpyParseError::Kind k) noexcept;

struct NpyHeader {
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
  /// Header text exactly as stored (dictionary, padding, newline).
  std::string text;

  std::size_t element_count() const noexcept;
  std::size_t item_size() const;
  std::size_t header_bytes() const noexcept { return 10 + text.size(); }
};

struct NpyArray {
  NpyHeader header;
  std::vector<std::uint8_t> payload;
};

/// Parses and validates the layout; `source` names the file in errors.
/// Trailing bytes beyond the declared payload are rejected.
NpyArray parse_npy(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

/// Reproduces the parsed bytes exactly (stored header text is reused).
std::vector<std::uint8_t> serialize_npy(const NpyArray& array);

/// Canonical header text: dictionary, spaces to a 64-byte boundary, newline.
std::string canonical_header(const std::string& descr, const std::vector<std::size_t>& shape);

std::vector<std::uint8_t> encode_tensor(const FeatureTensor& t);
std::vector<std::uint8_t> encode_mask(const ObservationMask& m);

/// 3-D "<f4" or "<f8" array to a tensor; doubles round to nearest float.
FeatureTensor decode_tensor(const NpyArray& a, const std::string& source = "<memory>");
ObservationMask decode_mask(const NpyArray& a, const std::string& source = "<memory>");

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

FeatureTensor read_array_file(const std::filesystem::path& path);
void write_array_file(const FeatureTensor& t, const std::filesystem::path& path);
ObservationMask read_mask_file(const std::filesystem::path& path);
void write_mask_file(const ObservationMask& m, const std::filesystem::path& path);

}  // namespace tcomp
