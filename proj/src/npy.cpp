#include "tcomp/npy.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

namespace tcomp {

namespace {

constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kPrefix = 10;  // magic + version + u16 header length

static_assert(std::endian::native == std::endian::little, "payload copies assume a little-endian host");

}  // namespace

const char* to_string(NpyParseError::Kind k) noexcept {
  switch (k) {
    case NpyParseError::Kind::bad_magic: return "bad magic";
    case NpyParseError::Kind::unsupported_version: return "unsupported version";
    case NpyParseError::Kind::bad_header: return "malformed header";
    case NpyParseError::Kind::unsupported_dtype: return "unsupported dtype";
    case NpyParseError::Kind::bad_shape: return "bad shape";
    case NpyParseError::Kind::fortran_order: return "fortran order";
    case NpyParseError::Kind::truncated_payload: return "truncated payload";
  }
  return "unknown";
}

NpyParseError::NpyParseError(Kind kind, std::size_t offset, const std::string& source, const std::string& detail)
    : IoError(source + ": " + to_string(kind) + " at byte " + std::to_string(offset) + ": " + detail),
      kind_(kind),
      offset_(offset) {}

std::size_t NpyHeader::element_count() const noexcept {
  std::size_t n = 1;
  for (const auto s : shape) n *= s;
  return n;
}

std::size_t NpyHeader::item_size() const {
  if (descr == "<f4") return 4;
  if (descr == "<f8") return 8;
  if (descr == "|u1" || descr == "<u1" || descr == "|b1") return 1;
  throw ContractViolation("unsupported dtype " + descr);
}

namespace {

/// Minimal reader for the Python dict literal numpy writes.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, const std::string& source) : s_(text), source_(source) {}

  NpyHeader parse() {
    NpyHeader h;
    bool have_descr = false, have_order = false, have_shape = false;
    skip();
    expect('{');
    while (true) {
      skip();
      if (peek() == '}') {
        ++i_;
        break;
      }
      const std::string key = string_lit();
      skip();
      expect(':');
      skip();
      if (key == "descr") {
        h.descr = string_lit();
        have_descr = true;
      } else if (key == "fortran_order") {
        h.fortran_order = bool_lit();
        have_order = true;
      } else if (key == "shape") {
        h.shape = tuple_lit();
        have_shape = true;
      } else {
        fail("unexpected key '" + key + "'");
      }
      skip();
      if (peek() == ',') {
        ++i_;
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    while (i_ < s_.size() && s_[i_] == ' ') ++i_;
    if (i_ + 1 != s_.size() || s_[i_] != '\n') fail("header must end with space padding and a newline");
    if (!have_descr || !have_order || !have_shape) fail("header lacks descr, fortran_order or shape");
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw NpyParseError(NpyParseError::Kind::bad_header, kPrefix + i_, source_, why);
  }
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  void skip() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }
  std::string string_lit() {
    const char q = peek();
    if (q != '\'' && q != '"') fail("expected a quoted string");
    const std::size_t start = ++i_;
    while (i_ < s_.size() && s_[i_] != q) ++i_;
    if (i_ >= s_.size()) fail("unterminated string");
    return std::string(s_.substr(start, i_++ - start));
  }
  bool bool_lit() {
    if (s_.substr(i_, 4) == "True") {
      i_ += 4;
      return true;
    }
    if (s_.substr(i_, 5) == "False") {
      i_ += 5;
      return false;
    }
    fail("expected True or False");
  }
  std::vector<std::size_t> tuple_lit() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      skip();
      if (peek() == ')') {
        ++i_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected a dimension");
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + static_cast<std::size_t>(peek() - '0');
        ++i_;
      }
      dims.push_back(v);
      skip();
      if (peek() == ',') {
        ++i_;
      } else if (peek() != ')') {
        fail("expected ',' or ')'");
      }
    }
  }

  std::string_view s_;
  const std::string& source_;
  std::size_t i_ = 0;
};

}  // namespace

NpyArray parse_npy(std::span<const std::uint8_t> bytes, const std::string& source) {
  using Kind = NpyParseError::Kind;
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
    throw NpyParseError(Kind::bad_magic, 0, source, "expected \\x93NUMPY");
  }
  if (bytes.size() < 8) throw NpyParseError(Kind::unsupported_version, 6, source, "missing version bytes");
  if (bytes[6] != 1 || bytes[7] != 0) {
    throw NpyParseError(Kind::unsupported_version, 6, source,
                        "version " + std::to_string(bytes[6]) + "." + std::to_string(bytes[7]) + ", only 1.0 supported");
  }
  if (bytes.size() < kPrefix) throw NpyParseError(Kind::bad_header, 8, source, "missing header length");
  const std::size_t hlen = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kPrefix + hlen) {
    throw NpyParseError(Kind::bad_header, 8, source,
                        "header length " + std::to_string(hlen) + " exceeds file size " + std::to_string(bytes.size()));
  }
  if ((kPrefix + hlen) % 16 != 0) {
    throw NpyParseError(Kind::bad_header, 8, source, "header block is not padded to an aligned boundary");
  }

  std::string text(reinterpret_cast<const char*>(bytes.data() + kPrefix), hlen);
  NpyArray out;
  out.header = HeaderParser(text, source).parse();
  out.header.text = std::move(text);

  const auto& h = out.header;
  std::size_t item = 0;
  try {
    item = h.item_size();
  } catch (const ContractViolation&) {
    throw NpyParseError(Kind::unsupported_dtype, kPrefix, source, "descr '" + h.descr + "'");
  }
  if (h.fortran_order) throw NpyParseError(Kind::fortran_order, kPrefix, source, "only C-order arrays are accepted");

  const std::size_t need = h.element_count() * item;
  const std::size_t data_at = kPrefix + hlen;
  if (bytes.size() - data_at < need) {
    throw NpyParseError(Kind::truncated_payload, bytes.size(), source,
                        "expected " + std::to_string(need) + " payload bytes, found " +
                            std::to_string(bytes.size() - data_at));
  }
  if (bytes.size() - data_at > need) {
    throw NpyParseError(Kind::truncated_payload, data_at + need, source, "trailing bytes after payload");
  }
  out.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data_at), bytes.end());
  return out;
}

std::vector<std::uint8_t> serialize_npy(const NpyArray& a) {
  const std::size_t hlen = a.header.text.size();
  if (hlen > 0xffff) throw ContractViolation("npy header too long for version 1.0");
  std::vector<std::uint8_t> out(kMagic, kMagic + 6);
  out.push_back(1);
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(hlen & 0xff));
  out.push_back(static_cast<std::uint8_t>(hlen >> 8));
  out.insert(out.end(), a.header.text.begin(), a.header.text.end());
  out.insert(out.end(), a.payload.begin(), a.payload.end());
  return out;
}

std::string canonical_header(const std::string& descr, const std::vector<std::size_t>& shape) {
  std::string dict = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) dict += ", ";
    dict += std::to_string(shape[i]);
  }
  if (shape.size() == 1) dict += ",";
  dict += "), }";
  const std::size_t unpadded = kPrefix + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';
  return dict;
}

namespace {

NpyArray build(const std::string& descr, const Dims& d, const void* data, std::size_t bytes) {
  NpyArray a;
  a.header.descr = descr;
  a.header.shape = {d.height, d.width, d.channels};
  a.header.text = canonical_header(descr, a.header.shape);
  a.payload.resize(bytes);
  std::memcpy(a.payload.data(), data, bytes);
  return a;
}

Dims dims_of(const NpyArray& a, const std::string& source) {
  const auto& s = a.header.shape;
  if (s.size() != 3) {
    throw NpyParseError(NpyParseError::Kind::bad_shape, kPrefix, source,
                        "expected a 3-D array, got " + std::to_string(s.size()) + " dimensions");
  }
  if (s[0] == 0 || s[1] == 0 || s[2] == 0) {
    throw NpyParseError(NpyParseError::Kind::bad_shape, kPrefix, source, "dimensions must be positive");
  }
  return {s[0], s[1], s[2]};
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const FeatureTensor& t) {
  return serialize_npy(build("<f4", t.dims(), t.data().data(), t.size() * sizeof(float)));
}

std::vector<std::uint8_t> encode_mask(const ObservationMask& m) {
  return serialize_npy(build("|u1", m.dims(), m.flags().data(), m.size()));
}

FeatureTensor decode_tensor(const NpyArray& a, const std::string& source) {
  const Dims d = dims_of(a, source);
  std::vector<float> values(d.size());
  if (a.header.descr == "<f4") {
    std::memcpy(values.data(), a.payload.data(), values.size() * sizeof(float));
  } else if (a.header.descr == "<f8") {
    for (std::size_t i = 0; i < values.size(); ++i) {
      double v;
      std::memcpy(&v, a.payload.data() + i * 8, 8);
      values[i] = static_cast<float>(v);
    }
  } else {
    throw NpyParseError(NpyParseError::Kind::unsupported_dtype, kPrefix, source,
                        "tensors must be '<f4' or '<f8', got '" + a.header.descr + "'");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw IoError(source + ": non-finite value at element " + std::to_string(i));
    }
  }
  return FeatureTensor(d, std::move(values));
}

ObservationMask decode_mask(const NpyArray& a, const std::string& source) {
  const Dims d = dims_of(a, source);
  if (a.header.item_size() != 1) {
    throw NpyParseError(NpyParseError::Kind::unsupported_dtype, kPrefix, source,
                        "masks must be '|u1', got '" + a.header.descr + "'");
  }
  for (std::size_t i = 0; i < a.payload.size(); ++i) {
    if (a.payload[i] > 1) throw IoError(source + ": mask value other than 0/1 at element " + std::to_string(i));
  }
  return ObservationMask(d, a.payload);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

FeatureTensor read_array_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_tensor(parse_npy(bytes, path.string()), path.string());
}

void write_array_file(const FeatureTensor& t, const std::filesystem::path& path) {
  write_file_bytes(path, encode_tensor(t));
}

ObservationMask read_mask_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_mask(parse_npy(bytes, path.string()), path.string());
}

void write_mask_file(const ObservationMask& m, const std::filesystem::path& path) {
  write_file_bytes(path, encode_mask(m));
}

}  // namespace tcomp
