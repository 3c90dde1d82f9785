#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tcomp/errors.hpp"

namespace tcomp {

/// Extents of an H x W x C feature tensor.
struct Dims {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  constexpr std::size_t size() const noexcept { return height * width * channels; }

  /// Extent along a 1-based mode (1 = height, 2 = width, 3 = channels).
  std::size_t extent(int mode) const;

  friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& d);

/// Linear offset of (h, w, c) in row-major H-W-C storage.
constexpr std::size_t offset(const Dims& d, std::size_t h, std::size_t w, std::size_t c) noexcept {
  return (h * d.width + w) * d.channels + c;
}

/// Dense third-order tensor in row-major (H outer, W middle, C inner) order.
///
/// FeatureTensor (float) is the transmitted/returned type; WorkTensor (double)
/// holds iterates inside the completion algorithms.
template <typename T>
class Tensor3 {
 public:
  using value_type = T;

  Tensor3() = default;

  /// Zero-initialised tensor.
  explicit Tensor3(Dims dims) : dims_(dims), data_(dims.size(), T{0}) { check_dims(dims); }

  Tensor3(Dims dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
    check_dims(dims);
    if (data_.size() != dims.size()) {
      throw ContractViolation("tensor data length " + std::to_string(data_.size()) + " does not match dims " +
                              to_string(dims));
    }
    for (const T v : data_) {
      if (!std::isfinite(v)) throw ContractViolation("tensor entries must be finite");
    }
  }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T operator()(std::size_t h, std::size_t w, std::size_t c) const noexcept { return data_[offset(dims_, h, w, c)]; }
  T& operator()(std::size_t h, std::size_t w, std::size_t c) noexcept { return data_[offset(dims_, h, w, c)]; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  static void check_dims(const Dims& d) {
    if (d.height == 0 || d.width == 0 || d.channels == 0) {
      throw ContractViolation("tensor dimensions must be positive, got " + to_string(d));
    }
  }

  Dims dims_{};
  std::vector<T> data_;
};

using FeatureTensor = Tensor3<float>;
using WorkTensor = Tensor3<double>;

/// One flag per tensor entry; 1 = received, 0 = lost.
class ObservationMask {
 public:
  ObservationMask() = default;
  ObservationMask(Dims dims, bool observed);
  ObservationMask(Dims dims, std::vector<std::uint8_t> flags);

  static ObservationMask all_observed(Dims dims) { return {dims, true}; }
  static ObservationMask all_missing(Dims dims) { return {dims, false}; }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return flags_.size(); }

  bool observed(std::size_t i) const noexcept { return flags_[i] != 0; }
  bool observed(std::size_t h, std::size_t w, std::size_t c) const noexcept {
    return flags_[offset(dims_, h, w, c)] != 0;
  }
  void set(std::size_t h, std::size_t w, std::size_t c, bool observed) noexcept {
    flags_[offset(dims_, h, w, c)] = observed ? 1 : 0;
  }

  std::span<const std::uint8_t> flags() const noexcept { return flags_; }

  std::size_t observed_count() const noexcept;
  std::size_t missing_count() const noexcept { return size() - observed_count(); }

  /// True when every (row, channel) fiber along the width is uniformly observed
  /// or uniformly missing, the layout produced by row packetization.
  bool is_row_structured() const noexcept;

  /// 64-bit FNV-1a digest of the flag bytes; used to verify trial pairing.
  std::uint64_t digest() const noexcept;

  friend bool operator==(const ObservationMask&, const ObservationMask&) = default;

 private:
  Dims dims_{};
  std::vector<std::uint8_t> flags_;
};

/// Mode-n matricization of a tensor. Row-major, 64-bit storage.
struct ModeMatrix {
  int mode = 1;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
};

/// (rows, cols) of the mode-`mode` unfolding of a tensor with extents `dims`.
std::pair<std::size_t, std::size_t> unfolded_shape(const Dims& dims, int mode);

/// Mode-n unfolding. Row index is the mode index; the remaining two indices
/// map to columns with the later storage index varying fastest, so mode 1 is
/// the storage order itself:
///   mode 1: (H, W*C), col = w*C + c
///   mode 2: (W, H*C), col = h*C + c
///   mode 3: (C, H*W), col = h*W + w
template <typename T>
ModeMatrix unfold(const Tensor3<T>& t, int mode);

/// Writes the unfolding of `src` into `out` (size H*W*C), no allocation.
template <typename T>
void unfold_into(std::span<const T> src, const Dims& dims, int mode, std::span<double> out);

/// Inverse of unfold_into: scatters `m` (row-major unfolding) into `out`.
template <typename T>
void fold_into(std::span<const double> m, const Dims& dims, int mode, std::span<T> out);

/// Exact inverse of unfold. Narrowing to float rounds to nearest.
FeatureTensor fold(const ModeMatrix& m, int mode, const Dims& dims);
WorkTensor fold_work(const ModeMatrix& m, int mode, const Dims& dims);

/// Observed entries copied verbatim, missing entries set to `value`.
FeatureTensor masked_fill(const FeatureTensor& t, const ObservationMask& mask, float value);

enum class EntrySubset { observed, missing, all };

/// Mean squared difference over the selected entries; 0 for an empty subset.
double masked_mse(const FeatureTensor& a, const FeatureTensor& b, const ObservationMask& mask, EntrySubset over);

template <typename T>
double frobenius_norm(std::span<const T> values) noexcept {
  double s = 0.0;
  for (const T v : values) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

double frobenius_norm(const ModeMatrix& m) noexcept;

void require_same_dims(const Dims& a, const Dims& b, const char* what);

}  // namespace tcomp
