#include "tcomp/tensor.hpp"

#include <algorithm>
#include <numeric>

namespace tcomp {

std::size_t Dims::extent(int mode) const {
  switch (mode) {
    case 1: return height;
    case 2: return width;
    case 3: return channels;
    default: throw ContractViolation("mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

std::string to_string(const Dims& d) {
  return std::to_string(d.height) + "x" + std::to_string(d.width) + "x" + std::to_string(d.channels);
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) {
    throw ContractViolation(std::string(what) + ": dimension mismatch " + to_string(a) + " vs " + to_string(b));
  }
}

ObservationMask::ObservationMask(Dims dims, bool observed) : dims_(dims), flags_(dims.size(), observed ? 1 : 0) {}

ObservationMask::ObservationMask(Dims dims, std::vector<std::uint8_t> flags) : dims_(dims), flags_(std::move(flags)) {
  if (flags_.size() != dims.size()) {
    throw ContractViolation("mask length " + std::to_string(flags_.size()) + " does not match dims " +
                            to_string(dims));
  }
  for (auto& f : flags_) {
    if (f > 1) throw ContractViolation("mask entries must be 0 or 1");
  }
}

std::size_t ObservationMask::observed_count() const noexcept {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

bool ObservationMask::is_row_structured() const noexcept {
  for (std::size_t h = 0; h < dims_.height; ++h) {
    for (std::size_t c = 0; c < dims_.channels; ++c) {
      const auto first = flags_[offset(dims_, h, 0, c)];
      for (std::size_t w = 1; w < dims_.width; ++w) {
        if (flags_[offset(dims_, h, w, c)] != first) return false;
      }
    }
  }
  return true;
}

std::uint64_t ObservationMask::digest() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto b : flags_) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::pair<std::size_t, std::size_t> unfolded_shape(const Dims& dims, int mode) {
  switch (mode) {
    case 1: return {dims.height, dims.width * dims.channels};
    case 2: return {dims.width, dims.height * dims.channels};
    case 3: return {dims.channels, dims.height * dims.width};
    default: throw ContractViolation("mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

template <typename T>
void unfold_into(std::span<const T> src, const Dims& d, int mode, std::span<double> out) {
  const auto [rows, cols] = unfolded_shape(d, mode);
  if (src.size() != d.size() || out.size() != rows * cols) {
    throw ContractViolation("unfold_into: buffer size mismatch");
  }
  const std::size_t H = d.height, W = d.width, C = d.channels;
  switch (mode) {
    case 1:
      std::copy(src.begin(), src.end(), out.begin());
      break;
    case 2:
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
          const T* in = src.data() + (h * W + w) * C;
          double* o = out.data() + w * cols + h * C;
          for (std::size_t c = 0; c < C; ++c) o[c] = in[c];
        }
      break;
    case 3:
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
          const T* in = src.data() + (h * W + w) * C;
          const std::size_t col = h * W + w;
          for (std::size_t c = 0; c < C; ++c) out[c * cols + col] = in[c];
        }
      break;
  }
}

template <typename T>
void fold_into(std::span<const double> m, const Dims& d, int mode, std::span<T> out) {
  const auto [rows, cols] = unfolded_shape(d, mode);
  if (out.size() != d.size() || m.size() != rows * cols) {
    throw ContractViolation("fold_into: buffer size mismatch");
  }
  const std::size_t H = d.height, W = d.width, C = d.channels;
  switch (mode) {
    case 1:
      for (std::size_t i = 0; i < m.size(); ++i) out[i] = static_cast<T>(m[i]);
      break;
    case 2:
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
          T* o = out.data() + (h * W + w) * C;
          const double* in = m.data() + w * cols + h * C;
          for (std::size_t c = 0; c < C; ++c) o[c] = static_cast<T>(in[c]);
        }
      break;
    case 3:
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w) {
          T* o = out.data() + (h * W + w) * C;
          const std::size_t col = h * W + w;
          for (std::size_t c = 0; c < C; ++c) o[c] = static_cast<T>(m[c * cols + col]);
        }
      break;
  }
}

template <typename T>
ModeMatrix unfold(const Tensor3<T>& t, int mode) {
  const auto [rows, cols] = unfolded_shape(t.dims(), mode);
  ModeMatrix m{mode, rows, cols, std::vector<double>(rows * cols)};
  unfold_into<T>(t.data(), t.dims(), mode, m.data);
  return m;
}

template ModeMatrix unfold<float>(const FeatureTensor&, int);
template ModeMatrix unfold<double>(const WorkTensor&, int);
template void unfold_into<float>(std::span<const float>, const Dims&, int, std::span<double>);
template void unfold_into<double>(std::span<const double>, const Dims&, int, std::span<double>);
template void fold_into<float>(std::span<const double>, const Dims&, int, std::span<float>);
template void fold_into<double>(std::span<const double>, const Dims&, int, std::span<double>);

namespace {

template <typename T>
Tensor3<T> fold_as(const ModeMatrix& m, int mode, const Dims& dims) {
  const auto [rows, cols] = unfolded_shape(dims, mode);
  if (m.mode != mode || m.rows != rows || m.cols != cols || m.data.size() != rows * cols) {
    throw ContractViolation("fold: " + std::to_string(m.rows) + "x" + std::to_string(m.cols) + " mode-" +
                            std::to_string(m.mode) + " matrix does not match mode-" + std::to_string(mode) +
                            " unfolding of " + to_string(dims));
  }
  std::vector<T> out(dims.size());
  fold_into<T>(m.data, dims, mode, out);
  return Tensor3<T>(dims, std::move(out));
}

}  // namespace

FeatureTensor fold(const ModeMatrix& m, int mode, const Dims& dims) { return fold_as<float>(m, mode, dims); }
WorkTensor fold_work(const ModeMatrix& m, int mode, const Dims& dims) { return fold_as<double>(m, mode, dims); }

FeatureTensor masked_fill(const FeatureTensor& t, const ObservationMask& mask, float value) {
  require_same_dims(t.dims(), mask.dims(), "masked_fill");
  FeatureTensor out = t;
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!mask.observed(i)) d[i] = value;
  }
  return out;
}

double masked_mse(const FeatureTensor& a, const FeatureTensor& b, const ObservationMask& mask, EntrySubset over) {
  require_same_dims(a.dims(), b.dims(), "masked_mse");
  require_same_dims(a.dims(), mask.dims(), "masked_mse");
  double sum = 0.0;
  std::size_t n = 0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const bool obs = mask.observed(i);
    if (over == EntrySubset::observed && !obs) continue;
    if (over == EntrySubset::missing && obs) continue;
    const double diff = static_cast<double>(da[i]) - static_cast<double>(db[i]);
    sum += diff * diff;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double frobenius_norm(const ModeMatrix& m) noexcept { return frobenius_norm<double>(m.data); }

}  // namespace tcomp
