#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tcomp/tensor.hpp"

namespace tcomp {

struct TensorItem {
  std::string id;
  FeatureTensor tensor;
  std::optional<long> label;
  std::optional<long> nl_prediction;

  /// NL correctness, when both label and prediction are known.
  std::optional<bool> nl_correct() const {
    if (!label || !nl_prediction) return std::nullopt;
    return *label == *nl_prediction;
  }
};

using TensorSet = std::vector<TensorItem>;

/// Loads `dir/manifest.json` when present (entries {id, tensor, label,
/// nl_prediction}, tensor paths relative to dir), else every *.npy file in
/// the directory sorted by name with the file stem as id. All tensors must
/// share one shape.
TensorSet load_tensor_dir(const std::filesystem::path& dir);

/// Rank-`rank` CP tensors with positive, spatially smooth factors plus
/// Gaussian noise of standard deviation `noise` relative to the entry RMS.
TensorSet synthetic_low_rank_set(std::size_t count, const Dims& dims, std::size_t rank, std::uint64_t seed,
                                 double noise = 0.0);

}  // namespace tcomp
