#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "tcomp/tensor.hpp"

namespace tcomp {

enum class PacketGrouping {
  per_channel_row,    ///< one packet = rows_per_packet spatial rows of one channel
  cross_channel_row,  ///< one packet = the same spatial row(s) across all channels
};

struct PacketizationScheme {
  std::size_t rows_per_packet = 1;
  PacketGrouping grouping = PacketGrouping::per_channel_row;
};

struct ChannelConfig {
  double p_loss = 0.0;
  std::uint64_t seed = 0;
};

/// Lost packet indices of one channel realization, sorted ascending.
struct LossPattern {
  std::size_t total_packets = 0;
  std::vector<std::size_t> lost;

  friend bool operator==(const LossPattern&, const LossPattern&) = default;
};

/// Half-open index ranges [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Tensor region carried by one packet.
struct PacketExtent {
  IndexRange channels;
  IndexRange rows;
  friend bool operator==(const PacketExtent&, const PacketExtent&) = default;
};

std::size_t packet_count(const Dims& dims, const PacketizationScheme& scheme);

/// Packets ordered channel-major then row-major (per_channel_row), or
/// row-major (cross_channel_row). The last row block may be short.
std::vector<PacketExtent> packet_index_map(const Dims& dims, const PacketizationScheme& scheme);

/// Independent Bernoulli(p_loss) loss per packet from a generator seeded with cfg.seed.
LossPattern draw_loss(std::size_t n_packets, const ChannelConfig& cfg);

struct DamagedTensor {
  FeatureTensor tensor;  ///< lost entries zero-filled
  ObservationMask mask;
};

DamagedTensor apply_loss(const FeatureTensor& t, const LossPattern& pattern, const PacketizationScheme& scheme);

/// Mask only, for callers that keep the clean tensor around.
ObservationMask loss_mask(const Dims& dims, const LossPattern& pattern, const PacketizationScheme& scheme);

}  // namespace tcomp
