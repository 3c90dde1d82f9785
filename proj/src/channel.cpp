#include "tcomp/channel.hpp"

#include <algorithm>
#include <string>

#include "tcomp/rng.hpp"

namespace tcomp {

namespace {

void check_scheme(const Dims& dims, const PacketizationScheme& scheme) {
  if (scheme.rows_per_packet == 0) throw ContractViolation("rows_per_packet must be positive");
  if (scheme.rows_per_packet > dims.height) {
    throw ContractViolation("rows_per_packet " + std::to_string(scheme.rows_per_packet) +
                            " exceeds tensor height " + std::to_string(dims.height));
  }
}

std::size_t row_blocks(const Dims& dims, const PacketizationScheme& scheme) {
  return (dims.height + scheme.rows_per_packet - 1) / scheme.rows_per_packet;
}

}  // namespace

std::size_t packet_count(const Dims& dims, const PacketizationScheme& scheme) {
  check_scheme(dims, scheme);
  const std::size_t blocks = row_blocks(dims, scheme);
  return scheme.grouping == PacketGrouping::per_channel_row ? blocks * dims.channels : blocks;
}

std::vector<PacketExtent> packet_index_map(const Dims& dims, const PacketizationScheme& scheme) {
  check_scheme(dims, scheme);
  const std::size_t rpp = scheme.rows_per_packet;
  const std::size_t blocks = row_blocks(dims, scheme);
  auto rows_of = [&](std::size_t b) { return IndexRange{b * rpp, std::min(dims.height, (b + 1) * rpp)}; };

  std::vector<PacketExtent> map;
  if (scheme.grouping == PacketGrouping::per_channel_row) {
    map.reserve(blocks * dims.channels);
    for (std::size_t c = 0; c < dims.channels; ++c)
      for (std::size_t b = 0; b < blocks; ++b) map.push_back({{c, c + 1}, rows_of(b)});
  } else {
    map.reserve(blocks);
    for (std::size_t b = 0; b < blocks; ++b) map.push_back({{0, dims.channels}, rows_of(b)});
  }
  return map;
}

LossPattern draw_loss(std::size_t n_packets, const ChannelConfig& cfg) {
  if (n_packets == 0) throw ContractViolation("draw_loss: n_packets must be positive");
  if (!(cfg.p_loss >= 0.0 && cfg.p_loss <= 1.0)) {
    throw ContractViolation("p_loss must lie in [0, 1], got " + std::to_string(cfg.p_loss));
  }
  Rng rng(cfg.seed);
  LossPattern pattern{n_packets, {}};
  for (std::size_t i = 0; i < n_packets; ++i) {
    if (rng.uniform() < cfg.p_loss) pattern.lost.push_back(i);
  }
  return pattern;
}

ObservationMask loss_mask(const Dims& dims, const LossPattern& pattern, const PacketizationScheme& scheme) {
  const std::size_t expected = packet_count(dims, scheme);
  if (pattern.total_packets != expected) {
    throw ContractViolation("loss pattern covers " + std::to_string(pattern.total_packets) +
                            " packets but the scheme produces " + std::to_string(expected));
  }
  ObservationMask mask = ObservationMask::all_observed(dims);
  if (pattern.lost.empty()) return mask;

  const auto map = packet_index_map(dims, scheme);
  for (const std::size_t idx : pattern.lost) {
    if (idx >= map.size()) throw ContractViolation("lost packet index out of range");
    const auto& p = map[idx];
    for (std::size_t h = p.rows.begin; h < p.rows.end; ++h)
      for (std::size_t w = 0; w < dims.width; ++w)
        for (std::size_t c = p.channels.begin; c < p.channels.end; ++c) mask.set(h, w, c, false);
  }
  return mask;
}

DamagedTensor apply_loss(const FeatureTensor& t, const LossPattern& pattern, const PacketizationScheme& scheme) {
  ObservationMask mask = loss_mask(t.dims(), pattern, scheme);
  FeatureTensor damaged = masked_fill(t, mask, 0.0f);
  return {std::move(damaged), std::move(mask)};
}

}  // namespace tcomp
