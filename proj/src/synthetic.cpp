#include <cmath>
#include <numbers>

#include "tcomp/dataset.hpp"
#include "tcomp/rng.hpp"

namespace tcomp {

TensorSet synthetic_low_rank_set(std::size_t count, const Dims& dims, std::size_t rank, std::uint64_t seed,
                                 double noise) {
  if (rank == 0) throw ContractViolation("synthetic set: rank must be >= 1");
  if (!(noise >= 0.0)) throw ContractViolation("synthetic set: noise must be >= 0");
  TensorSet set;
  set.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Rng rng(substream_seed(seed, n, 0));
    // Spatial factors are low-frequency sinusoids, channel factors uniform.
    auto smooth = [&](std::size_t len) {
      std::vector<double> f(len);
      const double freq = rng.uniform(0.1, 0.6);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < len; ++i) f[i] = 1.0 + 0.5 * std::sin(freq * static_cast<double>(i) + phase);
      return f;
    };
    std::vector<double> values(dims.size(), 0.0);
    for (std::size_t r = 0; r < rank; ++r) {
      const auto a = smooth(dims.height);
      const auto b = smooth(dims.width);
      std::vector<double> c(dims.channels);
      for (auto& v : c) v = rng.uniform();
      for (std::size_t h = 0; h < dims.height; ++h)
        for (std::size_t w = 0; w < dims.width; ++w)
          for (std::size_t k = 0; k < dims.channels; ++k) values[offset(dims, h, w, k)] += a[h] * b[w] * c[k];
    }
    if (noise > 0.0) {
      double ss = 0.0;
      for (const double v : values) ss += v * v;
      const double sd = noise * std::sqrt(ss / static_cast<double>(values.size()));
      for (double& v : values) v += sd * rng.normal();
    }
    std::vector<float> data(values.begin(), values.end());
    set.push_back({"synthetic_" + std::to_string(n), FeatureTensor(dims, std::move(data)), std::nullopt, std::nullopt});
  }
  return set;
}

}  // namespace tcomp
