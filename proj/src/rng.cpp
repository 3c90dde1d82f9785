#include "tcomp/rng.hpp"

#include <cmath>
#include <numbers>

namespace tcomp {

std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t image_index, std::uint64_t trial_index) noexcept {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ splitmix64(image_index + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(trial_index + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace tcomp
