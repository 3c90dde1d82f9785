#pragma once

// Shared plumbing for the trace-norm methods (SiLRTC, HaLRTC).

#include <array>
#include <cmath>
#include <string>

#include "tcomp/completion.hpp"
#include "tcomp/tensor.hpp"

namespace tcomp::lrtc {

inline void check_alphas(const ModeWeights& alphas, const char* who) {
  double sum = 0.0;
  for (const double a : alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ContractViolation(std::string(who) + ": alphas must be >= 0");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ContractViolation(std::string(who) + ": alphas must sum to 1");
}

inline void check_common(const FeatureTensor& damaged, const ObservationMask& mask, int max_iters, double tol,
                         IterationBudget budget, const char* who) {
  require_same_dims(damaged.dims(), mask.dims(), who);
  if (max_iters < 1) throw ContractViolation(std::string(who) + ": max_iters must be >= 1");
  if (!(tol > 0.0)) throw ContractViolation(std::string(who) + ": tol must be > 0");
  if (budget.is_fixed() && budget.iters < 1) throw ContractViolation(std::string(who) + ": fixed budget must be >= 1");
}

inline int iteration_cap(int max_iters, IterationBudget budget) { return budget.is_fixed() ? budget.iters : max_iters; }

inline std::array<ModeMatrix, 3> unfold_all(const WorkTensor& x) { return {unfold(x, 1), unfold(x, 2), unfold(x, 3)}; }

/// ‖a - b‖ / ‖b‖, falling back to the absolute difference when b is zero.
inline double relative_change(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, base = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    diff += d * d;
    base += b[i] * b[i];
  }
  return base > 0.0 ? std::sqrt(diff / base) : std::sqrt(diff);
}

/// Copies `x` to float storage, restoring observed entries from `damaged` verbatim.
inline FeatureTensor finish(const WorkTensor& x, const FeatureTensor& damaged, const ObservationMask& mask) {
  FeatureTensor out(damaged.dims());
  auto o = out.data();
  const auto src = x.data();
  const auto in = damaged.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = mask.observed(i) ? in[i] : static_cast<float>(src[i]);
  return out;
}

inline WorkTensor widen(const FeatureTensor& t) {
  WorkTensor x(t.dims());
  auto o = x.data();
  const auto in = t.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i];
  return x;
}

}  // namespace tcomp::lrtc
