#include "tcomp/completion.hpp"

#include <type_traits>

namespace tcomp {

IterationBudget IterationBudget::fixed(int n) {
  if (n < 1) throw ContractViolation("fixed iteration budget must be >= 1, got " + std::to_string(n));
  return {Mode::fixed_iters, n};
}

std::string method_name(const MethodConfig& config) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ZeroFillConfig>) return "none";
        else if constexpr (std::is_same_v<T, SiLRTCParams>) return "silrtc";
        else if constexpr (std::is_same_v<T, HaLRTCParams>) return "halrtc";
        else if constexpr (std::is_same_v<T, FCPParams>) return "fcp";
        else return "altec";
      },
      config);
}

MethodConfig default_method_config(std::string_view name, std::shared_ptr<const ALTeCWeights> altec) {
  if (name == "none") return ZeroFillConfig{};
  if (name == "silrtc") return default_silrtc_params();
  if (name == "halrtc") return HaLRTCParams{};
  if (name == "fcp") return FCPParams{};
  if (name == "altec") {
    if (!altec) throw ContractViolation("method altec needs trained weights");
    return ALTeCConfig{std::move(altec)};
  }
  throw ContractViolation("unknown method '" + std::string(name) + "' (expected none, silrtc, halrtc, fcp, altec)");
}

bool is_iterative(const MethodConfig& config) noexcept {
  return std::holds_alternative<SiLRTCParams>(config) || std::holds_alternative<HaLRTCParams>(config) ||
         std::holds_alternative<FCPParams>(config);
}

Completion complete_none(const FeatureTensor& damaged, const ObservationMask& mask) {
  Completion result;
  result.tensor = masked_fill(damaged, mask, 0.0f);
  return result;
}

Completion complete(const MethodConfig& config, const FeatureTensor& damaged, const ObservationMask& mask,
                    IterationBudget budget, Exec exec) {
  return std::visit(
      [&](const auto& c) -> Completion {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ZeroFillConfig>) {
          return complete_none(damaged, mask);
        } else if constexpr (std::is_same_v<T, SiLRTCParams>) {
          return complete_silrtc(damaged, mask, c, budget, exec);
        } else if constexpr (std::is_same_v<T, HaLRTCParams>) {
          return complete_halrtc(damaged, mask, c, budget, exec);
        } else if constexpr (std::is_same_v<T, FCPParams>) {
          return complete_fcp(damaged, mask, c, budget, exec);
        } else {
          if (!c.weights) throw ContractViolation("altec config has no weights");
          return complete_altec(damaged, mask, *c.weights, exec);
        }
      },
      config);
}

}  // namespace tcomp
