#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tcomp/svd.hpp"
#include "tcomp/tensor.hpp"

namespace tcomp {

/// Execution policy for the data-parallel kernels. `serial` runs the
/// reference loops; `parallel` distributes independent outputs with OpenMP.
/// Both produce bitwise-identical results.
enum class Exec { serial, parallel };

struct IterationBudget {
  enum class Mode { until_convergence, fixed_iters };

  Mode mode = Mode::until_convergence;
  int iters = 0;

  static IterationBudget until_convergence() { return {}; }
  static IterationBudget fixed(int n);

  bool is_fixed() const noexcept { return mode == Mode::fixed_iters; }
};

/// Output of every completion method plus its per-iteration diagnostics.
struct Completion {
  FeatureTensor tensor;
  int iterations = 0;
  bool converged = false;
  /// Method-specific objective after each iteration (SiLRTC: weighted sum of
  /// unfolding nuclear norms, entry 0 = starting point; FCP: penalised
  /// observed-entry least-squares objective, entry 0 = random init).
  std::vector<double> objective;
  /// HaLRTC: max_i ‖fold(M_i) - X‖_F / ‖X‖_F per iteration.
  std::vector<double> consensus_residual;
  /// Relative change ‖X_{k+1} - X_k‖_F / ‖X_k‖_F per iteration.
  std::vector<double> relative_change;
  /// ALTeC: number of (row, channel) pairs predicted.
  std::size_t rows_predicted = 0;
};

using ModeWeights = std::array<double, 3>;

inline constexpr ModeWeights kEqualModeWeights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

struct SiLRTCParams {
  ModeWeights alphas = kEqualModeWeights;
  /// Penalty weights; when unset, beta_i = 1 / mean singular value of the
  /// zero-filled mode-i unfolding.
  std::optional<ModeWeights> betas;
  /// Per-iteration growth of the betas (1 = fixed penalty).
  double beta_growth = 1.02;
  int max_iters = 500;
  double tol = 1e-5;
  /// Also evaluate the objective on the final iterate (one extra spectrum).
  bool track_objective = false;
  SvdBackend backend = SvdBackend::gram_eigen;
};

struct HaLRTCParams {
  ModeWeights alphas = kEqualModeWeights;
  double rho = 1e-3;
  double rho_scale = 1.05;
  int max_iters = 500;
  double tol = 1e-5;
  SvdBackend backend = SvdBackend::gram_eigen;
};

struct FCPParams {
  std::size_t rank = 8;
  bool sparse_variant = false;
  double smooth_lambda = 0.1;
  int max_sweeps = 500;
  double tol = 1e-5;
  std::uint64_t init_seed = 0;
  /// Use the Hadamard-product normal equations when the mask is row-structured.
  bool exploit_row_structure = true;
};

/// Per-channel linear predictor of a lost row.
///
/// Channel c owns a row of `stride() = C + 2` coefficients: slots [0, C) weight
/// the collocated row of every channel (its own slot is pinned to zero), slot
/// C weights the row above and slot C + 1 the row below. A missing vertical
/// neighbour is replaced by the other one; with neither available the
/// vertical terms vanish.
struct ALTeCWeights {
  std::size_t channels = 0;
  std::vector<double> coefficients;  ///< channels x stride(), row-major
  std::vector<double> bias;          ///< one per channel
  double ridge_lambda = 0.0;

  std::size_t stride() const noexcept { return channels + 2; }
  std::span<const double> row(std::size_t c) const noexcept {
    return {coefficients.data() + c * stride(), stride()};
  }
  void validate() const;

  friend bool operator==(const ALTeCWeights&, const ALTeCWeights&) = default;
};

struct ALTeCConfig {
  std::shared_ptr<const ALTeCWeights> weights;
};

struct ZeroFillConfig {};

using MethodConfig = std::variant<ZeroFillConfig, SiLRTCParams, HaLRTCParams, FCPParams, ALTeCConfig>;

/// Canonical lowercase name: none, silrtc, halrtc, fcp, altec.
std::string method_name(const MethodConfig& config);

/// Default configuration for a method name; ALTeC needs weights supplied.
MethodConfig default_method_config(std::string_view name, std::shared_ptr<const ALTeCWeights> altec = nullptr);

/// True for the iterative methods that honour an IterationBudget.
bool is_iterative(const MethodConfig& config) noexcept;

// --- individual methods. `damaged` must have lost entries zero-filled. ---

SiLRTCParams default_silrtc_params();

Completion complete_silrtc(const FeatureTensor& damaged, const ObservationMask& mask, const SiLRTCParams& params,
                           IterationBudget budget, Exec exec = Exec::parallel);

Completion complete_halrtc(const FeatureTensor& damaged, const ObservationMask& mask, const HaLRTCParams& params,
                           IterationBudget budget, Exec exec = Exec::parallel);

Completion complete_fcp(const FeatureTensor& damaged, const ObservationMask& mask, const FCPParams& params,
                        IterationBudget budget, Exec exec = Exec::parallel);

ALTeCWeights train_altec(std::span<const FeatureTensor> clean, double ridge_lambda, Exec exec = Exec::parallel);

Completion complete_altec(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& weights,
                          Exec exec = Exec::parallel);

/// NC baseline: missing entries zero.
Completion complete_none(const FeatureTensor& damaged, const ObservationMask& mask);

/// Single entry point used by the harness and CLI.
Completion complete(const MethodConfig& config, const FeatureTensor& damaged, const ObservationMask& mask,
                    IterationBudget budget = IterationBudget::until_convergence(), Exec exec = Exec::parallel);

// --- ALTeC weight files: "ALTC", u32 version, u32 C, C x ((C+2) f64 + f64 bias), f64 ridge. ---

inline constexpr std::uint32_t kAltecFormatVersion = 1;

std::vector<std::uint8_t> serialize_altec(const ALTeCWeights& w);
ALTeCWeights deserialize_altec(std::span<const std::uint8_t> bytes);
void save_altec(const ALTeCWeights& w, const std::filesystem::path& path);
ALTeCWeights load_altec(const std::filesystem::path& path);

}  // namespace tcomp
