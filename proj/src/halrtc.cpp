#include <algorithm>

#include "lrtc_common.hpp"
#include "tcomp/kernels.hpp"

namespace tcomp {

Completion complete_halrtc(const FeatureTensor& damaged, const ObservationMask& mask, const HaLRTCParams& params,
                           IterationBudget budget, Exec exec) {
  lrtc::check_common(damaged, mask, params.max_iters, params.tol, budget, "halrtc");
  lrtc::check_alphas(params.alphas, "halrtc");
  if (!(params.rho > 0.0)) throw ContractViolation("halrtc: rho must be > 0");
  if (!(params.rho_scale >= 1.0)) throw ContractViolation("halrtc: rho_scale must be >= 1");

  const Dims& dims = damaged.dims();
  const std::size_t n = dims.size();
  WorkTensor x = lrtc::widen(damaged);
  WorkTensor next(dims);
  std::array<std::vector<double>, 3> y;  // dual variables, tensor layout
  std::array<std::vector<double>, 3> m;  // folded SVT outputs
  for (std::size_t i = 0; i < 3; ++i) {
    y[i].assign(n, 0.0);
    m[i].assign(n, 0.0);
  }
  std::vector<double> shifted(n);

  Completion result;
  if (mask.missing_count() == 0 && !budget.is_fixed()) {
    // Nothing to fill; the ADMM consensus would only re-derive the input.
    result.tensor = damaged;
    result.iterations = 1;
    result.converged = true;
    result.relative_change.push_back(0.0);
    result.consensus_residual.push_back(0.0);
    return result;
  }
  double rho = params.rho;
  const int cap = lrtc::iteration_cap(params.max_iters, budget);

  for (int k = 0; k < cap; ++k) {
    const auto cx = x.data();
    std::array<ModeMatrix, 3> inputs;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < n; ++j) shifted[j] = cx[j] + y[i][j] / rho;
      const int mode = static_cast<int>(i) + 1;
      const auto [rows, cols] = unfolded_shape(dims, mode);
      inputs[i] = {mode, rows, cols, std::vector<double>(n)};
      unfold_into<double>(shifted, dims, mode, inputs[i].data);
    }

    std::array<kernels::SvtJob, 3> jobs;
    for (std::size_t i = 0; i < 3; ++i) jobs[i] = {&inputs[i], params.alphas[i] / rho, nullptr};
    const auto shrunk = kernels::svt_modes(jobs, params.backend, exec);
    for (std::size_t i = 0; i < 3; ++i) fold_into<double>(shrunk[i].matrix.data, dims, static_cast<int>(i) + 1, m[i]);

    auto nx = next.data();
    for (std::size_t j = 0; j < n; ++j) {
      if (mask.observed(j)) {
        nx[j] = cx[j];
      } else {
        double s = 0.0;
        for (std::size_t i = 0; i < 3; ++i) s += m[i][j] - y[i][j] / rho;
        nx[j] = s / 3.0;
      }
    }

    // Dual ascent and the consensus residual max_i ‖M_i - X‖ / ‖X‖.
    double x_norm2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) x_norm2 += nx[j] * nx[j];
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      double r2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = m[i][j] - nx[j];
        r2 += d * d;
        y[i][j] -= rho * d;
      }
      worst = std::max(worst, x_norm2 > 0.0 ? std::sqrt(r2 / x_norm2) : std::sqrt(r2));
    }
    result.consensus_residual.push_back(worst);

    const double change = lrtc::relative_change(next.data(), x.data());
    result.relative_change.push_back(change);
    std::swap(x, next);
    result.iterations = k + 1;
    rho *= params.rho_scale;

    if (!budget.is_fixed() && change < params.tol && worst < params.tol) {
      result.converged = true;
      break;
    }
  }

  result.tensor = lrtc::finish(x, damaged, mask);
  return result;
}

}  // namespace tcomp
