#include <algorithm>
#include <cmath>

#include "lrtc_common.hpp"
#include "tcomp/kernels.hpp"
#include "tcomp/rng.hpp"

namespace tcomp {

namespace {

double roughness(const Eigen::MatrixXd& f) {
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < f.rows(); ++i) s += (f.row(i) - f.row(i + 1)).squaredNorm();
  return s;
}

/// (observed SSE + lambda * roughness of the spatial factors) / observed count.
double penalised_fit(const std::vector<double>& recon, const FeatureTensor& x, const ObservationMask& mask,
                     const kernels::CpFactors& f, double lambda) {
  double sse = 0.0;
  const auto v = x.data();
  for (std::size_t j = 0; j < recon.size(); ++j) {
    if (!mask.observed(j)) continue;
    const double d = recon[j] - static_cast<double>(v[j]);
    sse += d * d;
  }
  const double pen = lambda > 0.0 ? lambda * (roughness(f.a) + roughness(f.b)) : 0.0;
  const std::size_t n = std::max<std::size_t>(mask.observed_count(), 1);
  return (sse + pen) / static_cast<double>(n);
}

}  // namespace

Completion complete_fcp(const FeatureTensor& damaged, const ObservationMask& mask, const FCPParams& params,
                        IterationBudget budget, Exec exec) {
  lrtc::check_common(damaged, mask, params.max_sweeps, params.tol, budget, "fcp");
  const Dims& d = damaged.dims();
  const std::size_t max_rank = std::min({d.height * d.width, d.width * d.channels, d.height * d.channels});
  if (params.rank < 1 || params.rank > max_rank) {
    throw ContractViolation("fcp: rank must be in [1, " + std::to_string(max_rank) + "], got " +
                            std::to_string(params.rank));
  }
  if (!(params.smooth_lambda >= 0.0) || !std::isfinite(params.smooth_lambda)) {
    throw ContractViolation("fcp: smooth_lambda must be >= 0");
  }

  // Random positive init scaled so the initial reconstruction matches the data RMS.
  double obs2 = 0.0;
  const auto v = damaged.data();
  for (std::size_t j = 0; j < v.size(); ++j)
    if (mask.observed(j)) obs2 += static_cast<double>(v[j]) * v[j];
  const double rms = std::sqrt(obs2 / static_cast<double>(std::max<std::size_t>(mask.observed_count(), 1)));
  const auto r = static_cast<Eigen::Index>(params.rank);
  const double scale = std::cbrt(std::max(rms, 1e-3) / (0.125 * static_cast<double>(r)));

  Rng rng(params.init_seed);
  kernels::CpFactors f;
  auto init = [&](Eigen::MatrixXd& m, std::size_t rows) {
    m.resize(static_cast<Eigen::Index>(rows), r);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < r; ++j) m(i, j) = scale * rng.uniform();
  };
  init(f.a, d.height);
  init(f.b, d.width);
  init(f.c, d.channels);

  const kernels::AlsData data{&damaged, &mask, params.smooth_lambda,
                              params.exploit_row_structure && mask.is_row_structured()};

  std::vector<double> recon(d.size());
  std::vector<double> prev(d.size());
  kernels::cp_reconstruct(f, d, recon, exec);

  Completion result;
  result.objective.push_back(penalised_fit(recon, damaged, mask, f, params.smooth_lambda));
  const int cap = lrtc::iteration_cap(params.max_sweeps, budget);

  for (int k = 0; k < cap; ++k) {
    for (int mode = 1; mode <= 3; ++mode) kernels::als_update_mode(mode, data, f, exec);
    std::swap(prev, recon);
    kernels::cp_reconstruct(f, d, recon, exec);
    result.objective.push_back(penalised_fit(recon, damaged, mask, f, params.smooth_lambda));

    const double change = lrtc::relative_change(recon, prev);
    result.relative_change.push_back(change);
    result.iterations = k + 1;
    if (!budget.is_fixed() && change < params.tol) {
      result.converged = true;
      break;
    }
  }

  if (params.sparse_variant) {
    for (double& e : recon) e = std::max(e, 0.0);
  }
  result.tensor = lrtc::finish(WorkTensor(d, std::move(recon)), damaged, mask);
  return result;
}

}  // namespace tcomp
