#include <exception>
#include <numeric>
#include <optional>

#include "lrtc_common.hpp"
#include "tcomp/kernels.hpp"

namespace tcomp {

namespace {

template <class F>
void for_each_mode(Exec exec, F&& body) {
  std::exception_ptr err;
#pragma omp parallel for schedule(static, 1) if (exec == Exec::parallel)
  for (int i = 0; i < 3; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(tcomp_silrtc_err)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

using Solvers = std::array<std::optional<GramEigensolver>, 3>;

Solvers factorize(const std::array<ModeMatrix, 3>& m, Exec exec) {
  Solvers out;
  for_each_mode(exec, [&](std::size_t i) { out[i].emplace(m[i]); });
  return out;
}

double weighted_nuclear(const Solvers& s, const ModeWeights& alphas) {
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& sv = s[i]->singular_values();
    total += alphas[i] * std::accumulate(sv.begin(), sv.end(), 0.0);
  }
  return total;
}

}  // namespace

SiLRTCParams default_silrtc_params() { return {}; }

Completion complete_silrtc(const FeatureTensor& damaged, const ObservationMask& mask, const SiLRTCParams& params,
                           IterationBudget budget, Exec exec) {
  lrtc::check_common(damaged, mask, params.max_iters, params.tol, budget, "silrtc");
  lrtc::check_alphas(params.alphas, "silrtc");
  if (!(params.beta_growth >= 1.0)) throw ContractViolation("silrtc: beta_growth must be >= 1");
  if (params.betas) {
    for (const double b : *params.betas) {
      if (!(b > 0.0) || !std::isfinite(b)) throw ContractViolation("silrtc: betas must be > 0");
    }
  }

  const Dims& dims = damaged.dims();
  WorkTensor x = lrtc::widen(damaged);
  WorkTensor next(dims);
  std::vector<double> folded(dims.size());
  std::vector<double> acc(dims.size());

  Completion result;
  ModeWeights betas{};
  const int cap = lrtc::iteration_cap(params.max_iters, budget);

  for (int k = 0; k < cap; ++k) {
    const auto unfolded = lrtc::unfold_all(x);
    const auto solvers = factorize(unfolded, exec);
    result.objective.push_back(weighted_nuclear(solvers, params.alphas));

    if (k == 0) {
      if (params.betas) {
        betas = *params.betas;
      } else {
        for (std::size_t i = 0; i < 3; ++i) {
          const auto& sv = solvers[i]->singular_values();
          const double mean = std::accumulate(sv.begin(), sv.end(), 0.0) / static_cast<double>(sv.size());
          betas[i] = mean > 0.0 ? 1.0 / mean : 1.0;
        }
      }
    }

    ModeWeights taus{};
    for (std::size_t i = 0; i < 3; ++i) taus[i] = params.alphas[i] / betas[i];
    std::array<GramSpectrum, 3> spec;
    const bool reuse = params.backend == SvdBackend::gram_eigen;
    if (reuse) for_each_mode(exec, [&](std::size_t i) { spec[i] = solvers[i]->spectrum_above(taus[i]); });

    std::array<kernels::SvtJob, 3> jobs;
    for (std::size_t i = 0; i < 3; ++i) jobs[i] = {&unfolded[i], taus[i], reuse ? &spec[i] : nullptr};
    const auto shrunk = kernels::svt_modes(jobs, params.backend, exec);

    std::fill(acc.begin(), acc.end(), 0.0);
    const double beta_sum = betas[0] + betas[1] + betas[2];
    for (std::size_t i = 0; i < 3; ++i) {
      fold_into<double>(shrunk[i].matrix.data, dims, static_cast<int>(i) + 1, folded);
      const double wgt = betas[i] / beta_sum;
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += wgt * folded[j];
    }
    auto nx = next.data();
    const auto cx = x.data();
    for (std::size_t j = 0; j < nx.size(); ++j) nx[j] = mask.observed(j) ? cx[j] : acc[j];

    const double change = lrtc::relative_change(next.data(), x.data());
    result.relative_change.push_back(change);
    std::swap(x, next);
    result.iterations = k + 1;
    for (double& b : betas) b *= params.beta_growth;

    if (!budget.is_fixed() && change < params.tol) {
      result.converged = true;
      break;
    }
  }

  if (params.track_objective) result.objective.push_back(weighted_nuclear(factorize(lrtc::unfold_all(x), exec), params.alphas));
  result.tensor = lrtc::finish(x, damaged, mask);
  return result;
}

}  // namespace tcomp
