#include <omp.h>

#include <exception>
#include <utility>

#include "tcomp/kernels.hpp"

namespace tcomp::kernels::omp {

namespace {

/// Captures the first exception thrown inside a parallel region.
class ErrorSlot {
 public:
  template <typename F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
#pragma omp critical(tcomp_error_slot)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

}  // namespace

std::vector<SvtResult> svt_modes(std::span<const SvtJob> jobs, SvdBackend backend) {
  std::vector<SvtResult> out(jobs.size());
  ErrorSlot err;
  const auto n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long j = 0; j < n; ++j) {
    err.run([&] { out[static_cast<std::size_t>(j)] = detail::run_svt_job(jobs[static_cast<std::size_t>(j)], backend); });
  }
  err.rethrow();
  return out;
}

std::size_t altec_predict(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& w,
                          std::span<float> out) {
  const Dims& d = damaged.dims();
  const auto n = static_cast<long>(d.height * d.channels);
  std::size_t rows = 0;
#pragma omp parallel for schedule(static) reduction(+ : rows)
  for (long k = 0; k < n; ++k) {
    const auto h = static_cast<std::size_t>(k) / d.channels;
    const auto c = static_cast<std::size_t>(k) % d.channels;
    if (detail::altec_predict_row(damaged, mask, w, h, c, out)) ++rows;
  }
  return rows;
}

AlsStats als_update_mode(int mode, const AlsData& data, CpFactors& f) {
  AlsStats stats;
  const auto ctx = detail::prepare_als_mode(mode, data, f);
  const auto n = static_cast<long>(f.mode(mode).rows());
  std::size_t fallbacks = 0;
  ErrorSlot err;
  if (mode == 3) {
#pragma omp parallel for schedule(static) reduction(+ : fallbacks)
    for (long i = 0; i < n; ++i) {
      err.run([&] {
        if (!detail::als_solve_row(mode, static_cast<std::size_t>(i), data, ctx, f)) ++fallbacks;
      });
    }
  } else {
    // Rows of one parity only read rows of the other parity.
    for (long parity = 0; parity < 2; ++parity) {
      const long count = (n - parity + 1) / 2;
#pragma omp parallel for schedule(static) reduction(+ : fallbacks)
      for (long k = 0; k < count; ++k) {
        const auto i = static_cast<std::size_t>(parity + 2 * k);
        err.run([&] {
          if (!detail::als_solve_row(mode, i, data, ctx, f)) ++fallbacks;
        });
      }
    }
  }
  err.rethrow();
  stats.ridge_fallbacks = fallbacks;
  return stats;
}

void cp_reconstruct(const CpFactors& f, const Dims& dims, std::span<double> out) {
  const auto n = static_cast<long>(dims.height);
#pragma omp parallel for schedule(static)
  for (long h = 0; h < n; ++h) detail::cp_reconstruct_row(f, dims, static_cast<std::size_t>(h), out);
}

}  // namespace tcomp::kernels::omp
