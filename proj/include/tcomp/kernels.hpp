#pragma once

// Data-parallel inner loops of the completion algorithms. Each kernel has a
// serial reference in kernels::serial and an OpenMP version in kernels::omp.
// The OpenMP versions only distribute independent outputs, so both produce
// bitwise-identical results; tests/unit/test_kernels.cpp holds them to that.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tcomp/completion.hpp"
#include "tcomp/svd.hpp"
#include "tcomp/tensor.hpp"

namespace tcomp::kernels {

/// One thresholding job; `spectrum` may point at a precomputed GramSpectrum.
struct SvtJob {
  const ModeMatrix* input = nullptr;
  double tau = 0.0;
  const GramSpectrum* spectrum = nullptr;
};

/// CP factor matrices, one row per index of the respective mode.
struct CpFactors {
  Eigen::MatrixXd a;  ///< H x R
  Eigen::MatrixXd b;  ///< W x R
  Eigen::MatrixXd c;  ///< C x R

  Eigen::MatrixXd& mode(int m) { return m == 1 ? a : (m == 2 ? b : c); }
  const Eigen::MatrixXd& mode(int m) const { return m == 1 ? a : (m == 2 ? b : c); }
};

/// Masked least-squares data for the CP updates.
struct AlsData {
  const FeatureTensor* values = nullptr;  ///< zero-filled observations
  const ObservationMask* mask = nullptr;
  double smooth_lambda = 0.0;  ///< applied to modes 1 and 2 only
  bool use_row_structure = true;
};

/// Counters reported by als_update_mode.
struct AlsStats {
  std::size_t ridge_fallbacks = 0;
};

namespace serial {

std::vector<SvtResult> svt_modes(std::span<const SvtJob> jobs, SvdBackend backend);

/// Predicts every missing entry of `damaged` into `out` (which must hold a
/// copy of `damaged`). Returns the number of (row, channel) pairs predicted.
std::size_t altec_predict(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& w,
                          std::span<float> out);

/// Exact row-wise minimisation for one factor matrix. Smoothed modes are
/// updated even rows first, then odd rows, each row given its neighbours.
AlsStats als_update_mode(int mode, const AlsData& data, CpFactors& f);

void cp_reconstruct(const CpFactors& f, const Dims& dims, std::span<double> out);

}  // namespace serial

namespace omp {

std::vector<SvtResult> svt_modes(std::span<const SvtJob> jobs, SvdBackend backend);
std::size_t altec_predict(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& w,
                          std::span<float> out);
AlsStats als_update_mode(int mode, const AlsData& data, CpFactors& f);
void cp_reconstruct(const CpFactors& f, const Dims& dims, std::span<double> out);

}  // namespace omp

// Policy dispatch.
std::vector<SvtResult> svt_modes(std::span<const SvtJob> jobs, SvdBackend backend, Exec exec);
std::size_t altec_predict(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& w,
                          std::span<float> out, Exec exec);
AlsStats als_update_mode(int mode, const AlsData& data, CpFactors& f, Exec exec);
void cp_reconstruct(const CpFactors& f, const Dims& dims, std::span<double> out, Exec exec);

namespace detail {

// Per-item bodies shared by both policies.

SvtResult run_svt_job(const SvtJob& job, SvdBackend backend);

/// Predicts the missing entries of row h of channel c; returns true if any.
bool altec_predict_row(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& w,
                       std::size_t h, std::size_t c, std::span<float> out);

/// Precomputed Gram terms for one mode update.
struct AlsModeContext {
  int mode = 1;
  Eigen::MatrixXd other_gram;               ///< Gram of the "fast" other factor
  std::vector<Eigen::MatrixXd> slice_gram;  ///< per-row Gram terms (structured mode 2)
  Eigen::MatrixXd shared_system;            ///< mode-2 structured system shared by all rows
};

AlsModeContext prepare_als_mode(int mode, const AlsData& data, const CpFactors& f);

/// Solves the row subproblem for row `i` of factor `mode` in place.
bool als_solve_row(int mode, std::size_t i, const AlsData& data, const AlsModeContext& ctx, CpFactors& f);

void cp_reconstruct_row(const CpFactors& f, const Dims& dims, std::size_t h, std::span<double> out);

}  // namespace detail

}  // namespace tcomp::kernels
