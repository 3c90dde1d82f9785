#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "tcomp/tensor.hpp"

namespace tcomp {

enum class SvdBackend {
  gram_eigen,  ///< symmetric eigensolver on the smaller Gram matrix (default)
  jacobi,      ///< one-sided Hestenes Jacobi; slow serial reference
};

/// Eigendecomposition of the smaller Gram matrix of an m x n matrix A:
/// AᵀA when n <= m (right singular vectors), AAᵀ otherwise (left).
struct GramSpectrum {
  bool right_side = true;
  std::vector<double> singular_values;  ///< descending, sqrt of clamped eigenvalues
  Eigen::MatrixXd vectors;              ///< column j pairs with singular_values[j]; may hold only the leading ones
};

/// Two-stage Gram eigensolver. Construction tridiagonalizes the Gram matrix
/// and yields every singular value; eigenvectors are produced on request and
/// only for singular values above a threshold.
class GramEigensolver {
 public:
  explicit GramEigensolver(const ModeMatrix& m);

  bool right_side() const noexcept { return right_side_; }
  const std::vector<double>& singular_values() const noexcept { return sv_; }

  /// Spectrum whose vectors cover every singular value > tau (all of them when tau < 0).
  GramSpectrum spectrum_above(double tau) const;

 private:
  bool right_side_ = true;
  Eigen::MatrixXd gram_;
  Eigen::Tridiagonalization<Eigen::MatrixXd> tri_;
  Eigen::VectorXd diag_;
  Eigen::VectorXd sub_;
  std::vector<int> split_end_;       ///< 1-based last index of each unreduced block
  std::vector<int> block_;           ///< 1-based block of eig_[i]
  std::vector<double> eig_;          ///< eigenvalues, ascending within each block
  std::vector<std::size_t> order_;   ///< indices into eig_, descending
  std::vector<double> sv_;

  /// Leading k eigenvectors of the tridiagonal in z; cols[j] is the column
  /// of z that pairs with singular_values()[j].
  bool tridiagonal_vectors(Eigen::Index k, Eigen::MatrixXd& z, std::vector<std::size_t>& cols) const;
};

struct SvtResult {
  ModeMatrix matrix;
  double nuclear_norm = 0.0;  ///< nuclear norm of the shrunk matrix
  std::size_t rank = 0;       ///< singular values surviving the threshold
  bool bound_shortcut = false;  ///< every singular value was provably <= tau
};

/// Thin SVD from the Jacobi reference backend.
struct ThinSvd {
  Eigen::MatrixXd u;  ///< m x k
  std::vector<double> s;
  Eigen::MatrixXd v;  ///< n x k
};

inline constexpr int kJacobiMaxSweeps = 30;
inline constexpr double kJacobiTolerance = 1e-12;

/// Full spectrum with every eigenvector.
GramSpectrum gram_spectrum(const ModeMatrix& m);

ThinSvd jacobi_svd(const ModeMatrix& m, int max_sweeps = kJacobiMaxSweeps, double tol = kJacobiTolerance);

/// Descending singular values.
std::vector<double> singular_values(const ModeMatrix& m, SvdBackend backend = SvdBackend::gram_eigen);

double nuclear_norm(const ModeMatrix& m, SvdBackend backend = SvdBackend::gram_eigen);

/// Cheap upper bound on the largest singular value: min(‖A‖_F, sqrt(‖A‖_1 ‖A‖_inf)).
double spectral_norm_bound(const ModeMatrix& m) noexcept;

/// Singular value thresholding U diag(max(s - tau, 0)) Vᵀ.
SvtResult svt(const ModeMatrix& m, double tau, SvdBackend backend = SvdBackend::gram_eigen);

/// Same as svt() but reuses a spectrum already computed for `m`; its vectors
/// must cover every singular value above tau.
SvtResult svt_with_spectrum(const ModeMatrix& m, const GramSpectrum& spectrum, double tau);

}  // namespace tcomp
