#include "tcomp/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <lapacke.h>

#include "tcomp/rng.hpp"

static_assert(sizeof(lapack_int) == sizeof(int), "GramEigensolver stores LAPACK indices as int");

namespace tcomp {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorOut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

RowMajorMap view(const ModeMatrix& m) {
  return RowMajorMap(m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
}

ModeMatrix zeros_like(const ModeMatrix& m) { return {m.mode, m.rows, m.cols, std::vector<double>(m.data.size(), 0.0)}; }

void check_matrix(const ModeMatrix& m, double tau) {
  if (m.rows == 0 || m.cols == 0 || m.data.size() != m.rows * m.cols) {
    throw ContractViolation("svt: malformed matrix");
  }
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ContractViolation("svt: threshold must be finite and >= 0");
}

}  // namespace

double spectral_norm_bound(const ModeMatrix& m) noexcept {
  double fro2 = 0.0;
  double max_row = 0.0;
  std::vector<double> col_sums(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double row = 0.0;
    const double* p = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double a = std::abs(p[c]);
      fro2 += a * a;
      row += a;
      col_sums[c] += a;
    }
    max_row = std::max(max_row, row);
  }
  const double max_col = col_sums.empty() ? 0.0 : *std::max_element(col_sums.begin(), col_sums.end());
  return std::min(std::sqrt(fro2), std::sqrt(max_row * max_col));
}

GramEigensolver::GramEigensolver(const ModeMatrix& m) {
  const auto a = view(m);
  right_side_ = m.cols <= m.rows;
  const Eigen::Index n = static_cast<Eigen::Index>(right_side_ ? m.cols : m.rows);

  gram_ = Eigen::MatrixXd::Zero(n, n);
  if (right_side_) {
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  } else {
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(a);
  }
  if (!gram_.allFinite()) throw NumericalFailure("non-finite Gram matrix", m.rows, m.cols);

  // Reduction and back-transformation stay in Eigen: the OpenBLAS build this
  // was tested against returns wrong dsytrd/dormtr results from its AVX-512
  // kernels once n exceeds ~180.
  tri_.compute(gram_);
  diag_ = tri_.diagonal();
  sub_ = Eigen::VectorXd::Zero(n);
  if (n > 1) sub_.head(n - 1) = tri_.subDiagonal();

  // Split where the off-diagonal is negligible (same test as dstebz) so that
  // inverse iteration later sees unreduced blocks.
  const double ulp = LAPACKE_dlamch('P');
  const double safemin = LAPACKE_dlamch('S');
  split_end_.clear();
  for (Eigen::Index j = 1; j < n; ++j) {
    const double e2 = sub_(j - 1) * sub_(j - 1);
    if (std::abs(diag_(j) * diag_(j - 1)) * ulp * ulp + safemin > e2) split_end_.push_back(static_cast<lapack_int>(j));
  }
  split_end_.push_back(static_cast<lapack_int>(n));

  eig_.resize(static_cast<std::size_t>(n));
  block_.resize(static_cast<std::size_t>(n));
  lapack_int start = 0;
  for (std::size_t blk = 0; blk < split_end_.size(); ++blk) {
    const lapack_int len = split_end_[blk] - start;
    std::vector<double> d(diag_.data() + start, diag_.data() + start + len);
    std::vector<double> e(static_cast<std::size_t>(len), 0.0);
    for (lapack_int i = 0; i + 1 < len; ++i) e[static_cast<std::size_t>(i)] = sub_(start + i);
    if (LAPACKE_dsterf(len, d.data(), e.data()) != 0) {
      throw NumericalFailure("tridiagonal eigenvalue iteration did not converge", m.rows, m.cols);
    }
    std::copy(d.begin(), d.end(), eig_.begin() + start);
    std::fill(block_.begin() + start, block_.begin() + start + len, static_cast<lapack_int>(blk + 1));
    start = split_end_[blk];
  }

  order_.resize(static_cast<std::size_t>(n));
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t x, std::size_t y) { return eig_[x] > eig_[y]; });
  sv_.resize(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < sv_.size(); ++j) sv_[j] = std::sqrt(std::max(eig_[order_[j]], 0.0));
}

bool GramEigensolver::tridiagonal_vectors(Eigen::Index k, Eigen::MatrixXd& z, std::vector<std::size_t>& cols) const {
  const Eigen::Index n = diag_.size();
  const auto nl = static_cast<lapack_int>(n);
  const auto kl = static_cast<lapack_int>(k);

  if (4 * k <= n) {
    // Few leading pairs: inverse iteration on the eigenvalues already known.
    // dstein wants them grouped by block, ascending within a block.
    cols.assign(order_.begin(), order_.begin() + k);
    std::sort(cols.begin(), cols.end());
    std::vector<double> w(cols.size());
    std::vector<lapack_int> blocks(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) {
      w[i] = eig_[cols[i]];
      blocks[i] = block_[cols[i]];
    }
    std::vector<lapack_int> isplit(split_end_.begin(), split_end_.end());
    isplit.resize(static_cast<std::size_t>(n), 0);
    std::vector<lapack_int> ifail(static_cast<std::size_t>(k));
    z.resize(n, k);
    const int info = LAPACKE_dstein(LAPACK_COL_MAJOR, nl, diag_.data(), sub_.data(), kl, w.data(), blocks.data(),
                                    isplit.data(), z.data(), nl, ifail.data());
    // Inverse iteration can lose orthogonality inside tight clusters.
    if (info == 0 && (z.transpose() * z - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10) {
      // Position of each descending-order eigenvalue among dstein's columns.
      std::vector<std::size_t> pos(static_cast<std::size_t>(k));
      for (std::size_t j = 0; j < pos.size(); ++j) {
        pos[j] = static_cast<std::size_t>(std::lower_bound(cols.begin(), cols.end(), order_[j]) - cols.begin());
      }
      cols = std::move(pos);
      return true;
    }
  }

  // MRRR on the whole tridiagonal; it recomputes the eigenvalues itself and
  // returns them ascending, so column k-1-j pairs with singular value j.
  Eigen::VectorXd d = diag_;
  Eigen::VectorXd e = sub_;
  Eigen::VectorXd w(n);
  z.resize(n, k);
  std::vector<lapack_int> support(static_cast<std::size_t>(2 * k));
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  const int info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', nl, d.data(), e.data(), 0.0, 0.0, nl - kl + 1, nl,
                                  &found, w.data(), z.data(), nl, kl, support.data(), &tryrac);
  if (info != 0 || found != kl) return false;
  cols.resize(static_cast<std::size_t>(k));
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = static_cast<std::size_t>(k) - 1 - j;
  return true;
}

GramSpectrum GramEigensolver::spectrum_above(double tau) const {
  const Eigen::Index n = diag_.size();
  GramSpectrum spec{right_side_, sv_, {}};
  Eigen::Index k = n;
  if (tau >= 0.0) {
    k = static_cast<Eigen::Index>(std::count_if(sv_.begin(), sv_.end(), [tau](double s) { return s > tau; }));
  }
  spec.vectors.resize(n, k);
  if (k == 0) return spec;

  Eigen::MatrixXd z;
  std::vector<std::size_t> cols;
  if (tridiagonal_vectors(k, z, cols)) {
    const Eigen::MatrixXd q = tri_.matrixQ() * z;
    for (Eigen::Index j = 0; j < k; ++j) spec.vectors.col(j) = q.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
    // O(nk) probe: an orthonormal basis preserves the norm of any combination.
    Rng rng(0x5eedULL + static_cast<std::uint64_t>(k));
    Eigen::VectorXd x(k);
    for (Eigen::Index j = 0; j < k; ++j) x(j) = rng.normal();
    const double drift = std::abs((spec.vectors * x).squaredNorm() / x.squaredNorm() - 1.0);
    if (drift < 1e-8) return spec;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram_, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("symmetric eigensolver did not converge", gram_.rows(), gram_.cols());
  }
  for (Eigen::Index j = 0; j < k; ++j) spec.vectors.col(j) = solver.eigenvectors().col(n - 1 - j);
  return spec;
}

GramSpectrum gram_spectrum(const ModeMatrix& m) { return GramEigensolver(m).spectrum_above(-1.0); }

ThinSvd jacobi_svd(const ModeMatrix& m, int max_sweeps, double tol) {
  const auto a = view(m);
  const bool transposed = m.cols > m.rows;
  Eigen::MatrixXd work = transposed ? Eigen::MatrixXd(a.transpose()) : Eigen::MatrixXd(a);
  const Eigen::Index rows = work.rows();
  const Eigen::Index n = work.cols();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index i = 0; i < n - 1; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double alpha = work.col(i).squaredNorm();
        const double beta = work.col(j).squaredNorm();
        const double gamma = work.col(i).dot(work.col(j));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index k = 0; k < rows; ++k) {
          const double wi = work(k, i);
          const double wj = work(k, j);
          work(k, i) = c * wi - s * wj;
          work(k, j) = s * wi + c * wj;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vi = v(k, i);
          const double vj = v(k, j);
          v(k, i) = c * vi - s * vj;
          v(k, j) = s * vi + c * vj;
        }
      }
    }
  }
  if (!converged) {
    throw NumericalFailure("one-sided Jacobi SVD did not converge within " + std::to_string(max_sweeps) + " sweeps",
                           m.rows, m.cols);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd norms = work.colwise().norm();
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return norms(x) > norms(y); });

  ThinSvd out;
  out.u.resize(rows, n);
  out.v.resize(n, n);
  out.s.resize(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    const double sigma = norms(src);
    out.s[static_cast<std::size_t>(j)] = sigma;
    out.u.col(j) = sigma > 0.0 ? Eigen::VectorXd(work.col(src) / sigma) : Eigen::VectorXd::Zero(rows);
    out.v.col(j) = v.col(src);
  }
  if (transposed) std::swap(out.u, out.v);
  return out;
}

std::vector<double> singular_values(const ModeMatrix& m, SvdBackend backend) {
  if (backend == SvdBackend::jacobi) return jacobi_svd(m).s;
  return GramEigensolver(m).singular_values();
}

double nuclear_norm(const ModeMatrix& m, SvdBackend backend) {
  const auto s = singular_values(m, backend);
  return std::accumulate(s.begin(), s.end(), 0.0);
}

SvtResult svt_with_spectrum(const ModeMatrix& m, const GramSpectrum& spec, double tau) {
  check_matrix(m, tau);
  const auto a = view(m);
  SvtResult out{zeros_like(m), 0.0, 0, false};

  std::vector<Eigen::Index> keep;
  for (std::size_t j = 0; j < spec.singular_values.size(); ++j) {
    if (spec.singular_values[j] > tau) keep.push_back(static_cast<Eigen::Index>(j));
  }
  if (keep.empty()) return out;
  if (static_cast<Eigen::Index>(keep.size()) > spec.vectors.cols()) {
    throw ContractViolation("svt: spectrum lacks eigenvectors for singular values above tau");
  }

  const Eigen::Index k = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd basis(spec.vectors.rows(), k);
  Eigen::VectorXd shrink(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double sigma = spec.singular_values[static_cast<std::size_t>(keep[static_cast<std::size_t>(j)])];
    basis.col(j) = spec.vectors.col(keep[static_cast<std::size_t>(j)]);
    shrink(j) = (sigma - tau) / sigma;
    out.nuclear_norm += sigma - tau;
  }
  out.rank = keep.size();

  RowMajorOut result(out.matrix.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  if (spec.right_side) {
    // A V_k diag(f) V_kᵀ
    const Eigen::MatrixXd av = a * basis;
    result.noalias() = (av * shrink.asDiagonal()) * basis.transpose();
  } else {
    // U_k diag(f) U_kᵀ A
    const Eigen::MatrixXd ua = basis.transpose() * a;
    result.noalias() = (basis * shrink.asDiagonal()) * ua;
  }
  return out;
}

SvtResult svt(const ModeMatrix& m, double tau, SvdBackend backend) {
  check_matrix(m, tau);
  if (spectral_norm_bound(m) <= tau) {
    SvtResult out{zeros_like(m), 0.0, 0, true};
    return out;
  }

  if (backend == SvdBackend::gram_eigen) return svt_with_spectrum(m, GramEigensolver(m).spectrum_above(tau), tau);

  const ThinSvd svd = jacobi_svd(m);
  SvtResult out{zeros_like(m), 0.0, 0, false};
  RowMajorOut result(out.matrix.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  for (std::size_t j = 0; j < svd.s.size(); ++j) {
    const double shrunk = svd.s[j] - tau;
    if (shrunk <= 0.0) continue;
    const auto col = static_cast<Eigen::Index>(j);
    result.noalias() += shrunk * svd.u.col(col) * svd.v.col(col).transpose();
    out.nuclear_norm += shrunk;
    ++out.rank;
  }
  return out;
}

}  // namespace tcomp
