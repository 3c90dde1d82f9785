#include "oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>

namespace oracle {

Mat from_mode_matrix(const tcomp::ModeMatrix& m) {
  Mat out(m.rows, m.cols);
  out.a = m.data;
  return out;
}

std::vector<double> jacobi_eigen(Mat s, Mat& vectors) {
  const std::size_t n = s.rows;
  vectors = Mat(n, n);
  for (std::size_t i = 0; i < n; ++i) vectors(i, i) = 1.0;

  for (int iter = 0; iter < 10000; ++iter) {
    std::size_t p = 0, q = 1;
    double big = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += s(i, i) * s(i, i);
      for (std::size_t j = i + 1; j < n; ++j) {
        if (std::abs(s(i, j)) > big) {
          big = std::abs(s(i, j));
          p = i;
          q = j;
        }
      }
    }
    if (n < 2 || big <= 1e-300 || big * big <= 1e-34 * diag) break;

    const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
    const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double sn = t * c;
    for (std::size_t k = 0; k < n; ++k) {
      const double skp = s(k, p), skq = s(k, q);
      s(k, p) = c * skp - sn * skq;
      s(k, q) = sn * skp + c * skq;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double spk = s(p, k), sqk = s(q, k);
      s(p, k) = c * spk - sn * sqk;
      s(q, k) = sn * spk + c * sqk;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double vkp = vectors(k, p), vkq = vectors(k, q);
      vectors(k, p) = c * vkp - sn * vkq;
      vectors(k, q) = sn * vkp + c * vkq;
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = s(i, i);
  return eig;
}

Mat svt(const Mat& m, double tau) {
  Mat gram(m.cols, m.cols);
  for (std::size_t i = 0; i < m.cols; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      for (std::size_t r = 0; r < m.rows; ++r) gram(i, j) += m(r, i) * m(r, j);

  Mat v;
  const auto eig = jacobi_eigen(gram, v);
  Mat out(m.rows, m.cols);
  for (std::size_t k = 0; k < eig.size(); ++k) {
    const double sigma = std::sqrt(std::max(eig[k], 0.0));
    if (sigma <= tau || sigma == 0.0) continue;
    const double scale = (sigma - tau) / sigma;
    for (std::size_t r = 0; r < m.rows; ++r) {
      double av = 0.0;
      for (std::size_t j = 0; j < m.cols; ++j) av += m(r, j) * v(j, k);
      for (std::size_t j = 0; j < m.cols; ++j) out(r, j) += scale * av * v(j, k);
    }
  }
  return out;
}

double frobenius(const Mat& m) {
  double s = 0.0;
  for (const double x : m.a) s += x * x;
  return std::sqrt(s);
}

double frobenius_diff(const Mat& x, const Mat& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i) s += (x.a[i] - y.a[i]) * (x.a[i] - y.a[i]);
  return std::sqrt(s);
}

double student_t_two_sided_p(double t, double dof) {
  const double logc = std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2) - 0.5 * std::log(dof * std::numbers::pi);
  auto density = [&](double x) { return std::exp(logc - (dof + 1) / 2 * std::log1p(x * x / dof)); };
  const double b = std::abs(t);
  const int n = 20000;
  const double h = b / n;
  double s = density(0.0) + density(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * density(i * h);
  return 1.0 - 2.0 * (s * h / 3.0);
}

Mat unfold(const tcomp::FeatureTensor& t, int mode) {
  const auto [H, W, C] = t.dims();
  Mat out;
  if (mode == 1) out = Mat(H, W * C);
  if (mode == 2) out = Mat(W, H * C);
  if (mode == 3) out = Mat(C, H * W);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t w = 0; w < W; ++w)
      for (std::size_t c = 0; c < C; ++c) {
        const double x = t(h, w, c);
        if (mode == 1) out(h, w * C + c) = x;
        if (mode == 2) out(w, h * C + c) = x;
        if (mode == 3) out(c, h * W + w) = x;
      }
  return out;
}

tcomp::FeatureTensor rank1_tensor(const tcomp::Dims& d, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  std::vector<double> a(d.height), b(d.width), c(d.channels);
  for (auto& x : a) x = u(g);
  for (auto& x : b) x = u(g);
  for (auto& x : c) x = u(g);
  tcomp::FeatureTensor t(d);
  for (std::size_t h = 0; h < d.height; ++h)
    for (std::size_t w = 0; w < d.width; ++w)
      for (std::size_t k = 0; k < d.channels; ++k) t(h, w, k) = static_cast<float>(a[h] * b[w] * c[k]);
  return t;
}

tcomp::ObservationMask lost_rows_mask(const tcomp::Dims& d, std::size_t lost_rows, std::uint64_t seed) {
  std::vector<std::size_t> rows(d.height * d.channels);
  lost_rows = std::min(lost_rows, rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::mt19937_64 g(seed);
  for (std::size_t i = 0; i < lost_rows; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
    std::swap(rows[i], rows[pick(g)]);
  }
  auto mask = tcomp::ObservationMask::all_observed(d);
  for (std::size_t i = 0; i < lost_rows; ++i) {
    const std::size_t c = rows[i] / d.height, h = rows[i] % d.height;
    for (std::size_t w = 0; w < d.width; ++w) mask.set(h, w, c, false);
  }
  return mask;
}

tcomp::FeatureTensor uniform_tensor(const tcomp::Dims& d, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  tcomp::FeatureTensor t(d);
  for (auto& x : t.data()) x = static_cast<float>(u(g));
  return t;
}

double missing_relative_mse(const tcomp::FeatureTensor& x, const tcomp::FeatureTensor& ref,
                            const tcomp::ObservationMask& mask) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (mask.observed(i)) continue;
    const double e = static_cast<double>(x.data()[i]) - ref.data()[i];
    num += e * e;
    den += static_cast<double>(ref.data()[i]) * ref.data()[i];
  }
  return den > 0 ? num / den : 0.0;
}

bool observed_bitwise_equal(const tcomp::FeatureTensor& out, const tcomp::FeatureTensor& in,
                            const tcomp::ObservationMask& mask) {
  if (!(out.dims() == in.dims())) return false;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!mask.observed(i)) continue;
    if (std::bit_cast<std::uint32_t>(out.data()[i]) != std::bit_cast<std::uint32_t>(in.data()[i])) return false;
  }
  return true;
}

}  // namespace oracle
