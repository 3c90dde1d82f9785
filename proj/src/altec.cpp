#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <iterator>

#include <Eigen/Dense>

#include "tcomp/completion.hpp"
#include "tcomp/kernels.hpp"

namespace tcomp {

void ALTeCWeights::validate() const {
  if (channels == 0) throw ContractViolation("altec weights: channel count must be positive");
  if (coefficients.size() != channels * stride() || bias.size() != channels) {
    throw ContractViolation("altec weights: expected " + std::to_string(channels) + " blocks of " +
                            std::to_string(stride()) + " coefficients plus bias");
  }
  for (const double v : coefficients)
    if (!std::isfinite(v)) throw ContractViolation("altec weights: non-finite coefficient");
  for (const double v : bias)
    if (!std::isfinite(v)) throw ContractViolation("altec weights: non-finite bias");
  for (std::size_t c = 0; c < channels; ++c)
    if (row(c)[c] != 0.0) throw ContractViolation("altec weights: self-channel slot must be zero");
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
    throw ContractViolation("altec weights: ridge_lambda must be finite and >= 0");
  }
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sufficient statistics of the per-channel regression problems.
struct AltecMoments {
  double n = 0.0;
  Eigen::MatrixXd xx;  // Σ x xᵀ over collocated vectors
  Eigen::MatrixXd ux;  // row c: Σ up_c x
  Eigen::MatrixXd dx;  // row c: Σ down_c x
  Eigen::VectorXd sx, su, sd, uu, dd, ud;

  explicit AltecMoments(Eigen::Index c)
      : xx(Eigen::MatrixXd::Zero(c, c)),
        ux(Eigen::MatrixXd::Zero(c, c)),
        dx(Eigen::MatrixXd::Zero(c, c)),
        sx(Eigen::VectorXd::Zero(c)),
        su(Eigen::VectorXd::Zero(c)),
        sd(Eigen::VectorXd::Zero(c)),
        uu(Eigen::VectorXd::Zero(c)),
        dd(Eigen::VectorXd::Zero(c)),
        ud(Eigen::VectorXd::Zero(c)) {}

  void add(const FeatureTensor& t) {
    const Dims& d = t.dims();
    const auto rows = static_cast<Eigen::Index>(d.height * d.width);
    const auto c = static_cast<Eigen::Index>(d.channels);
    const RowMat x = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                         t.data().data(), rows, c)
                         .cast<double>();
    RowMat up = RowMat::Zero(rows, c);
    RowMat down = RowMat::Zero(rows, c);
    if (d.height > 1) {
      const auto w = static_cast<Eigen::Index>(d.width);
      for (std::size_t h = 0; h < d.height; ++h) {
        // Boundary rows substitute the one existing neighbour.
        const std::size_t above = h > 0 ? h - 1 : h + 1;
        const std::size_t below = h + 1 < d.height ? h + 1 : h - 1;
        const auto r = static_cast<Eigen::Index>(h) * w;
        up.middleRows(r, w) = x.middleRows(static_cast<Eigen::Index>(above) * w, w);
        down.middleRows(r, w) = x.middleRows(static_cast<Eigen::Index>(below) * w, w);
      }
    }
    n += static_cast<double>(rows);
    xx.noalias() += x.transpose() * x;
    ux.noalias() += up.transpose() * x;
    dx.noalias() += down.transpose() * x;
    sx += x.colwise().sum().transpose();
    su += up.colwise().sum().transpose();
    sd += down.colwise().sum().transpose();
    uu += up.array().square().colwise().sum().matrix().transpose();
    dd += down.array().square().colwise().sum().matrix().transpose();
    ud += (up.array() * down.array()).colwise().sum().matrix().transpose();
  }
};

/// Solves channel c's ridge problem; writes the C+2 coefficients and bias.
void solve_channel(const AltecMoments& m, std::size_t c, bool vertical, double lambda, std::span<double> coef,
                   double& bias) {
  const auto C = static_cast<Eigen::Index>(m.xx.rows());
  const auto cc = static_cast<Eigen::Index>(c);
  // Unknowns: other-channel slots, [up, down] when vertical, bias.
  std::vector<Eigen::Index> chans;
  for (Eigen::Index k = 0; k < C; ++k)
    if (k != cc) chans.push_back(k);
  const auto nc = static_cast<Eigen::Index>(chans.size());
  const Eigen::Index nv = vertical ? 2 : 0;
  const Eigen::Index dim = nc + nv + 1;
  const Eigen::Index iu = nc, id = nc + 1, ib = nc + nv;

  Eigen::MatrixXd g(dim, dim);
  Eigen::VectorXd rhs(dim);
  for (Eigen::Index i = 0; i < nc; ++i) {
    for (Eigen::Index j = 0; j < nc; ++j) g(i, j) = m.xx(chans[i], chans[j]);
    if (vertical) {
      g(i, iu) = g(iu, i) = m.ux(cc, chans[i]);
      g(i, id) = g(id, i) = m.dx(cc, chans[i]);
    }
    g(i, ib) = g(ib, i) = m.sx(chans[i]);
    rhs(i) = m.xx(cc, chans[i]);
  }
  if (vertical) {
    g(iu, iu) = m.uu(cc);
    g(id, id) = m.dd(cc);
    g(iu, id) = g(id, iu) = m.ud(cc);
    g(iu, ib) = g(ib, iu) = m.su(cc);
    g(id, ib) = g(ib, id) = m.sd(cc);
    rhs(iu) = m.ux(cc, cc);
    rhs(id) = m.dx(cc, cc);
  }
  g(ib, ib) = m.n;
  rhs(ib) = m.sx(cc);

  g /= m.n;
  rhs /= m.n;
  for (Eigen::Index i = 0; i < ib; ++i) g(i, i) += lambda;

  Eigen::VectorXd sol;
  if (lambda > 0.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) {
      throw NumericalFailure("altec: ridge normal equations not positive definite", static_cast<std::size_t>(dim),
                             static_cast<std::size_t>(dim));
    }
    sol = llt.solve(rhs);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12) {
      throw ContractViolation("altec: normal equations for channel " + std::to_string(c) +
                              " are rank deficient; ridge_lambda must be > 0");
    }
    sol = ldlt.solve(rhs);
  }
  if (!sol.allFinite()) {
    throw NumericalFailure("altec: non-finite solution", static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
  }

  std::fill(coef.begin(), coef.end(), 0.0);
  for (Eigen::Index i = 0; i < nc; ++i) coef[static_cast<std::size_t>(chans[i])] = sol(i);
  if (vertical) {
    coef[static_cast<std::size_t>(C)] = sol(iu);
    coef[static_cast<std::size_t>(C) + 1] = sol(id);
  }
  bias = sol(ib);
}

}  // namespace

ALTeCWeights train_altec(std::span<const FeatureTensor> clean, double ridge_lambda, Exec exec) {
  if (clean.empty()) throw ContractViolation("train_altec: need at least one training tensor");
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
    throw ContractViolation("train_altec: ridge_lambda must be finite and >= 0");
  }
  const std::size_t C = clean.front().dims().channels;
  bool vertical = false;
  for (const auto& t : clean) {
    if (t.dims().channels != C) {
      throw ContractViolation("train_altec: channel count mismatch (" + std::to_string(t.dims().channels) + " vs " +
                              std::to_string(C) + ")");
    }
    vertical = vertical || t.dims().height > 1;
  }

  AltecMoments m(static_cast<Eigen::Index>(C));
  for (const auto& t : clean) m.add(t);

  ALTeCWeights w;
  w.channels = C;
  w.coefficients.assign(C * w.stride(), 0.0);
  w.bias.assign(C, 0.0);
  w.ridge_lambda = ridge_lambda;

  std::exception_ptr err;
  const auto n = static_cast<long>(C);
#pragma omp parallel for schedule(dynamic, 4) if (exec == Exec::parallel)
  for (long c = 0; c < n; ++c) {
    try {
      const auto cu = static_cast<std::size_t>(c);
      solve_channel(m, cu, vertical, ridge_lambda, {w.coefficients.data() + cu * w.stride(), w.stride()}, w.bias[cu]);
    } catch (...) {
#pragma omp critical(tcomp_altec_err)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return w;
}

Completion complete_altec(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& weights,
                          Exec exec) {
  require_same_dims(damaged.dims(), mask.dims(), "complete_altec");
  if (weights.channels != damaged.dims().channels) {
    throw ContractViolation("complete_altec: weights trained for " + std::to_string(weights.channels) +
                            " channels, tensor has " + std::to_string(damaged.dims().channels));
  }
  Completion result;
  result.tensor = damaged;
  result.rows_predicted = kernels::altec_predict(damaged, mask, weights, result.tensor.data(), exec);
  result.iterations = 1;
  result.converged = true;
  return result;
}

// --- serialization ---

namespace {

constexpr char kMagic[4] = {'A', 'L', 'T', 'C'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::uint64_t raw(int n) {
    if (pos_ + static_cast<std::size_t>(n) > bytes_.size()) {
      throw IoError("altec weights: truncated at byte " + std::to_string(pos_));
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  double f64() { return std::bit_cast<double>(raw(8)); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_altec(const ALTeCWeights& w) {
  w.validate();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kAltecFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(w.channels));
  for (std::size_t c = 0; c < w.channels; ++c) {
    for (const double v : w.row(c)) put_f64(out, v);
    put_f64(out, w.bias[c]);
  }
  put_f64(out, w.ridge_lambda);
  return out;
}

ALTeCWeights deserialize_altec(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("altec weights: bad magic at byte 0 (expected \"ALTC\")");
  }
  Reader r(bytes.subspan(4));
  const auto version = r.u32();
  if (version != kAltecFormatVersion) {
    throw IoError("altec weights: unsupported version " + std::to_string(version) + " at byte 4");
  }
  ALTeCWeights w;
  w.channels = r.u32();
  if (w.channels == 0) throw IoError("altec weights: zero channel count at byte 8");
  const std::size_t need = w.channels * (w.stride() + 1) * 8 + 8;
  if (r.remaining() != need) {
    throw IoError("altec weights: payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                  std::to_string(need));
  }
  w.coefficients.reserve(w.channels * w.stride());
  w.bias.reserve(w.channels);
  for (std::size_t c = 0; c < w.channels; ++c) {
    for (std::size_t k = 0; k < w.stride(); ++k) w.coefficients.push_back(r.f64());
    w.bias.push_back(r.f64());
  }
  w.ridge_lambda = r.f64();
  w.validate();
  return w;
}

void save_altec(const ALTeCWeights& w, const std::filesystem::path& path) {
  const auto bytes = serialize_altec(w);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

ALTeCWeights load_altec(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return deserialize_altec(bytes);
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace tcomp
