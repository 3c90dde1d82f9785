#include <cmath>

#include "tcomp/kernels.hpp"

namespace tcomp::kernels {

namespace detail {

SvtResult run_svt_job(const SvtJob& job, SvdBackend backend) {
  if (job.spectrum != nullptr) return svt_with_spectrum(*job.input, *job.spectrum, job.tau);
  return svt(*job.input, job.tau, backend);
}

bool altec_predict_row(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& w,
                       std::size_t h, std::size_t c, std::span<float> out) {
  const Dims& d = damaged.dims();
  const std::size_t C = d.channels;
  const auto coef = w.row(c);
  const double up_w = coef[C];
  const double down_w = coef[C + 1];
  const auto x = damaged.data();
  const auto m = mask.flags();

  bool any = false;
  for (std::size_t col = 0; col < d.width; ++col) {
    const std::size_t base = offset(d, h, col, 0);
    if (m[base + c]) continue;
    any = true;

    double acc = w.bias[c];
    for (std::size_t k = 0; k < C; ++k) {
      acc += coef[k] * (m[base + k] ? static_cast<double>(x[base + k]) : 0.0);
    }

    const bool has_up = h > 0 && m[offset(d, h - 1, col, c)];
    const bool has_down = h + 1 < d.height && m[offset(d, h + 1, col, c)];
    if (has_up || has_down) {
      const double up = has_up ? x[offset(d, h - 1, col, c)] : x[offset(d, h + 1, col, c)];
      const double down = has_down ? x[offset(d, h + 1, col, c)] : up;
      acc += up_w * up + down_w * down;
    }
    out[base + c] = static_cast<float>(acc);
  }
  return any;
}

namespace {

bool fiber_observed(const ObservationMask& mask, std::size_t h, std::size_t c) { return mask.observed(h, 0, c); }

/// Gram sums for a structured update built from a subset of rows of `rowsrc`.
Eigen::MatrixXd outer_sum(const Eigen::MatrixXd& rowsrc, const std::vector<std::size_t>& rows) {
  const auto r = rowsrc.cols();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(r, r);
  for (const std::size_t i : rows) {
    const auto v = rowsrc.row(static_cast<Eigen::Index>(i));
    s.noalias() += v.transpose() * v;
  }
  return s;
}

bool solve_spd(Eigen::MatrixXd& g, Eigen::VectorXd& rhs, Eigen::VectorXd& sol) {
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() == Eigen::Success) {
    sol = llt.solve(rhs);
    if (sol.allFinite()) return true;
  }
  // Ridge fallback for singular or indefinite systems.
  const double scale = std::max(g.diagonal().cwiseAbs().maxCoeff(), 1.0);
  double eps = 1e-10 * scale;
  for (int attempt = 0; attempt < 30; ++attempt, eps *= 10.0) {
    Eigen::MatrixXd reg = g;
    reg.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> retry(reg);
    if (retry.info() == Eigen::Success) {
      sol = retry.solve(rhs);
      if (sol.allFinite()) return false;
    }
  }
  sol.setZero();
  return false;
}

}  // namespace

AlsModeContext prepare_als_mode(int mode, const AlsData& data, const CpFactors& f) {
  AlsModeContext ctx;
  ctx.mode = mode;
  if (!data.use_row_structure) return ctx;

  const Dims& d = data.values->dims();
  if (mode == 1 || mode == 3) {
    ctx.other_gram = f.b.transpose() * f.b;
  } else {
    const auto r = f.c.cols();
    ctx.slice_gram.resize(d.height);
    ctx.shared_system = Eigen::MatrixXd::Zero(r, r);
    for (std::size_t h = 0; h < d.height; ++h) {
      std::vector<std::size_t> obs;
      for (std::size_t c = 0; c < d.channels; ++c)
        if (fiber_observed(*data.mask, h, c)) obs.push_back(c);
      ctx.slice_gram[h] = outer_sum(f.c, obs);
      const auto ah = f.a.row(static_cast<Eigen::Index>(h));
      ctx.shared_system.noalias() += ((ah.transpose() * ah).array() * ctx.slice_gram[h].array()).matrix();
    }
  }
  return ctx;
}

bool als_solve_row(int mode, std::size_t i, const AlsData& data, const AlsModeContext& ctx, CpFactors& f) {
  const FeatureTensor& x = *data.values;
  const ObservationMask& mask = *data.mask;
  const Dims& d = x.dims();
  const Eigen::Index r = f.a.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(r, r);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
  Eigen::VectorXd p(r);

  if (data.use_row_structure) {
    if (mode == 1) {
      const std::size_t h = i;
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(r, r);
      Eigen::VectorXd t(r);
      for (std::size_t c = 0; c < d.channels; ++c) {
        if (!fiber_observed(mask, h, c)) continue;
        const auto cc = f.c.row(static_cast<Eigen::Index>(c));
        s.noalias() += cc.transpose() * cc;
        t.setZero();
        for (std::size_t w = 0; w < d.width; ++w) t += static_cast<double>(x(h, w, c)) * f.b.row(w).transpose();
        rhs += (cc.transpose().array() * t.array()).matrix();
      }
      g = (ctx.other_gram.array() * s.array()).matrix();
    } else if (mode == 2) {
      const std::size_t w = i;
      g = ctx.shared_system;
      Eigen::VectorXd t(r);
      for (std::size_t h = 0; h < d.height; ++h) {
        t.setZero();
        for (std::size_t c = 0; c < d.channels; ++c) {
          if (!fiber_observed(mask, h, c)) continue;
          t += static_cast<double>(x(h, w, c)) * f.c.row(c).transpose();
        }
        rhs += (f.a.row(h).transpose().array() * t.array()).matrix();
      }
    } else {
      const std::size_t c = i;
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(r, r);
      Eigen::VectorXd t(r);
      for (std::size_t h = 0; h < d.height; ++h) {
        if (!fiber_observed(mask, h, c)) continue;
        const auto ah = f.a.row(static_cast<Eigen::Index>(h));
        s.noalias() += ah.transpose() * ah;
        t.setZero();
        for (std::size_t w = 0; w < d.width; ++w) t += static_cast<double>(x(h, w, c)) * f.b.row(w).transpose();
        rhs += (ah.transpose().array() * t.array()).matrix();
      }
      g = (ctx.other_gram.array() * s.array()).matrix();
    }
  } else {
    // Generic masks: accumulate every observed entry of the slice.
    const std::size_t n1 = mode == 1 ? d.width : d.height;
    const std::size_t n2 = mode == 3 ? d.width : d.channels;
    const Eigen::MatrixXd& f1 = mode == 1 ? f.b : f.a;
    const Eigen::MatrixXd& f2 = mode == 3 ? f.b : f.c;
    for (std::size_t j = 0; j < n1; ++j) {
      for (std::size_t k = 0; k < n2; ++k) {
        std::size_t h = 0, w = 0, c = 0;
        if (mode == 1) { h = i; w = j; c = k; }
        else if (mode == 2) { h = j; w = i; c = k; }
        else { h = j; w = k; c = i; }
        if (!mask.observed(h, w, c)) continue;
        p = (f1.row(j).array() * f2.row(k).array()).transpose();
        g.noalias() += p * p.transpose();
        rhs += static_cast<double>(x(h, w, c)) * p;
      }
    }
  }

  Eigen::MatrixXd& factor = f.mode(mode);
  if (mode != 3 && data.smooth_lambda > 0.0) {
    const auto n = static_cast<std::size_t>(factor.rows());
    double neighbours = 0.0;
    if (i > 0) {
      rhs += data.smooth_lambda * factor.row(i - 1).transpose();
      neighbours += 1.0;
    }
    if (i + 1 < n) {
      rhs += data.smooth_lambda * factor.row(i + 1).transpose();
      neighbours += 1.0;
    }
    g.diagonal().array() += data.smooth_lambda * neighbours;
  }

  Eigen::VectorXd sol(r);
  const bool exact = solve_spd(g, rhs, sol);
  factor.row(static_cast<Eigen::Index>(i)) = sol.transpose();
  return exact;
}

void cp_reconstruct_row(const CpFactors& f, const Dims& dims, std::size_t h, std::span<double> out) {
  const Eigen::Index r = f.a.cols();
  Eigen::VectorXd coef(r);
  for (std::size_t w = 0; w < dims.width; ++w) {
    coef = (f.a.row(h).array() * f.b.row(w).array()).transpose();
    Eigen::Map<Eigen::VectorXd> dst(out.data() + offset(dims, h, w, 0), static_cast<Eigen::Index>(dims.channels));
    dst.noalias() = f.c * coef;
  }
}

}  // namespace detail

namespace serial {

std::vector<SvtResult> svt_modes(std::span<const SvtJob> jobs, SvdBackend backend) {
  std::vector<SvtResult> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(detail::run_svt_job(job, backend));
  return out;
}

std::size_t altec_predict(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& w,
                          std::span<float> out) {
  const Dims& d = damaged.dims();
  std::size_t rows = 0;
  for (std::size_t h = 0; h < d.height; ++h)
    for (std::size_t c = 0; c < d.channels; ++c)
      if (detail::altec_predict_row(damaged, mask, w, h, c, out)) ++rows;
  return rows;
}

AlsStats als_update_mode(int mode, const AlsData& data, CpFactors& f) {
  AlsStats stats;
  const auto ctx = detail::prepare_als_mode(mode, data, f);
  const auto n = static_cast<std::size_t>(f.mode(mode).rows());
  if (mode == 3) {
    for (std::size_t i = 0; i < n; ++i)
      if (!detail::als_solve_row(mode, i, data, ctx, f)) ++stats.ridge_fallbacks;
    return stats;
  }
  for (std::size_t parity = 0; parity < 2; ++parity)
    for (std::size_t i = parity; i < n; i += 2)
      if (!detail::als_solve_row(mode, i, data, ctx, f)) ++stats.ridge_fallbacks;
  return stats;
}

void cp_reconstruct(const CpFactors& f, const Dims& dims, std::span<double> out) {
  for (std::size_t h = 0; h < dims.height; ++h) detail::cp_reconstruct_row(f, dims, h, out);
}

}  // namespace serial

std::vector<SvtResult> svt_modes(std::span<const SvtJob> jobs, SvdBackend backend, Exec exec) {
  return exec == Exec::serial ? serial::svt_modes(jobs, backend) : omp::svt_modes(jobs, backend);
}

std::size_t altec_predict(const FeatureTensor& damaged, const ObservationMask& mask, const ALTeCWeights& w,
                          std::span<float> out, Exec exec) {
  return exec == Exec::serial ? serial::altec_predict(damaged, mask, w, out)
                              : omp::altec_predict(damaged, mask, w, out);
}

AlsStats als_update_mode(int mode, const AlsData& data, CpFactors& f, Exec exec) {
  return exec == Exec::serial ? serial::als_update_mode(mode, data, f) : omp::als_update_mode(mode, data, f);
}

void cp_reconstruct(const CpFactors& f, const Dims& dims, std::span<double> out, Exec exec) {
  if (exec == Exec::serial) {
    serial::cp_reconstruct(f, dims, out);
  } else {
    omp::cp_reconstruct(f, dims, out);
  }
}

}  // namespace tcomp::kernels
