#include "tcomp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "tcomp/errors.hpp"

namespace tcomp {

SampleStats sample_stats(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("sample_stats: empty sample");
  SampleStats s;
  s.n = values.size();
  double sum = 0.0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ContractViolation("incomplete beta: a and b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ContractViolation("incomplete beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw ContractViolation("student t: dof must be > 0");
  if (std::isinf(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return std::clamp(regularized_incomplete_beta(0.5 * dof, 0.5, x), 0.0, 1.0);
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ContractViolation("welch_t_test: each sample needs at least 2 values");
  const auto sa = sample_stats(a);
  const auto sb = sample_stats(b);
  const double na = static_cast<double>(sa.n), nb = static_cast<double>(sb.n);
  const double va = sa.stddev * sa.stddev / na;
  const double vb = sb.stddev * sb.stddev / nb;
  const double se2 = va + vb;

  WelchResult r;
  if (se2 == 0.0) {
    r.dof = na + nb - 2.0;
    if (sa.mean == sb.mean) {
      r.t_stat = 0.0;
      r.p_value = 1.0;
    } else {
      r.t_stat = std::copysign(std::numeric_limits<double>::infinity(), sa.mean - sb.mean);
      r.p_value = 0.0;
      r.degenerate_variance = true;
    }
  } else {
    r.t_stat = (sa.mean - sb.mean) / std::sqrt(se2);
    r.dof = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p_value = student_t_two_sided_p(r.t_stat, r.dof);
  }
  r.significant_at_95 = r.p_value < 0.05;
  return r;
}

std::optional<std::string> declare_winner(std::span<const MethodSamples> methods, double alpha) {
  if (methods.size() < 2) throw ContractViolation("declare_winner: need at least two methods");
  std::vector<double> means;
  for (const auto& m : methods) {
    if (m.samples.size() < 2) throw ContractViolation("declare_winner: method '" + m.method + "' lacks samples");
    means.push_back(sample_stats(m.samples).mean);
  }
  const auto top = static_cast<std::size_t>(std::max_element(means.begin(), means.end()) - means.begin());
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (i == top) continue;
    if (means[i] == means[top]) return std::nullopt;
    if (!(welch_t_test(methods[top].samples, methods[i].samples).p_value < alpha)) return std::nullopt;
  }
  return methods[top].method;
}

std::string render_cell(double mean, double sigma) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f\\%% / %.2f\\%%", mean, sigma);
  return buf;
}

}  // namespace tcomp
