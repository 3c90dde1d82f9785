#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tcomp {

struct SampleStats {
  double mean = 0.0;
  double stddev = 0.0;  ///< n - 1 denominator; 0 for a single sample
  std::size_t n = 0;
};

SampleStats sample_stats(std::span<const double> values);

/// I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

struct WelchResult {
  double t_stat = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
  bool significant_at_95 = false;
  bool degenerate_variance = false;  ///< both samples constant with different means
};

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct MethodSamples {
  std::string method;
  std::vector<double> samples;
};

/// The method with the highest mean, if its Welch test against every other
/// method rejects at `alpha`; otherwise nullopt. Ties at the top give nullopt.
std::optional<std::string> declare_winner(std::span<const MethodSamples> methods, double alpha = 0.05);

/// Table cell "mean\% / sigma\%" with two decimals.
std::string render_cell(double mean, double sigma);

}  // namespace tcomp
