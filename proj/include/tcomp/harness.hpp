#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcomp/channel.hpp"
#include "tcomp/completion.hpp"
#include "tcomp/dataset.hpp"
#include "tcomp/stats.hpp"

namespace tcomp {

enum class Protocol { default_budget, speed_matched };

std::string to_string(Protocol p);
Protocol parse_protocol(std::string_view s);

struct ExperimentSpec {
  std::vector<MethodConfig> methods;
  std::vector<double> p_loss_grid{0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
  std::size_t trials_per_tensor = 100;
  std::uint64_t master_seed = 0;
  std::vector<Protocol> protocols{Protocol::default_budget};
  PacketizationScheme scheme;

  void validate() const;
};

struct TrialRecord {
  std::string tensor_id;
  std::size_t tensor_index = 0;
  std::string method;
  Protocol protocol = Protocol::default_budget;
  double p_loss = 0.0;
  std::size_t trial_index = 0;
  double missing_mse = 0.0;     ///< completed vs clean over lost entries
  double nc_missing_mse = 0.0;  ///< zero-fill vs clean over lost entries
  std::size_t observed_count = 0;
  std::size_t missing_count = 0;
  double wall_time_ms = 0.0;
  int iterations = 0;
  std::uint64_t mask_digest = 0;
  bool failed = false;
  std::string error;
  std::optional<bool> correct_nl;
  std::optional<bool> correct_nc;
  std::optional<bool> correct_tc;
  std::string export_path;     ///< completed tensor, relative to the export dir
  std::string nc_export_path;  ///< zero-filled tensor, relative to the export dir
};

/// Speed-matching outcome for one method.
struct CalibratedBudget {
  std::string method;
  IterationBudget budget;
  double t_ref_ms = 0.0;
  double t_iter_ms = 0.0;
};

struct RunOptions {
  /// Reference weights for speed matching (ALTeC).
  std::shared_ptr<const ALTeCWeights> reference;
  /// When set, completed and zero-filled tensors are written under this dir.
  std::optional<std::filesystem::path> export_dir;
  /// Loss rate used to damage the calibration probe.
  double calibration_p_loss = 0.3;
  /// Worker threads for trial cells; 0 = OpenMP default.
  int threads = 0;
};

struct ExperimentRun {
  std::vector<TrialRecord> records;
  std::vector<CalibratedBudget> budgets;
  double peak = 0.0;  ///< max |x| over the clean tensor set, PSNR reference
};

ExperimentRun run_experiment(const ExperimentSpec& spec, const TensorSet& tensors, const RunOptions& options = {});

/// Worker count from TM_THREADS, or 0 when unset.
int threads_from_env();

// --- Speed matching ---

/// max(1, floor(t_ref / t_iter)); t_iter <= 0 is a CalibrationError.
IterationBudget budget_from_timings(double t_ref_ms, double t_iter_ms);

struct CalibrationOptions {
  int probes = 5;
  /// Also time full k-iteration runs and shrink k while their median exceeds t_ref.
  bool verify = true;
};

/// Single-threaded calibration of `target` against ALTeC on a damaged probe.
CalibratedBudget calibrate_speed_match(const ALTeCWeights& reference, const MethodConfig& target,
                                       const FeatureTensor& damaged, const ObservationMask& mask,
                                       const CalibrationOptions& options = {});

/// Median of `runs` timings of `f`, in milliseconds.
double median_time_ms(const std::function<void()>& f, int runs);

// --- Summaries ---

enum class MetricMode { psnr, accuracy };

std::string to_string(MetricMode m);

/// One Table row group: per (method, p_loss, protocol).
struct AccuracySummary {
  std::string method;
  double p_loss = 0.0;
  Protocol protocol = Protocol::default_budget;
  MetricMode mode = MetricMode::psnr;
  double mu_nl = 0.0, mu_nc = 0.0, mu_tc = 0.0;
  double sigma_nc = 0.0, sigma_tc = 0.0;
  std::size_t n_samples = 0;
  std::size_t failed_trials = 0;
  std::vector<double> nc_samples;  ///< one per trial index, ascending
  std::vector<double> tc_samples;
};

/// PSNR of a pooled missing-entry MSE, clamped to [0, 100] dB (100 for a
/// lossless trial).
double psnr_db(double mse, double peak);

/// Aggregates each trial over the tensor set (the statistical unit). In PSNR
/// mode the metric is the PSNR of the pooled missing-entry MSE; in accuracy
/// mode it is the percentage of correct flags. Records must share method,
/// p_loss and protocol; an empty group is a ContractViolation. Trials with
/// any failed record are excluded and counted.
AccuracySummary summarize(std::span<const TrialRecord> records, MetricMode mode, double peak);

struct PairwiseWelch {
  double p_loss = 0.0;
  Protocol protocol = Protocol::default_budget;
  std::string a, b;
  WelchResult result;
};

struct WinnerDeclaration {
  double p_loss = 0.0;
  Protocol protocol = Protocol::default_budget;
  std::optional<std::string> winner;
};

struct Analysis {
  std::vector<AccuracySummary> summaries;
  std::vector<PairwiseWelch> welch;
  std::vector<WinnerDeclaration> winners;
  std::size_t failures = 0;
};

/// Groups records, summarises each group and compares the completion
/// methods (excluding "none") pairwise at every (p_loss, protocol).
Analysis analyze(std::span<const TrialRecord> records, MetricMode mode, double peak);

}  // namespace tcomp
