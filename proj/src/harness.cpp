#include "tcomp/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <tuple>

#include "tcomp/npy.hpp"
#include "tcomp/rng.hpp"

namespace tcomp {

std::string to_string(Protocol p) { return p == Protocol::default_budget ? "default" : "speed-matched"; }

Protocol parse_protocol(std::string_view s) {
  if (s == "default") return Protocol::default_budget;
  if (s == "speed-matched" || s == "speed_matched") return Protocol::speed_matched;
  throw ContractViolation("unknown protocol '" + std::string(s) + "' (expected default or speed-matched)");
}

std::string to_string(MetricMode m) { return m == MetricMode::psnr ? "psnr" : "accuracy"; }

void ExperimentSpec::validate() const {
  if (methods.empty()) throw ContractViolation("experiment: no methods");
  if (p_loss_grid.empty()) throw ContractViolation("experiment: empty p_loss grid");
  for (const double p : p_loss_grid) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("experiment: p_loss must lie in [0, 1]");
  }
  if (trials_per_tensor < 1) throw ContractViolation("experiment: trials must be >= 1");
  if (protocols.empty()) throw ContractViolation("experiment: no protocol");
  if (scheme.rows_per_packet < 1) throw ContractViolation("experiment: rows_per_packet must be >= 1");
}

int threads_from_env() {
  const char* v = std::getenv("TM_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ContractViolation("TM_THREADS must be a positive integer, got '" + std::string(v) + "'");
  return static_cast<int>(n);
}

// --- speed matching ---

double median_time_ms(const std::function<void()>& f, int runs) {
  if (runs < 1) throw ContractViolation("median_time_ms: runs must be >= 1");
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(runs));
  for (int i = 0; i < runs; ++i) {
    const auto start = std::chrono::steady_clock::now();
    f();
    const auto stop = std::chrono::steady_clock::now();
    t.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  std::sort(t.begin(), t.end());
  const std::size_t n = t.size();
  return n % 2 == 1 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
}

IterationBudget budget_from_timings(double t_ref_ms, double t_iter_ms) {
  if (!(t_iter_ms > 0.0)) {
    throw CalibrationError("per-iteration time measured as zero; use a larger probe tensor");
  }
  if (!(t_ref_ms >= 0.0)) throw CalibrationError("reference time must be >= 0");
  const double k = std::floor(t_ref_ms / t_iter_ms);
  return IterationBudget::fixed(static_cast<int>(std::clamp(k, 1.0, 1e9)));
}

CalibratedBudget calibrate_speed_match(const ALTeCWeights& reference, const MethodConfig& target,
                                       const FeatureTensor& damaged, const ObservationMask& mask,
                                       const CalibrationOptions& options) {
  if (options.probes < 5) throw ContractViolation("calibration needs at least 5 probes");
  if (!is_iterative(target)) throw ContractViolation("calibration target must be an iterative method");

  CalibratedBudget out;
  out.method = method_name(target);
  auto run_ref = [&] { (void)complete_altec(damaged, mask, reference, Exec::serial); };
  auto run_k = [&](int k) { (void)complete(target, damaged, mask, IterationBudget::fixed(k), Exec::serial); };

  run_ref();
  run_k(1);
  out.t_ref_ms = median_time_ms(run_ref, options.probes);
  out.t_iter_ms = median_time_ms([&] { run_k(1); }, options.probes);
  out.budget = budget_from_timings(out.t_ref_ms, out.t_iter_ms);

  // Per-iteration cost is not constant (HaLRTC skips early SVDs), so check
  // the whole budget against the reference.
  int k = out.budget.iters;
  while (options.verify && k > 1) {
    const double t_k = median_time_ms([&] { run_k(k); }, options.probes);
    if (t_k <= out.t_ref_ms) break;
    const int scaled = static_cast<int>(std::floor(k * out.t_ref_ms / t_k));
    k = std::max(1, std::min(k - 1, scaled));
  }
  out.budget = IterationBudget::fixed(k);
  return out;
}

// --- experiment ---

namespace {

double clean_peak(const TensorSet& tensors) {
  double peak = 0.0;
  for (const auto& t : tensors)
    for (const float v : t.tensor.data()) peak = std::max(peak, static_cast<double>(std::abs(v)));
  return peak;
}

std::string p_tag(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%.4f", p);
  return buf;
}

std::string sanitize(const std::string& id) {
  std::string s = id;
  for (char& ch : s) {
    if (ch == '/' || ch == '\\' || ch == ':') ch = '_';
  }
  return s;
}

}  // namespace

ExperimentRun run_experiment(const ExperimentSpec& spec, const TensorSet& tensors, const RunOptions& options) {
  spec.validate();
  if (tensors.empty()) throw ContractViolation("experiment: tensor set is empty");
  const Dims dims = tensors.front().tensor.dims();
  for (const auto& t : tensors) require_same_dims(t.tensor.dims(), dims, "experiment tensor set");
  const std::size_t n_packets = packet_count(dims, spec.scheme);

  ExperimentRun run;
  run.peak = clean_peak(tensors);

  const std::size_t M = spec.methods.size();
  const std::size_t P = spec.protocols.size();
  std::vector<std::string> names;
  for (const auto& m : spec.methods) names.push_back(method_name(m));

  // Budgets per (protocol, method).
  std::vector<IterationBudget> budgets(P * M, IterationBudget::until_convergence());
  for (std::size_t pi = 0; pi < P; ++pi) {
    if (spec.protocols[pi] != Protocol::speed_matched) continue;
    if (!options.reference) throw ContractViolation("speed-matched protocol needs ALTeC reference weights");
    const auto probe_loss = draw_loss(n_packets, {options.calibration_p_loss, substream_seed(spec.master_seed, ~0ULL, 0)});
    const auto probe = apply_loss(tensors.front().tensor, probe_loss, spec.scheme);
    for (std::size_t mi = 0; mi < M; ++mi) {
      if (!is_iterative(spec.methods[mi])) continue;
      auto cal = calibrate_speed_match(*options.reference, spec.methods[mi], probe.tensor, probe.mask);
      budgets[pi * M + mi] = cal.budget;
      run.budgets.push_back(std::move(cal));
    }
  }

  const std::size_t G = spec.p_loss_grid.size();
  const std::size_t T = spec.trials_per_tensor;
  const std::size_t cells = tensors.size() * G * T;
  run.records.resize(cells * P * M);

  if (options.export_dir) std::filesystem::create_directories(*options.export_dir);

  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
  const auto n_cells = static_cast<long>(cells);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long cell = 0; cell < n_cells; ++cell) {
    const auto cu = static_cast<std::size_t>(cell);
    const std::size_t trial = cu % T;
    const std::size_t g = (cu / T) % G;
    const std::size_t ti = cu / (T * G);
    const auto& item = tensors[ti];
    const double p = spec.p_loss_grid[g];

    std::string nc_rel;
    DamagedTensor damaged;
    std::string cell_error;
    try {
      const auto pattern = draw_loss(n_packets, {p, substream_seed(spec.master_seed, ti, trial)});
      damaged = apply_loss(item.tensor, pattern, spec.scheme);
      if (options.export_dir) {
        const auto rel = std::filesystem::path("nc") / p_tag(p) / ("t" + std::to_string(trial)) / (sanitize(item.id) + ".npy");
        std::filesystem::create_directories((*options.export_dir / rel).parent_path());
        write_array_file(damaged.tensor, *options.export_dir / rel);
        nc_rel = rel.generic_string();
      }
    } catch (const std::exception& e) {
      cell_error = e.what();
    }
    const double nc_mse =
        cell_error.empty() ? masked_mse(damaged.tensor, item.tensor, damaged.mask, EntrySubset::missing) : 0.0;

    for (std::size_t pi = 0; pi < P; ++pi) {
      for (std::size_t mi = 0; mi < M; ++mi) {
        TrialRecord& r = run.records[(cu * P + pi) * M + mi];
        r.tensor_id = item.id;
        r.tensor_index = ti;
        r.method = names[mi];
        r.protocol = spec.protocols[pi];
        r.p_loss = p;
        r.trial_index = trial;
        r.correct_nl = item.nl_correct();
        if (!cell_error.empty()) {
          r.failed = true;
          r.error = cell_error;
          continue;
        }
        r.observed_count = damaged.mask.observed_count();
        r.missing_count = damaged.mask.missing_count();
        r.mask_digest = damaged.mask.digest();
        r.nc_missing_mse = nc_mse;
        r.nc_export_path = nc_rel;
        try {
          const auto start = std::chrono::steady_clock::now();
          const Completion done = complete(spec.methods[mi], damaged.tensor, damaged.mask, budgets[pi * M + mi]);
          const auto stop = std::chrono::steady_clock::now();
          r.wall_time_ms = std::chrono::duration<double, std::milli>(stop - start).count();
          r.iterations = done.iterations;
          r.missing_mse = masked_mse(done.tensor, item.tensor, damaged.mask, EntrySubset::missing);
          if (options.export_dir) {
            const auto rel = std::filesystem::path(to_string(r.protocol)) / r.method / p_tag(p) /
                             ("t" + std::to_string(trial)) / (sanitize(item.id) + ".npy");
            std::filesystem::create_directories((*options.export_dir / rel).parent_path());
            write_array_file(done.tensor, *options.export_dir / rel);
            r.export_path = rel.generic_string();
          }
        } catch (const std::exception& e) {
          r.failed = true;
          r.error = e.what();
        }
      }
    }
  }
  return run;
}

// --- summaries ---

double psnr_db(double mse, double peak) {
  if (!(mse > 0.0)) return 100.0;
  if (!(peak > 0.0)) return 0.0;
  return std::clamp(10.0 * std::log10(peak * peak / mse), 0.0, 100.0);
}

AccuracySummary summarize(std::span<const TrialRecord> records, MetricMode mode, double peak) {
  if (records.empty()) throw ContractViolation("summarize: empty group");
  const auto& first = records.front();
  for (const auto& r : records) {
    if (r.method != first.method || r.p_loss != first.p_loss || r.protocol != first.protocol) {
      throw ContractViolation("summarize: records do not share one (method, p_loss, protocol) group");
    }
  }

  // Canonical order makes the pooled sums independent of input order.
  std::vector<const TrialRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const TrialRecord* a, const TrialRecord* b) {
    return std::tie(a->trial_index, a->tensor_index, a->tensor_id) <
           std::tie(b->trial_index, b->tensor_index, b->tensor_id);
  });

  AccuracySummary s;
  s.method = first.method;
  s.p_loss = first.p_loss;
  s.protocol = first.protocol;
  s.mode = mode;

  std::map<std::size_t, std::size_t> nl_by_tensor;  // tensor index -> correct
  std::size_t i = 0;
  while (i < sorted.size()) {
    const std::size_t trial = sorted[i]->trial_index;
    bool failed = false;
    double nc_se = 0.0, tc_se = 0.0;
    std::size_t missing = 0, n = 0, nc_ok = 0, tc_ok = 0;
    for (; i < sorted.size() && sorted[i]->trial_index == trial; ++i) {
      const TrialRecord& r = *sorted[i];
      ++n;
      if (r.failed) {
        failed = true;
        continue;
      }
      if (mode == MetricMode::psnr) {
        const double m = static_cast<double>(r.missing_count);
        nc_se += r.nc_missing_mse * m;
        tc_se += r.missing_mse * m;
        missing += r.missing_count;
      } else {
        if (!r.correct_nc || !r.correct_tc || !r.correct_nl) {
          throw ContractViolation("summarize: accuracy mode needs NL/NC/TC correctness flags for tensor '" +
                                  r.tensor_id + "'");
        }
        nc_ok += *r.correct_nc ? 1 : 0;
        tc_ok += *r.correct_tc ? 1 : 0;
        nl_by_tensor[r.tensor_index] = *r.correct_nl ? 1 : 0;
      }
    }
    if (failed) {
      ++s.failed_trials;
      continue;
    }
    if (mode == MetricMode::psnr) {
      const double md = static_cast<double>(missing);
      s.nc_samples.push_back(psnr_db(missing > 0 ? nc_se / md : 0.0, peak));
      s.tc_samples.push_back(psnr_db(missing > 0 ? tc_se / md : 0.0, peak));
    } else {
      s.nc_samples.push_back(100.0 * static_cast<double>(nc_ok) / static_cast<double>(n));
      s.tc_samples.push_back(100.0 * static_cast<double>(tc_ok) / static_cast<double>(n));
    }
  }

  s.n_samples = s.tc_samples.size();
  if (mode == MetricMode::psnr) {
    s.mu_nl = 100.0;
  } else if (!nl_by_tensor.empty()) {
    std::size_t ok = 0;
    for (const auto& [idx, v] : nl_by_tensor) ok += v;
    s.mu_nl = 100.0 * static_cast<double>(ok) / static_cast<double>(nl_by_tensor.size());
  }
  if (s.n_samples > 0) {
    const auto nc = sample_stats(s.nc_samples);
    const auto tc = sample_stats(s.tc_samples);
    s.mu_nc = nc.mean;
    s.sigma_nc = nc.stddev;
    s.mu_tc = tc.mean;
    s.sigma_tc = tc.stddev;
  }
  return s;
}

Analysis analyze(std::span<const TrialRecord> records, MetricMode mode, double peak) {
  Analysis a;
  // Method order of first appearance keeps the output stable and readable.
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
    if (r.failed) ++a.failures;
  }
  auto rank = [&](const std::string& m) { return std::find(order.begin(), order.end(), m) - order.begin(); };

  using Key = std::tuple<int, double, long>;
  std::map<Key, std::vector<TrialRecord>> groups;
  for (const auto& r : records) groups[{static_cast<int>(r.protocol), r.p_loss, rank(r.method)}].push_back(r);
  for (const auto& [key, recs] : groups) a.summaries.push_back(summarize(recs, mode, peak));

  std::map<std::pair<int, double>, std::vector<const AccuracySummary*>> by_cell;
  for (const auto& s : a.summaries) {
    if (s.method == "none") continue;
    by_cell[{static_cast<int>(s.protocol), s.p_loss}].push_back(&s);
  }
  for (const auto& [cell, list] : by_cell) {
    const auto protocol = static_cast<Protocol>(cell.first);
    std::vector<MethodSamples> samples;
    for (const auto* s : list) {
      if (s->tc_samples.size() >= 2) samples.push_back({s->method, s->tc_samples});
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t j = i + 1; j < samples.size(); ++j) {
        a.welch.push_back(
            {cell.second, protocol, samples[i].method, samples[j].method, welch_t_test(samples[i].samples, samples[j].samples)});
      }
    }
    if (samples.size() >= 2) a.winners.push_back({cell.second, protocol, declare_winner(samples)});
  }
  return a;
}

}  // namespace tcomp
