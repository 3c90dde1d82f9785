#include "tcomp/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "tcomp/config.hpp"
#include "tcomp/dataset.hpp"
#include "tcomp/harness.hpp"
#include "tcomp/npy.hpp"
#include "tcomp/results.hpp"
#include "tcomp/rng.hpp"

namespace tcomp {

namespace {

// Built-in data used when no --model-dir is given.
constexpr Dims kSyntheticDims{14, 14, 64};
constexpr std::size_t kSyntheticCount = 4;
constexpr std::size_t kSyntheticRank = 4;
constexpr double kSyntheticNoise = 0.01;
constexpr std::uint64_t kSyntheticSeed = 0x5eed0001;
constexpr std::uint64_t kAltecTrainSeed = 0x5eed0002;
constexpr std::size_t kAltecTrainCount = 16;
constexpr Dims kProbeDims{14, 14, 256};

/// Thrown for problems with the input data (exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::optional<std::filesystem::path>& path, std::ostream& out) {
  if (!path) {
    out << text;
    return;
  }
  std::ofstream f(*path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path->string() + " for writing");
  f << text;
  if (!f) throw IoError("write failed: " + path->string());
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ALTeCWeights synthetic_altec(const Dims& dims, double ridge) {
  const auto train = synthetic_low_rank_set(kAltecTrainCount, dims, kSyntheticRank, kAltecTrainSeed, kSyntheticNoise);
  std::vector<FeatureTensor> tensors;
  for (const auto& t : train) tensors.push_back(t.tensor);
  return train_altec(tensors, ridge);
}

std::shared_ptr<const ALTeCWeights> altec_for(const std::optional<std::filesystem::path>& weights, const Dims& dims,
                                              double ridge) {
  if (weights) return std::make_shared<const ALTeCWeights>(load_altec(*weights));
  return std::make_shared<const ALTeCWeights>(synthetic_altec(dims, ridge));
}

/// Registers an option whose value lands in `cli` only when given.
struct FlagBinder {
  CLI::App* app;
  std::map<std::string, std::string>* storage;
  std::map<std::string, std::vector<std::string>>* lists;

  void single(const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option(flag, (*storage)[key], help);
  }
  void repeated(const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option(flag, (*lists)[key], help)->take_all();
  }
};

int run_command(const std::map<std::string, std::string>& singles,
                const std::map<std::string, std::vector<std::string>>& lists, const CLI::App& sub,
                const std::string& config_path, std::ostream& out, std::ostream& err) {
  ConfigMap cli;
  auto given = [&](const std::string& flag) { return sub.count(flag) > 0; };
  const std::vector<std::pair<std::string, std::string>> single_flags{
      {"--model-dir", "model_dir"}, {"--trials", "trials"},   {"--seed", "seed"},
      {"--protocol", "protocol"},   {"--scheme", "scheme"},   {"--rows-per-packet", "rows_per_packet"},
      {"--weights", "weights"},     {"--out", "out"},         {"--format", "format"},
      {"--export-dir", "export_dir"}, {"--altec-ridge", "altec_ridge"}};
  for (const auto& [flag, key] : single_flags)
    if (given(flag)) cli[key] = singles.at(key);
  for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{{"--method", "method"}, {"--ploss", "ploss"}}) {
    if (!given(flag)) continue;
    std::string joined;
    for (const auto& v : lists.at(key)) joined += (joined.empty() ? "" : ",") + v;
    cli[key] = joined;
  }

  const ConfigMap file = config_path.empty() ? ConfigMap{} : load_config_file(config_path);
  const RunConfig rc = resolve_run_config(merge_config(default_config(), file, cli));

  TensorSet tensors;
  std::string dataset;
  try {
    if (rc.model_dir) {
      tensors = load_tensor_dir(*rc.model_dir);
      dataset = rc.model_dir->string();
    } else {
      tensors = synthetic_low_rank_set(kSyntheticCount, kSyntheticDims, kSyntheticRank, kSyntheticSeed, kSyntheticNoise);
      dataset = "synthetic:" + to_string(kSyntheticDims) + ",rank=" + std::to_string(kSyntheticRank);
    }
  } catch (const IoError& e) {
    throw DataError(e.what());
  }
  const Dims dims = tensors.front().tensor.dims();

  ExperimentSpec spec;
  spec.p_loss_grid = rc.p_loss_grid;
  spec.trials_per_tensor = rc.trials;
  spec.master_seed = rc.seed;
  spec.protocols = rc.protocols;
  spec.scheme = rc.scheme;

  bool speed = false;
  for (const auto p : rc.protocols) speed = speed || p == Protocol::speed_matched;
  bool needs_altec = speed;
  for (const auto& m : rc.methods) needs_altec = needs_altec || m == "altec";
  std::shared_ptr<const ALTeCWeights> altec;
  if (needs_altec) {
    altec = altec_for(rc.weights, dims, rc.altec_ridge);
    if (altec->channels != dims.channels) {
      throw DataError("ALTeC weights have " + std::to_string(altec->channels) + " channels, tensors have " +
                      std::to_string(dims.channels));
    }
  }
  for (const auto& m : rc.methods) spec.methods.push_back(default_method_config(m, altec));

  RunOptions options;
  options.reference = altec;
  options.export_dir = rc.export_dir;
  options.threads = threads_from_env();

  const ExperimentRun run = run_experiment(spec, tensors, options);

  ResultsDocument doc;
  doc.generated_at = utc_timestamp();
  doc.spec = echo_spec(spec, tensors, dataset);
  doc.budgets = run.budgets;
  doc.peak = run.peak;
  doc.records = run.records;
  bool have_flags = !doc.records.empty();
  for (const auto& r : doc.records) have_flags = have_flags && r.correct_nl && r.correct_nc && r.correct_tc;
  doc.mode = have_flags ? MetricMode::accuracy : MetricMode::psnr;
  doc.analysis = analyze(doc.records, doc.mode, doc.peak);

  emit(rc.format == "csv" ? render_table_csv(doc.analysis) : results_to_json(doc), rc.out, out);
  if (doc.analysis.failures > 0) {
    err << "tcomp run: " << doc.analysis.failures << " trial record(s) failed\n";
    return kExitPartialFailure;
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Packet-loss simulation and low-rank tensor completion for deep feature tensors", "tcomp"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // run
  std::map<std::string, std::string> singles;
  std::map<std::string, std::vector<std::string>> lists;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a Monte-Carlo experiment and write the results document");
  FlagBinder bind{run, &singles, &lists};
  run->add_option("--config", config_path, "Flat key = value config file (CLI flags override it)")->check(CLI::ExistingFile);
  bind.single("--model-dir", "model_dir", "Directory of .npy feature tensors (optional manifest.json)");
  bind.repeated("--method", "method", "silrtc|halrtc|fcp|altec|none; repeatable");
  bind.repeated("--ploss", "ploss", "Packet loss probability; repeatable");
  bind.single("--trials", "trials", "Loss realizations per tensor");
  bind.single("--seed", "seed", "Master seed");
  bind.single("--protocol", "protocol", "default|speed-matched|both");
  bind.single("--scheme", "scheme", "per-channel-row|cross-channel-row");
  bind.single("--rows-per-packet", "rows_per_packet", "Spatial rows per packet");
  bind.single("--weights", "weights", "ALTeC weights file");
  bind.single("--out", "out", "Output path (default stdout)");
  bind.single("--format", "format", "json|csv");
  bind.single("--export-dir", "export_dir", "Write completed and zero-filled tensors here");
  bind.single("--altec-ridge", "altec_ridge", "Ridge weight for built-in ALTeC training");

  // complete
  std::string c_method = "none", c_input, c_mask, c_out, c_weights;
  int c_iters = 0;
  auto* comp = app.add_subcommand("complete", "Complete one damaged tensor");
  comp->add_option("--method", c_method, "silrtc|halrtc|fcp|altec|none")->required();
  comp->add_option("--input", c_input, "Damaged tensor (.npy, f4/f8)")->required();
  comp->add_option("--mask", c_mask, "Observation mask (.npy, u1)")->required();
  comp->add_option("--out", c_out, "Completed tensor output (.npy)")->required();
  comp->add_option("--weights", c_weights, "ALTeC weights file");
  comp->add_option("--iters", c_iters, "Fixed iteration budget (default: until convergence)")->check(CLI::PositiveNumber);

  // train-altec
  std::string t_dir, t_out;
  double t_ridge = 1e-3;
  auto* train = app.add_subcommand("train-altec", "Fit ALTeC weights on a directory of clean tensors");
  train->add_option("--input-dir,--model-dir", t_dir, "Directory of clean .npy tensors")->required();
  train->add_option("--ridge", t_ridge, "Ridge weight (>= 0)");
  train->add_option("--out", t_out, "Weights output file")->required();

  // calibrate
  std::string k_dir, k_weights;
  std::vector<std::string> k_methods;
  double k_ploss = 0.3;
  std::uint64_t k_seed = 0;
  auto* cal = app.add_subcommand("calibrate", "Print speed-matched iteration budgets");
  cal->add_option("--model-dir", k_dir, "Probe tensor directory (first tensor is used)");
  cal->add_option("--method", k_methods, "Iterative method; repeatable")->take_all();
  cal->add_option("--weights", k_weights, "ALTeC weights file");
  cal->add_option("--ploss", k_ploss, "Loss rate of the probe");
  cal->add_option("--seed", k_seed, "Seed for the probe loss pattern");

  // report
  std::string r_results, r_flags, r_format = "csv", r_out;
  auto* rep = app.add_subcommand("report", "Render a results document as the Table CSV layout");
  rep->add_option("--results", r_results, "Results JSON")->required();
  rep->add_option("--flags", r_flags, "Correctness flags JSON from the evaluator");
  rep->add_option("--format", r_format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  rep->add_option("--out", r_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0 && e.get_exit_code() != static_cast<int>(CLI::ExitCodes::Success)) {
      err << app.help();
      return kExitUsage;
    }
    return kExitOk;
  }

  try {
    if (*run) return run_command(singles, lists, *run, config_path, out, err);

    if (*comp) {
      const auto damaged = read_array_file(c_input);
      const auto mask = read_mask_file(c_mask);
      if (!(damaged.dims() == mask.dims())) {
        throw DataError(c_mask + ": mask shape " + to_string(mask.dims()) + " does not match " + c_input + " shape " +
                        to_string(damaged.dims()));
      }
      std::shared_ptr<const ALTeCWeights> w;
      if (c_method == "altec") {
        if (c_weights.empty()) throw ContractViolation("--method altec needs --weights");
        w = std::make_shared<const ALTeCWeights>(load_altec(c_weights));
        if (w->channels != damaged.dims().channels) throw DataError(c_weights + ": channel count does not match " + c_input);
      }
      const auto config = default_method_config(c_method, w);
      const auto budget = c_iters > 0 ? IterationBudget::fixed(c_iters) : IterationBudget::until_convergence();
      const auto done = complete(config, masked_fill(damaged, mask, 0.0f), mask, budget);
      write_array_file(done.tensor, c_out);
      err << c_method << ": " << done.iterations << " iteration(s)" << (done.converged ? ", converged" : "") << "\n";
      return kExitOk;
    }

    if (*train) {
      const auto set = load_tensor_dir(t_dir);
      std::vector<FeatureTensor> tensors;
      for (const auto& t : set) tensors.push_back(t.tensor);
      const auto w = train_altec(tensors, t_ridge);
      save_altec(w, t_out);
      err << "trained ALTeC on " << tensors.size() << " tensor(s), " << w.channels << " channels\n";
      return kExitOk;
    }

    if (*cal) {
      FeatureTensor probe;
      if (!k_dir.empty()) {
        probe = load_tensor_dir(k_dir).front().tensor;
      } else {
        probe = synthetic_low_rank_set(1, kProbeDims, kSyntheticRank, kSyntheticSeed, kSyntheticNoise).front().tensor;
      }
      const auto weights = altec_for(k_weights.empty() ? std::nullopt : std::optional<std::filesystem::path>(k_weights),
                                     probe.dims(), 1e-3);
      if (weights->channels != probe.dims().channels) throw DataError("ALTeC weights do not match the probe channels");
      const PacketizationScheme scheme;
      const auto pattern = draw_loss(packet_count(probe.dims(), scheme), {k_ploss, substream_seed(k_seed, 0, 0)});
      const auto damaged = apply_loss(probe, pattern, scheme);
      if (k_methods.empty()) k_methods = {"silrtc", "halrtc", "fcp"};
      for (const auto& m : k_methods) {
        const auto b = calibrate_speed_match(*weights, default_method_config(m), damaged.tensor, damaged.mask);
        out << b.method << " " << b.budget.iters << " iterations (t_ref " << b.t_ref_ms << " ms, t_iter "
            << b.t_iter_ms << " ms)\n";
      }
      return kExitOk;
    }

    if (*rep) {
      auto doc = results_from_json(read_text(r_results), r_results);
      if (!r_flags.empty()) {
        apply_flags(doc.records, flags_from_json(read_text(r_flags), r_flags));
        doc.mode = MetricMode::accuracy;
        try {
          doc.analysis = analyze(doc.records, doc.mode, doc.peak);
        } catch (const ContractViolation& e) {
          throw DataError(r_flags + ": " + e.what());
        }
      }
      const std::optional<std::filesystem::path> dest =
          r_out.empty() ? std::nullopt : std::optional<std::filesystem::path>(r_out);
      emit(r_format == "csv" ? render_table_csv(doc.analysis) : results_to_json(doc), dest, out);
      return kExitOk;
    }
  } catch (const ContractViolation& e) {
    err << "tcomp: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "tcomp: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "tcomp: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace tcomp
