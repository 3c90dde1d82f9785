#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tcomp/harness.hpp"

namespace tcomp {

inline constexpr int kResultsSchemaVersion = 1;
inline constexpr int kFlagsSchemaVersion = 1;

/// What was run, echoed into the results document.
struct SpecEcho {
  std::vector<std::string> methods;
  std::vector<double> p_loss_grid;
  std::size_t trials_per_tensor = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::string> protocols;
  std::string scheme;
  std::size_t rows_per_packet = 1;
  std::string dataset;
  std::size_t tensor_count = 0;
  Dims dims;
};

SpecEcho echo_spec(const ExperimentSpec& spec, const TensorSet& tensors, const std::string& dataset);

struct ResultsDocument {
  int schema_version = kResultsSchemaVersion;
  std::string generated_at;
  SpecEcho spec;
  std::vector<CalibratedBudget> budgets;
  double peak = 0.0;
  MetricMode mode = MetricMode::psnr;
  std::vector<TrialRecord> records;
  Analysis analysis;
};

/// Pretty-printed JSON with sorted keys; deterministic given the document.
std::string results_to_json(const ResultsDocument& doc);

/// Throws IoError naming `source` on malformed or wrong-schema input.
ResultsDocument results_from_json(std::string_view text, const std::string& source = "<memory>");

/// Correctness flags produced by the evaluator:
/// {"schema": "tcomp.flags", "schema_version": 1,
///  "nl": {tensor_id: bool}, "files": {export relpath: bool}}
struct FlagsDocument {
  std::map<std::string, bool> nl;
  std::map<std::string, bool> files;
};

FlagsDocument flags_from_json(std::string_view text, const std::string& source = "<memory>");
std::string flags_to_json(const FlagsDocument& flags);

/// Fills correct_nl/nc/tc of every record that has a matching flag.
void apply_flags(std::vector<TrialRecord>& records, const FlagsDocument& flags);

/// Table layout: p_loss, Algorithm, mu_NL, mu_NC, sigma_NC, default mu/sigma
/// TC, speed-matched mu/sigma TC. Values printed with two decimals.
std::string render_table_csv(const Analysis& analysis);

/// ISO-8601 UTC timestamp of now.
std::string utc_timestamp();

}  // namespace tcomp
