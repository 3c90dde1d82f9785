#include "tcomp/results.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>

#include <json.hpp>

namespace tcomp {

using nlohmann::json;

namespace {

json opt_bool(const std::optional<bool>& v) { return v ? json(*v) : json(nullptr); }

std::optional<bool> read_opt_bool(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<bool>();
}

// JSON has no infinities; degenerate Welch statistics travel as strings.
json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

double read_number_or_inf(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("bad number '" + s + "'");
  }
  return j.get<double>();
}

std::string scheme_name(PacketGrouping g) {
  return g == PacketGrouping::per_channel_row ? "per-channel-row" : "cross-channel-row";
}

json to_json(const TrialRecord& r) {
  return {{"tensor_id", r.tensor_id},
          {"tensor_index", r.tensor_index},
          {"method", r.method},
          {"protocol", to_string(r.protocol)},
          {"p_loss", r.p_loss},
          {"trial_index", r.trial_index},
          {"missing_mse", r.missing_mse},
          {"nc_missing_mse", r.nc_missing_mse},
          {"observed_count", r.observed_count},
          {"missing_count", r.missing_count},
          {"wall_time_ms", r.wall_time_ms},
          {"iterations", r.iterations},
          {"mask_digest", r.mask_digest},
          {"failed", r.failed},
          {"error", r.error},
          {"correct_nl", opt_bool(r.correct_nl)},
          {"correct_nc", opt_bool(r.correct_nc)},
          {"correct_tc", opt_bool(r.correct_tc)},
          {"export_path", r.export_path},
          {"nc_export_path", r.nc_export_path}};
}

TrialRecord record_from(const json& j) {
  TrialRecord r;
  r.tensor_id = j.at("tensor_id").get<std::string>();
  r.tensor_index = j.at("tensor_index").get<std::size_t>();
  r.method = j.at("method").get<std::string>();
  r.protocol = parse_protocol(j.at("protocol").get<std::string>());
  r.p_loss = j.at("p_loss").get<double>();
  r.trial_index = j.at("trial_index").get<std::size_t>();
  r.missing_mse = j.at("missing_mse").get<double>();
  r.nc_missing_mse = j.at("nc_missing_mse").get<double>();
  r.observed_count = j.at("observed_count").get<std::size_t>();
  r.missing_count = j.at("missing_count").get<std::size_t>();
  r.wall_time_ms = j.at("wall_time_ms").get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.mask_digest = j.at("mask_digest").get<std::uint64_t>();
  r.failed = j.at("failed").get<bool>();
  r.error = j.value("error", "");
  r.correct_nl = read_opt_bool(j, "correct_nl");
  r.correct_nc = read_opt_bool(j, "correct_nc");
  r.correct_tc = read_opt_bool(j, "correct_tc");
  r.export_path = j.value("export_path", "");
  r.nc_export_path = j.value("nc_export_path", "");
  return r;
}

json to_json(const AccuracySummary& s) {
  return {{"method", s.method},     {"p_loss", s.p_loss},         {"protocol", to_string(s.protocol)},
          {"mode", to_string(s.mode)}, {"mu_nl", s.mu_nl},       {"mu_nc", s.mu_nc},
          {"mu_tc", s.mu_tc},       {"sigma_nc", s.sigma_nc},     {"sigma_tc", s.sigma_tc},
          {"n_samples", s.n_samples}, {"failed_trials", s.failed_trials}, {"nc_samples", s.nc_samples},
          {"tc_samples", s.tc_samples}};
}

MetricMode parse_mode(const std::string& s) {
  if (s == "psnr") return MetricMode::psnr;
  if (s == "accuracy") return MetricMode::accuracy;
  throw std::invalid_argument("unknown metric mode '" + s + "'");
}

AccuracySummary summary_from(const json& j) {
  AccuracySummary s;
  s.method = j.at("method").get<std::string>();
  s.p_loss = j.at("p_loss").get<double>();
  s.protocol = parse_protocol(j.at("protocol").get<std::string>());
  s.mode = parse_mode(j.at("mode").get<std::string>());
  s.mu_nl = j.at("mu_nl").get<double>();
  s.mu_nc = j.at("mu_nc").get<double>();
  s.mu_tc = j.at("mu_tc").get<double>();
  s.sigma_nc = j.at("sigma_nc").get<double>();
  s.sigma_tc = j.at("sigma_tc").get<double>();
  s.n_samples = j.at("n_samples").get<std::size_t>();
  s.failed_trials = j.value("failed_trials", std::size_t{0});
  s.nc_samples = j.value("nc_samples", std::vector<double>{});
  s.tc_samples = j.value("tc_samples", std::vector<double>{});
  return s;
}

}  // namespace

SpecEcho echo_spec(const ExperimentSpec& spec, const TensorSet& tensors, const std::string& dataset) {
  SpecEcho e;
  for (const auto& m : spec.methods) e.methods.push_back(method_name(m));
  e.p_loss_grid = spec.p_loss_grid;
  e.trials_per_tensor = spec.trials_per_tensor;
  e.master_seed = spec.master_seed;
  for (const auto p : spec.protocols) e.protocols.push_back(to_string(p));
  e.scheme = scheme_name(spec.scheme.grouping);
  e.rows_per_packet = spec.scheme.rows_per_packet;
  e.dataset = dataset;
  e.tensor_count = tensors.size();
  if (!tensors.empty()) e.dims = tensors.front().tensor.dims();
  return e;
}

std::string results_to_json(const ResultsDocument& doc) {
  json j;
  j["schema"] = "tcomp.results";
  j["schema_version"] = doc.schema_version;
  j["generated_at"] = doc.generated_at;
  j["spec"] = {{"methods", doc.spec.methods},
               {"p_loss_grid", doc.spec.p_loss_grid},
               {"trials_per_tensor", doc.spec.trials_per_tensor},
               {"master_seed", doc.spec.master_seed},
               {"protocols", doc.spec.protocols},
               {"scheme", doc.spec.scheme},
               {"rows_per_packet", doc.spec.rows_per_packet},
               {"dataset", doc.spec.dataset},
               {"tensor_count", doc.spec.tensor_count},
               {"dims", {doc.spec.dims.height, doc.spec.dims.width, doc.spec.dims.channels}}};
  j["budgets"] = json::array();
  for (const auto& b : doc.budgets) {
    j["budgets"].push_back(
        {{"method", b.method}, {"iterations", b.budget.iters}, {"t_ref_ms", b.t_ref_ms}, {"t_iter_ms", b.t_iter_ms}});
  }
  j["peak"] = doc.peak;
  j["mode"] = to_string(doc.mode);
  j["records"] = json::array();
  for (const auto& r : doc.records) j["records"].push_back(to_json(r));
  j["summaries"] = json::array();
  for (const auto& s : doc.analysis.summaries) j["summaries"].push_back(to_json(s));
  j["welch"] = json::array();
  for (const auto& w : doc.analysis.welch) {
    j["welch"].push_back({{"p_loss", w.p_loss},
                          {"protocol", to_string(w.protocol)},
                          {"a", w.a},
                          {"b", w.b},
                          {"t_stat", number_or_inf(w.result.t_stat)},
                          {"dof", w.result.dof},
                          {"p_value", w.result.p_value},
                          {"significant_at_95", w.result.significant_at_95},
                          {"degenerate_variance", w.result.degenerate_variance}});
  }
  j["winners"] = json::array();
  for (const auto& w : doc.analysis.winners) {
    j["winners"].push_back({{"p_loss", w.p_loss},
                            {"protocol", to_string(w.protocol)},
                            {"winner", w.winner ? json(*w.winner) : json(nullptr)}});
  }
  j["failures"] = doc.analysis.failures;
  return j.dump(2) + "\n";
}

ResultsDocument results_from_json(std::string_view text, const std::string& source) {
  try {
    const json j = json::parse(text);
    if (j.value("schema", "") != "tcomp.results") throw std::invalid_argument("not a tcomp results document");
    ResultsDocument doc;
    doc.schema_version = j.at("schema_version").get<int>();
    if (doc.schema_version != kResultsSchemaVersion) {
      throw std::invalid_argument("unsupported schema_version " + std::to_string(doc.schema_version));
    }
    doc.generated_at = j.value("generated_at", "");
    const auto& s = j.at("spec");
    doc.spec.methods = s.at("methods").get<std::vector<std::string>>();
    doc.spec.p_loss_grid = s.at("p_loss_grid").get<std::vector<double>>();
    doc.spec.trials_per_tensor = s.at("trials_per_tensor").get<std::size_t>();
    doc.spec.master_seed = s.at("master_seed").get<std::uint64_t>();
    doc.spec.protocols = s.at("protocols").get<std::vector<std::string>>();
    doc.spec.scheme = s.at("scheme").get<std::string>();
    doc.spec.rows_per_packet = s.at("rows_per_packet").get<std::size_t>();
    doc.spec.dataset = s.value("dataset", "");
    doc.spec.tensor_count = s.value("tensor_count", std::size_t{0});
    const auto dims = s.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw std::invalid_argument("spec.dims must have three entries");
    doc.spec.dims = {dims[0], dims[1], dims[2]};
    for (const auto& b : j.at("budgets")) {
      doc.budgets.push_back({b.at("method").get<std::string>(), IterationBudget::fixed(b.at("iterations").get<int>()),
                             b.at("t_ref_ms").get<double>(), b.at("t_iter_ms").get<double>()});
    }
    doc.peak = j.at("peak").get<double>();
    doc.mode = parse_mode(j.at("mode").get<std::string>());
    for (const auto& r : j.at("records")) doc.records.push_back(record_from(r));
    for (const auto& x : j.at("summaries")) doc.analysis.summaries.push_back(summary_from(x));
    for (const auto& w : j.at("welch")) {
      PairwiseWelch p;
      p.p_loss = w.at("p_loss").get<double>();
      p.protocol = parse_protocol(w.at("protocol").get<std::string>());
      p.a = w.at("a").get<std::string>();
      p.b = w.at("b").get<std::string>();
      p.result.t_stat = read_number_or_inf(w.at("t_stat"));
      p.result.dof = w.at("dof").get<double>();
      p.result.p_value = w.at("p_value").get<double>();
      p.result.significant_at_95 = w.at("significant_at_95").get<bool>();
      p.result.degenerate_variance = w.value("degenerate_variance", false);
      doc.analysis.welch.push_back(std::move(p));
    }
    for (const auto& w : j.at("winners")) {
      WinnerDeclaration d;
      d.p_loss = w.at("p_loss").get<double>();
      d.protocol = parse_protocol(w.at("protocol").get<std::string>());
      if (!w.at("winner").is_null()) d.winner = w.at("winner").get<std::string>();
      doc.analysis.winners.push_back(std::move(d));
    }
    doc.analysis.failures = j.value("failures", std::size_t{0});
    return doc;
  } catch (const std::exception& e) {
    throw IoError(source + ": invalid results document: " + e.what());
  }
}

FlagsDocument flags_from_json(std::string_view text, const std::string& source) {
  try {
    const json j = json::parse(text);
    if (j.value("schema", "") != "tcomp.flags") throw std::invalid_argument("not a tcomp flags document");
    if (j.at("schema_version").get<int>() != kFlagsSchemaVersion) throw std::invalid_argument("unsupported schema_version");
    FlagsDocument f;
    if (j.contains("nl")) f.nl = j["nl"].get<std::map<std::string, bool>>();
    if (j.contains("files")) f.files = j["files"].get<std::map<std::string, bool>>();
    return f;
  } catch (const std::exception& e) {
    throw IoError(source + ": invalid flags document: " + e.what());
  }
}

std::string flags_to_json(const FlagsDocument& flags) {
  const json j = {{"schema", "tcomp.flags"}, {"schema_version", kFlagsSchemaVersion}, {"nl", flags.nl}, {"files", flags.files}};
  return j.dump(2) + "\n";
}

void apply_flags(std::vector<TrialRecord>& records, const FlagsDocument& flags) {
  for (auto& r : records) {
    if (const auto it = flags.nl.find(r.tensor_id); it != flags.nl.end()) r.correct_nl = it->second;
    if (const auto it = flags.files.find(r.nc_export_path); !r.nc_export_path.empty() && it != flags.files.end()) {
      r.correct_nc = it->second;
    }
    if (const auto it = flags.files.find(r.export_path); !r.export_path.empty() && it != flags.files.end()) {
      r.correct_tc = it->second;
    }
  }
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string percent_label(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g%%", p * 100.0);
  return buf;
}

}  // namespace

std::string render_table_csv(const Analysis& analysis) {
  std::string out =
      "p_loss,Algorithm,mu_NL,mu_NC,sigma_NC,default_mu_TC,default_sigma_TC,speed_matched_mu_TC,speed_matched_sigma_TC\n";

  std::vector<double> grid;
  std::vector<std::string> methods;
  for (const auto& s : analysis.summaries) {
    if (std::find(grid.begin(), grid.end(), s.p_loss) == grid.end()) grid.push_back(s.p_loss);
    if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) methods.push_back(s.method);
  }
  std::sort(grid.begin(), grid.end());
  const bool only_none = methods.size() == 1 && methods.front() == "none";

  auto find = [&](double p, const std::string& m, Protocol proto) -> const AccuracySummary* {
    for (const auto& s : analysis.summaries)
      if (s.p_loss == p && s.method == m && s.protocol == proto) return &s;
    return nullptr;
  };

  for (const double p : grid) {
    for (const auto& m : methods) {
      if (m == "none" && !only_none) continue;
      const auto* def = find(p, m, Protocol::default_budget);
      const auto* sm = find(p, m, Protocol::speed_matched);
      const auto* base = def ? def : sm;
      if (base == nullptr) continue;
      out += percent_label(p) + "," + m + "," + fixed2(base->mu_nl) + "," + fixed2(base->mu_nc) + "," +
             fixed2(base->sigma_nc) + ",";
      out += def ? fixed2(def->mu_tc) + "," + fixed2(def->sigma_tc) : std::string(",");
      out += ",";
      out += sm ? fixed2(sm->mu_tc) + "," + fixed2(sm->sigma_tc) : std::string(",");
      out += "\n";
    }
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace tcomp
