#include "tcomp/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tcomp {

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{"model_dir", "method",  "ploss",      "trials",
                                          "seed",      "protocol", "scheme",    "rows_per_packet",
                                          "weights",   "out",      "format",    "export_dir",
                                          "altec_ridge"};
  return keys;
}

ConfigMap default_config() {
  return {{"method", "none,silrtc,halrtc,fcp,altec"},
          {"ploss", "0.05,0.1,0.15,0.2,0.25,0.3"},
          {"trials", "100"},
          {"seed", "0"},
          {"protocol", "default"},
          {"scheme", "per-channel-row"},
          {"rows_per_packet", "1"},
          {"format", "json"},
          {"altec_ridge", "0.001"}};
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw ContractViolation("config '" + key + "' = '" + value + "': " + why);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) bad(key, v, "expected an unsigned integer");
  errno = 0;
  const unsigned long long n = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) bad(key, v, "out of range");
  return n;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(d)) bad(key, v, "expected a number");
  return d;
}

std::optional<std::filesystem::path> existing_path(const ConfigMap& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end() || it->second.empty()) return std::nullopt;
  std::filesystem::path p = it->second;
  if (!std::filesystem::exists(p)) bad(key, it->second, "path does not exist");
  return p;
}

}  // namespace

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

ConfigMap parse_config_text(std::string_view text, const std::string& source) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto where = source + ":" + std::to_string(lineno);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ContractViolation(where + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!known_config_keys().contains(key)) throw ContractViolation(where + ": unknown key '" + key + "'");
    if (!out.emplace(key, value).second) throw ContractViolation(where + ": key '" + key + "' repeated");
  }
  return out;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

ConfigMap merge_config(const ConfigMap& defaults, const ConfigMap& file, const ConfigMap& cli) {
  ConfigMap out = defaults;
  for (const auto& [k, v] : file) out[k] = v;
  for (const auto& [k, v] : cli) out[k] = v;
  return out;
}

RunConfig resolve_run_config(const ConfigMap& m) {
  for (const auto& [k, v] : m) {
    if (!known_config_keys().contains(k)) bad(k, v, "unknown key");
  }
  auto get = [&](const std::string& key) -> std::string {
    const auto it = m.find(key);
    if (it == m.end()) throw ContractViolation("config '" + key + "' is required");
    return it->second;
  };

  RunConfig rc;
  rc.model_dir = existing_path(m, "model_dir");
  rc.weights = existing_path(m, "weights");
  if (const auto it = m.find("out"); it != m.end() && !it->second.empty()) rc.out = it->second;
  if (const auto it = m.find("export_dir"); it != m.end() && !it->second.empty()) rc.export_dir = it->second;

  rc.methods = split_list(get("method"));
  if (rc.methods.empty()) bad("method", get("method"), "no methods listed");
  for (const auto& name : rc.methods) {
    if (name != "none" && name != "silrtc" && name != "halrtc" && name != "fcp" && name != "altec") {
      bad("method", name, "expected silrtc, halrtc, fcp, altec or none");
    }
  }

  for (const auto& p : split_list(get("ploss"))) {
    const double v = to_double("ploss", p);
    if (!(v > 0.0 && v <= 1.0)) bad("ploss", p, "must lie in (0, 1]");
    rc.p_loss_grid.push_back(v);
  }
  if (rc.p_loss_grid.empty()) bad("ploss", get("ploss"), "no loss rates listed");

  rc.trials = to_u64("trials", get("trials"));
  if (rc.trials < 1) bad("trials", get("trials"), "must be >= 1");
  rc.seed = to_u64("seed", get("seed"));

  const std::string proto = get("protocol");
  if (proto == "both") {
    rc.protocols = {Protocol::default_budget, Protocol::speed_matched};
  } else {
    try {
      rc.protocols = {parse_protocol(proto)};
    } catch (const ContractViolation&) {
      bad("protocol", proto, "expected default, speed-matched or both");
    }
  }

  const std::string scheme = get("scheme");
  if (scheme == "per-channel-row") {
    rc.scheme.grouping = PacketGrouping::per_channel_row;
  } else if (scheme == "cross-channel-row") {
    rc.scheme.grouping = PacketGrouping::cross_channel_row;
  } else {
    bad("scheme", scheme, "expected per-channel-row or cross-channel-row");
  }
  rc.scheme.rows_per_packet = to_u64("rows_per_packet", get("rows_per_packet"));
  if (rc.scheme.rows_per_packet < 1) bad("rows_per_packet", get("rows_per_packet"), "must be >= 1");

  rc.format = get("format");
  if (rc.format != "json" && rc.format != "csv") bad("format", rc.format, "expected json or csv");

  rc.altec_ridge = to_double("altec_ridge", get("altec_ridge"));
  if (!(rc.altec_ridge >= 0.0)) bad("altec_ridge", get("altec_ridge"), "must be >= 0");
  return rc;
}

}  // namespace tcomp
