#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tcomp/channel.hpp"
#include "tcomp/harness.hpp"

namespace tcomp {

/// Flat key/value settings. List values (method, ploss) are comma-separated.
using ConfigMap = std::map<std::string, std::string>;

/// Keys accepted in config files and their CLI flag equivalents
/// ("rows_per_packet" <-> --rows-per-packet).
const std::set<std::string>& known_config_keys();

/// Built-in defaults for every key that has one.
ConfigMap default_config();

/// Parses "key = value" lines; '#' starts a comment. Unknown or repeated
/// keys and malformed lines are errors naming `source` and the line.
ConfigMap parse_config_text(std::string_view text, const std::string& source);

ConfigMap load_config_file(const std::filesystem::path& path);

/// Layered lookup: CLI over file over default.
ConfigMap merge_config(const ConfigMap& defaults, const ConfigMap& file, const ConfigMap& cli);

struct RunConfig {
  std::optional<std::filesystem::path> model_dir;
  std::vector<std::string> methods;
  std::vector<double> p_loss_grid;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<Protocol> protocols;
  PacketizationScheme scheme;
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> out;
  std::string format;
  std::optional<std::filesystem::path> export_dir;
  double altec_ridge = 1e-3;
};

/// Typed view of a merged map; validates ranges and that input paths exist.
/// Errors are ContractViolation naming the offending key.
RunConfig resolve_run_config(const ConfigMap& merged);

std::vector<std::string> split_list(std::string_view s);

}  // namespace tcomp
