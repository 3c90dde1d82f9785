#include "tcomp/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "tcomp/npy.hpp"

namespace tcomp {

namespace {

using Paths = std::vector<std::filesystem::path>;

void check_shapes(const TensorSet& set, const Paths& paths, const std::filesystem::path& dir) {
  if (set.empty()) throw IoError(dir.string() + ": no tensors found");
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!(set[i].tensor.dims() == set.front().tensor.dims())) {
      throw IoError(paths[i].string() + ": tensor '" + set[i].id + "' has shape " + to_string(set[i].tensor.dims()) +
                    ", expected " + to_string(set.front().tensor.dims()) + " as in " + paths.front().string());
    }
  }
}

std::optional<long> opt_long(const nlohmann::json& e, const char* key, const std::string& where) {
  if (!e.contains(key) || e[key].is_null()) return std::nullopt;
  if (!e[key].is_number_integer()) throw IoError(where + ": '" + key + "' must be an integer");
  return e[key].get<long>();
}

TensorSet load_manifest(const std::filesystem::path& dir, const std::filesystem::path& manifest, Paths& paths) {
  std::ifstream f(manifest);
  if (!f) throw IoError("cannot open " + manifest.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest.string() + ": " + e.what());
  }
  const nlohmann::json* entries = &doc;
  if (doc.is_object()) {
    if (!doc.contains("entries")) throw IoError(manifest.string() + ": missing 'entries'");
    entries = &doc["entries"];
  }
  if (!entries->is_array()) throw IoError(manifest.string() + ": entries must be an array");

  TensorSet set;
  for (std::size_t i = 0; i < entries->size(); ++i) {
    const auto& e = (*entries)[i];
    const std::string where = manifest.string() + " entry " + std::to_string(i);
    if (!e.is_object() || !e.contains("tensor") || !e["tensor"].is_string()) {
      throw IoError(where + ": needs a string 'tensor' path");
    }
    const std::filesystem::path rel = e["tensor"].get<std::string>();
    TensorItem item;
    item.id = e.contains("id") ? e["id"].get<std::string>() : rel.stem().string();
    paths.push_back(dir / rel);
    item.tensor = read_array_file(paths.back());
    item.label = opt_long(e, "label", where);
    item.nl_prediction = opt_long(e, "nl_prediction", where);
    set.push_back(std::move(item));
  }
  return set;
}

}  // namespace

TensorSet load_tensor_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError(dir.string() + ": not a directory");

  TensorSet set;
  Paths paths;
  const auto manifest = dir / "manifest.json";
  if (std::filesystem::exists(manifest)) {
    set = load_manifest(dir, manifest, paths);
  } else {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".npy") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) set.push_back({p.stem().string(), read_array_file(p), std::nullopt, std::nullopt});
  }
  check_shapes(set, paths, dir);
  return set;
}

}  // namespace tcomp
