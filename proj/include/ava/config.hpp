#pragma once

#include "ava/evaluation.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ava {

inline constexpr int kConfigVersion = 1;

// data/iris.csv relative to the working directory, label "species".
DatasetSpec default_dataset_spec();

// Everything a command needs, resolved from a JSON file plus overrides.
// Every key has a default and unknown keys are rejected.
struct RunConfig {
  int version = kConfigVersion;
  DatasetSpec dataset = default_dataset_spec();
  ModelSpec model;
  AvaConfig ava;  // influence and attribution settings
  std::string method = "ava_shap";  // explain: shap, ig, ava_shap, ava_ig
  BenchmarkConfig benchmark;  // datasets/models default to the single ones above
  std::uint64_t seed = 0;
  std::string output_dir = "ava-out";

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// Sets a dotted key ("influence.k", "model.epochs") in a config document.
// The value is parsed as JSON when possible and kept as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

nlohmann::json read_json_file(const std::filesystem::path& path);

// Loads the file (or starts from defaults when `path` is empty), applies
// overrides, then AVA_OUTPUT_DIR when it is set.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

// "a..b" or "a-b" inclusive, or a comma list.
std::vector<Index> parse_index_list(const std::string& text);

}  // namespace ava
