#pragma once

#include "ava/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ava {

// Each command writes its artifacts under config.output_dir and returns the
// process exit code: 0 only when all requested work succeeded.

// <out>/model.json (checkpoint) and <out>/train_log.json.
int cmd_train(const RunConfig& config);

// "all", an index, or an inclusive range "a..b" / "a-b" over the test split.
std::vector<Index> parse_point_selector(const std::string& selector, Index n_test);

// Per-point JSON under <out>/explain/<method>/ plus <out>/explain/<method>.csv.
// With dump_influence the AVA methods also write influence.csv.
int cmd_explain(const RunConfig& config, const std::filesystem::path& checkpoint,
                const std::string& selector, bool dump_influence = false);

// Report files under <out>/benchmark/.
int cmd_benchmark(const RunConfig& config);

// k curves for the AVA methods under <out>/sweep_k/.
int cmd_sweep_k(const RunConfig& config, const std::vector<Index>& k_values);

}  // namespace ava
