#include "ava/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

namespace {

std::string json_list(const std::vector<ava::Index>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "]";
}

std::string json_string_list(const std::string& csv) {
  std::string s = "[";
  std::size_t start = 0;
  bool first = true;
  while (start <= csv.size()) {
    const auto comma = csv.find(',', start);
    const auto item = csv.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!item.empty()) {
      s += (first ? "\"" : ",\"") + item + "\"";
      first = false;
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return s + "]";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence-weighted consensus feature attribution: train, explain, benchmark."};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::string log_level = "info";
  std::optional<std::uint64_t> seed;
  app.add_option("-c,--config", config_path, "JSON run config (defaults are used when omitted)");
  app.add_option("--set", overrides, "Override a config key, e.g. --set influence.k=5");
  app.add_option("-o,--output-dir", output_dir, "Output directory (beats AVA_OUTPUT_DIR)");
  app.add_option("--seed", seed, "Seed for splits, training and sampling");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");

  auto* explain = app.add_subcommand("explain", "Explain test points with a trained model");
  std::string checkpoint;
  std::string point = "0";
  std::string method;
  std::optional<ava::Index> k;
  std::string ig_baseline;
  bool dump_influence = false;
  explain->add_option("--checkpoint", checkpoint, "Checkpoint (default <output-dir>/model.json)");
  explain->add_option("--point", point, "Test point: index, range a..b, or all");
  explain->add_option("--method", method, "shap, ig, ava_shap or ava_ig");
  explain->add_option("--k", k, "Neighborhood size for the AVA methods");
  explain->add_option("--ig-baseline", ig_baseline,
                      "neighborhood_mean, zero, training_mean or fixed");
  explain->add_flag("--dump-influence", dump_influence, "Also write influence.csv");

  auto* bench = app.add_subcommand("benchmark", "Gold-set recall over datasets x models x seeds");
  std::optional<std::string> methods;
  std::string seeds;
  std::string k_sweep;
  std::optional<ava::Index> m;
  std::optional<int> jobs;
  bench->add_option("--methods", methods, "Comma list of random, shap, ig, ava_shap, ava_ig");
  bench->add_option("--seeds", seeds, "Seed list, e.g. 0..4 or 0,3,7");
  bench->add_option("--k-sweep", k_sweep, "Also record k curves, e.g. 1..16");
  bench->add_option("--m", m, "Fix the gold-set size instead of cross validation");
  bench->add_option("--jobs", jobs, "Worker threads");

  auto* sweep = app.add_subcommand("sweep-k", "Recall of the AVA methods as a function of k");
  std::string k_range = "1..16";
  sweep->add_option("--k", k_range, "k values, e.g. 1..16");
  sweep->add_option("--seeds", seeds, "Seed list");
  sweep->add_option("--m", m, "Fix the gold-set size");
  sweep->add_option("--jobs", jobs, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    if (!method.empty()) overrides.push_back("attribution.method=" + method);
    if (k) overrides.push_back("influence.k=" + std::to_string(*k));
    if (!ig_baseline.empty()) overrides.push_back("attribution.ig_baseline=" + ig_baseline);
    if (methods) overrides.push_back("evaluation.methods=" + json_string_list(*methods));
    if (!seeds.empty()) overrides.push_back("evaluation.seeds=" + json_list(ava::parse_index_list(seeds)));
    if (!k_sweep.empty()) {
      overrides.push_back("evaluation.k_values=" + json_list(ava::parse_index_list(k_sweep)));
    }
    if (m) overrides.push_back("evaluation.m=" + std::to_string(*m));
    if (jobs) overrides.push_back("evaluation.jobs=" + std::to_string(*jobs));

    ava::RunConfig config = ava::load_run_config(config_path, overrides);
    if (!output_dir.empty()) config.output_dir = output_dir;

    if (*train) return ava::cmd_train(config);
    if (*explain) {
      const std::string ckpt =
          checkpoint.empty() ? (std::filesystem::path(config.output_dir) / "model.json").string()
                             : checkpoint;
      return ava::cmd_explain(config, ckpt, point, dump_influence);
    }
    if (*bench) return ava::cmd_benchmark(config);
    if (*sweep) return ava::cmd_sweep_k(config, ava::parse_index_list(k_range));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
