#include "ava/commands.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace ava {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

int cmd_train(const RunConfig& config) {
  const SplitDataset data = load_dataset(config.dataset, config.seed);
  TrainingLog log;
  const PredictorPtr model = train_model(config.model, data.train, config.seed, &log);
  const double train_acc = accuracy(*model, data.train);
  const double test_acc = accuracy(*model, data.test);

  const fs::path out = config.output_dir;
  const json resolved = config.to_json();
  save_checkpoint(out / "model.json", *model, data.train.preprocessing,
                  {{"config", resolved},
                   {"seed", config.seed},
                   {"train_accuracy", train_acc},
                   {"test_accuracy", test_acc}});
  write_json(out / "train_log.json", {{"config", resolved},
                                      {"seed", config.seed},
                                      {"model", config.model.label()},
                                      {"n_train", data.train.size()},
                                      {"n_test", data.test.size()},
                                      {"initial_loss", log.initial_loss},
                                      {"epoch_loss", log.epoch_loss},
                                      {"train_accuracy", train_acc},
                                      {"test_accuracy", test_acc}});
  spdlog::info("trained {} on {}: train accuracy {:.4f}, test accuracy {:.4f}",
               config.model.label(), config.dataset.name, train_acc, test_acc);
  std::cout << "checkpoint: " << (out / "model.json").string() << "\ntest_accuracy: " << test_acc
            << '\n';
  return 0;
}

std::vector<Index> parse_point_selector(const std::string& selector, Index n_test) {
  if (n_test <= 0) throw DataError("the test split is empty");
  std::vector<Index> points;
  if (selector == "all") {
    for (Index i = 0; i < n_test; ++i) points.push_back(i);
    return points;
  }
  points = parse_index_list(selector);
  for (Index p : points) {
    if (p < 0 || p >= n_test) {
      throw ConfigError("test point " + std::to_string(p) + " is out of range [0, " +
                        std::to_string(n_test) + ")");
    }
  }
  return points;
}

int cmd_explain(const RunConfig& config, const fs::path& checkpoint_path,
                const std::string& selector, bool dump_influence) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  const SplitDataset data = load_dataset(config.dataset, config.seed);
  if (checkpoint.preprocessing.to_json() != data.train.preprocessing.to_json()) {
    throw DataError("checkpoint preprocessing does not match the configured dataset and seed");
  }
  const Predictor& model = *checkpoint.model;
  if (model.input_dim() != data.train.dim()) throw DataError("checkpoint input dimension mismatch");

  const auto points = parse_point_selector(selector, data.test.size());
  const EvalMethod method = eval_method_from_string(config.method);
  if (method == EvalMethod::random) throw ConfigError("random is not an explanation method");
  const Explainer explainer(model, data.train, config.ava);

  const fs::path dir = fs::path(config.output_dir) / "explain";
  const json resolved = config.to_json();
  std::string csv = "point_id,method,feature_name,value\n";
  std::string influence_csv = "test_id,train_id,raw_influence,rectified_weight,selected_flag\n";
  int failures = 0;

  for (Index t : points) {
    const Vector x = data.test.point(t);
    const double y = data.test.labels(t);
    json doc{{"config", resolved},
             {"checkpoint", checkpoint_path.string()},
             {"test_point", t},
             {"row_id", data.test.row_ids.empty() ? json(nullptr) : json(data.test.row_ids[t])},
             {"feature_names", data.train.feature_names},
             {"x", as_std(x)},
             {"label", y},
             {"predicted_class", model.predicted_class(x)}};
    try {
      const Index output = explainer.target_output(x);
      Vector values;
      if (method == EvalMethod::shap || method == EvalMethod::ig) {
        const Attribution a =
            method == EvalMethod::shap ? explainer.shap(x, output, t) : explainer.ig(x, output, t);
        doc["result"] = a.to_json();
        values = a.values;
      } else {
        const auto w = explainer.influence_weights(x, y, t);
        const auto nb = explainer.neighborhood(w, config.ava.k);
        const auto c = explainer.consensus(method == EvalMethod::ava_shap
                                               ? ConsensusMethod::ava_shap
                                               : ConsensusMethod::ava_ig,
                                           x, nb, output, t);
        doc["result"] = c.to_json();
        values = c.values;
        if (dump_influence) {
          std::vector<char> selected(w.raw.size(), 0);
          for (Index j : nb.indices) selected[j] = 1;
          for (Index j = 0; j < w.raw.size(); ++j) {
            influence_csv += std::to_string(t) + ',' + std::to_string(j) + ',' + number(w.raw(j)) +
                             ',' + number(w.rectified(j)) + ',' + (selected[j] ? "1" : "0") + '\n';
          }
        }
      }
      for (Index i = 0; i < values.size(); ++i) {
        csv += std::to_string(t) + ',' + config.method + ',' +
               csv_field(data.train.feature_names[i]) + ',' + number(values(i)) + '\n';
      }
    } catch (const Error& e) {
      ++failures;
      doc["error"] = e.what();
      spdlog::error("point {}: {}", t, e.what());
    }
    write_json(dir / config.method / ("point_" + std::to_string(t) + ".json"), doc);
  }
  write_text(dir / (config.method + ".csv"), csv);
  if (dump_influence && method != EvalMethod::shap && method != EvalMethod::ig) {
    write_text(dir / "influence.csv", influence_csv);
  }
  std::cout << "explained " << points.size() - failures << " of " << points.size()
            << " points; output in " << dir.string() << '\n';
  return failures == 0 ? 0 : 1;
}

namespace {

void write_report(const EvalReport& report, const RunConfig& config, const fs::path& dir) {
  json j = report.to_json();
  j["config"] = config.to_json();
  write_json(dir / "report.json", j);
  write_text(dir / "report.csv", report.to_csv());
  write_text(dir / "recall_table.tsv", report.recall_table_tsv());
  write_text(dir / "mfi_table.tsv", report.mfi_table_tsv());
  if (!config.benchmark.k_values.empty()) write_text(dir / "k_curve.tsv", report.k_curve_tsv());
}

}  // namespace

int cmd_benchmark(const RunConfig& config) {
  config.benchmark.validate();
  const EvalReport report = run_benchmark(config.benchmark);
  const fs::path dir = fs::path(config.output_dir) / "benchmark";
  write_report(report, config, dir);
  std::cout << report.recall_table_tsv();
  if (!report.all_ok()) spdlog::error("some benchmark cells failed; see {}", dir.string());
  return report.all_ok() ? 0 : 1;
}

int cmd_sweep_k(const RunConfig& config, const std::vector<Index>& k_values) {
  if (k_values.empty()) throw ConfigError("sweep-k needs at least one k");
  RunConfig c = config;
  c.benchmark.k_values = k_values;
  std::vector<EvalMethod> methods;
  for (auto m : config.benchmark.methods) {
    if (m == EvalMethod::ava_shap || m == EvalMethod::ava_ig) methods.push_back(m);
  }
  if (methods.empty()) methods = {EvalMethod::ava_shap, EvalMethod::ava_ig};
  c.benchmark.methods = methods;
  c.benchmark.validate();
  const EvalReport report = run_benchmark(c.benchmark);
  const fs::path dir = fs::path(c.output_dir) / "sweep_k";
  write_report(report, c, dir);
  std::cout << report.k_curve_tsv();
  return report.all_ok() ? 0 : 1;
}

}  // namespace ava
