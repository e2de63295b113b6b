#include "ava/commands.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>

using namespace ava;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "ava_config_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig iris_run(const fs::path& out) {
  RunConfig c = load_run_config(test::source_dir() / "configs" / "iris.json",
                                {"model.epochs=50", "model.hidden=[6,6]"});
  c.dataset.path = (test::source_dir() / "data" / "iris.csv").string();
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("defaults round trip through json") {
  const RunConfig c;
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(c.ava.k == 10);
}

TEST_CASE("unknown keys are rejected") {
  nlohmann::json j = RunConfig{}.to_json();
  j["model"]["epoch"] = 3;
  CHECK_THROWS_WITH_AS(RunConfig::from_json(j), doctest::Contains("model.epoch"), ConfigError);
  nlohmann::json top = {{"sed", 1}};
  CHECK_THROWS_AS(RunConfig::from_json(top), ConfigError);
}

TEST_CASE("overrides parse json values or fall back to strings") {
  nlohmann::json doc = nlohmann::json::object();
  apply_override(doc, "influence.k=5");
  apply_override(doc, "model.activation=relu");
  apply_override(doc, "evaluation.seeds=[1,2]");
  CHECK(doc["influence"]["k"] == 5);
  CHECK(doc["model"]["activation"] == "relu");
  CHECK(doc["evaluation"]["seeds"].size() == 2);
  CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
  const RunConfig c = RunConfig::from_json(doc);
  CHECK(c.ava.k == 5);
  CHECK(c.model.mlp.activation == Activation::relu);
}

TEST_CASE("invalid values name the valid choices") {
  CHECK_THROWS_WITH(load_run_config("", {"model.activation=tanh"}),
                    doctest::Contains("unknown activation 'tanh' (valid: sigmoid, relu)"));
  CHECK_THROWS_AS(load_run_config("", {"influence.mode=square"}), ConfigError);
}

TEST_CASE("output directory environment override") {
  setenv("AVA_OUTPUT_DIR", "/tmp/from-env", 1);
  CHECK(load_run_config("", {}).output_dir == "/tmp/from-env");
  unsetenv("AVA_OUTPUT_DIR");
  CHECK(load_run_config("", {}).output_dir == "ava-out");
}

TEST_CASE("index lists and point selectors") {
  CHECK(parse_index_list("1..4") == std::vector<Index>{1, 2, 3, 4});
  CHECK(parse_index_list("2-3") == std::vector<Index>{2, 3});
  CHECK(parse_index_list("0,3,7") == std::vector<Index>{0, 3, 7});
  CHECK_THROWS_AS(parse_index_list("x"), ConfigError);
  CHECK(parse_point_selector("all", 3) == std::vector<Index>{0, 1, 2});
  CHECK(parse_point_selector("0", 50) == std::vector<Index>{0});
  CHECK_THROWS_WITH(parse_point_selector("9999", 50), doctest::Contains("out of range"));
}

TEST_CASE("train writes a byte-identical checkpoint on rerun") {
  const fs::path out = scratch("train");
  RunConfig c = iris_run(out);
  CHECK(cmd_train(c) == 0);
  const std::string first = slurp(out / "model.json");
  CHECK(cmd_train(c) == 0);
  CHECK(slurp(out / "model.json") == first);
  const auto log = read_json_file(out / "train_log.json");
  CHECK(log.contains("test_accuracy"));
  CHECK(log.at("config") == c.to_json());
}

TEST_CASE("explain writes per-point artifacts") {
  const fs::path out = scratch("explain");
  RunConfig c = iris_run(out);
  c.ava.solver.method = SolverMethod::exact;
  REQUIRE(cmd_train(c) == 0);
  c.method = "ava_shap";
  CHECK(cmd_explain(c, out / "model.json", "0", true) == 0);
  const auto doc = read_json_file(out / "explain" / "ava_shap" / "point_0.json");
  CHECK(doc.at("result").at("neighborhood").at("indices").size() == 10);
  CHECK(doc.at("config") == c.to_json());
  CHECK(fs::exists(out / "explain" / "influence.csv"));
  c.method = "shap";
  CHECK(cmd_explain(c, out / "model.json", "0..2") == 0);
  CHECK(slurp(out / "explain" / "shap.csv").find("point_id,method,feature_name,value") == 0);
  CHECK_THROWS_AS(cmd_explain(c, out / "model.json", "9999"), ConfigError);
  c.method = "random";
  CHECK_THROWS_AS(cmd_explain(c, out / "model.json", "0"), ConfigError);

  RunConfig other = c;
  other.seed = 5;
  CHECK_THROWS_AS(cmd_explain(other, out / "model.json", "0"), DataError);
}

TEST_CASE("ig on a decision tree fails per point with exit code 1") {
  const fs::path out = scratch("tree");
  RunConfig c = iris_run(out);
  c.model.kind = ModelKind::decision_tree;
  REQUIRE(cmd_train(c) == 0);
  c.method = "ig";
  CHECK(cmd_explain(c, out / "model.json", "0..1") == 1);
  const auto doc = read_json_file(out / "explain" / "ig" / "point_1.json");
  CHECK(doc.contains("error"));
}

TEST_CASE("benchmark command with an empty method list is a config error") {
  RunConfig c = iris_run(scratch("bench"));
  c.benchmark.methods.clear();
  CHECK_THROWS_AS(cmd_benchmark(c), ConfigError);
  CHECK_THROWS_WITH_AS(load_run_config("", {"evaluation.methods=[]"}),
                       doctest::Contains("no methods"), ConfigError);
}
