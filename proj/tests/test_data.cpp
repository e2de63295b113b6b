#include "support.hpp"

#include <doctest.h>

using namespace ava;
using test::fixture;

TEST_CASE("load_csv reads the iris schema") {
  const RawDataset raw = load_csv(test::source_dir() / "data" / "iris.csv", "species");
  CHECK(raw.num_columns() == 4);
  CHECK(raw.num_rows() == 150);
  const Dataset d = preprocess(raw, {});
  CHECK(d.dim() == 4);
  CHECK(d.num_classes() == 3);
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("load_csv reports the malformed row") {
  try {
    load_csv(fixture("malformed.csv"), "label");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("malformed row 2") != std::string::npos);
  }
}

TEST_CASE("load_csv error cases") {
  CHECK_THROWS_AS(load_csv(fixture("does_not_exist.csv"), "label"), DataError);
  CHECK_THROWS_WITH_AS(load_csv(test::source_dir() / "data" / "iris.csv", "kind"),
                       doctest::Contains("unknown label column"), DataError);
}

TEST_CASE("missing cells are kept as missing markers") {
  const RawDataset raw = load_csv(fixture("titanic_small.csv"), "survived");
  const Index age = raw.column_index("age");
  CHECK_FALSE(raw.columns[age][2].has_value());
  CHECK_FALSE(raw.columns[age][5].has_value());
  CHECK(raw.columns[age][0].value() == "22");
}

TEST_CASE("quoted fields and NA") {
  const RawDataset raw = load_csv(fixture("quoted.csv"), "label");
  CHECK(raw.columns[0][0].value() == "Smith, J");
  CHECK(raw.columns[0][1].value() == "say \"hi\"");
  CHECK_FALSE(raw.columns[1][2].has_value());
}

namespace {

RawDataset one_column(const std::string& name, std::vector<std::string> cells) {
  RawDataset raw;
  raw.column_names = {name};
  raw.columns.resize(1);
  for (auto& c : cells) raw.columns[0].push_back(c);
  raw.label_name = "y";
  for (std::size_t i = 0; i < raw.columns[0].size(); ++i) raw.labels.push_back(i % 2 ? "a" : "b");
  return raw;
}

}  // namespace

TEST_CASE("numeric standardization") {
  const Dataset d = preprocess(one_column("x", {"2", "4", "6"}), {});
  const double s = std::sqrt(1.5);
  CHECK(d.features(0, 0) == doctest::Approx(-s).epsilon(1e-12));
  CHECK(d.features(0, 1) == doctest::Approx(0.0));
  CHECK(d.features(0, 2) == doctest::Approx(s).epsilon(1e-12));
  CHECK(d.features(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
}

TEST_CASE("constant column falls back to scale 1") {
  const Dataset d = preprocess(one_column("x", {"5", "5", "5"}), {});
  CHECK(d.features.isZero(0.0));
  CHECK(d.preprocessing.columns[0].scale == 1.0);
}

TEST_CASE("categorical one-hot and unseen levels") {
  PreprocessConfig cfg;
  cfg.categorical_columns = {"color"};
  const RawDataset raw = one_column("color", {"red", "blue", "red"});
  const Preprocessor pre = Preprocessor::fit(raw, cfg);
  const Dataset d = pre.transform(raw);
  CHECK(d.dim() == 2);
  CHECK(d.features.colwise().sum().isApproxToConstant(1.0));
  const Dataset unseen = pre.transform(one_column("color", {"green", "red"}));
  CHECK(unseen.features.col(0).isZero(0.0));
  CHECK(unseen.features.col(1).sum() == 1.0);
}

TEST_CASE("titanic-like table preprocesses with mean imputation") {
  PreprocessConfig cfg;
  cfg.categorical_columns = {"sex", "embarked", "pclass"};
  const RawDataset raw = load_csv(fixture("titanic_small.csv"), "survived");
  const Dataset d = preprocess(raw, cfg);
  CHECK(d.dim() == 2 + 3 + 3 + 2);
  CHECK(d.features.allFinite());
  const auto names = d.feature_names;
  const Index age = std::find(names.begin(), names.end(), "age") - names.begin();
  REQUIRE(age < d.dim());
  CHECK(d.features(age, 2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("split sizes and determinism") {
  auto [tr, te] = split_indices(100, 0.33, 7);
  CHECK(te.size() == 33);
  CHECK(tr.size() == 67);
  auto [tr2, te2] = split_indices(100, 0.33, 7);
  CHECK(tr == tr2);
  CHECK(te == te2);
  std::vector<Index> all = tr;
  all.insert(all.end(), te.begin(), te.end());
  std::sort(all.begin(), all.end());
  for (Index i = 0; i < 100; ++i) CHECK(all[i] == i);

  auto [a, b] = split_indices(3, 0.33, 0);
  CHECK(b.size() == 1);
  CHECK(a.size() == 2);

  CHECK_THROWS_AS(split_indices(1, 0.5, 0), DataError);
  CHECK_THROWS_AS(split_indices(10, 0.0, 0), ConfigError);
  CHECK_THROWS_AS(split_indices(10, 1.0, 0), ConfigError);
}

TEST_CASE("preprocessing round trip and train-only statistics") {
  const RawDataset raw = load_csv(test::source_dir() / "data" / "iris.csv", "species");
  const SplitDataset s = prepare_split(raw, {}, 0.33, 3);
  const Preprocessor pre(PreprocessingRecord::from_json(s.train.preprocessing.to_json()));
  const Dataset again = pre.transform(raw.select_rows(s.train.row_ids));
  CHECK(again.features == s.train.features);
  CHECK(s.train.features.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);

  // Changing test rows leaves the fitted statistics untouched.
  RawDataset tampered = raw;
  for (Index r : s.test.row_ids) tampered.columns[0][r] = "1000";
  const SplitDataset t = prepare_split(tampered, {}, 0.33, 3);
  CHECK(t.train.preprocessing.to_json() == s.train.preprocessing.to_json());

  std::set<Index> train_rows(s.train.row_ids.begin(), s.train.row_ids.end());
  for (Index r : s.test.row_ids) CHECK(train_rows.count(r) == 0);
}

TEST_CASE("synthetic generator") {
  SyntheticSpec spec;
  spec.num_points = 200;
  const RawDataset a = make_synthetic(spec);
  const RawDataset b = make_synthetic(spec);
  CHECK(a.num_columns() == 8);
  CHECK(a.num_rows() == 200);
  CHECK(a.columns == b.columns);
  spec.num_informative = 9;
  CHECK_THROWS_AS(make_synthetic(spec), ConfigError);
}
