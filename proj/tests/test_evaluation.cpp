#include "support.hpp"

#include <doctest.h>

using namespace ava;

namespace {

GoldSet gold(std::vector<Index> f, Index m) {
  GoldSet g;
  g.features = std::move(f);
  g.m = m;
  return g;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(v.size());
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Dataset perfect_splitter(Index informative_feature) {
  std::mt19937_64 rng(3);
  Matrix X(4, 60);
  Vector y(60);
  for (Index j = 0; j < 60; ++j) {
    X.col(j) = test::random_vector(rng, 4);
    y(j) = X(informative_feature, j) > 0 ? 1 : 0;
  }
  return test::make_dataset(X, y, 2);
}

BenchmarkConfig small_benchmark(std::vector<EvalMethod> methods) {
  BenchmarkConfig b;
  b.datasets = {test::iris_spec()};
  ModelSpec m = test::sigmoid_mlp(100);
  m.mlp.hidden = {6, 6};
  m.mlp.adam.step = 0.01;
  b.models = {m};
  b.methods = std::move(methods);
  b.seeds = {0, 1};
  b.m_policy.fixed = 2;
  b.max_test_points = 6;
  b.random_trials = 2000;
  b.ava.k = 4;
  b.ava.solver.method = SolverMethod::exact;
  return b;
}

}  // namespace

TEST_CASE("recall examples") {
  CHECK(recall_at_gold(vec({0.1, 5, 3, 0.2}), gold({1, 3}, 2)) == 0.5);
  CHECK(recall_at_gold(vec({0, -2, 0, 1}), gold({1, 3}, 2)) == 1.0);
  CHECK(recall_at_gold(vec({1, 1, 1, 1}), gold({0, 1}, 2)) == 1.0);  // ties to lower index
  CHECK(top_m_by_magnitude(vec({-3, 2, 3}), 2) == std::vector<Index>{0, 2});
  CHECK(recall_at_gold(vec({0, 0, 9, 0}), gold({2}, 2)) == 1.0);  // pruned gold below m
}

TEST_CASE("recall is invariant to positive rescaling") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    const Vector g = test::random_vector(rng, 6);
    const GoldSet gs = gold({1, 4}, 2);
    const double r = recall_at_gold(g, gs);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK(recall_at_gold(3.7 * g, gs) == r);
  }
}

TEST_CASE("random baseline") {
  const auto r = random_baseline(4, 2, 20000, 1);
  CHECK(std::abs(r.mean - 0.5) <= 0.02);
  const auto r8 = random_baseline(8, 2, 20000, 1);
  CHECK(std::abs(r8.mean - 0.25) <= 0.02);
  const auto full = random_baseline(5, 5, 100, 1);
  CHECK(full.mean == 1.0);
  CHECK(full.variance == 0.0);
  for (Index d = 2; d <= 9; ++d) {
    for (Index m = 1; m <= d; ++m) {
      const auto b = random_baseline(d, m, 3000, d * 10 + m);
      const double target = static_cast<double>(m) / d;
      CHECK(std::abs(b.mean - target) <= 3.0 * std::sqrt(b.variance / 3000) + 1e-12);
    }
  }
  CHECK(random_baseline(4, 2, 50, 9).mean == random_baseline(4, 2, 50, 9).mean);
  CHECK_THROWS_AS(random_baseline(3, 4, 10, 0), ConfigError);
}

TEST_CASE("mean feature importance") {
  CHECK(mean_feature_importance(vec({0.4, 0.3, 0.2, 0.1}), 2) == doctest::Approx(0.35));
  CHECK(mean_feature_importance(vec({0, 2, 0, 2}), 2) == 0.5);
  CHECK(mean_feature_importance(vec({1, -1, 1, -1}), 3) == 0.25);
  CHECK_THROWS_AS(mean_feature_importance(Vector::Zero(3), 1), DataError);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 500; ++t) {
    const Index d = 2 + t % 7;
    const Index m = 1 + t % d;
    const double v = mean_feature_importance(test::random_vector(rng, d), m);
    CHECK(v >= 1.0 / d - 1e-15);
    CHECK(v <= 1.0 / m + 1e-15);
  }
}

TEST_CASE("gold set examples") {
  CHECK(gold_set(perfect_splitter(1), 1).features == std::vector<Index>{1});
  const GoldSet g = gold_set(perfect_splitter(3), 4);
  CHECK(g.features.size() <= 4);
  CHECK(std::find(g.features.begin(), g.features.end(), 3) != g.features.end());
  const Dataset iris = load_dataset(test::iris_spec(), 0).train;
  const GoldSet gi = gold_set(iris, 2);
  for (Index f : gi.features) CHECK((f == 2 || f == 3));
  CHECK_THROWS_AS(gold_set(test::make_dataset(Matrix::Ones(2, 5), Vector::Zero(5)), 1), DataError);
}

TEST_CASE("select_m") {
  const Dataset d = perfect_splitter(0);
  CHECK(select_m(d, {3}, 5, 0) == 3);
  CHECK(select_m(d, {4, 3, 2, 1}, 5, 0) == 1);
  const Dataset iris = load_dataset(test::iris_spec(), 0).train;
  CHECK(select_m(iris, {1, 2, 3, 4}, 5, 0) == 2);
  CHECK_THROWS_AS(select_m(d, {1}, 1, 0), ConfigError);
}

TEST_CASE("eval method names") {
  for (auto m : {EvalMethod::random, EvalMethod::shap, EvalMethod::ig, EvalMethod::ava_shap,
                 EvalMethod::ava_ig}) {
    CHECK(eval_method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(eval_method_from_string("lime"), ConfigError);
}

TEST_CASE("random-only benchmark sits at m/d") {
  const EvalReport r = run_benchmark(small_benchmark({EvalMethod::random}));
  REQUIRE(r.all_ok());
  const auto mean = r.mean_recall("iris", "mlp-sigmoid", EvalMethod::random);
  REQUIRE(mean);
  CHECK(std::abs(*mean - 50.0) < 3.0);
}

TEST_CASE("benchmark reports are deterministic and well formed") {
  auto cfg = small_benchmark({EvalMethod::random, EvalMethod::shap, EvalMethod::ig,
                              EvalMethod::ava_shap, EvalMethod::ava_ig});
  cfg.k_values = {1, 4};
  const EvalReport a = run_benchmark(cfg);
  cfg.jobs = 2;
  const EvalReport b = run_benchmark(cfg);
  CHECK(a.all_ok());
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.to_csv() == b.to_csv());
  const std::string table = a.recall_table_tsv();
  CHECK(table.find("RANDOM\tSHAP\tIG\tA_SHAP\tA_IG") != std::string::npos);
  for (const auto& cell : a.cells) {
    for (const auto& [method, score] : cell.scores) {
      CHECK(score.recall >= 0.0);
      CHECK(score.recall <= 100.0);
      if (score.mfi) {
        CHECK(*score.mfi >= 1.0 / cell.dim - 1e-12);
        CHECK(*score.mfi <= 1.0 / cell.m + 1e-12);
      }
    }
    CHECK(cell.k_curve.at(EvalMethod::ava_shap).size() == 2);
  }
  CHECK_FALSE(a.k_curve_tsv().empty());
}

TEST_CASE("k sweep truncation equals fresh runs") {
  const SplitDataset s = load_dataset(test::iris_spec(), 0);
  TrainConfig tc;
  tc.hidden = {6, 6};
  tc.epochs = 200;
  tc.adam.step = 0.01;
  const auto model = train_mlp(s.train, tc);
  const GoldSet g = gold_set(s.train, 2);
  AvaConfig cfg;
  cfg.solver.method = SolverMethod::exact;
  const Dataset test_set = s.test.subset({0, 1, 2, 3, 4, 5});
  const Explainer ex(*model, s.train, cfg);
  const auto curve = k_sweep(ex, test_set, g, {1, 5}, {EvalMethod::ava_shap, EvalMethod::ava_ig});
  for (Index k : {1, 5}) {
    AvaConfig ck = cfg;
    ck.k = k;
    const Explainer fresh(*model, s.train, ck);
    double rs = 0, ri = 0;
    for (Index t = 0; t < test_set.size(); ++t) {
      rs += recall_at_gold(fresh.ava_shap(test_set.point(t), test_set.labels(t), t).values, g);
      ri += recall_at_gold(fresh.ava_ig(test_set.point(t), test_set.labels(t), t).values, g);
    }
    const std::size_t at = k == 1 ? 0 : 1;
    CHECK(curve.at(EvalMethod::ava_shap)[at].second ==
          doctest::Approx(100.0 * rs / test_set.size()));
    CHECK(curve.at(EvalMethod::ava_ig)[at].second ==
          doctest::Approx(100.0 * ri / test_set.size()));
  }
}

TEST_CASE("failing cells are recorded and the run continues") {
  auto cfg = small_benchmark({EvalMethod::random, EvalMethod::ig});
  ModelSpec tree;
  tree.kind = ModelKind::decision_tree;
  cfg.models.push_back(tree);
  cfg.seeds = {0};
  const EvalReport r = run_benchmark(cfg);
  CHECK_FALSE(r.all_ok());
  CHECK(r.cells.size() == 2);
  CHECK(r.mean_recall("iris", "mlp-sigmoid", EvalMethod::ig).has_value());
}

TEST_CASE("benchmark validation") {
  BenchmarkConfig b = small_benchmark({});
  CHECK_THROWS_AS(b.validate(), ConfigError);
  b = small_benchmark({EvalMethod::shap});
  b.seeds.clear();
  CHECK_THROWS_AS(b.validate(), ConfigError);
}
