// Acceptance run: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the numbered ones given on the command line.

#include "support.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace ava;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt_double(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

RunConfig repo_config(const std::string& name, std::vector<std::string> overrides = {}) {
  const auto dir = test::source_dir();
  RunConfig probe = load_run_config(dir / "configs" / name);
  if (!probe.dataset.path.empty()) {
    overrides.push_back("dataset.path=" + (dir / probe.dataset.path).string());
  }
  return load_run_config(dir / "configs" / name, overrides);
}

// Game over {0,1}^d inputs: bit i of the coalition is x_i > 0.5.
class TableGame final : public Predictor {
 public:
  TableGame(std::vector<double> v, Index d) : v_(std::move(v)), d_(d) {}
  ModelKind kind() const override { return ModelKind::linear; }
  Capabilities capabilities() const override { return {}; }
  Index input_dim() const override { return d_; }
  Index output_dim() const override { return 1; }
  bool is_classifier() const override { return false; }
  nlohmann::json to_json() const override { return {}; }

 protected:
  Vector do_predict(const Vector& x) const override {
    std::uint64_t mask = 0;
    for (Index i = 0; i < d_; ++i)
      if (x(i) > 0.5) mask |= std::uint64_t{1} << i;
    return Vector::Constant(1, v_[mask]);
  }

 private:
  std::vector<double> v_;
  Index d_;
};

Vector game_shapley(const std::vector<double>& v, Index d) {
  const TableGame g(v, d);
  return shapley_exact(g, Vector::Ones(d), Vector::Zero(d), 0).values;
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// ---------------------------------------------------------------- 1
Outcome criterion1() {
  const SplitDataset iris = load_dataset(test::iris_spec(), 0);
  const GoldSet gold = gold_set(iris.train, 2);
  const RandomBaseline rb = random_baseline(iris.train.dim(), gold, 1000, 0);
  bool ok = iris.train.dim() == 4 && std::abs(100.0 * rb.mean - 50.0) <= 2.0;
  std::string detail = "iris d=" + std::to_string(iris.train.dim()) + " m=2 recall " +
                       fmt_double(100.0 * rb.mean) + "% over 1000 trials";
  Index checked = 0, bad = 0;
  for (Index d = 1; d <= 12; ++d) {
    for (Index m = 1; m <= d; ++m) {
      const Index n = 2000;
      const RandomBaseline b = random_baseline(d, m, n, 1000 * d + m);
      const double target = static_cast<double>(m) / static_cast<double>(d);
      ++checked;
      if (std::abs(b.mean - target) > 3.0 * std::sqrt(b.variance / n) + 1e-15) ++bad;
    }
  }
  ok = ok && bad == 0;
  detail += "; (d,m) grid within 3 SE: " + std::to_string(checked - bad) + "/" +
            std::to_string(checked);
  return {ok, detail};
}

// ---------------------------------------------------------------- 2
Outcome criterion2() {
  const RunConfig c = repo_config("iris.json");
  const EvalReport r = run_benchmark(c.benchmark);
  std::cout << r.recall_table_tsv();
  const auto get = [&](EvalMethod m) {
    return r.mean_recall("iris", c.model.label(), m).value_or(-1.0);
  };
  const double rnd = get(EvalMethod::random), shap = get(EvalMethod::shap),
               ava = get(EvalMethod::ava_shap);
  const bool ok = r.all_ok() && ava >= shap && shap > rnd && std::abs(ava - 91.0) <= 15.0;
  return {ok, "random " + fmt_double(rnd) + ", shap " + fmt_double(shap) + ", ava_shap " +
                  fmt_double(ava) + " (ig " + fmt_double(get(EvalMethod::ig)) + ", ava_ig " +
                  fmt_double(get(EvalMethod::ava_ig)) + ")"};
}

// ---------------------------------------------------------------- 3
Outcome criterion3() {
  RunConfig c = repo_config("synthetic_relu.json");
  c.benchmark.methods = {EvalMethod::random, EvalMethod::shap, EvalMethod::ig,
                         EvalMethod::ava_shap, EvalMethod::ava_ig};
  const EvalReport r = run_benchmark(c.benchmark);
  std::cout << r.recall_table_tsv();
  const auto get = [&](const EvalReport& rep, EvalMethod m) {
    return rep.mean_recall(c.dataset.name, c.model.label(), m).value_or(-1.0);
  };
  const double ig = get(r, EvalMethod::ig), ava_ig = get(r, EvalMethod::ava_ig);

  // Diagnostic only: the same run with a zero IG baseline for the neighbours.
  BenchmarkConfig zero = c.benchmark;
  zero.methods = {EvalMethod::ava_ig};
  zero.ava.ig_baseline = IgBaseline::zero;
  const double ava_ig_zero = get(run_benchmark(zero), EvalMethod::ava_ig);

  const bool ok = r.all_ok() && ava_ig >= ig;
  return {ok, "ig " + fmt_double(ig) + ", ava_ig " + fmt_double(ava_ig) +
                  " (shap " + fmt_double(get(r, EvalMethod::shap)) + ", ava_shap " +
                  fmt_double(get(r, EvalMethod::ava_shap)) + ", random " +
                  fmt_double(get(r, EvalMethod::random)) +
                  "; diagnostic ava_ig with zero baseline " + fmt_double(ava_ig_zero) + ")"};
}

// ---------------------------------------------------------------- 4
Outcome criterion4() {
  const Dataset all = test::linear_blobs(260, 10, 44, 0.8);
  std::vector<Index> tr, te;
  for (Index j = 0; j < all.size(); ++j) (j < 200 ? tr : te).push_back(j);
  const Dataset train = all.subset(tr), held = all.subset(te);
  LinearConfig lc;
  const Trainer trainer = [&](const Dataset& d) -> PredictorPtr { return train_linear(d, lc); };
  const PredictorPtr model = trainer(train);
  SolverConfig s;
  s.method = SolverMethod::exact;
  s.damping = 0.0;
  const InfluenceEngine engine(*model, train, s);
  double worst = 1.0;
  for (Index t = 0; t < 10; ++t) {
    const Vector x = held.point(t);
    const double y = held.labels(t);
    const Vector inf = engine.influences(x, y);
    Vector predicted(train.size());
    for (Index j = 0; j < train.size(); ++j) {
      predicted(j) = predicted_removal_effect(inf(j), train.size());
    }
    const Vector oracle = loo_influence_oracle_all(trainer, train, x, y);
    worst = std::min(worst, test::pearson(predicted, oracle));
  }
  return {worst >= 0.9, "N=200 p=" + std::to_string(model->num_parameters()) +
                            ", min Pearson over 10 test points " + fmt_double(worst, 6)};
}

// ---------------------------------------------------------------- 5
Outcome criterion5() {
  std::mt19937_64 rng(55);
  double worst_ratio = 0.0;
  for (int g = 0; g < 6; ++g) {
    const auto m = test::random_mlp(8, 3, 500 + g);
    const Vector x = test::random_vector(rng, 8, -2, 2), bg = test::random_vector(rng, 8, -2, 2);
    const Index out = g % 3;
    const auto table = CoalitionValue(*m, x, bg, out).table();
    const double range = *std::max_element(table.begin(), table.end()) -
                         *std::min_element(table.begin(), table.end());
    const Vector exact = shapley_exact(*m, x, bg, out).values;
    const Vector sampled = shapley_sampled(*m, x, bg, out, 20000, derive_seed(9, g)).values;
    worst_ratio = std::max(worst_ratio, max_abs(exact - sampled) / range);
  }

  double eff = 0, sym = 0, null = 0, add = 0, scale = 0;
  Index games = 0;
  for (int t = 0; t < 120; ++t) {
    const Index d = 2 + t % 7;
    const auto v1 = test::random_game(rng, d), v2 = test::random_game(rng, d);
    const Vector p1 = game_shapley(v1, d), p2 = game_shapley(v2, d);
    const std::size_t full = (std::size_t{1} << d) - 1;
    eff = std::max(eff, std::abs(p1.sum() - (v1[full] - v1[0])));

    // Relabel features by a random permutation.
    std::vector<Index> pi(d);
    std::iota(pi.begin(), pi.end(), 0);
    std::shuffle(pi.begin(), pi.end(), rng);
    std::vector<double> vp(v1.size());
    for (std::size_t s = 0; s <= full; ++s) {
      std::size_t image = 0;
      for (Index i = 0; i < d; ++i)
        if (s >> i & 1) image |= std::size_t{1} << pi[i];
      vp[s] = v1[image];
    }
    const Vector pp = game_shapley(vp, d);
    for (Index i = 0; i < d; ++i) sym = std::max(sym, std::abs(pp(i) - p1(pi[i])));

    // Exchangeable pair (0, 1): symmetrize under their swap.
    std::vector<double> vs(v1.size());
    for (std::size_t s = 0; s <= full; ++s) {
      std::size_t sw = s & ~std::size_t{3};
      if (s & 1) sw |= 2;
      if (s & 2) sw |= 1;
      vs[s] = v1[s] + v1[sw];
    }
    const Vector ps = game_shapley(vs, d);
    sym = std::max(sym, std::abs(ps(0) - ps(1)));

    // Feature d-1 never matters.
    const std::size_t last = std::size_t{1} << (d - 1);
    std::vector<double> vn(v1.size());
    for (std::size_t s = 0; s <= full; ++s) vn[s] = v1[s & ~last];
    null = std::max(null, std::abs(game_shapley(vn, d)(d - 1)));

    std::vector<double> vsum(v1.size()), vsc(v1.size());
    const double c = std::uniform_real_distribution<double>(-3, 3)(rng);
    for (std::size_t s = 0; s <= full; ++s) {
      vsum[s] = v1[s] + v2[s];
      vsc[s] = c * v1[s];
    }
    add = std::max(add, max_abs(game_shapley(vsum, d) - (p1 + p2)));
    scale = std::max(scale, max_abs(game_shapley(vsc, d) - c * p1));
    ++games;
  }
  // Model games as well.
  for (int t = 0; t < 30; ++t) {
    const Index d = 2 + t % 7;
    const auto m = test::random_mlp(d, 2, 900 + t);
    const Vector x = test::random_vector(rng, d), bg = test::random_vector(rng, d);
    const Vector p = shapley_exact(*m, x, bg, 0).values;
    eff = std::max(eff, std::abs(p.sum() - (m->predict(x)(0) - m->predict(bg)(0))));
    ++games;
  }
  const double tol = 1e-10;
  const bool ok = worst_ratio < 0.01 && eff <= tol && sym <= tol && null <= tol && add <= tol &&
                  scale <= tol;
  return {ok, "sampled vs exact max err/range " + fmt_double(worst_ratio) + " at 20000 samples; " +
                  std::to_string(games) + " games: efficiency " + fmt_double(eff, 2) +
                  ", symmetry " + fmt_double(sym, 2) + ", null " + fmt_double(null, 2) +
                  ", additivity " + fmt_double(add, 2) + ", scaling " + fmt_double(scale, 2)};
}

// ---------------------------------------------------------------- 6
Outcome criterion6() {
  std::mt19937_64 rng(66);
  double dividend_err = 0;
  Index games = 0;
  for (Index d = 1; d <= 6; ++d) {
    for (int t = 0; t < 40; ++t) {
      const auto v = test::random_game(rng, d);
      const Vector phi = game_shapley(v, d);
      Vector from_div = Vector::Zero(d);
      for (std::uint64_t s = 1; s < (std::uint64_t{1} << d); ++s) {
        const double D = harsanyi_dividend(v, s);
        for (Index i = 0; i < d; ++i)
          if (s >> i & 1) from_div(i) += D / test::popcount(s);
      }
      dividend_err = std::max(dividend_err, max_abs(phi - from_div));
      dividend_err = std::max(dividend_err, max_abs(phi - test::shapley_from_dividends(v, d)));
      ++games;
    }
  }

  // A_SHAP pipeline against the weighted double sum over dividends.
  double pipeline_err = 0;
  Index cases = 0;
  SyntheticSpec syn;
  syn.num_features = 6;
  syn.num_informative = 3;
  syn.num_points = 120;
  DatasetSpec synth;
  synth.name = "synthetic6";
  synth.synthetic = syn;
  synth.label_column = "label";
  for (const DatasetSpec& spec : {test::iris_spec(), synth}) {
    const SplitDataset s = load_dataset(spec, 0);
    TrainConfig tc;
    tc.hidden = {8, 8};
    tc.epochs = 300;
    tc.adam.step = 0.01;
    const auto model = train_mlp(s.train, tc);
    const Index d = s.train.dim();
    const Vector bg = s.train.feature_mean();
    for (Index k = 1; k <= 3; ++k) {
      AvaConfig cfg;
      cfg.k = k;
      cfg.solver.method = SolverMethod::exact;
      const Explainer ex(*model, s.train, cfg);
      for (Index t = 0; t < 8; ++t) {
        const auto c = ex.ava_shap(s.test.point(t), s.test.labels(t), t);
        double rho = 0;
        for (Index j = 0; j < k; ++j) rho += c.neighborhood.weights(j);
        Vector oracle = Vector::Zero(d);
        for (Index j = 0; j < k; ++j) {
          const CoalitionValue v(*model, s.train.point(c.neighborhood.indices[j]), bg, c.output);
          for (std::uint64_t S = 1; S < (std::uint64_t{1} << d); ++S) {
            const double D = harsanyi_dividend(v, S);
            for (Index i = 0; i < d; ++i) {
              if (S >> i & 1) {
                oracle(i) += c.neighborhood.weights(j) * D / (rho * test::popcount(S));
              }
            }
          }
        }
        pipeline_err = std::max(pipeline_err, max_abs(c.values - oracle));
        ++cases;
      }
    }
  }
  const bool ok = dividend_err <= 1e-10 && pipeline_err <= 1e-10;
  return {ok, std::to_string(games) + " games d<=6: max |phi - dividend form| " +
                  fmt_double(dividend_err, 2) + "; " + std::to_string(cases) +
                  " A_SHAP cases (d=4,6; k<=3): max deviation " + fmt_double(pipeline_err, 2)};
}

// ---------------------------------------------------------------- 7
Outcome criterion7() {
  std::mt19937_64 rng(77);
  const SplitDataset iris = load_dataset(test::iris_spec(), 0);
  std::vector<PredictorPtr> models;
  for (int i = 0; i < 5; ++i) models.push_back(test::random_mlp(4, 3, 700 + i));
  TrainConfig tc;
  tc.epochs = 300;
  models.push_back(train_mlp(iris.train, tc));
  Index pairs = 0, bad = 0;
  double worst = 0;
  for (int t = 0; t < 120; ++t) {
    const Predictor& m = *models[t % models.size()];
    const Vector x = test::random_vector(rng, 4, -2, 2), b = test::random_vector(rng, 4, -2, 2);
    const Index out = t % 3;
    const Attribution a = integrated_gradients(m, x, b, out, 512);
    const double gap = std::abs(m.predict(x)(out) - m.predict(b)(out));
    const double bound = 1e-3 * gap + 1e-6;
    worst = std::max(worst, a.completeness_residual / bound);
    if (a.completeness_residual > bound) ++bad;
    ++pairs;
  }
  double linear_worst = 0;
  for (int t = 0; t < 50; ++t) {
    const Vector w = test::random_vector(rng, 5, -3, 3);
    const auto lin = test::linear_score(w);
    const Vector x = test::random_vector(rng, 5), b = test::random_vector(rng, 5);
    for (int steps : {1, 2, 7, 512}) {
      const Attribution a = integrated_gradients(*lin, x, b, 0, steps);
      linear_worst = std::max(linear_worst, max_abs(a.values - w.cwiseProduct(x - b)));
      linear_worst = std::max(linear_worst, a.completeness_residual);
    }
  }
  const bool ok = bad == 0 && linear_worst <= 1e-13;
  return {ok, std::to_string(pairs - bad) + "/" + std::to_string(pairs) +
                  " sigmoid pairs within bound (worst residual/bound " + fmt_double(worst) +
                  "); linear max error " + fmt_double(linear_worst, 2)};
}

// ---------------------------------------------------------------- 8
Outcome criterion8() {
  std::mt19937_64 rng(88);
  const SplitDataset iris = load_dataset(test::iris_spec(), 0);
  std::vector<Index> rows;
  for (Index j = 0; j < 12; ++j) rows.push_back((9 * j) % iris.train.size());
  const Dataset small = iris.train.subset(rows);

  std::vector<PredictorPtr> models;
  for (auto act : {Activation::sigmoid, Activation::relu}) {
    TrainConfig tc;
    tc.activation = act;
    tc.hidden = {3, 3};
    tc.epochs = 200;
    tc.adam.step = 0.01;
    models.push_back(train_mlp(iris.train, tc));
  }
  models.push_back(train_svm_rbf(small, {}));
  models.push_back(train_linear(test::linear_blobs(80, 4, 8), {}));
  const SoftKnn soft(iris.train.features, iris.train.labels, 3, 0.5);

  double gin = 0, gpar = 0;
  auto check_input = [&](const Predictor& m) {
    for (int probe = 0; probe < 100; ++probe) {
      const Vector x = test::random_vector(rng, 4, -1.5, 1.5);
      const Index out = probe % m.output_dim();
      const Vector fd = test::fd_gradient([&](const Vector& z) { return m.predict(z)(out); }, x);
      gin = std::max(gin, test::rel_err(m.grad_input(x, out), fd));
    }
  };
  for (const auto& m : models) {
    check_input(*m);
    const nlohmann::json blob = m->to_json();
    for (int probe = 0; probe < 100; ++probe) {
      const Vector x = test::random_vector(rng, 4, -1.5, 1.5);
      const double y = probe % m->output_dim();
      auto loss_at = [&](const Vector& th) {
        nlohmann::json j = blob;
        j["theta"] = std::vector<double>(th.data(), th.data() + th.size());
        return predictor_from_json(j)->loss(x, y);
      };
      const Vector g = m->grad_params(x, y);
      if (g.norm() == 0.0) continue;  // outside the squared-hinge margin
      gpar = std::max(gpar, test::rel_err(g, test::fd_gradient(loss_at, m->parameters())));
    }
  }
  check_input(soft);

  // Hessian oracle: finite differences of the mean training gradient.
  double hv = 0, cg = 0;
  for (std::size_t mi = 0; mi < 3; ++mi) {
    const Predictor& m = *models[mi];
    const Dataset& data = mi == 2 ? small : iris.train;
    const nlohmann::json blob = m.to_json();
    const Index p = m.num_parameters();
    auto mean_grad = [&](const Vector& th) {
      nlohmann::json j = blob;
      j["theta"] = std::vector<double>(th.data(), th.data() + th.size());
      const PredictorPtr q = predictor_from_json(j);
      Vector g = Vector::Zero(p);
      for (Index n = 0; n < data.size(); ++n) g += q->grad_params(data.point(n), data.labels(n));
      return Vector(g / static_cast<double>(data.size()));
    };
    Matrix H(p, p);
    const double h = 1e-5;
    for (Index i = 0; i < p; ++i) {
      auto at = [&](double s) {
        Vector t = m.parameters();
        t(i) += s * h;
        return mean_grad(t);
      };
      H.col(i) = (at(1) - at(-1)) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose());
    if (mi < 2) {
      H += dynamic_cast<const Mlp&>(m).weight_decay() * Matrix::Identity(p, p);
    } else {
      const auto& svm = dynamic_cast<const RbfSvm&>(m);
      const Index n = data.size();
      Matrix K(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
          K(i, j) = std::exp(-svm.config().gamma * (data.point(i) - data.point(j)).squaredNorm());
      for (Index c = 0; c < svm.output_dim(); ++c)
        H.block(c * (n + 1), c * (n + 1), n, n) += K / (svm.config().c * n);
    }
    for (int t = 0; t < 10; ++t) {
      const Vector v = test::random_vector(rng, p);
      hv = std::max(hv, test::rel_err(m.hvp(data, v, 0.0), H * v));
    }
    // CG needs H + damping I positive definite.
    const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(H).eigenvalues().minCoeff();
    SolverConfig cgc, ex;
    cgc.damping = ex.damping = std::max(0.01, 0.01 - lmin);
    cgc.tol = 1e-10;
    ex.method = SolverMethod::exact;
    const Vector b = test::random_vector(rng, p);
    cg = std::max(cg, test::rel_err(inverse_hvp(m, data, b, cgc), inverse_hvp(m, data, b, ex)));
  }
  {
    // Logistic regression: closed-form Hessian.
    const Dataset d = test::linear_blobs(80, 4, 8);
    const auto& lin = dynamic_cast<const LinearModel&>(*models[3]);
    const Index p = lin.num_parameters();
    Matrix H = lin.config().l2 * Matrix::Identity(p, p);
    for (Index j = 0; j < d.size(); ++j) {
      Vector z(p);
      z << d.point(j), 1.0;
      const double s = 1.0 / (1.0 + std::exp(-lin.score(d.point(j))));
      H += s * (1 - s) * z * z.transpose() / static_cast<double>(d.size());
    }
    for (int t = 0; t < 10; ++t) {
      const Vector v = test::random_vector(rng, p);
      hv = std::max(hv, test::rel_err(lin.hvp(d, v, 0.0), H * v));
    }
    SolverConfig cgc, ex;
    cgc.tol = 1e-10;
    ex.method = SolverMethod::exact;
    const Vector b = test::random_vector(rng, p);
    cg = std::max(cg, test::rel_err(inverse_hvp(lin, d, b, cgc), inverse_hvp(lin, d, b, ex)));
  }
  const bool ok = gin < 1e-4 && gpar < 1e-4 && hv < 1e-8 && cg < 1e-6;
  return {ok, "grad_input " + fmt_double(gin, 2) + ", grad_params " + fmt_double(gpar, 2) +
                  ", hvp " + fmt_double(hv, 2) + ", cg vs exact " + fmt_double(cg, 2)};
}

// ---------------------------------------------------------------- 9
Outcome criterion9() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index cases = 1000;
  Index scale_bad = 0, pow2_bad = 0, hull_bad = 0, perm_bad = 0, single_bad = 0;
  double scale_dev = 0, perm_dev = 0;
  for (Index t = 0; t < cases; ++t) {
    const Index k = 1 + t % 12, d = 1 + t % 9;
    std::vector<Vector> g(k);
    const double mag = std::pow(10.0, std::uniform_real_distribution<double>(-3, 3)(rng));
    for (auto& v : g) {
      v.resize(d);
      for (Index i = 0; i < d; ++i) v(i) = mag * normal(rng);
    }
    Vector w(k);
    for (Index j = 0; j < k; ++j) w(j) = unit(rng) < 0.1 ? 0.0 : unit(rng);
    if (w.sum() == 0.0) w(0) = 0.5;
    const Vector a = aggregate_weighted(g, w);

    const double c = std::pow(10.0, std::uniform_real_distribution<double>(-4, 4)(rng));
    const Vector ac = aggregate_weighted(g, c * w);
    if (ac != a) ++scale_bad;
    scale_dev = std::max(scale_dev, max_abs(ac - a) / std::max(max_abs(a), 1e-300));
    const double c2 = std::ldexp(1.0, static_cast<int>(t % 40) - 20);
    if (aggregate_weighted(g, c2 * w) != a) ++pow2_bad;

    for (Index i = 0; i < d; ++i) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& v : g) lo = std::min(lo, v(i)), hi = std::max(hi, v(i));
      if (a(i) < lo || a(i) > hi) ++hull_bad;
    }

    std::vector<Index> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vector> gp(k);
    Vector wp(k);
    for (Index j = 0; j < k; ++j) gp[j] = g[perm[j]], wp(j) = w(perm[j]);
    const double dev = max_abs(aggregate_weighted(gp, wp) - a);
    double scale = 0;
    for (const auto& v : g) scale = std::max(scale, max_abs(v));
    perm_dev = std::max(perm_dev, dev / scale);
    if (dev > 1e-12 * scale) ++perm_bad;

    const double w1 = unit(rng) + 1e-3;
    if (aggregate_weighted({g[0]}, Vector::Constant(1, w1)) != g[0]) ++single_bad;
  }
  const bool ok = scale_bad == 0 && hull_bad == 0 && perm_bad == 0 && single_bad == 0;
  std::ostringstream os;
  os << cases << " cases: scale invariance bitwise for arbitrary c " << cases - scale_bad << "/"
     << cases << " (max rel deviation " << fmt_double(scale_dev, 2) << "; powers of two "
     << cases - pow2_bad << "/" << cases << "), hull violations " << hull_bad << ", permutation " << cases - perm_bad << "/"
     << cases << " (max rel " << fmt_double(perm_dev, 2) << "), k=1 identity "
     << cases - single_bad << "/" << cases;
  return {ok, os.str()};
}

// ---------------------------------------------------------------- 10
Outcome criterion10() {
  RunConfig c = repo_config("iris.json");
  c.benchmark.methods = {EvalMethod::ava_shap, EvalMethod::ava_ig};
  for (Index k = 8; k <= 16; ++k) c.benchmark.k_values.push_back(k);
  const EvalReport r = run_benchmark(c.benchmark);
  std::cout << r.k_curve_tsv();
  bool ok = r.all_ok();
  std::string detail;
  std::map<EvalMethod, std::map<Index, double>> curve;
  for (const auto& cell : r.cells) {
    for (const auto& [method, pts] : cell.k_curve) {
      for (const auto& [k, rec] : pts) curve[method][k] += rec / static_cast<double>(r.cells.size());
    }
  }
  for (auto method : {EvalMethod::ava_shap, EvalMethod::ava_ig}) {
    double lo = 1e9, hi = -1e9;
    for (const auto& [k, rec] : curve[method]) lo = std::min(lo, rec), hi = std::max(hi, rec);
    ok = ok && hi - lo < 5.0;
    detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(method)) +
              " k in [8,16] spans " + fmt_double(lo) + ".." + fmt_double(hi) + " (" +
              fmt_double(hi - lo) + " points)";
  }
  // Diagnostic only: the fixed zero baseline.
  BenchmarkConfig zero = c.benchmark;
  zero.methods = {EvalMethod::ava_ig};
  zero.ava.ig_baseline = IgBaseline::zero;
  const EvalReport rz = run_benchmark(zero);
  double lo = 1e9, hi = -1e9;
  std::map<Index, double> zc;
  for (const auto& cell : rz.cells)
    for (const auto& [k, rec] : cell.k_curve.at(EvalMethod::ava_ig))
      zc[k] += rec / static_cast<double>(rz.cells.size());
  for (const auto& [k, rec] : zc) lo = std::min(lo, rec), hi = std::max(hi, rec);
  detail += "; diagnostic ava_ig zero baseline spans " + fmt_double(lo) + ".." + fmt_double(hi);
  return {ok, detail};
}

// ---------------------------------------------------------------- 11
Outcome criterion11() {
  std::vector<Vector> attributions;
  std::mt19937_64 rng(111);
  const SplitDataset iris = load_dataset(test::iris_spec(), 0);
  TrainConfig tc;
  tc.epochs = 300;
  tc.adam.step = 0.01;
  const auto mlp = train_mlp(iris.train, tc);
  AvaConfig cfg;
  cfg.solver.method = SolverMethod::exact;
  for (auto baseline : {IgBaseline::neighborhood_mean, IgBaseline::zero}) {
    cfg.ig_baseline = baseline;
    const Explainer ex(*mlp, iris.train, cfg);
    for (Index t = 0; t < iris.test.size(); ++t) {
      const Vector x = iris.test.point(t);
      const Index out = ex.target_output(x);
      attributions.push_back(ex.ava_ig(x, iris.test.labels(t), t).values);
      if (baseline == IgBaseline::zero) continue;
      const auto c = ex.ava_shap(x, iris.test.labels(t), t);
      attributions.push_back(c.values);
      for (const auto& a : c.per_point) attributions.push_back(a.values);
      attributions.push_back(ex.shap(x, out, t).values);
      attributions.push_back(ex.ig(x, out, t).values);
    }
  }
  const auto knn = train_knn(iris.train, 5);
  const Explainer kx(*knn, iris.train, cfg);
  for (Index t = 0; t < 10; ++t) {
    attributions.push_back(kx.ava_shap(iris.test.point(t), iris.test.labels(t), t).values);
  }
  for (int t = 0; t < 200; ++t) {
    const Index d = 2 + t % 7;
    const auto m = test::random_mlp(d, 2, 3000 + t);
    const Vector x = test::random_vector(rng, d), b = test::random_vector(rng, d);
    attributions.push_back(shapley_exact(*m, x, b, 0).values);
    attributions.push_back(shapley_sampled(*m, x, b, 1, 20, t).values);
    attributions.push_back(integrated_gradients(*m, x, b, 0, 32).values);
  }
  Index checked = 0, bad = 0, zero = 0;
  double excess = 0;  // relative distance outside the bounds
  for (const auto& g : attributions) {
    if (g.cwiseAbs().maxCoeff() == 0.0) {
      ++zero;  // undefined normalization; the function rejects it
      continue;
    }
    const Index d = g.size();
    for (Index m = 1; m <= d; ++m) {
      const double v = mean_feature_importance(g, m);
      ++checked;
      if (v < 1.0 / d || v > 1.0 / m) ++bad;
      excess = std::max({excess, d * (1.0 / d - v), m * (v - 1.0 / m)});
    }
  }
  Index boundary = 0, boundary_bad = 0;
  for (Index d = 1; d <= 12; ++d) {
    for (double c : {1.0, 0.1, 0.7, 3.3, 1e-7, 12345.678}) {
      ++boundary;
      if (mean_feature_importance(Vector::Constant(d, c), 1 + (d - 1) / 2) != 1.0 / d) {
        ++boundary_bad;
      }
      for (Index m = 1; m <= d; ++m) {
        Vector g = Vector::Zero(d);
        for (Index i = 0; i < m; ++i) g((i * 5) % d == i ? i : (d - 1 - i)) = c;
        if ((g.array() != 0).count() != m) {
          g.setZero();
          g.head(m).setConstant(c);
        }
        ++boundary;
        if (mean_feature_importance(g, m) != 1.0 / m) ++boundary_bad;
      }
    }
  }
  const bool ok = bad == 0 && boundary_bad == 0;
  return {ok, std::to_string(attributions.size()) + " attributions, " + std::to_string(checked) +
                  " (attribution, m) pairs, violations " + std::to_string(bad) +
                  " (max relative excess " + fmt_double(excess, 2) + ", all-zero skipped: " + std::to_string(zero) + "); boundary cases exact " +
                  std::to_string(boundary - boundary_bad) + "/" + std::to_string(boundary)};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria{
      {1, {"random baseline", criterion1}},
      {2, {"iris mlp-sigmoid directional (ava_shap >= shap > random, ava_shap 91+-15)", criterion2}},
      {3, {"synthetic mlp-relu directional (ava_ig >= ig)", criterion3}},
      {4, {"influence vs leave-one-out (Pearson >= 0.9)", criterion4}},
      {5, {"shapley sampled vs exact and axioms", criterion5}},
      {6, {"harsanyi consistency and A_SHAP dividend form", criterion6}},
      {7, {"IG completeness", criterion7}},
      {8, {"gradient, hvp and cg numerics", criterion8}},
      {9, {"aggregation invariants", criterion9}},
      {10, {"k-sensitivity on iris (< 5 points over k in [8,16])", criterion10}},
      {11, {"MFI bounds", criterion11}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& [n, _] : criteria) selected.push_back(n);

  int failed = 0;
  for (int n : selected) {
    const auto it = criteria.find(n);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << n << '\n';
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << n << ": " << it->second.first
              << " | " << o.detail << " | " << fmt_double(secs, 3) << "s" << std::endl;
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
