#include "ava/evaluation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace ava {

namespace {

std::string fmt(double v, int digits) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join(const std::vector<Index>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

std::string column_title(EvalMethod m) {
  switch (m) {
    case EvalMethod::random:
      return "RANDOM";
    case EvalMethod::shap:
      return "SHAP";
    case EvalMethod::ig:
      return "IG";
    case EvalMethod::ava_shap:
      return "A_SHAP";
    case EvalMethod::ava_ig:
      return "A_IG";
  }
  return "?";
}

bool is_ava(EvalMethod m) { return m == EvalMethod::ava_shap || m == EvalMethod::ava_ig; }

ConsensusMethod consensus_method(EvalMethod m) {
  return m == EvalMethod::ava_shap ? ConsensusMethod::ava_shap : ConsensusMethod::ava_ig;
}

// Distinct sampling stream per (cell seed, purpose).
constexpr std::uint64_t kRandomStream = 0x52414e44ULL;
constexpr std::uint64_t kCvStream = 0x43560000ULL;

}  // namespace

GoldSet gold_set(const Dataset& train, Index m) {
  if (m < 1) throw ConfigError("m must be >= 1");
  TreeConfig tc;
  tc.max_features = m;
  const auto tree = train_decision_tree(train, tc);
  GoldSet g;
  g.m = m;
  g.features = tree->ranked_features();
  std::sort(g.features.begin(), g.features.end());
  if (g.features.empty()) {
    throw DataError("the pruned decision tree is a single leaf; no gold features to evaluate");
  }
  g.source = tree->to_json();
  return g;
}

Index select_m(const Dataset& train, const std::vector<Index>& m_candidates, Index folds,
               std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross validation needs at least 2 folds");
  if (m_candidates.empty()) throw ConfigError("no candidate values for m");
  if (train.size() < folds) throw DataError("fewer training points than folds");
  for (Index m : m_candidates) {
    if (m < 1) throw ConfigError("candidate m must be >= 1");
  }
  std::vector<Index> order(train.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed ^ kCvStream);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Index> sorted = m_candidates;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  // Folds partition the data, so total hits orders candidates exactly like
  // mean accuracy.
  Index best_m = sorted.front();
  Index best_hits = -1;
  for (Index m : sorted) {
    Index hits = 0;
    for (Index f = 0; f < folds; ++f) {
      std::vector<Index> fit, held;
      for (Index i = 0; i < train.size(); ++i) (i % folds == f ? held : fit).push_back(order[i]);
      std::sort(fit.begin(), fit.end());
      std::sort(held.begin(), held.end());
      TreeConfig tc;
      tc.max_features = m;
      const auto tree = train_decision_tree(train.subset(fit), tc);
      for (Index j : held) {
        if (tree->predicted_class(train.point(j)) == train.label(j)) ++hits;
      }
    }
    if (hits > best_hits) {
      best_hits = hits;
      best_m = m;
    }
  }
  return best_m;
}

std::vector<Index> top_m_by_magnitude(const Vector& g, Index m) {
  if (m < 0 || m > g.size()) throw ConfigError("m must lie in [0, d]");
  std::vector<Index> order(g.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(g(a)) > std::abs(g(b)); });
  order.resize(m);
  return order;
}

double recall_at_gold(const Vector& g, const GoldSet& gold) {
  if (gold.features.empty()) throw DataError("empty gold set");
  if (!g.allFinite()) throw DataError("attribution has non-finite entries");
  const auto top = top_m_by_magnitude(g, std::min(gold.m, g.size()));
  Index hit = 0;
  for (Index i : top) {
    if (std::binary_search(gold.features.begin(), gold.features.end(), i)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(gold.features.size());
}

RandomBaseline random_baseline(Index d, const GoldSet& gold, Index n_trials, std::uint64_t seed) {
  if (gold.m < 1 || gold.m > d) throw ConfigError("random baseline needs 1 <= m <= d");
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (gold.features.empty()) throw DataError("empty gold set");
  std::mt19937_64 rng(seed);
  std::vector<Index> pool(d);
  std::vector<char> in_gold(d, 0);
  for (Index i : gold.features) {
    if (i < 0 || i >= d) throw DataError("gold feature outside [0, d)");
    in_gold[i] = 1;
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  const double denom = static_cast<double>(gold.features.size());
  for (Index t = 0; t < n_trials; ++t) {
    std::iota(pool.begin(), pool.end(), Index{0});
    Index hit = 0;
    // Partial Fisher-Yates: the first m slots are a uniform m-subset.
    for (Index i = 0; i < gold.m; ++i) {
      std::uniform_int_distribution<Index> pick(i, d - 1);
      std::swap(pool[i], pool[pick(rng)]);
      hit += in_gold[pool[i]];
    }
    const double r = static_cast<double>(hit) / denom;
    sum += r;
    sum_sq += r * r;
  }
  RandomBaseline out;
  out.n_trials = n_trials;
  out.mean = sum / static_cast<double>(n_trials);
  out.variance = n_trials > 1 ? std::max(0.0, (sum_sq - sum * out.mean) /
                                                  static_cast<double>(n_trials - 1))
                              : 0.0;
  return out;
}

RandomBaseline random_baseline(Index d, Index m, Index n_trials, std::uint64_t seed) {
  if (m < 1 || m > d) throw ConfigError("random baseline needs 1 <= m <= d");
  GoldSet g;
  g.m = m;
  g.features.resize(m);
  std::iota(g.features.begin(), g.features.end(), Index{0});
  return random_baseline(d, g, n_trials, seed);
}

double mean_feature_importance(const Vector& g, Index m) {
  if (m < 1 || m > g.size()) throw ConfigError("m must lie in [1, d]");
  const double peak = g.cwiseAbs().maxCoeff();
  if (!(peak > 0.0) || !std::isfinite(peak)) {
    throw DataError("mean feature importance is undefined for an all-zero attribution");
  }
  // Relative to the largest entry, equal magnitudes become exactly 1, so the
  // uniform and the m-concentrated cases reduce to integer ratios.
  const Vector a = g.cwiseAbs() / peak;
  std::vector<bool> in_top(static_cast<std::size_t>(a.size()), false);
  for (Index i : top_m_by_magnitude(g, m)) in_top[static_cast<std::size_t>(i)] = true;
  double top = 0.0, rest = 0.0;
  for (Index i = 0; i < a.size(); ++i) (in_top[static_cast<std::size_t>(i)] ? top : rest) += a(i);
  // The exact value lies in [1/d, 1/m]; rounding can leave it an ulp outside.
  const double v = top / ((top + rest) * static_cast<double>(m));
  return std::clamp(v, 1.0 / static_cast<double>(a.size()), 1.0 / static_cast<double>(m));
}

std::string_view to_string(EvalMethod m) {
  switch (m) {
    case EvalMethod::random:
      return "random";
    case EvalMethod::shap:
      return "shap";
    case EvalMethod::ig:
      return "ig";
    case EvalMethod::ava_shap:
      return "ava_shap";
    case EvalMethod::ava_ig:
      return "ava_ig";
  }
  return "?";
}

EvalMethod eval_method_from_string(std::string_view name) {
  if (name == "random") return EvalMethod::random;
  if (name == "shap") return EvalMethod::shap;
  if (name == "ig") return EvalMethod::ig;
  if (name == "ava_shap") return EvalMethod::ava_shap;
  if (name == "ava_ig") return EvalMethod::ava_ig;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (valid: random, shap, ig, ava_shap, ava_ig)");
}

void BenchmarkConfig::validate() const {
  if (datasets.empty()) throw ConfigError("benchmark lists no datasets");
  if (models.empty()) throw ConfigError("benchmark lists no models");
  if (methods.empty()) throw ConfigError("benchmark lists no methods");
  if (seeds.empty()) throw ConfigError("benchmark lists no seeds");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (random_trials < 1) throw ConfigError("random_trials must be >= 1");
  if (max_test_points < 0) throw ConfigError("max_test_points must be >= 0");
  if (m_policy.fixed && *m_policy.fixed < 1) throw ConfigError("m must be >= 1");
  if (m_policy.folds < 2) throw ConfigError("m selection needs at least 2 folds");
  for (Index k : k_values) {
    if (k < 1) throw ConfigError("k values must be >= 1");
  }
  for (const auto& d : datasets) d.validate();
  for (const auto& m : models) m.validate();
  ava.validate();
}

nlohmann::json CellResult::to_json() const {
  nlohmann::json j{{"dataset", dataset}, {"model", model}, {"seed", seed},
                   {"ok", ok},           {"dim", dim},     {"m", m},
                   {"gold", gold},       {"test_accuracy", test_accuracy},
                   {"test_points", test_points}};
  if (!ok) j["error"] = error;
  nlohmann::json s = nlohmann::json::object();
  for (const auto& [method, score] : scores) {
    nlohmann::json e{{"recall", score.recall}, {"points", score.points},
                     {"failures", score.failures}};
    e["mfi"] = score.mfi ? nlohmann::json(*score.mfi) : nlohmann::json(nullptr);
    if (!score.first_error.empty()) e["first_error"] = score.first_error;
    s[std::string(to_string(method))] = std::move(e);
  }
  j["scores"] = std::move(s);
  if (!k_curve.empty()) {
    nlohmann::json kc = nlohmann::json::object();
    for (const auto& [method, curve] : k_curve) {
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& [k, r] : curve) pts.push_back({{"k", k}, {"recall", r}});
      kc[std::string(to_string(method))] = std::move(pts);
    }
    j["k_curve"] = std::move(kc);
  }
  return j;
}

bool EvalReport::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) {
    if (!c.ok) return false;
    for (const auto& [m, s] : c.scores) {
      if (s.failures > 0) return false;
    }
    return true;
  });
}

std::optional<double> EvalReport::mean_recall(const std::string& dataset,
                                              const std::string& model,
                                              EvalMethod method) const {
  double sum = 0.0;
  Index n = 0;
  for (const auto& c : cells) {
    if (!c.ok || c.dataset != dataset || c.model != model) continue;
    const auto it = c.scores.find(method);
    if (it == c.scores.end() || it->second.points == 0) continue;
    sum += it->second.recall;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "dataset,model,seed,method,status,m,gold,test_accuracy,points,recall,mfi,failures\n";
  for (const auto& c : cells) {
    if (!c.ok) {
      out << c.dataset << ',' << c.model << ',' << c.seed << ",,error," << c.m << ",\""
          << join(c.gold, ' ') << "\",,,,,\n";
      continue;
    }
    for (const auto& [method, s] : c.scores) {
      out << c.dataset << ',' << c.model << ',' << c.seed << ',' << to_string(method) << ','
          << (s.failures == 0 ? "ok" : "partial") << ',' << c.m << ",\"" << join(c.gold, ' ')
          << "\"," << fmt(c.test_accuracy, 6) << ',' << s.points << ',' << fmt(s.recall, 6) << ','
          << (s.mfi ? fmt(*s.mfi, 6) : std::string()) << ',' << s.failures << '\n';
    }
  }
  return out.str();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : cells) cs.push_back(c.to_json());
  return {{"config", config}, {"cells", std::move(cs)}};
}

namespace {

struct RowKey {
  std::string dataset;
  std::string model;
  bool operator<(const RowKey& o) const {
    return std::tie(dataset, model) < std::tie(o.dataset, o.model);
  }
};

// Rows in first-appearance order, methods in enum order.
template <typename Get>
std::string method_table(const std::vector<CellResult>& cells, Get get) {
  std::vector<RowKey> rows;
  std::vector<EvalMethod> methods;
  for (const auto& c : cells) {
    const RowKey key{c.dataset, c.model};
    if (std::none_of(rows.begin(), rows.end(), [&](const RowKey& r) {
          return r.dataset == key.dataset && r.model == key.model;
        })) {
      rows.push_back(key);
    }
    for (const auto& [m, s] : c.scores) {
      if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
    }
  }
  std::sort(methods.begin(), methods.end());
  std::ostringstream out;
  out << "dataset\tmodel";
  for (auto m : methods) out << '\t' << column_title(m);
  out << '\n';
  for (const auto& r : rows) {
    out << r.dataset << '\t' << r.model;
    for (auto m : methods) {
      double sum = 0.0;
      Index n = 0;
      for (const auto& c : cells) {
        if (!c.ok || c.dataset != r.dataset || c.model != r.model) continue;
        const auto it = c.scores.find(m);
        if (it == c.scores.end()) continue;
        if (const auto v = get(it->second)) {
          sum += *v;
          ++n;
        }
      }
      out << '\t' << (n > 0 ? fmt(sum / static_cast<double>(n), 1) : std::string("-"));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string EvalReport::recall_table_tsv() const {
  return method_table(cells, [](const MethodScore& s) -> std::optional<double> {
    if (s.points == 0) return std::nullopt;
    return s.recall;
  });
}

std::string EvalReport::mfi_table_tsv() const {
  return method_table(cells, [](const MethodScore& s) { return s.mfi; });
}

std::string EvalReport::k_curve_tsv() const {
  std::map<std::tuple<std::string, std::string, EvalMethod, Index>, std::pair<double, Index>> acc;
  for (const auto& c : cells) {
    if (!c.ok) continue;
    for (const auto& [method, curve] : c.k_curve) {
      for (const auto& [k, r] : curve) {
        auto& e = acc[{c.dataset, c.model, method, k}];
        e.first += r;
        e.second += 1;
      }
    }
  }
  std::ostringstream out;
  out << "dataset\tmodel\tmethod\tk\trecall\n";
  for (const auto& [key, v] : acc) {
    const auto& [dataset, model, method, k] = key;
    out << dataset << '\t' << model << '\t' << to_string(method) << '\t' << k << '\t'
        << fmt(v.first / static_cast<double>(v.second), 3) << '\n';
  }
  return out.str();
}

std::map<EvalMethod, std::vector<std::pair<Index, double>>> k_sweep(
    const Explainer& explainer, const Dataset& test, const GoldSet& gold,
    const std::vector<Index>& k_values, const std::vector<EvalMethod>& methods) {
  if (k_values.empty()) throw ConfigError("k sweep needs at least one k");
  for (Index k : k_values) {
    if (k < 1 || k > explainer.train().size()) {
      throw ConfigError("k = " + std::to_string(k) + " outside [1, N_train]");
    }
  }
  if (test.size() == 0) throw DataError("k sweep over an empty test set");
  std::map<EvalMethod, std::vector<double>> sums;
  for (auto m : methods) {
    if (is_ava(m)) sums[m].assign(k_values.size(), 0.0);
  }
  for (Index t = 0; t < test.size(); ++t) {
    const Vector x = test.point(t);
    const Index output = explainer.target_output(x);
    const auto w = explainer.influence_weights(x, test.labels(t), t);
    const auto ranking = rank_by_influence(w);
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
      const auto nb = select_neighborhood(w, ranking, k_values[ki], explainer.config().zero_policy);
      for (auto& [m, s] : sums) {
        const auto c = explainer.consensus(consensus_method(m), x, nb, output, t);
        s[ki] += recall_at_gold(c.values, gold);
      }
    }
  }
  std::map<EvalMethod, std::vector<std::pair<Index, double>>> out;
  for (const auto& [m, s] : sums) {
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
      out[m].emplace_back(k_values[ki], 100.0 * s[ki] / static_cast<double>(test.size()));
    }
  }
  return out;
}

CellResult run_cell(const DatasetSpec& dataset, const ModelSpec& model_spec, std::uint64_t seed,
                    const BenchmarkConfig& config) {
  CellResult cell;
  cell.dataset = dataset.name;
  cell.model = model_spec.label();
  cell.seed = seed;
  try {
    const SplitDataset data = load_dataset(dataset, seed);
    const Dataset& train = data.train;
    cell.dim = train.dim();

    if (config.m_policy.fixed) {
      cell.m = *config.m_policy.fixed;
    } else {
      std::vector<Index> candidates = config.m_policy.candidates;
      if (candidates.empty()) {
        for (Index m = 1; m <= std::min<Index>(train.dim(), 8); ++m) candidates.push_back(m);
      }
      cell.m = select_m(train, candidates, config.m_policy.folds, seed);
    }
    if (cell.m > train.dim()) throw ConfigError("m exceeds the feature count");
    const GoldSet gold = gold_set(train, cell.m);
    cell.gold = gold.features;

    const PredictorPtr model = train_model(model_spec, train, seed);
    cell.test_accuracy = accuracy(*model, data.test);

    AvaConfig ava = config.ava;
    ava.seed = seed;
    const Explainer explainer(*model, train, ava);

    Index n_test = data.test.size();
    if (config.max_test_points > 0) n_test = std::min(n_test, config.max_test_points);
    cell.test_points = n_test;

    for (auto method : config.methods) {
      MethodScore& s = cell.scores[method];
      if (method == EvalMethod::random) {
        const auto r = random_baseline(train.dim(), gold, config.random_trials,
                                       derive_seed(seed ^ kRandomStream, 0));
        s.recall = 100.0 * r.mean;
        s.points = r.n_trials;
      }
    }

    std::map<EvalMethod, double> recall_sum, mfi_sum;
    std::map<EvalMethod, Index> mfi_count;
    for (Index t = 0; t < n_test; ++t) {
      const Vector x = data.test.point(t);
      const double y = data.test.labels(t);
      const Index output = explainer.target_output(x);
      std::optional<Neighborhood> nb;
      std::string nb_error;
      for (auto method : config.methods) {
        if (method == EvalMethod::random) continue;
        MethodScore& s = cell.scores[method];
        try {
          Vector g;
          switch (method) {
            case EvalMethod::shap:
              g = explainer.shap(x, output, t).values;
              break;
            case EvalMethod::ig:
              g = explainer.ig(x, output, t).values;
              break;
            default:
              if (!nb) nb = explainer.neighborhood(explainer.influence_weights(x, y, t), ava.k);
              g = explainer.consensus(consensus_method(method), x, *nb, output, t).values;
              break;
          }
          recall_sum[method] += recall_at_gold(g, gold);
          ++s.points;
          if (g.cwiseAbs().sum() > 0.0) {
            mfi_sum[method] += mean_feature_importance(g, std::min(gold.m, g.size()));
            ++mfi_count[method];
          }
        } catch (const Error& e) {
          ++s.failures;
          if (s.first_error.empty()) s.first_error = e.what();
        }
      }
    }
    for (auto& [method, s] : cell.scores) {
      if (method == EvalMethod::random) continue;
      if (s.points > 0) s.recall = 100.0 * recall_sum[method] / static_cast<double>(s.points);
      if (mfi_count[method] > 0) {
        s.mfi = mfi_sum[method] / static_cast<double>(mfi_count[method]);
      }
      if (s.failures > 0) {
        spdlog::warn("{} / {} / seed {}: {} failed on {} points: {}", cell.dataset, cell.model,
                     seed, to_string(method), s.failures, s.first_error);
      }
    }

    if (!config.k_values.empty()) {
      std::vector<EvalMethod> ava_methods;
      for (auto m : config.methods) {
        if (is_ava(m)) ava_methods.push_back(m);
      }
      if (!ava_methods.empty()) {
        Dataset test = data.test;
        if (n_test < test.size()) {
          std::vector<Index> keep(n_test);
          std::iota(keep.begin(), keep.end(), Index{0});
          test = test.subset(keep);
        }
        cell.k_curve = k_sweep(explainer, test, gold, config.k_values, ava_methods);
      }
    }
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
    spdlog::error("{} / {} / seed {} failed: {}", cell.dataset, cell.model, seed, e.what());
  }
  return cell;
}

EvalReport run_benchmark(const BenchmarkConfig& config) {
  config.validate();
  struct Job {
    const DatasetSpec* dataset;
    const ModelSpec* model;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& d : config.datasets) {
    for (const auto& m : config.models) {
      for (auto s : config.seeds) jobs.push_back({&d, &m, s});
    }
  }
  EvalReport report;
  report.cells.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      spdlog::info("cell {}/{}: {} / {} / seed {}", i + 1, jobs.size(), jobs[i].dataset->name,
                   jobs[i].model->label(), jobs[i].seed);
      report.cells[i] = run_cell(*jobs[i].dataset, *jobs[i].model, jobs[i].seed, config);
    }
  };
  const int n_workers = std::min<int>(config.jobs, static_cast<int>(jobs.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return report;
}

}  // namespace ava
