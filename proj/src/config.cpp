#include "ava/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace ava {

DatasetSpec default_dataset_spec() {
  DatasetSpec d;
  d.name = "iris";
  d.path = "data/iris.csv";
  d.label_column = "species";
  return d;
}

namespace {

using nlohmann::json;

// Reads keys from one JSON object and remembers which were used, so that
// leftovers can be reported as typos.
class Section {
 public:
  Section(const json* j, std::string path) : path_(std::move(path)) {
    if (j != nullptr && !j->is_null()) {
      if (!j->is_object()) throw ConfigError(where() + " must be an object");
      j_ = j;
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    const json* v = raw(key);
    if (v == nullptr || v->is_null()) return fallback;
    try {
      return v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type (" + v->dump() + ")");
    }
  }

  const json* raw(const std::string& key) {
    used_.insert(key);
    if (j_ == nullptr) return nullptr;
    const auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }

  Section child(const std::string& key) { return Section(raw(key), where(key)); }

  void finish() const {
    if (j_ == nullptr) return;
    for (const auto& [key, value] : j_->items()) {
      if (!used_.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
    }
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json* j_ = nullptr;
  std::string path_;
  std::set<std::string> used_;
};

std::set<std::string> string_set(Section& s, const std::string& key) {
  const auto v = s.get<std::vector<std::string>>(key, {});
  return {v.begin(), v.end()};
}

DatasetSpec parse_dataset(Section s) {
  DatasetSpec d;
  d.name = s.get<std::string>("name", "");
  d.path = s.get<std::string>("path", "");
  const json* syn_key = s.raw("synthetic");
  const bool use_default = d.path.empty() && (syn_key == nullptr || syn_key->is_null());
  if (use_default) d.path = default_dataset_spec().path;
  if (const json* syn = s.raw("synthetic"); syn != nullptr && !syn->is_null()) {
    Section y(syn, s.where("synthetic"));
    SyntheticSpec spec;
    spec.num_points = y.get<Index>("num_points", spec.num_points);
    spec.num_features = y.get<Index>("num_features", spec.num_features);
    spec.num_informative = y.get<Index>("num_informative", spec.num_informative);
    spec.noise = y.get<double>("noise", spec.noise);
    spec.seed = y.get<std::uint64_t>("seed", spec.seed);
    y.finish();
    d.synthetic = spec;
  }
  d.label_column = s.get<std::string>(
      "label_column", d.synthetic ? "label" : (use_default ? default_dataset_spec().label_column : ""));
  d.categorical_columns = string_set(s, "categorical_columns");
  d.drop_columns = string_set(s, "drop_columns");
  d.test_fraction = s.get<double>("test_fraction", d.test_fraction);
  s.finish();
  if (d.name.empty()) {
    d.name = d.synthetic ? "synthetic" : std::filesystem::path(d.path).stem().string();
  }
  return d;
}

json dataset_to_json(const DatasetSpec& d) {
  json j{{"name", d.name},
         {"path", d.path},
         {"label_column", d.label_column},
         {"categorical_columns", d.categorical_columns},
         {"drop_columns", d.drop_columns},
         {"test_fraction", d.test_fraction}};
  if (d.synthetic) {
    j["synthetic"] = {{"num_points", d.synthetic->num_points},
                      {"num_features", d.synthetic->num_features},
                      {"num_informative", d.synthetic->num_informative},
                      {"noise", d.synthetic->noise},
                      {"seed", d.synthetic->seed}};
  } else {
    j["synthetic"] = nullptr;
  }
  return j;
}

ModelSpec parse_model(Section s) {
  ModelSpec m;
  m.kind = model_kind_from_string(s.get<std::string>("kind", "mlp"));
  m.mlp.hidden = s.get<std::vector<Index>>("hidden", m.mlp.hidden);
  m.mlp.activation = activation_from_string(s.get<std::string>("activation", "sigmoid"));
  m.mlp.loss = loss_from_string(s.get<std::string>("loss", "cross_entropy"));
  m.mlp.epochs = s.get<int>("epochs", m.mlp.epochs);
  m.mlp.batch_size = s.get<Index>("batch_size", m.mlp.batch_size);
  m.mlp.weight_decay = s.get<double>("weight_decay", m.mlp.weight_decay);
  {
    Section a = s.child("adam");
    m.mlp.adam.step = a.get<double>("step", m.mlp.adam.step);
    m.mlp.adam.beta1 = a.get<double>("beta1", m.mlp.adam.beta1);
    m.mlp.adam.beta2 = a.get<double>("beta2", m.mlp.adam.beta2);
    m.mlp.adam.epsilon = a.get<double>("epsilon", m.mlp.adam.epsilon);
    a.finish();
  }
  {
    Section v = s.child("svm");
    m.svm.c = v.get<double>("c", m.svm.c);
    m.svm.gamma = v.get<double>("gamma", m.svm.gamma);
    m.svm.tol = v.get<double>("tol", m.svm.tol);
    m.svm.max_iter = v.get<int>("max_iter", m.svm.max_iter);
    v.finish();
  }
  {
    Section l = s.child("linear");
    const auto link = l.get<std::string>("link", "logistic");
    if (link == "logistic") {
      m.linear.link = LinearLink::logistic;
    } else if (link == "identity") {
      m.linear.link = LinearLink::identity;
    } else {
      throw ConfigError("unknown linear link '" + link + "' (valid: logistic, identity)");
    }
    m.linear.intercept = l.get<bool>("intercept", m.linear.intercept);
    m.linear.l2 = l.get<double>("l2", m.linear.l2);
    l.finish();
  }
  {
    Section k = s.child("knn");
    m.n_neighbors = k.get<Index>("n_neighbors", m.n_neighbors);
    m.knn_temperature = k.get<double>("temperature", m.knn_temperature);
    k.finish();
  }
  {
    Section t = s.child("tree");
    m.tree.max_features = t.get<Index>("max_features", m.tree.max_features);
    m.tree.max_depth = t.get<Index>("max_depth", m.tree.max_depth);
    m.tree.min_samples_split = t.get<Index>("min_samples_split", m.tree.min_samples_split);
    t.finish();
  }
  s.finish();
  m.validate();
  return m;
}

json model_to_json(const ModelSpec& m) {
  return {{"kind", to_string(m.kind)},
          {"hidden", m.mlp.hidden},
          {"activation", to_string(m.mlp.activation)},
          {"loss", to_string(m.mlp.loss)},
          {"epochs", m.mlp.epochs},
          {"batch_size", m.mlp.batch_size},
          {"weight_decay", m.mlp.weight_decay},
          {"adam",
           {{"step", m.mlp.adam.step},
            {"beta1", m.mlp.adam.beta1},
            {"beta2", m.mlp.adam.beta2},
            {"epsilon", m.mlp.adam.epsilon}}},
          {"svm",
           {{"c", m.svm.c}, {"gamma", m.svm.gamma}, {"tol", m.svm.tol}, {"max_iter", m.svm.max_iter}}},
          {"linear",
           {{"link", m.linear.link == LinearLink::logistic ? "logistic" : "identity"},
            {"intercept", m.linear.intercept},
            {"l2", m.linear.l2}}},
          {"knn", {{"n_neighbors", m.n_neighbors}, {"temperature", m.knn_temperature}}},
          {"tree",
           {{"max_features", m.tree.max_features},
            {"max_depth", m.tree.max_depth},
            {"min_samples_split", m.tree.min_samples_split}}}};
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  Section root(&j, "");
  RunConfig c;
  c.version = root.get<int>("version", kConfigVersion);
  if (c.version > kConfigVersion) {
    throw ConfigError("config version " + std::to_string(c.version) +
                      " is newer than supported version " + std::to_string(kConfigVersion));
  }
  if (c.version < 1) throw ConfigError("config version must be >= 1");
  c.seed = root.get<std::uint64_t>("seed", c.seed);
  c.output_dir = root.get<std::string>("output_dir", c.output_dir);
  c.dataset = parse_dataset(root.child("dataset"));
  c.model = parse_model(root.child("model"));

  {
    Section s = root.child("influence");
    c.ava.k = s.get<Index>("k", c.ava.k);
    c.ava.weight_mode = weight_mode_from_string(s.get<std::string>("mode", "abs"));
    const auto policy = s.get<std::string>("zero_weight_policy", "uniform");
    if (policy == "uniform") {
      c.ava.zero_policy = ZeroWeightPolicy::uniform;
    } else if (policy == "error") {
      c.ava.zero_policy = ZeroWeightPolicy::error;
    } else {
      throw ConfigError("unknown zero_weight_policy '" + policy + "' (valid: uniform, error)");
    }
    c.ava.solver.method = solver_method_from_string(s.get<std::string>("solver", "cg"));
    c.ava.solver.damping = s.get<double>("damping", c.ava.solver.damping);
    c.ava.solver.tol = s.get<double>("tol", c.ava.solver.tol);
    c.ava.solver.max_iter = s.get<int>("max_iter", c.ava.solver.max_iter);
    c.ava.solver.exact_cap = s.get<Index>("exact_cap", c.ava.solver.exact_cap);
    s.finish();
  }
  {
    Section s = root.child("attribution");
    c.method = s.get<std::string>("method", c.method);
    if (c.method == "random") throw ConfigError("random is a benchmark baseline, not an explainer");
    eval_method_from_string(c.method);
    c.ava.shap_exact_cap = s.get<Index>("shap_exact_cap", c.ava.shap_exact_cap);
    c.ava.shap_samples = s.get<Index>("shap_samples", c.ava.shap_samples);
    c.ava.ig_steps = s.get<int>("ig_steps", c.ava.ig_steps);
    c.ava.ig_baseline =
        ig_baseline_from_string(s.get<std::string>("ig_baseline", "neighborhood_mean"));
    const auto fixed = s.get<std::vector<double>>("fixed_baseline", {});
    c.ava.fixed_baseline = Eigen::Map<const Vector>(fixed.data(), static_cast<Index>(fixed.size()));
    if (const json* t = s.raw("target_class"); t != nullptr && !t->is_null()) {
      if (!t->is_number_integer()) throw ConfigError("attribution.target_class must be an integer");
      c.ava.target_class = t->get<Index>();
    }
    c.ava.include_test_point = s.get<bool>("include_test_point", c.ava.include_test_point);
    s.finish();
  }
  c.ava.seed = c.seed;
  c.ava.validate();

  {
    Section s = root.child("evaluation");
    if (const json* ds = s.raw("datasets"); ds != nullptr && !ds->is_null()) {
      if (!ds->is_array()) throw ConfigError("evaluation.datasets must be an array");
      for (std::size_t i = 0; i < ds->size(); ++i) {
        c.benchmark.datasets.push_back(
            parse_dataset(Section(&(*ds)[i], "evaluation.datasets[" + std::to_string(i) + "]")));
      }
    }
    if (const json* ms = s.raw("models"); ms != nullptr && !ms->is_null()) {
      if (!ms->is_array()) throw ConfigError("evaluation.models must be an array");
      for (std::size_t i = 0; i < ms->size(); ++i) {
        c.benchmark.models.push_back(
            parse_model(Section(&(*ms)[i], "evaluation.models[" + std::to_string(i) + "]")));
      }
    }
    const auto methods = s.get<std::vector<std::string>>(
        "methods", {"random", "shap", "ig", "ava_shap", "ava_ig"});
    c.benchmark.methods.clear();
    for (const auto& m : methods) c.benchmark.methods.push_back(eval_method_from_string(m));
    c.benchmark.seeds = s.get<std::vector<std::uint64_t>>("seeds", {c.seed});
    if (const json* m = s.raw("m"); m != nullptr && !m->is_null()) {
      if (!m->is_number_integer()) throw ConfigError("evaluation.m must be an integer or null");
      c.benchmark.m_policy.fixed = m->get<Index>();
    }
    c.benchmark.m_policy.candidates = s.get<std::vector<Index>>("m_candidates", {});
    c.benchmark.m_policy.folds = s.get<Index>("folds", c.benchmark.m_policy.folds);
    c.benchmark.random_trials = s.get<Index>("random_trials", c.benchmark.random_trials);
    c.benchmark.max_test_points = s.get<Index>("max_test_points", c.benchmark.max_test_points);
    c.benchmark.k_values = s.get<std::vector<Index>>("k_values", {});
    c.benchmark.jobs = s.get<int>("jobs", c.benchmark.jobs);
    s.finish();
  }
  if (c.benchmark.datasets.empty()) c.benchmark.datasets.push_back(c.dataset);
  if (c.benchmark.models.empty()) c.benchmark.models.push_back(c.model);
  c.benchmark.ava = c.ava;
  root.finish();
  c.dataset.validate();
  c.benchmark.validate();
  return c;
}

nlohmann::json RunConfig::to_json() const {
  json datasets = json::array();
  for (const auto& d : benchmark.datasets) datasets.push_back(dataset_to_json(d));
  if (benchmark.datasets.empty()) datasets.push_back(dataset_to_json(dataset));
  json models = json::array();
  for (const auto& m : benchmark.models) models.push_back(model_to_json(m));
  if (benchmark.models.empty()) models.push_back(model_to_json(model));
  json methods = json::array();
  for (auto m : benchmark.methods) methods.push_back(to_string(m));
  const auto ava_json = ava.to_json();
  return {
      {"version", version},
      {"seed", seed},
      {"output_dir", output_dir},
      {"dataset", dataset_to_json(dataset)},
      {"model", model_to_json(model)},
      {"influence",
       {{"k", ava.k},
        {"mode", to_string(ava.weight_mode)},
        {"zero_weight_policy", ava.zero_policy == ZeroWeightPolicy::uniform ? "uniform" : "error"},
        {"solver", to_string(ava.solver.method)},
        {"damping", ava.solver.damping},
        {"tol", ava.solver.tol},
        {"max_iter", ava.solver.max_iter},
        {"exact_cap", ava.solver.exact_cap}}},
      {"attribution",
       {{"method", method},
        {"shap_exact_cap", ava.shap_exact_cap},
        {"shap_samples", ava.shap_samples},
        {"ig_steps", ava.ig_steps},
        {"ig_baseline", to_string(ava.ig_baseline)},
        {"fixed_baseline",
         std::vector<double>(ava.fixed_baseline.data(),
                             ava.fixed_baseline.data() + ava.fixed_baseline.size())},
        {"target_class", ava_json.at("target_class")},
        {"include_test_point", ava.include_test_point}}},
      {"evaluation",
       {{"datasets", std::move(datasets)},
        {"models", std::move(models)},
        {"methods", std::move(methods)},
        {"seeds", benchmark.seeds},
        {"m", benchmark.m_policy.fixed ? json(*benchmark.m_policy.fixed) : json(nullptr)},
        {"m_candidates", benchmark.m_policy.candidates},
        {"folds", benchmark.m_policy.folds},
        {"random_trials", benchmark.random_trials},
        {"max_test_points", benchmark.max_test_points},
        {"k_values", benchmark.k_values},
        {"jobs", benchmark.jobs}}}};
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key.path=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) throw ConfigError("override key '" + key + "' crosses a non-object");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  json doc = path.empty() ? json::object() : read_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  if (const char* env = std::getenv("AVA_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    doc["output_dir"] = env;
  }
  return RunConfig::from_json(doc);
}

std::vector<Index> parse_index_list(const std::string& text) {
  auto to_index = [&](const std::string& s) -> Index {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("'" + text + "' is not an index list");
    return static_cast<Index>(v);
  };
  std::vector<Index> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? comma : comma - start);
    std::size_t sep = item.find("..");
    std::size_t sep_len = 2;
    if (sep == std::string::npos) {
      sep = item.find('-', 1);
      sep_len = 1;
    }
    if (sep != std::string::npos) {
      const Index lo = to_index(item.substr(0, sep));
      const Index hi = to_index(item.substr(sep + sep_len));
      if (hi < lo) throw ConfigError("range '" + item + "' is empty");
      for (Index i = lo; i <= hi; ++i) out.push_back(i);
    } else {
      out.push_back(to_index(item));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace ava
