#include "ava/data.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace ava {

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "nan" || cell == "NaN";
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Reads one logical record; quoted fields may span lines. Returns false at
// end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, Index& line_no) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_no;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (quoted) {
        std::string next;
        if (!std::getline(in, next)) {
          throw DataError("unterminated quoted field at line " + std::to_string(line_no));
        }
        ++line_no;
        field += '\n';
        line = std::move(next);
        i = 0;
        continue;
      }
      break;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(field_was_quoted ? field : trim(field));
      field.clear();
      field_was_quoted = false;
    } else {
      field += c;
    }
    ++i;
  }
  fields.push_back(field_was_quoted ? field : trim(field));
  return true;
}

std::optional<double> parse_double(const std::string& s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Index RawDataset::column_index(const std::string& name) const {
  const auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) throw DataError("unknown column '" + name + "'");
  return static_cast<Index>(it - column_names.begin());
}

RawDataset RawDataset::select_rows(const std::vector<Index>& rows) const {
  RawDataset out;
  out.column_names = column_names;
  out.label_name = label_name;
  out.columns.resize(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.columns[c].reserve(rows.size());
    for (Index r : rows) out.columns[c].push_back(columns[c][r]);
  }
  out.labels.reserve(rows.size());
  for (Index r : rows) out.labels.push_back(labels[r]);
  return out;
}

RawDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                    bool header) {
  std::ifstream in(path);
  if (!in) throw DataError("file not found: " + path.string());

  Index line_no = 0;
  std::vector<std::string> fields;
  std::vector<std::vector<std::string>> rows;
  std::vector<Index> row_lines;
  std::vector<std::string> names;

  if (header) {
    if (!read_record(in, fields, line_no)) throw DataError("empty file: " + path.string());
    names = fields;
  }
  while (read_record(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (names.empty()) {
      for (std::size_t c = 0; c < fields.size(); ++c) names.push_back("c" + std::to_string(c));
    }
    if (fields.size() != names.size()) {
      throw DataError("malformed row " + std::to_string(rows.size()) + " (line " +
                      std::to_string(line_no) + "): expected " + std::to_string(names.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back(fields);
    row_lines.push_back(line_no);
  }

  const auto label_it = std::find(names.begin(), names.end(), label_column);
  if (label_it == names.end()) throw DataError("unknown label column '" + label_column + "'");
  const auto label_pos = static_cast<std::size_t>(label_it - names.begin());

  RawDataset raw;
  raw.label_name = label_column;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c != label_pos) raw.column_names.push_back(names[c]);
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : raw.column_names) {
    if (!seen.insert(n).second) throw DataError("duplicate column name '" + n + "'");
  }
  raw.columns.resize(raw.column_names.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t out_c = 0;
    for (std::size_t c = 0; c < names.size(); ++c) {
      const std::string& cell = rows[r][c];
      if (c == label_pos) {
        if (is_missing(cell)) {
          throw DataError("missing label at row " + std::to_string(r) + " (line " +
                          std::to_string(row_lines[r]) + ")");
        }
        raw.labels.push_back(cell);
      } else {
        raw.columns[out_c++].push_back(is_missing(cell) ? std::nullopt
                                                        : std::optional<std::string>(cell));
      }
    }
  }
  return raw;
}

std::vector<std::string> PreprocessingRecord::feature_names() const {
  std::vector<std::string> names;
  for (const auto& col : columns) {
    if (col.kind == ColumnKind::numeric) {
      names.push_back(col.name);
    } else {
      for (const auto& level : col.levels) names.push_back(col.name + "=" + level);
    }
  }
  return names;
}

Index PreprocessingRecord::encoded_dim() const {
  Index d = 0;
  for (const auto& col : columns) {
    d += col.kind == ColumnKind::numeric ? 1 : static_cast<Index>(col.levels.size());
  }
  return d;
}

nlohmann::json PreprocessingRecord::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns) {
    nlohmann::json jc{{"name", c.name}};
    if (c.kind == ColumnKind::numeric) {
      jc["kind"] = "numeric";
      jc["mean"] = c.mean;
      jc["scale"] = c.scale;
    } else {
      jc["kind"] = "categorical";
      jc["levels"] = c.levels;
    }
    cols.push_back(std::move(jc));
  }
  return {{"columns", cols}, {"class_names", class_names}};
}

PreprocessingRecord PreprocessingRecord::from_json(const nlohmann::json& j) {
  PreprocessingRecord rec;
  for (const auto& jc : j.at("columns")) {
    ColumnTransform c;
    c.name = jc.at("name").get<std::string>();
    if (jc.at("kind") == "numeric") {
      c.kind = ColumnKind::numeric;
      c.mean = jc.at("mean").get<double>();
      c.scale = jc.at("scale").get<double>();
    } else {
      c.kind = ColumnKind::categorical;
      c.levels = jc.at("levels").get<std::vector<std::string>>();
    }
    rec.columns.push_back(std::move(c));
  }
  rec.class_names = j.at("class_names").get<std::vector<std::string>>();
  return rec;
}

Preprocessor Preprocessor::fit(const RawDataset& train, const PreprocessConfig& config,
                               std::vector<std::string> class_names) {
  for (const auto& name : config.categorical_columns) train.column_index(name);
  for (const auto& name : config.drop_columns) train.column_index(name);

  PreprocessingRecord rec;
  for (Index c = 0; c < train.num_columns(); ++c) {
    const auto& name = train.column_names[c];
    if (config.drop_columns.count(name)) continue;
    const auto& cells = train.columns[c];
    ColumnTransform t;
    t.name = name;
    if (config.categorical_columns.count(name)) {
      t.kind = ColumnKind::categorical;
      std::set<std::string> levels;
      for (const auto& cell : cells) {
        if (cell) levels.insert(*cell);
      }
      t.levels.assign(levels.begin(), levels.end());
    } else {
      t.kind = ColumnKind::numeric;
      double sum = 0.0;
      Index count = 0;
      std::vector<double> values;
      for (std::size_t r = 0; r < cells.size(); ++r) {
        if (!cells[r]) continue;
        const auto v = parse_double(*cells[r]);
        if (!v || !std::isfinite(*v)) {
          throw DataError("column '" + name + "' row " + std::to_string(r) +
                          ": non-numeric value '" + *cells[r] +
                          "' (declare the column categorical)");
        }
        values.push_back(*v);
        sum += *v;
        ++count;
      }
      if (count == 0) throw DataError("column '" + name + "' has no observed values");
      t.mean = sum / static_cast<double>(count);
      // Imputed cells sit at the mean and add nothing to the variance sum,
      // but they do count toward the population size.
      double ss = 0.0;
      for (double v : values) ss += (v - t.mean) * (v - t.mean);
      const double sd = std::sqrt(ss / static_cast<double>(cells.size()));
      if (sd < 1e-12) {
        spdlog::warn("column '{}' has zero variance; using scale 1", name);
        t.scale = 1.0;
      } else {
        t.scale = sd;
      }
    }
    rec.columns.push_back(std::move(t));
  }

  if (class_names.empty()) {
    std::set<std::string> classes(train.labels.begin(), train.labels.end());
    class_names.assign(classes.begin(), classes.end());
  }
  rec.class_names = std::move(class_names);
  return Preprocessor(std::move(rec));
}

Dataset Preprocessor::transform(const RawDataset& raw) const {
  Dataset out;
  const Index n = raw.num_rows();
  out.features.resize(record_.encoded_dim(), n);
  out.feature_names = record_.feature_names();
  out.class_names = record_.class_names;
  out.preprocessing = record_;
  out.row_ids.resize(n);
  std::iota(out.row_ids.begin(), out.row_ids.end(), Index{0});

  Index row = 0;
  for (const auto& t : record_.columns) {
    const auto& cells = raw.columns[raw.column_index(t.name)];
    if (t.kind == ColumnKind::numeric) {
      for (Index j = 0; j < n; ++j) {
        double v = t.mean;
        if (cells[j]) {
          const auto parsed = parse_double(*cells[j]);
          if (!parsed || !std::isfinite(*parsed)) {
            throw DataError("column '" + t.name + "' row " + std::to_string(j) +
                            ": non-numeric value '" + *cells[j] + "'");
          }
          v = *parsed;
        }
        out.features(row, j) = (v - t.mean) / t.scale;
      }
      ++row;
    } else {
      const Index width = static_cast<Index>(t.levels.size());
      out.features.middleRows(row, width).setZero();
      for (Index j = 0; j < n; ++j) {
        if (!cells[j]) continue;
        const auto it = std::lower_bound(t.levels.begin(), t.levels.end(), *cells[j]);
        if (it == t.levels.end() || *it != *cells[j]) {
          spdlog::warn("column '{}' row {}: unseen level '{}' encoded as all zeros", t.name, j,
                       *cells[j]);
          continue;
        }
        out.features(row + (it - t.levels.begin()), j) = 1.0;
      }
      row += width;
    }
  }

  out.labels.resize(n);
  const auto& classes = record_.class_names;
  for (Index j = 0; j < n; ++j) {
    const auto it = std::find(classes.begin(), classes.end(), raw.labels[j]);
    if (it != classes.end()) {
      out.labels(j) = static_cast<double>(it - classes.begin());
    } else if (const auto v = parse_double(raw.labels[j]); v && classes.empty()) {
      out.labels(j) = *v;
    } else {
      throw DataError("row " + std::to_string(j) + ": unknown label '" + raw.labels[j] + "'");
    }
  }
  out.validate();
  return out;
}

Dataset preprocess(const RawDataset& raw, const PreprocessConfig& config) {
  return Preprocessor::fit(raw, config).transform(raw);
}

Dataset Dataset::subset(const std::vector<Index>& cols) const {
  Dataset out;
  out.features.resize(features.rows(), static_cast<Index>(cols.size()));
  out.labels.resize(static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.features.col(static_cast<Index>(k)) = features.col(cols[k]);
    out.labels(static_cast<Index>(k)) = labels(cols[k]);
    out.row_ids.push_back(row_ids.empty() ? cols[k] : row_ids[cols[k]]);
  }
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.preprocessing = preprocessing;
  return out;
}

Index Dataset::class_count() const {
  Index n = num_classes();
  if (labels.size() > 0) n = std::max(n, static_cast<Index>(labels.maxCoeff()) + 1);
  return n;
}

Vector Dataset::feature_mean() const {
  if (size() == 0) return Vector::Zero(dim());
  return features.rowwise().mean();
}

void Dataset::validate() const {
  if (!features.allFinite()) throw DataError("features contain non-finite values");
  if (labels.size() != features.cols()) {
    throw DataError("label count " + std::to_string(labels.size()) +
                    " does not match point count " + std::to_string(features.cols()));
  }
  if (static_cast<Index>(feature_names.size()) != features.rows()) {
    throw DataError("feature name count does not match feature dimension");
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : feature_names) {
    if (!seen.insert(n).second) throw DataError("duplicate feature name '" + n + "'");
  }
}

std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double test_fraction,
                                                                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (n < 2) throw DataError("need at least 2 points to split");
  const auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test < 1 || n_test >= n) {
    throw DataError("split of " + std::to_string(n) + " points at fraction " +
                    std::to_string(test_fraction) + " leaves one side empty");
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> test(order.begin(), order.begin() + n_test);
  std::vector<Index> train(order.begin() + n_test, order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(test)};
}

SplitDataset split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  auto [train_idx, test_idx] = split_indices(data.size(), test_fraction, seed);
  return {data.subset(train_idx), data.subset(test_idx), seed, test_fraction};
}

SplitDataset prepare_split(const RawDataset& raw, const PreprocessConfig& config,
                           double test_fraction, std::uint64_t seed) {
  auto [train_idx, test_idx] = split_indices(raw.num_rows(), test_fraction, seed);
  const RawDataset raw_train = raw.select_rows(train_idx);
  const RawDataset raw_test = raw.select_rows(test_idx);

  std::set<std::string> classes(raw.labels.begin(), raw.labels.end());
  const auto pre = Preprocessor::fit(raw_train, config, {classes.begin(), classes.end()});
  SplitDataset out;
  out.train = pre.transform(raw_train);
  out.test = pre.transform(raw_test);
  out.train.row_ids = train_idx;
  out.test.row_ids = test_idx;
  out.seed = seed;
  out.test_fraction = test_fraction;
  return out;
}

RawDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.num_informative > spec.num_features || spec.num_informative < 1) {
    throw ConfigError("num_informative must lie in [1, num_features]");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  RawDataset raw;
  raw.label_name = "label";
  raw.columns.resize(spec.num_features);
  for (Index c = 0; c < spec.num_features; ++c) raw.column_names.push_back("x" + std::to_string(c));

  std::vector<double> weights(spec.num_informative);
  for (Index i = 0; i < spec.num_informative; ++i) {
    weights[i] = (i % 2 == 0 ? 1.0 : -1.0) * (2.0 - 0.5 * static_cast<double>(i) /
                                                         static_cast<double>(spec.num_informative));
  }
  std::vector<double> x(spec.num_features);
  for (Index r = 0; r < spec.num_points; ++r) {
    double logit = 0.0;
    for (Index c = 0; c < spec.num_features; ++c) {
      x[c] = normal(rng);
      raw.columns[c].push_back(format_double(x[c]));
      if (c < spec.num_informative) logit += weights[c] * x[c];
    }
    logit += spec.noise * normal(rng);
    raw.labels.push_back(logit > 0.0 ? "1" : "0");
  }
  return raw;
}

}  // namespace ava
