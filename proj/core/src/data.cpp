#include "gcnrn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "gcnrn/rng.hpp"

namespace gcnrn {

void Dataset::validate() const {
  if (static_cast<index_t>(y.size()) != x.rows()) throw DimensionMismatch("label count differs from sample count");
  if (static_cast<index_t>(sample_ids.size()) != x.rows()) throw DimensionMismatch("sample id count differs from sample count");
  if (static_cast<index_t>(feature_names.size()) != x.cols()) throw DimensionMismatch("feature name count differs from feature count");
  std::set<std::string> names(feature_names.begin(), feature_names.end());
  if (names.size() != feature_names.size()) throw DimensionMismatch("feature names are not unique");
  for (const int label : y) {
    if (label < 0 || label >= num_classes()) throw LabelOutOfRange("label " + std::to_string(label));
  }
  if (survival && static_cast<index_t>(survival->size()) != x.rows()) {
    throw DimensionMismatch("survival record count differs from sample count");
  }
}

Dataset Dataset::subset(const std::vector<index_t>& rows) const {
  Dataset out;
  out.x.resize(static_cast<index_t>(rows.size()), x.cols());
  out.feature_names = feature_names;
  out.class_names = class_names;
  if (survival) out.survival.emplace();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<std::size_t>(rows[k]);
    out.x.row(static_cast<index_t>(k)) = x.row(rows[k]);
    out.y.push_back(y[r]);
    out.sample_ids.push_back(sample_ids[r]);
    if (survival) out.survival->push_back((*survival)[r]);
  }
  return out;
}

// ---------------------------------------------------------------------------

Matrix repair_psd(const Matrix& sym, PsdRepairReport* report, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  Vector values = solver.eigenvalues();
  PsdRepairReport local;
  local.min_eigenvalue_before = values.size() > 0 ? values.minCoeff() : 0.0;
  for (index_t l = 0; l < values.size(); ++l) {
    if (values[l] < floor) {
      local.max_clip = std::max(local.max_clip, floor - values[l]);
      ++local.clipped;
      values[l] = floor;
    }
  }
  if (report) *report = local;
  if (local.clipped == 0) return sym;
  const Matrix& v = solver.eigenvectors();
  Matrix out = v * values.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix gen_template_covariance(const SyntheticSpec& spec, SeededRng& rng) {
  if (spec.n < 2) throw DegreeInfeasible("need at least 2 vertices");
  if (!(spec.avg_degree >= 0.0) || spec.avg_degree >= static_cast<double>(spec.n)) {
    throw DegreeInfeasible("average degree " + std::to_string(spec.avg_degree) + " not in [0, " +
                           std::to_string(spec.n) + ")");
  }
  const double keep = std::min(1.0, spec.avg_degree / static_cast<double>(spec.n - 1));
  Matrix cov = Matrix::Identity(spec.n, spec.n);
  for (index_t i = 0; i < spec.n; ++i) {
    for (index_t j = i + 1; j < spec.n; ++j) {
      if (!rng.bernoulli(keep)) continue;
      double value = rng.normal(spec.entry_mean, spec.entry_sd);
      while (value == 0.0) value = rng.normal(spec.entry_mean, spec.entry_sd);
      cov(i, j) = value;
      cov(j, i) = value;
    }
  }
  return cov;
}

CovariancePair derive_class_covariances(const Matrix& template_cov, SeededRng& rng, double delete_probability) {
  if (template_cov.rows() != template_cov.cols()) throw DimensionMismatch("covariance must be square");
  CovariancePair out;
  out.template_cov = template_cov;
  const index_t n = template_cov.rows();
  for (int k = 0; k < 2; ++k) {
    Matrix cov = template_cov;
    for (index_t i = 0; i < n; ++i) {
      for (index_t j = i + 1; j < n; ++j) {
        if (template_cov(i, j) == 0.0) continue;
        double value = 0.0;
        if (delete_probability <= 0.0 || !rng.bernoulli(delete_probability)) {
          value = rng.sign() * template_cov(i, j);
        }
        cov(i, j) = value;
        cov(j, i) = value;
      }
    }
    out.class_cov[k] = repair_psd(cov, &out.repair[k]);
  }
  return out;
}

WeightedGraph covariance_to_graph(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw DimensionMismatch("covariance must be square");
  std::vector<Edge> edges;
  for (index_t i = 0; i < cov.rows(); ++i) {
    for (index_t j = i + 1; j < cov.cols(); ++j) {
      if (cov(i, j) != 0.0) edges.push_back({i, j, std::abs(cov(i, j))});
    }
  }
  if (edges.empty()) throw EmptyGraph("covariance has no nonzero off-diagonal entry");
  return WeightedGraph(cov.rows(), std::move(edges));
}

Matrix symmetric_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  const Vector roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix& v = solver.eigenvectors();
  return v * roots.asDiagonal() * v.transpose();
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  if (spec.samples_per_class < 1) throw DimensionMismatch("samples_per_class must be >= 1");
  if (spec.centroid_distance < 0.0) throw DimensionMismatch("centroid distance must be >= 0");
  const SeededRng root(spec.seed);
  SeededRng template_rng = root.derive(1);
  SeededRng class_rng = root.derive(2);
  SeededRng mean_rng = root.derive(3);

  SyntheticData out;
  const Matrix template_cov = gen_template_covariance(spec, template_rng);
  out.covariances = derive_class_covariances(template_cov, class_rng, spec.delete_probability);
  out.graph = covariance_to_graph(template_cov);

  const index_t n = spec.n;
  Vector direction(n);
  for (index_t i = 0; i < n; ++i) direction[i] = mean_rng.normal();
  direction.normalize();
  out.mean[0] = Vector::Zero(n);
  out.mean[1] = spec.centroid_distance * direction;

  auto& data = out.dataset;
  const index_t per_class = spec.samples_per_class;
  data.x.resize(2 * per_class, n);
  for (int k = 0; k < 2; ++k) {
    SeededRng sample_rng = root.derive(4 + static_cast<std::uint64_t>(k));
    const Matrix factor = symmetric_sqrt(out.covariances.class_cov[k]);
    Matrix z(n, per_class);
    for (index_t p = 0; p < per_class; ++p) {
      for (index_t i = 0; i < n; ++i) z(i, p) = sample_rng.normal();
    }
    Matrix block = (factor * z).colwise() + out.mean[k];
    data.x.middleRows(k * per_class, per_class) = block.transpose();
    const int label = spec.swap_classes ? 1 - k : k;
    data.y.insert(data.y.end(), static_cast<std::size_t>(per_class), label);
  }
  char buffer[32];
  for (index_t p = 0; p < 2 * per_class; ++p) {
    std::snprintf(buffer, sizeof(buffer), "s%05lld", static_cast<long long>(p));
    data.sample_ids.emplace_back(buffer);
  }
  for (index_t i = 0; i < n; ++i) {
    std::snprintf(buffer, sizeof(buffer), "v%04lld", static_cast<long long>(i));
    data.feature_names.emplace_back(buffer);
  }
  data.class_names = {"0", "1"};
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto fields = split_csv_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw ParseError(path + ": empty file");
  return table;
}

double parse_number(const std::string& text, const std::string& path, std::size_t line, std::size_t column) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ParseError(path + ":" + std::to_string(line) + ", column " + std::to_string(column) + ": invalid number '" +
                     text + "'");
  }
  return value;
}

std::vector<std::string> ordered_class_names(const std::set<std::string>& names) {
  std::vector<std::string> out(names.begin(), names.end());
  const bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& s) {
    return !s.empty() && s.size() < 18 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  });
  if (numeric) {
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
  }
  return out;
}

}  // namespace

LoadedData load_real_dataset(const std::string& expression_csv, const std::string& labels_csv,
                             const std::string& edges_tsv, const std::string& survival_csv) {
  LoadedData out;
  auto& data = out.dataset;
  auto& report = out.report;

  const auto expr = read_csv(expression_csv);
  if (expr.header.size() < 2) throw ParseError(expression_csv + ":1: need sample_id plus at least one gene column");
  data.feature_names.assign(expr.header.begin() + 1, expr.header.end());
  {
    std::set<std::string> seen;
    for (std::size_t c = 0; c < data.feature_names.size(); ++c) {
      if (!seen.insert(data.feature_names[c]).second) {
        throw ParseError(expression_csv + ":1, column " + std::to_string(c + 2) + ": duplicate gene '" +
                         data.feature_names[c] + "'");
      }
    }
  }

  const auto labels = read_csv(labels_csv);
  if (labels.header.size() != 2) throw ParseError(labels_csv + ":1: expected header sample_id,label");
  std::unordered_map<std::string, std::string> label_of;
  for (std::size_t r = 0; r < labels.rows.size(); ++r) {
    if (!label_of.emplace(labels.rows[r][0], labels.rows[r][1]).second) {
      throw JoinError("duplicate sample id '" + labels.rows[r][0] + "' in " + labels_csv + ":" +
                      std::to_string(labels.line_numbers[r]));
    }
  }

  std::set<std::string> expr_ids;
  std::set<std::string> class_set;
  for (std::size_t r = 0; r < expr.rows.size(); ++r) {
    const auto& id = expr.rows[r][0];
    if (!expr_ids.insert(id).second) {
      throw JoinError("duplicate sample id '" + id + "' in " + expression_csv + ":" +
                      std::to_string(expr.line_numbers[r]));
    }
    const auto it = label_of.find(id);
    if (it == label_of.end()) throw JoinError("sample '" + id + "' has no label in " + labels_csv);
    class_set.insert(it->second);
  }
  for (std::size_t r = 0; r < labels.rows.size(); ++r) {
    if (!expr_ids.count(labels.rows[r][0])) report.dropped_samples.push_back(labels.rows[r][0]);
  }
  if (expr.rows.empty()) throw EmptyIntersection("no sample has both expression and a label");

  data.class_names = ordered_class_names(class_set);
  std::map<std::string, int> class_id;
  for (std::size_t k = 0; k < data.class_names.size(); ++k) class_id[data.class_names[k]] = static_cast<int>(k);

  const auto genes = static_cast<index_t>(data.feature_names.size());
  data.x.resize(static_cast<index_t>(expr.rows.size()), genes);
  for (std::size_t r = 0; r < expr.rows.size(); ++r) {
    const auto& row = expr.rows[r];
    data.sample_ids.push_back(row[0]);
    data.y.push_back(class_id.at(label_of.at(row[0])));
    for (index_t c = 0; c < genes; ++c) {
      data.x(static_cast<index_t>(r), c) =
          parse_number(row[static_cast<std::size_t>(c + 1)], expression_csv, expr.line_numbers[r], static_cast<std::size_t>(c + 2));
    }
  }

  const auto named = read_edge_list_file(edges_tsv);
  std::unordered_map<std::string, index_t> column_of;
  for (index_t c = 0; c < genes; ++c) column_of[data.feature_names[static_cast<std::size_t>(c)]] = c;
  std::vector<index_t> mapped(named.names.size(), -1);
  std::size_t shared = 0;
  for (std::size_t v = 0; v < named.names.size(); ++v) {
    const auto it = column_of.find(named.names[v]);
    if (it == column_of.end()) {
      report.dropped_edge_genes.push_back(named.names[v]);
    } else {
      mapped[v] = it->second;
      ++shared;
    }
  }
  if (shared == 0) throw EmptyIntersection("no gene appears in both the expression matrix and the edge list");
  std::vector<Edge> edges;
  std::vector<bool> touched(static_cast<std::size_t>(genes), false);
  for (const auto& e : named.graph.edges()) {
    const index_t a = mapped[static_cast<std::size_t>(e.i)];
    const index_t b = mapped[static_cast<std::size_t>(e.j)];
    if (a < 0 || b < 0) {
      ++report.dropped_edges;
      continue;
    }
    edges.push_back({a, b, e.weight});
    touched[static_cast<std::size_t>(a)] = true;
    touched[static_cast<std::size_t>(b)] = true;
  }
  for (index_t c = 0; c < genes; ++c) {
    if (!touched[static_cast<std::size_t>(c)]) {
      report.isolated_genes.push_back(data.feature_names[static_cast<std::size_t>(c)]);
      report.warnings.push_back("gene '" + data.feature_names[static_cast<std::size_t>(c)] +
                                "' has no edge and becomes an isolated vertex");
    }
  }
  if (named.duplicate_edges > 0) {
    report.warnings.push_back(std::to_string(named.duplicate_edges) + " repeated edge line(s) ignored");
  }
  out.graph = WeightedGraph(genes, std::move(edges));

  if (!survival_csv.empty()) {
    const auto surv = read_csv(survival_csv);
    if (surv.header.size() != 3) throw ParseError(survival_csv + ":1: expected header sample_id,time_days,event");
    std::unordered_map<std::string, SurvivalRecord> record_of;
    for (std::size_t r = 0; r < surv.rows.size(); ++r) {
      const auto& row = surv.rows[r];
      SurvivalRecord rec;
      rec.time = parse_number(row[1], survival_csv, surv.line_numbers[r], 2);
      if (rec.time < 0.0) throw ParseError(survival_csv + ":" + std::to_string(surv.line_numbers[r]) + ", column 2: negative time");
      if (row[2] != "0" && row[2] != "1") {
        throw ParseError(survival_csv + ":" + std::to_string(surv.line_numbers[r]) + ", column 3: event must be 0 or 1");
      }
      rec.event = row[2] == "1";
      if (!record_of.emplace(row[0], rec).second) {
        throw JoinError("duplicate sample id '" + row[0] + "' in " + survival_csv);
      }
    }
    data.survival.emplace();
    for (const auto& id : data.sample_ids) {
      const auto it = record_of.find(id);
      if (it == record_of.end()) throw JoinError("sample '" + id + "' has no survival record in " + survival_csv);
      data.survival->push_back(it->second);
    }
  }
  data.validate();
  return out;
}

void write_expression_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "sample_id";
  for (const auto& name : data.feature_names) out << ',' << name;
  out << '\n';
  for (index_t r = 0; r < data.x.rows(); ++r) {
    out << data.sample_ids[static_cast<std::size_t>(r)];
    for (index_t c = 0; c < data.x.cols(); ++c) out << ',' << format_double(data.x(r, c));
    out << '\n';
  }
}

void write_labels_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "sample_id,label\n";
  for (std::size_t r = 0; r < data.y.size(); ++r) {
    out << data.sample_ids[r] << ',' << data.class_names[static_cast<std::size_t>(data.y[r])] << '\n';
  }
}

void write_survival_csv(const std::string& path, const Dataset& data) {
  if (!data.survival) throw DimensionMismatch("dataset has no survival records");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "sample_id,time_days,event\n";
  for (std::size_t r = 0; r < data.survival->size(); ++r) {
    out << data.sample_ids[r] << ',' << format_double((*data.survival)[r].time) << ','
        << ((*data.survival)[r].event ? 1 : 0) << '\n';
  }
}

}  // namespace gcnrn
