#include "gcnrn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace gcnrn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads keys out of one JSON object and remembers which were consumed.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (!root.contains(name)) return;
    obj_ = &root.at(name);
    if (!obj_->is_object()) throw ConfigError("section '" + name + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!obj_) return;
    seen_.insert(key);
    const auto it = obj_->find(key);
    if (it == obj_->end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("key '" + name_ + "." + key + "': " + e.what());
    }
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

const char* const kSections[] = {"synthetic", "model", "data", "output", "cv", "sweep", "baseline", "survival"};

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ordered_json RunConfig::to_json() const {
  ordered_json j;
  const auto& s = synthetic;
  j["synthetic"] = {{"n", s.n},
                    {"samples_per_class", s.samples_per_class},
                    {"centroid_distance", s.centroid_distance},
                    {"avg_degree", s.avg_degree},
                    {"entry_mean", s.entry_mean},
                    {"entry_sd", s.entry_sd},
                    {"delete_probability", s.delete_probability},
                    {"swap_classes", s.swap_classes},
                    {"seed", s.seed}};
  const auto& m = model;
  j["model"] = {{"conv_filters", m.conv_filters},
                {"cheb_order", m.cheb_order},
                {"pool_size", m.pool_size},
                {"conv_bias", m.conv_bias},
                {"bn_momentum", m.bn_momentum},
                {"bn_epsilon", m.bn_epsilon},
                {"fc_hidden", m.fc_hidden},
                {"relation", to_string(m.relation)},
                {"kappa", m.kappa},
                {"g_hidden", m.g_hidden},
                {"vanilla_g_hidden", m.vanilla_g_hidden},
                {"vanilla_g_out", m.vanilla_g_out},
                {"vanilla_f_hidden", m.vanilla_f_hidden},
                {"vanilla_max_pairs", m.vanilla_max_pairs},
                {"learning_rate", m.adam.learning_rate},
                {"beta1", m.adam.beta1},
                {"beta2", m.adam.beta2},
                {"adam_epsilon", m.adam.epsilon},
                {"epochs", m.epochs},
                {"batch_size", m.batch_size},
                {"seed", m.seed},
                {"precision", m.precision}};
  j["data"] = {{"expression", data.expression},
               {"labels", data.labels},
               {"edges", data.edges},
               {"survival", data.survival}};
  j["output"] = {{"dir", output_dir}};
  j["cv"] = {{"splits", cv.splits}, {"workers", cv.workers}};
  j["sweep"] = {{"n_values", sweep.n_values},
                {"distances", sweep.distances},
                {"methods", sweep.methods},
                {"splits", sweep.splits}};
  j["baseline"] = {{"method", baseline.method}, {"knn_k", baseline.knn_k}};
  j["survival"] = {{"embeddings", survival.embeddings}, {"clusters", survival.clusters}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* s : kSections) known = known || key == s;
    if (!known) throw ConfigError("unknown section '" + key + "'");
  }

  RunConfig c;
  {
    Section s(j, "synthetic");
    auto& d = c.synthetic;
    s.get("n", d.n);
    s.get("samples_per_class", d.samples_per_class);
    s.get("centroid_distance", d.centroid_distance);
    s.get("avg_degree", d.avg_degree);
    s.get("entry_mean", d.entry_mean);
    s.get("entry_sd", d.entry_sd);
    s.get("delete_probability", d.delete_probability);
    s.get("swap_classes", d.swap_classes);
    s.get("seed", d.seed);
    s.finish();
  }
  {
    Section s(j, "model");
    auto& m = c.model;
    std::string relation = to_string(m.relation);
    s.get("conv_filters", m.conv_filters);
    s.get("cheb_order", m.cheb_order);
    s.get("pool_size", m.pool_size);
    s.get("conv_bias", m.conv_bias);
    s.get("bn_momentum", m.bn_momentum);
    s.get("bn_epsilon", m.bn_epsilon);
    s.get("fc_hidden", m.fc_hidden);
    s.get("relation", relation);
    s.get("kappa", m.kappa);
    s.get("g_hidden", m.g_hidden);
    s.get("vanilla_g_hidden", m.vanilla_g_hidden);
    s.get("vanilla_g_out", m.vanilla_g_out);
    s.get("vanilla_f_hidden", m.vanilla_f_hidden);
    s.get("vanilla_max_pairs", m.vanilla_max_pairs);
    s.get("learning_rate", m.adam.learning_rate);
    s.get("beta1", m.adam.beta1);
    s.get("beta2", m.adam.beta2);
    s.get("adam_epsilon", m.adam.epsilon);
    s.get("epochs", m.epochs);
    s.get("batch_size", m.batch_size);
    s.get("seed", m.seed);
    s.get("precision", m.precision);
    s.finish();
    m.relation = relation_kind_from_string(relation);
  }
  {
    Section s(j, "data");
    s.get("expression", c.data.expression);
    s.get("labels", c.data.labels);
    s.get("edges", c.data.edges);
    s.get("survival", c.data.survival);
    s.finish();
  }
  {
    Section s(j, "output");
    s.get("dir", c.output_dir);
    s.finish();
  }
  {
    Section s(j, "cv");
    s.get("splits", c.cv.splits);
    s.get("workers", c.cv.workers);
    s.finish();
  }
  {
    Section s(j, "sweep");
    s.get("n_values", c.sweep.n_values);
    s.get("distances", c.sweep.distances);
    s.get("methods", c.sweep.methods);
    s.get("splits", c.sweep.splits);
    s.finish();
  }
  {
    Section s(j, "baseline");
    s.get("method", c.baseline.method);
    s.get("knn_k", c.baseline.knn_k);
    s.finish();
  }
  {
    Section s(j, "survival");
    s.get("embeddings", c.survival.embeddings);
    s.get("clusters", c.survival.clusters);
    s.finish();
  }
  c.validate();
  return c;
}

std::string RunConfig::dump() const { return to_json().dump(2) + "\n"; }

RunConfig RunConfig::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON at " + line_col(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
  }
  return from_json(j);
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string raw = assignment.substr(eq + 1);

  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json j = json::parse(to_json().dump());
  if (!j.contains(section)) throw ConfigError("unknown section '" + section + "' in override");
  if (!j[section].contains(key)) throw ConfigError("unknown key '" + section + "." + key + "' in override");
  // Keep path-like strings that happen to look like JSON (e.g. "1") as strings.
  if (j[section][key].is_string() && !value.is_string()) value = raw;
  j[section][key] = value;
  *this = from_json(j);
}

void RunConfig::validate() const {
  model.validate();
  if (synthetic.n < 2) throw ConfigError("synthetic.n must be >= 2");
  if (synthetic.samples_per_class < 2) throw ConfigError("synthetic.samples_per_class must be >= 2");
  if (!(synthetic.centroid_distance >= 0.0)) throw ConfigError("synthetic.centroid_distance must be >= 0");
  if (!(synthetic.delete_probability >= 0.0 && synthetic.delete_probability <= 1.0)) {
    throw ConfigError("synthetic.delete_probability must be in [0, 1]");
  }
  if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
  if (cv.splits < 1) throw ConfigError("cv.splits must be >= 1");
  if (cv.workers < 1) throw ConfigError("cv.workers must be >= 1");
  if (sweep.splits < 1) throw ConfigError("sweep.splits must be >= 1");
  if (sweep.n_values.empty() || sweep.distances.empty()) throw ConfigError("sweep grid must not be empty");
  for (const auto& m : sweep.methods) {
    if (m != "hybrid" && m != "gcnn" && m != "gcnn_rn" && m != "gnb" && m != "knn") {
      throw ConfigError("unknown sweep method '" + m + "' (expected hybrid, gcnn, gcnn_rn, gnb or knn)");
    }
  }
  baseline_kind_from_string(baseline.method);
  if (baseline.knn_k < 1) throw ConfigError("baseline.knn_k must be >= 1");
  if (survival.clusters < 2) throw ConfigError("survival.clusters must be >= 2");
}

}  // namespace gcnrn
