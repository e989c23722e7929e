#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gcnrn/analysis.hpp"
#include "gcnrn/data.hpp"
#include "gcnrn/model.hpp"
#include "gcnrn/training.hpp"

namespace gcnrn::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string out_path(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.output_dir);
  return (fs::path(c.output_dir) / name).string();
}

std::string or_default(const std::string& path, const RunConfig& c, const std::string& name) {
  return path.empty() ? (fs::path(c.output_dir) / name).string() : path;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

void write_json(const std::string& path, const ordered_json& doc) {
  open_out(path) << doc.dump(2) << '\n';
  std::cerr << "wrote " << path << '\n';
}

LoadedData load_data(const RunConfig& c, bool need_survival = false) {
  const std::string survival = c.data.survival;
  if (need_survival && survival.empty()) throw IoError("data.survival is not set");
  auto loaded = load_real_dataset(or_default(c.data.expression, c, "expression.csv"),
                                  or_default(c.data.labels, c, "labels.csv"), or_default(c.data.edges, c, "edges.tsv"),
                                  survival);
  for (const auto& w : loaded.report.warnings) std::cerr << "warning: " << w << '\n';
  if (loaded.report.dropped_edges > 0) {
    std::cerr << "warning: " << loaded.report.dropped_edges << " edge(s) name genes outside the expression matrix\n";
  }
  if (!loaded.report.dropped_samples.empty()) {
    std::cerr << "warning: " << loaded.report.dropped_samples.size() << " labelled sample(s) have no expression row\n";
  }
  return loaded;
}

ordered_json metrics_json(const ClassificationMetrics& m, const ConfusionMatrix& cm,
                          const std::vector<std::string>& class_names) {
  ordered_json j;
  j["accuracy"] = m.accuracy;
  j["f1_weighted"] = m.f1_weighted;
  j["f1_macro"] = m.f1_macro;
  ordered_json per_class = ordered_json::array();
  for (std::size_t k = 0; k < m.f1.size(); ++k) {
    per_class.push_back({{"class", class_names[k]}, {"f1", m.f1[k]}, {"support", m.support[k]}});
  }
  j["per_class"] = per_class;
  ordered_json rows = ordered_json::array();
  for (int t = 0; t < cm.classes(); ++t) {
    ordered_json row = ordered_json::array();
    for (int p = 0; p < cm.classes(); ++p) row.push_back(cm.count(t, p));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  return j;
}

ordered_json mean_std_json(const MeanStd& ms) { return {{"mean", ms.mean}, {"std", ms.std}}; }

ordered_json cv_summary(const CvResult& cv) {
  return {{"splits", cv.splits.size()},
          {"peak_accuracy", mean_std_json(cv.peak_accuracy)},
          {"final_accuracy", mean_std_json(cv.final_accuracy)},
          {"f1_weighted", mean_std_json(cv.f1_weighted)},
          {"f1_macro", mean_std_json(cv.f1_macro)}};
}

void write_cv_table(const std::string& path, const CvResult& cv) {
  auto out = open_out(path);
  out << "split,peak_accuracy,final_accuracy,f1_weighted,f1_macro\n";
  for (const auto& s : cv.splits) {
    out << s.split << ',' << format_double(s.peak_accuracy) << ',' << format_double(s.final_accuracy) << ','
        << format_double(s.f1_weighted) << ',' << format_double(s.f1_macro) << '\n';
  }
  std::cerr << "wrote " << path << '\n';
}

std::string checkpoint_path(const RunConfig& c, const std::string& given) {
  return given.empty() ? (fs::path(c.output_dir) / "model.ckpt.json").string() : given;
}

struct Restored {
  LoadedData data;
  std::unique_ptr<HybridModel> model;
};

// Rebuilds the model with the architecture recorded in the checkpoint.
Restored restore(const RunConfig& config, const std::string& checkpoint) {
  const std::string path = checkpoint_path(config, checkpoint);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("checkpoint '" + path + "': " + e.what());
  }
  if (!doc.contains("meta") || !doc["meta"].contains("config")) {
    throw ParseError("checkpoint '" + path + "' has no recorded config");
  }
  RunConfig saved = RunConfig::from_json(doc["meta"]["config"]);
  Restored r{load_data(config), nullptr};
  const auto names = doc["meta"].value("class_names", std::vector<std::string>{});
  if (names != r.data.dataset.class_names) {
    throw DimensionMismatch("checkpoint classes differ from the dataset's labels");
  }
  r.model = std::make_unique<HybridModel>(r.data.graph, r.data.dataset.num_classes(), saved.model);
  r.model->load(path);
  return r;
}

}  // namespace

void synth_gen(const RunConfig& config) {
  const auto data = gen_synthetic(config.synthetic);
  write_expression_csv(out_path(config, "expression.csv"), data.dataset);
  write_labels_csv(out_path(config, "labels.csv"), data.dataset);
  {
    auto out = open_out(out_path(config, "edges.tsv"));
    out << "# gene_a\tgene_b\tweight\n";
    write_edge_list(out, data.graph, data.dataset.feature_names);
  }
  const auto& rep = data.covariances.repair;
  write_json(out_path(config, "synthetic.json"),
             {{"spec", config.to_json()["synthetic"]},
              {"vertices", data.graph.num_nodes()},
              {"edges", data.graph.num_edges()},
              {"psd_clipped", {rep[0].clipped, rep[1].clipped}},
              {"psd_max_clip", {rep[0].max_clip, rep[1].max_clip}}});
  std::cerr << "wrote " << data.dataset.num_samples() << " samples over " << data.graph.num_nodes() << " vertices to "
            << config.output_dir << '\n';
}

void train_cmd(const RunConfig& config) {
  const auto loaded = load_data(config);
  const auto& d = loaded.dataset;
  // Split 0 of the Monte-Carlo scheme provides the held-out validation set.
  const auto split = cv_split(d.y, d.num_classes(), config.model.seed, 0);
  const Dataset tr = d.subset(split.train);
  const Dataset va = d.subset(split.validation);
  HybridModel model(loaded.graph, d.num_classes(), config.model);
  std::cerr << "training on " << tr.num_samples() << " samples, validating on " << va.num_samples() << '\n';
  const auto report = train(model, tr, &va);

  ordered_json meta;
  meta["config"] = config.to_json();
  meta["class_names"] = d.class_names;
  model.save(out_path(config, "model.ckpt.json"), meta.dump());
  std::cerr << "wrote " << out_path(config, "model.ckpt.json") << '\n';

  ordered_json manifest;
  manifest["config"] = config.to_json();
  manifest["train_samples"] = tr.num_samples();
  manifest["validation_samples"] = va.num_samples();
  ordered_json epochs = ordered_json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}});
  }
  manifest["epochs"] = epochs;
  manifest["peak_accuracy"] = report.peak_accuracy;
  manifest["final"] = metrics_json(report.final_metrics, report.final_confusion, d.class_names);
  write_json(out_path(config, "train_manifest.json"), manifest);
  std::cerr << "peak accuracy " << report.peak_accuracy << ", final " << report.final_accuracy << '\n';
}

void eval_cmd(const RunConfig& config, const std::string& checkpoint) {
  auto r = restore(config, checkpoint);
  const auto& d = r.data.dataset;
  const auto predicted = predict_batched(*r.model, d.x);
  const ConfusionMatrix cm(d.y, predicted, d.num_classes());
  auto j = metrics_json(classification_metrics(cm), cm, d.class_names);
  j["samples"] = d.num_samples();
  write_json(out_path(config, "eval_metrics.json"), j);
}

void cv_cmd(const RunConfig& config) {
  const auto loaded = load_data(config);
  const auto cv = model_cv(loaded.dataset, loaded.graph, config.model, config.cv.splits, config.cv.workers);
  write_cv_table(out_path(config, "cv_splits.csv"), cv);
  ordered_json j = cv_summary(cv);
  j["relation"] = to_string(config.model.relation);
  write_json(out_path(config, "cv_summary.json"), j);
}

void sweep_cmd(const RunConfig& config) {
  SweepOptions options;
  options.n_values = config.sweep.n_values;
  options.distances = config.sweep.distances;
  options.methods = config.sweep.methods;
  options.splits = config.sweep.splits;
  options.knn_k = config.baseline.knn_k;
  options.workers = config.cv.workers;
  const std::string path = out_path(config, "sweep.csv");
  auto out = open_out(path);
  out << "n,distance,method,mean_peak_accuracy,std_peak_accuracy,mean_final_accuracy,std_final_accuracy,"
         "mean_f1_weighted,mean_f1_macro\n";
  run_sweep(config.synthetic, config.model, options, [&](const SweepRow& row) {
    const auto& cv = row.cv;
    out << row.point.n << ',' << format_double(row.point.distance) << ',' << row.method << ','
        << format_double(cv.peak_accuracy.mean) << ',' << format_double(cv.peak_accuracy.std) << ','
        << format_double(cv.final_accuracy.mean) << ',' << format_double(cv.final_accuracy.std) << ','
        << format_double(cv.f1_weighted.mean) << ',' << format_double(cv.f1_macro.mean) << '\n';
    out.flush();
    std::cerr << "n=" << row.point.n << " d=" << row.point.distance << " " << row.method << ": "
              << cv.peak_accuracy.mean << '\n';
  });
  std::cerr << "wrote " << path << '\n';
}

void baseline_cmd(const RunConfig& config) {
  const auto loaded = load_data(config);
  const auto kind = baseline_kind_from_string(config.baseline.method);
  const auto cv = baseline_cv(loaded.dataset, kind, config.cv.splits, config.model.seed, config.baseline.knn_k,
                              config.cv.workers);
  const std::string name = "baseline_" + to_string(kind);
  write_cv_table(out_path(config, name + "_splits.csv"), cv);
  ordered_json j = cv_summary(cv);
  j["method"] = to_string(kind);
  write_json(out_path(config, name + "_summary.json"), j);
}

void export_embeddings(const RunConfig& config, const std::string& checkpoint) {
  auto r = restore(config, checkpoint);
  const auto& d = r.data.dataset;
  const auto& features = h_forward(*r.model, d.x).features;
  const Matrix flat = features.flatten();
  const std::string path = out_path(config, "embeddings.csv");
  auto out = open_out(path);
  out << "sample_id";
  for (index_t f = 0; f < features.channels; ++f) {
    for (index_t i = 0; i < features.nodes; ++i) out << ",f" << f << "_node" << i;
  }
  out << '\n';
  for (index_t p = 0; p < flat.rows(); ++p) {
    out << d.sample_ids[static_cast<std::size_t>(p)];
    for (index_t k = 0; k < flat.cols(); ++k) out << ',' << format_double(flat(p, k));
    out << '\n';
  }
  std::cerr << "wrote " << path << '\n';
}

void export_attention(const RunConfig& config, const std::string& checkpoint) {
  auto r = restore(config, checkpoint);
  auto* head = r.model->relation_head();
  if (!head) throw ConfigError("export-attention needs a model trained with relation = modified");
  const auto& sel = *r.model->selection();
  const auto& hierarchy = r.model->hierarchy();
  std::map<index_t, std::vector<std::string>> members;
  for (index_t v = 0; v < r.data.graph.num_nodes(); ++v) {
    members[hierarchy.coarsest_node_of(v)].push_back(r.data.dataset.feature_names[static_cast<std::size_t>(v)]);
  }
  auto joined = [&](index_t object) {
    std::string s;
    for (const auto& name : members[object]) s += (s.empty() ? "" : ";") + name;
    return s;
  };
  std::vector<std::size_t> order(sel.size());
  for (std::size_t q = 0; q < order.size(); ++q) order[q] = q;
  const auto& eps = head->epsilon.value;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(eps(0, static_cast<index_t>(a))) > std::abs(eps(0, static_cast<index_t>(b)));
  });
  const std::string path = out_path(config, "attention.csv");
  auto out = open_out(path);
  out << "node_a,node_b,epsilon,edge_weight,genes_a,genes_b\n";
  for (auto q : order) {
    const auto [a, b] = sel.pairs[q];
    out << a << ',' << b << ',' << format_double(eps(0, static_cast<index_t>(q))) << ','
        << format_double(sel.weights[q]) << ",\"" << joined(a) << "\",\"" << joined(b) << "\"\n";
  }
  std::cerr << "wrote " << path << '\n';
}

void survival_cmd(const RunConfig& config) {
  const auto loaded = load_data(config, true);
  const auto& d = loaded.dataset;
  const std::string emb_path = or_default(config.survival.embeddings, config, "embeddings.csv");
  std::ifstream in(emb_path);
  if (!in) throw IoError("cannot open embeddings '" + emb_path + "' (run export-embeddings first)");
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < d.sample_ids.size(); ++i) row_of[d.sample_ids[i]] = i;

  std::string line;
  std::getline(in, line);
  const auto width = split_csv_line(line).size();
  if (width < 2) throw ParseError(emb_path + ":1: expected sample_id plus feature columns");
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != width) {
      throw ParseError(emb_path + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields");
    }
    if (!row_of.count(fields[0])) throw JoinError("embedded sample '" + fields[0] + "' is not in the dataset");
    ids.push_back(fields[0]);
    std::vector<double> values;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      try {
        values.push_back(std::stod(fields[k]));
      } catch (const std::exception&) {
        throw ParseError(emb_path + ":" + std::to_string(line_no) + ", column " + std::to_string(k + 1) +
                         ": invalid number '" + fields[k] + "'");
      }
    }
    rows.push_back(std::move(values));
  }
  if (static_cast<int>(rows.size()) < config.survival.clusters) {
    throw DimensionMismatch("fewer embedded samples than clusters");
  }
  Matrix points(static_cast<index_t>(rows.size()), static_cast<index_t>(width - 1));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < rows[r].size(); ++k) points(static_cast<index_t>(r), static_cast<index_t>(k)) = rows[r][k];
  }
  const auto ward = ward_cluster(points, config.survival.clusters);

  std::vector<std::vector<SurvivalRecord>> groups(static_cast<std::size_t>(config.survival.clusters));
  {
    auto out = open_out(out_path(config, "survival_clusters.csv"));
    out << "sample_id,cluster,time_days,event\n";
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const auto& rec = (*d.survival)[row_of.at(ids[r])];
      const int c = ward.assignment[r];
      groups[static_cast<std::size_t>(c)].push_back(rec);
      out << ids[r] << ',' << c << ',' << format_double(rec.time) << ',' << (rec.event ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open_out(out_path(config, "km_curves.csv"));
    out << "cluster,time,survival,at_risk,events\n";
    for (std::size_t c = 0; c < groups.size(); ++c) {
      const auto curve = km_estimate(groups[c]);
      out << c << ",0,1," << groups[c].size() << ",0\n";
      for (std::size_t k = 0; k < curve.times.size(); ++k) {
        out << c << ',' << format_double(curve.times[k]) << ',' << format_double(curve.survival[k]) << ','
            << curve.at_risk[k] << ',' << curve.events[k] << '\n';
      }
    }
  }
  ordered_json tests = ordered_json::array();
  for (std::size_t a = 0; a < groups.size(); ++a) {
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      const auto lr = logrank_test(groups[a], groups[b]);
      tests.push_back({{"cluster_a", a},
                       {"cluster_b", b},
                       {"size_a", groups[a].size()},
                       {"size_b", groups[b].size()},
                       {"chi_square", lr.chi_square},
                       {"p_value", lr.p_value}});
      std::cerr << "clusters " << a << " vs " << b << ": chi2 " << lr.chi_square << ", p " << lr.p_value << '\n';
    }
  }
  write_json(out_path(config, "logrank.json"), {{"tests", tests}});
}

}  // namespace gcnrn::cli
