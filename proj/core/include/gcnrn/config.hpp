#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnrn/data.hpp"
#include "gcnrn/model.hpp"
#include "gcnrn/training.hpp"

namespace gcnrn {

/// Input files for real data. Empty paths fall back to the files
/// `synth-gen` writes into the output directory.
struct DataPaths {
  std::string expression;
  std::string labels;
  std::string edges;
  std::string survival;
};

struct CvSettings {
  int splits = 20;
  int workers = 1;
};

struct SweepSettings {
  std::vector<index_t> n_values{50, 100, 200, 400};
  std::vector<double> distances{0.0, 0.5, 1.0, 2.0};
  std::vector<std::string> methods{"hybrid", "gcnn", "gnb"};
  int splits = 20;
};

struct BaselineSettings {
  std::string method = "gnb";
  int knn_k = 5;
};

struct SurvivalSettings {
  std::string embeddings;  ///< empty: <output>/embeddings.csv
  int clusters = 2;
};

/// Everything a CLI command reads. Serialized as one JSON document whose
/// sections are synthetic, model, data, output, cv, sweep, baseline and
/// survival. Unknown keys are rejected; dump() lists every default.
struct RunConfig {
  SyntheticSpec synthetic;
  ModelConfig model;
  DataPaths data;
  std::string output_dir = "out";
  CvSettings cv;
  SweepSettings sweep;
  BaselineSettings baseline;
  SurvivalSettings survival;

  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults. Throws ConfigError.
  static RunConfig from_json(const nlohmann::json& j);
  std::string dump() const;
  /// Throws ConfigError with line and column on malformed JSON.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  /// Applies `section.key=value`. The value is read as JSON when it parses
  /// (numbers, booleans, arrays) and as a plain string otherwise.
  void apply_override(const std::string& assignment);

  /// Throws ConfigError on out-of-range settings.
  void validate() const;
};

}  // namespace gcnrn
