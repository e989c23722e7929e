#pragma once

#include <string>

#include "gcnrn/config.hpp"

namespace gcnrn::cli {

/// Every command reads the resolved config and writes under config.output_dir.
/// Library errors propagate; main() maps them to exit codes.
void synth_gen(const RunConfig& config);
void train_cmd(const RunConfig& config);
void eval_cmd(const RunConfig& config, const std::string& checkpoint);
void cv_cmd(const RunConfig& config);
void sweep_cmd(const RunConfig& config);
void baseline_cmd(const RunConfig& config);
void survival_cmd(const RunConfig& config);
void export_embeddings(const RunConfig& config, const std::string& checkpoint);
void export_attention(const RunConfig& config, const std::string& checkpoint);

}  // namespace gcnrn::cli
