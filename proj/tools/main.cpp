#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "commands.hpp"

using namespace gcnrn;

int main(int argc, char** argv) {
  CLI::App app{"gcnrn: graph convolution + relation network classifier"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string dump_to;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", overrides, "override as section.key=value (repeatable)");
  };
  auto add_ckpt = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", checkpoint, "checkpoint path (default <output>/model.ckpt.json)");
  };

  auto* synth = app.add_subcommand("synth-gen", "write a synthetic dataset and its graph");
  auto* train = app.add_subcommand("train", "train on split 0, write checkpoint and run manifest");
  auto* eval = app.add_subcommand("eval", "score a checkpoint on the dataset");
  auto* cv = app.add_subcommand("cv", "Monte-Carlo cross-validation of the model");
  auto* sweep = app.add_subcommand("sweep", "synthetic grid over vertex count and centroid distance");
  auto* baseline = app.add_subcommand("baseline", "Monte-Carlo cross-validation of gnb or knn");
  auto* survival = app.add_subcommand("survival", "Ward clusters of embeddings with KM curves and log-rank tests");
  auto* emb = app.add_subcommand("export-embeddings", "write the last feature map per sample");
  auto* att = app.add_subcommand("export-attention", "write relation attentions by descending magnitude");
  auto* config = app.add_subcommand("config", "config utilities");
  auto* dump = config->add_subcommand("dump", "print the resolved config with every default");
  config->require_subcommand(1);
  dump->add_option("-o,--output", dump_to, "write to a file instead of stdout");
  for (auto* sub : {synth, train, eval, cv, sweep, baseline, survival, emb, att, dump}) add_common(sub);
  for (auto* sub : {eval, emb, att}) add_ckpt(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig run = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    for (const auto& o : overrides) run.apply_override(o);
    run.validate();

    if (*synth) cli::synth_gen(run);
    else if (*train) cli::train_cmd(run);
    else if (*eval) cli::eval_cmd(run, checkpoint);
    else if (*cv) cli::cv_cmd(run);
    else if (*sweep) cli::sweep_cmd(run);
    else if (*baseline) cli::baseline_cmd(run);
    else if (*survival) cli::survival_cmd(run);
    else if (*emb) cli::export_embeddings(run, checkpoint);
    else if (*att) cli::export_attention(run, checkpoint);
    else if (*dump) {
      if (dump_to.empty()) {
        std::cout << run.dump();
      } else {
        std::ofstream out(dump_to);
        if (!out) throw IoError("cannot write '" + dump_to + "'");
        out << run.dump();
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
