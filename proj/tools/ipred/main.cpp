#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "ipred/version.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ipred");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("IP_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string(level) != "off")
      spdlog::warn("IP_LOG={} is not a log level; using info", level);
    else
      spdlog::set_level(parsed);
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ipred::cli;
  setup_logging();

  CLI::App app{"Interaction-aware multi-modal trajectory prediction"};
  app.set_version_flag("--version", std::string(ipred::kVersion));
  app.require_subcommand(1);

  GlobalOptions global;
  std::string config_path;
  app.add_option("--seed", global.seed, "Root seed for every random stream")->capture_default_str();
  app.add_option("--out", global.out, "Output directory")->capture_default_str();
  app.add_option("--config", config_path, "JSON file overriding model/train/scenario defaults")
      ->check(CLI::ExistingFile);
  app.add_flag("--force", global.force, "Overwrite existing outputs");

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic roundabout dataset");
  gen_cmd->add_option("--cases", gen.cases, "Number of episodes")->capture_default_str();
  gen_cmd->add_option("--split", gen.split, "Training fraction")->capture_default_str();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train one method");
  train_cmd->add_option("--data", train.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--method", train.method, "proposed | cvae-noI | mlp-ensemble | mc-dropout")->required();
  train_cmd->add_option("--beta", train.beta, "KL weight");
  train_cmd->add_option("--epochs", train.epochs, "Training epochs");
  train_cmd->add_option("--members", train.members, "Ensemble size");
  train_cmd->add_option("--member-epochs", train.member_epochs, "Epochs per ensemble member");
  train_cmd->add_option("--dropout", train.dropout, "Dropout rate");
  train_cmd->add_flag("--baseline-intention", train.baseline_intention,
                      "Give the ensemble/dropout baselines the intention input");

  PredictOptions pred;
  auto* pred_cmd = app.add_subcommand("predict", "Track intentions and sample futures along one case");
  pred_cmd->add_option("--model", pred.model, "Model directory")->required()->check(CLI::ExistingDirectory);
  pred_cmd->add_option("--data", pred.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  pred_cmd->add_option("--case", pred.case_id, "Case id (default: first test case)");
  pred_cmd->add_option("--samples", pred.samples, "Samples per step")->capture_default_str();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score methods on the bimodal test set");
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--models", ev.models, "Directory holding one <method>/ subdirectory per method")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--methods", ev.methods, "Methods to score (default: all)")->delimiter(',');
  eval_cmd->add_option("--samples", ev.samples, "Samples per case")->capture_default_str();

  LatentGridOptions grid;
  auto* grid_cmd = app.add_subcommand("latent-grid", "Decode a grid over the 2-D latent space");
  grid_cmd->add_option("--model", grid.model, "Model directory")->required()->check(CLI::ExistingDirectory);
  grid_cmd->add_option("--data", grid.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  grid_cmd->add_option("--case", grid.case_id, "Case id (default: first bimodal test case)");
  grid_cmd->add_option("--branch", grid.branch, "Fixed intention branch (default: tracker argmax)")
      ->check(CLI::Range(0, 7));
  grid_cmd->add_option("--min", grid.min, "Grid lower bound")->capture_default_str();
  grid_cmd->add_option("--max", grid.max, "Grid upper bound")->capture_default_str();
  grid_cmd->add_option("--steps", grid.steps, "Points per axis")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (!config_path.empty()) global.config = config_path;

  try {
    if (*gen_cmd) cmd_gen_data(global, gen);
    else if (*train_cmd) cmd_train(global, train);
    else if (*pred_cmd) cmd_predict(global, pred);
    else if (*eval_cmd) cmd_eval(global, ev);
    else if (*grid_cmd) cmd_latent_grid(global, grid);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
