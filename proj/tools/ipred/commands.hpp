#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ipred::cli {

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> config;
  bool force = false;
};

struct GenDataOptions {
  std::size_t cases = 500;
  double split = 0.8;
};

struct TrainOptions {
  std::filesystem::path data;
  std::string method;
  std::optional<double> beta;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> members;
  std::optional<std::size_t> member_epochs;
  std::optional<double> dropout;
  bool baseline_intention = false;
};

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::optional<std::string> case_id;
  std::size_t samples = 10;
};

struct EvalOptions {
  std::filesystem::path data;
  std::filesystem::path models;
  std::vector<std::string> methods;
  std::size_t samples = 100;
};

struct LatentGridOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::optional<std::string> case_id;
  std::optional<int> branch;
  double min = -2.0;
  double max = 2.0;
  std::size_t steps = 5;
};

void cmd_gen_data(const GlobalOptions& g, const GenDataOptions& o);
void cmd_train(const GlobalOptions& g, const TrainOptions& o);
void cmd_predict(const GlobalOptions& g, const PredictOptions& o);
void cmd_eval(const GlobalOptions& g, const EvalOptions& o);
void cmd_latent_grid(const GlobalOptions& g, const LatentGridOptions& o);

}  // namespace ipred::cli
