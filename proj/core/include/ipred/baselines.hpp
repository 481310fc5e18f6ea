#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ipred/cvae.hpp"

namespace ipred {

inline constexpr std::size_t kDefaultEnsembleSize = 10;
inline constexpr double kDefaultDropoutRate = 0.1;

struct DropoutConfig {
  double rate = kDefaultDropoutRate;
  std::size_t n_forward_passes = 100;

  void validate() const;
};

// Inverted-dropout mask: entries are 0 with probability `rate`, otherwise
// 1 / (1 - rate).
dc::Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng);

// Deterministic regressor with the CVAE decoder's shape: (x, c?) -> y.
// Uses ModelConfig's embedder sizes, dec_hidden and use_intention; latent
// and beta are ignored. Dropout follows every hidden layer when rate > 0.
class MlpModel {
 public:
  MlpModel(ModelConfig config, double dropout_rate, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  double dropout_rate() const { return dropout_rate_; }
  dc::ParamStore& params() { return params_; }
  const dc::ParamStore& params() const { return params_; }
  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }

  // Dropout masks are drawn from `rng` when it is non-null and rate > 0.
  dc::Var forward(dc::Graph& g, const Batch& batch, Rng* rng);

  dc::Checkpoint to_checkpoint(const std::string& method) const;
  static MlpModel from_checkpoint(const dc::Checkpoint& ckpt, ModelConfig config, double dropout_rate);

 private:
  ModelConfig config_;
  double dropout_rate_;
  ConditionEmbedder embedder_;
  std::vector<dc::DenseBlock> hidden_;
  dc::DenseBlock out_;
  dc::ParamStore params_;
  bool trained_ = false;
};

// Mean squared error training over data[indices] (all of data when indices
// is empty), dropout active.
LossCurve train_mlp(MlpModel& model, std::span<const WindowExample> data, std::span<const std::size_t> indices,
                    const TrainConfig& cfg);

struct EnsembleModel {
  std::vector<MlpModel> members;

  std::size_t member_count() const { return members.size(); }
};

// n draws with replacement from [0, n).
std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng);

// Member k trains on its own bootstrap resample. When `mean_curve` is set it
// receives the per-epoch mean of the member loss curves.
EnsembleModel train_mlp_ensemble(std::span<const WindowExample> data, std::size_t member_count,
                                 const ModelConfig& config, const TrainConfig& cfg, LossCurve* mean_curve = nullptr);

// Sample k is member k mod M, so the sample statistics equal the
// across-member statistics whenever M divides n_samples.
PredictionResult ensemble_predict(const EnsembleModel& ensemble, const FeatureVector& fv, std::size_t n_samples);

// n_forward_passes stochastic passes with fresh masks per pass.
PredictionResult mc_dropout_predict(const MlpModel& model, const DropoutConfig& dropout, const FeatureVector& fv,
                                    std::uint64_t seed);

dc::Checkpoint ensemble_checkpoint(const EnsembleModel& ensemble, const std::string& method);
EnsembleModel ensemble_from_checkpoint(const dc::Checkpoint& ckpt, const ModelConfig& config);

}  // namespace ipred
