#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ipred/diffcore/checkpoint.hpp"
#include "ipred/diffcore/graph.hpp"
#include "ipred/diffcore/layers.hpp"
#include "ipred/diffcore/params.hpp"
#include "ipred/features.hpp"
#include "ipred/intention.hpp"
#include "ipred/rng.hpp"

namespace ipred {

struct ModelConfig {
  std::size_t t1 = 5;
  std::size_t t2 = 5;
  double dt = 0.2;
  std::size_t lstm_hidden = 16;
  std::size_t env_embed = 16;
  std::vector<std::size_t> enc_hidden{64, 64, 64};
  std::vector<std::size_t> dec_hidden{64, 64, 64};
  std::size_t latent_dim = 2;
  // KL weight for reconstruction measured in ring-radius units.
  double beta = 1e-4;
  // false gives the intention-free CVAE (encoder/decoder inputs lose the
  // 8-wide one-hot).
  bool use_intention = true;

  std::size_t condition_dim() const { return lstm_hidden + env_embed; }
  std::size_t output_dim() const { return t2 * kJointFeatures; }
  std::size_t intention_dim() const { return use_intention ? static_cast<std::size_t>(kBranchCount) : 0; }
  void validate() const;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  double grad_clip = 0.0;  // global-norm clip, 0 disables
};

struct LossCurve {
  std::vector<double> train;
  std::vector<double> val;  // NaN when there is no validation split
};

// Stacked feature matrices for a minibatch (rows = examples).
struct Batch {
  std::vector<dc::Matrix> past;  // T1 matrices [B x 4]
  dc::Matrix env;                // [B x 6]
  dc::Matrix intention;          // [B x 8]
  dc::Matrix future;             // [B x T2*4], empty when not provided

  std::size_t size() const { return static_cast<std::size_t>(env.rows()); }
};

Batch make_batch(std::span<const FeatureVector* const> features, std::span<const dc::Tensor* const> futures,
                 std::size_t t1);
Batch make_batch(std::span<const WindowExample> examples, std::span<const std::size_t> indices, std::size_t t1);

// History + environment embedding shared by the CVAE and the MLP baselines:
// LSTM over the past joint trajectory, tanh dense layer over the
// environment, concatenated.
struct ConditionEmbedder {
  dc::LstmBlock lstm;
  dc::DenseBlock env;

  static ConditionEmbedder make(const ModelConfig& cfg);
  void init(dc::ParamStore& store, Rng& rng) const;
  dc::Var forward(dc::Graph& g, dc::ParamStore& store, const Batch& batch) const;
};

struct LatentSample {
  dc::Tensor z;
  dc::Tensor mu;
  dc::Tensor log_var;
  dc::Tensor eps;
};

// Joint futures in model units, each [T2 x 4] = (xA, yA, xB, yB) per step.
struct PredictionResult {
  std::vector<dc::Tensor> samples;
  dc::Tensor mean;      // [T2 x 4]
  dc::Tensor variance;  // [T2 x 4], population variance across samples

  void compute_stats();
  PredictionResult to_world(const Normalizer& norm) const;
};

class CvaeModel {
 public:
  CvaeModel(ModelConfig config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  dc::ParamStore& params() { return params_; }
  const dc::ParamStore& params() const { return params_; }
  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }

  // Graph-level building blocks (batched).
  dc::Var embed(dc::Graph& g, const Batch& batch);
  std::pair<dc::Var, dc::Var> encode(dc::Graph& g, dc::Var x, dc::Var c, dc::Var y);
  dc::Var decode(dc::Graph& g, dc::Var x, dc::Var c, dc::Var z);
  // Mean ELBO over the batch with the given standard-normal noise [B x latent].
  dc::Var elbo(dc::Graph& g, const Batch& batch, const dc::Matrix& eps);

  // Single-example tensor API.
  dc::Tensor embed_condition(const FeatureVector& fv) const;
  std::pair<dc::Tensor, dc::Tensor> encode(const dc::Tensor& x, const IntentionOneHot& c, const dc::Tensor& y) const;
  dc::Tensor decode(const dc::Tensor& x, const IntentionOneHot& c, const dc::Tensor& z) const;

  dc::Checkpoint to_checkpoint(const std::string& method) const;
  static CvaeModel from_checkpoint(const dc::Checkpoint& ckpt, ModelConfig config);

 private:
  dc::Var intention_input(dc::Graph& g, const dc::Matrix& intention) const;

  ModelConfig config_;
  ConditionEmbedder embedder_;
  std::vector<dc::DenseBlock> encoder_;
  dc::DenseBlock enc_mu_;
  dc::DenseBlock enc_log_var_;
  std::vector<dc::DenseBlock> decoder_;
  dc::DenseBlock dec_out_;
  dc::ParamStore params_;
  bool trained_ = false;
};

dc::Tensor reparameterize(const dc::Tensor& mu, const dc::Tensor& log_var, const dc::Tensor& eps);
LatentSample sample_latent(const dc::Tensor& mu, const dc::Tensor& log_var, Rng& rng);

// 0.5 * sum(exp(log_var) + mu^2 - 1 - log_var)
double kl_divergence(const dc::Tensor& mu, const dc::Tensor& log_var);
// Mean squared reconstruction error plus beta times the KL term.
double elbo_loss(const dc::Tensor& y, const dc::Tensor& y_hat, const dc::Tensor& mu, const dc::Tensor& log_var,
                 double beta);

LossCurve train(CvaeModel& model, std::span<const WindowExample> data, const TrainConfig& cfg);

// Draws n_samples z ~ N(0, I) and decodes each with the features' own
// intention. Throws if the model is not trained.
PredictionResult predict(const CvaeModel& model, const FeatureVector& fv, std::size_t n_samples, std::uint64_t seed);

// Same latent draws as predict(); sample k is decoded under
// branches[k % branches.size()], so the intentions share the samples
// equally.
PredictionResult predict_over_intentions(const CvaeModel& model, const FeatureVector& fv,
                                         std::span<const int> branches, std::size_t n_samples, std::uint64_t seed);

// Decodes each latent point with the features' fixed x and c, in grid order.
std::vector<std::pair<dc::Tensor, dc::Tensor>> latent_grid(const CvaeModel& model, const FeatureVector& fv,
                                                           std::span<const dc::Tensor> grid);

// Regular steps x steps grid over [lo, hi]^2, row-major in (z1, z2).
std::vector<dc::Tensor> make_grid(double lo, double hi, std::size_t steps);

}  // namespace ipred
