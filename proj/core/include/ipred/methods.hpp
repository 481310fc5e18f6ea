#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ipred/baselines.hpp"
#include "ipred/cvae.hpp"
#include "ipred/metrics.hpp"

namespace ipred {

enum class Method { proposed, cvae_no_intention, mlp_ensemble, mc_dropout };

const char* to_string(Method m);
// Throws InvalidArgument listing the valid names.
Method method_from_string(const std::string& name);
std::span<const Method> all_methods();

struct MethodOptions {
  ModelConfig model;
  TrainConfig train;
  std::size_t ensemble_members = kDefaultEnsembleSize;
  std::size_t member_epochs = 0;  // 0: same as train.epochs
  double dropout_rate = kDefaultDropoutRate;
  // Feed the intention one-hot to the ensemble and dropout baselines.
  bool baseline_intention = false;
};

// ModelConfig actually used by a method (intention switched per method).
ModelConfig method_model_config(Method m, const MethodOptions& opts);

class TrainedMethod {
 public:
  using Model = std::variant<CvaeModel, EnsembleModel, MlpModel>;

  TrainedMethod(Method method, double dropout_rate, Model model);

  Method method() const { return method_; }
  const ModelConfig& config() const;
  double dropout_rate() const { return dropout_rate_; }
  const Model& model() const { return model_; }

  // Samples in model units. `plausible` is only used by the proposed
  // method, which splits the samples evenly over those branches.
  PredictionResult predict(const FeatureVector& fv, std::span<const int> plausible, std::size_t n_samples,
                           std::uint64_t seed) const;

  dc::Checkpoint checkpoint() const;
  static TrainedMethod from_checkpoint(const dc::Checkpoint& ckpt, const ModelConfig& config);

 private:
  Method method_;
  double dropout_rate_;
  Model model_;
};

struct TrainingRun {
  TrainedMethod method;
  LossCurve curve;  // ensemble: per-epoch mean over members
};

TrainingRun train_method(Method m, std::span<const WindowExample> data, const MethodOptions& opts);

// Predictor scoring in world units.
NamedPredictor make_predictor(const TrainedMethod& tm, const Normalizer& norm);

}  // namespace ipred
