#include "ipred/methods.hpp"

#include <array>
#include <cmath>

#include "ipred/error.hpp"

namespace ipred {

namespace {

constexpr std::array<Method, 4> kMethods{Method::proposed, Method::cvae_no_intention, Method::mlp_ensemble,
                                         Method::mc_dropout};

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::proposed: return "proposed";
    case Method::cvae_no_intention: return "cvae-noI";
    case Method::mlp_ensemble: return "mlp-ensemble";
    case Method::mc_dropout: return "mc-dropout";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  std::string valid;
  for (Method m : kMethods) {
    if (name == to_string(m)) return m;
    valid += valid.empty() ? "" : ", ";
    valid += to_string(m);
  }
  throw InvalidArgument("unknown method '" + name + "'; valid methods: " + valid);
}

std::span<const Method> all_methods() { return kMethods; }

ModelConfig method_model_config(Method m, const MethodOptions& opts) {
  ModelConfig c = opts.model;
  switch (m) {
    case Method::proposed: c.use_intention = true; break;
    case Method::cvae_no_intention: c.use_intention = false; break;
    case Method::mlp_ensemble:
    case Method::mc_dropout: c.use_intention = opts.baseline_intention; break;
  }
  return c;
}

TrainedMethod::TrainedMethod(Method method, double dropout_rate, Model model)
    : method_(method), dropout_rate_(dropout_rate), model_(std::move(model)) {
  const bool is_cvae = std::holds_alternative<CvaeModel>(model_);
  const bool ok = (method == Method::proposed || method == Method::cvae_no_intention) ? is_cvae
                  : method == Method::mlp_ensemble ? std::holds_alternative<EnsembleModel>(model_)
                                                   : std::holds_alternative<MlpModel>(model_);
  if (!ok) throw InvalidArgument(std::string("model type does not match method ") + to_string(method));
}

const ModelConfig& TrainedMethod::config() const {
  if (const auto* c = std::get_if<CvaeModel>(&model_)) return c->config();
  if (const auto* e = std::get_if<EnsembleModel>(&model_)) return e->members.at(0).config();
  return std::get<MlpModel>(model_).config();
}

PredictionResult TrainedMethod::predict(const FeatureVector& fv, std::span<const int> plausible,
                                        std::size_t n_samples, std::uint64_t seed) const {
  switch (method_) {
    case Method::proposed:
      if (plausible.empty()) return ipred::predict(std::get<CvaeModel>(model_), fv, n_samples, seed);
      return predict_over_intentions(std::get<CvaeModel>(model_), fv, plausible, n_samples, seed);
    case Method::cvae_no_intention: return ipred::predict(std::get<CvaeModel>(model_), fv, n_samples, seed);
    case Method::mlp_ensemble: return ensemble_predict(std::get<EnsembleModel>(model_), fv, n_samples);
    case Method::mc_dropout:
      return mc_dropout_predict(std::get<MlpModel>(model_), DropoutConfig{dropout_rate_, n_samples}, fv, seed);
  }
  throw InvalidArgument("unknown method");
}

dc::Checkpoint TrainedMethod::checkpoint() const {
  const std::string tag = to_string(method_);
  dc::Checkpoint ck;
  if (const auto* c = std::get_if<CvaeModel>(&model_)) ck = c->to_checkpoint(tag);
  else if (const auto* e = std::get_if<EnsembleModel>(&model_)) ck = ensemble_checkpoint(*e, tag);
  else ck = std::get<MlpModel>(model_).to_checkpoint(tag);
  if (method_ == Method::mc_dropout) ck.meta["dropout_rate"] = std::to_string(dropout_rate_);
  return ck;
}

TrainedMethod TrainedMethod::from_checkpoint(const dc::Checkpoint& ckpt, const ModelConfig& config) {
  const Method m = method_from_string(ckpt.method);
  switch (m) {
    case Method::proposed:
    case Method::cvae_no_intention: return TrainedMethod(m, 0.0, CvaeModel::from_checkpoint(ckpt, config));
    case Method::mlp_ensemble: return TrainedMethod(m, 0.0, ensemble_from_checkpoint(ckpt, config));
    case Method::mc_dropout: {
      const auto it = ckpt.meta.find("dropout_rate");
      if (it == ckpt.meta.end()) throw FormatError("mc-dropout checkpoint lacks dropout_rate");
      const double rate = std::stod(it->second);
      return TrainedMethod(m, rate, MlpModel::from_checkpoint(ckpt, config, rate));
    }
  }
  throw InvalidArgument("unknown method");
}

TrainingRun train_method(Method m, std::span<const WindowExample> data, const MethodOptions& opts) {
  const ModelConfig config = method_model_config(m, opts);
  const Rng root(opts.train.seed);
  const std::uint64_t init_seed = root.substream("init").seed();
  TrainConfig tc = opts.train;
  tc.seed = root.substream("train").seed();

  switch (m) {
    case Method::proposed:
    case Method::cvae_no_intention: {
      CvaeModel model(config, init_seed);
      LossCurve curve = train(model, data, tc);
      return {TrainedMethod(m, 0.0, std::move(model)), std::move(curve)};
    }
    case Method::mlp_ensemble: {
      if (opts.member_epochs > 0) tc.epochs = opts.member_epochs;
      LossCurve mean;
      EnsembleModel ens = train_mlp_ensemble(data, opts.ensemble_members, config, tc, &mean);
      return {TrainedMethod(m, 0.0, std::move(ens)), std::move(mean)};
    }
    case Method::mc_dropout: {
      MlpModel model(config, opts.dropout_rate, init_seed);
      LossCurve curve = train_mlp(model, data, {}, tc);
      return {TrainedMethod(m, opts.dropout_rate, std::move(model)), std::move(curve)};
    }
  }
  throw InvalidArgument("unknown method");
}

NamedPredictor make_predictor(const TrainedMethod& tm, const Normalizer& norm) {
  return {to_string(tm.method()), [&tm, norm](const EvalCase& c, std::size_t n, std::uint64_t seed) {
            return tm.predict(c.fv, c.plausible, n, seed).to_world(norm);
          }};
}

}  // namespace ipred
