#include "ipred/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <spdlog/spdlog.h>

#include "ipred/diffcore/optim.hpp"
#include "ipred/error.hpp"

namespace ipred {

using dc::Graph;
using dc::Matrix;
using dc::Var;

void DropoutConfig::validate() const {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must be in [0, 1)");
  if (n_forward_passes == 0) throw InvalidArgument("dropout needs at least one forward pass");
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must be in [0, 1)");
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < rate ? 0.0 : keep;
  return m;
}

MlpModel::MlpModel(ModelConfig config, double dropout_rate, std::uint64_t init_seed)
    : config_(std::move(config)), dropout_rate_(dropout_rate) {
  config_.validate();
  if (!(dropout_rate_ >= 0.0 && dropout_rate_ < 1.0)) throw InvalidArgument("dropout rate must be in [0, 1)");
  embedder_ = ConditionEmbedder::make(config_);
  std::size_t in = config_.condition_dim() + config_.intention_dim();
  for (std::size_t i = 0; i < config_.dec_hidden.size(); ++i) {
    hidden_.push_back({"mlp." + std::to_string(i), in, config_.dec_hidden[i], dc::Activation::tanh});
    in = config_.dec_hidden[i];
  }
  out_ = {"mlp.out", in, config_.output_dim(), dc::Activation::identity};

  Rng rng = Rng(init_seed).substream("init");
  embedder_.init(params_, rng);
  for (const auto& b : hidden_) b.init(params_, rng);
  out_.init(params_, rng);
}

Var MlpModel::forward(Graph& g, const Batch& batch, Rng* rng) {
  Var h = embedder_.forward(g, params_, batch);
  if (config_.use_intention) {
    const Var parts[] = {h, g.constant(batch.intention)};
    h = g.concat_cols(parts);
  }
  for (const auto& layer : hidden_) {
    h = layer.forward(g, params_, h);
    if (rng && dropout_rate_ > 0.0) {
      const Matrix& v = g.value(h);
      h = g.mask(h, dropout_mask(v.rows(), v.cols(), dropout_rate_, *rng));
    }
  }
  return out_.forward(g, params_, h);
}

dc::Checkpoint MlpModel::to_checkpoint(const std::string& method) const {
  dc::Checkpoint ck;
  ck.method = method;
  ck.trained = trained_;
  ck.params = params_;
  return ck;
}

MlpModel MlpModel::from_checkpoint(const dc::Checkpoint& ckpt, ModelConfig config, double dropout_rate) {
  MlpModel m(std::move(config), dropout_rate, 0);
  if (!m.params_.same_layout(ckpt.params))
    throw FormatError("checkpoint parameters do not match the model configuration");
  for (std::size_t i = 0; i < m.params_.size(); ++i) m.params_[i].value = ckpt.params[i].value;
  m.trained_ = ckpt.trained;
  return m;
}

LossCurve train_mlp(MlpModel& model, std::span<const WindowExample> data, std::span<const std::size_t> indices,
                    const TrainConfig& cfg) {
  if (data.empty()) throw InvalidArgument("train: empty dataset");
  if (cfg.batch_size == 0) throw InvalidArgument("train: batch size must be positive");
  std::vector<std::size_t> pool(indices.begin(), indices.end());
  if (pool.empty()) {
    pool.resize(data.size());
    std::iota(pool.begin(), pool.end(), 0);
  }
  const Rng root(cfg.seed);
  Rng split = root.substream("val_split");
  for (std::size_t i = pool.size(); i-- > 1;) std::swap(pool[i], pool[split.uniform_index(i + 1)]);
  auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(pool.size())));
  if (n_val >= pool.size()) n_val = 0;
  std::vector<std::size_t> val_idx(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(pool.begin() + static_cast<std::ptrdiff_t>(n_val), pool.end());

  dc::OptimizerState opt(model.params(), dc::AdamConfig{cfg.learning_rate});
  Rng shuffle = root.substream("shuffle");
  Rng masks = root.substream("dropout");
  const std::size_t t1 = model.config().t1;

  LossCurve curve;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = train_idx.size(); i-- > 1;) std::swap(train_idx[i], train_idx[shuffle.uniform_index(i + 1)]);
    double total = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(train_idx.data() + start, stop - start);
      const Batch batch = make_batch(data, idx, t1);
      model.params().zero_grad();
      Graph g;
      Var loss = g.mean(g.square(g.sub(g.constant(batch.future), model.forward(g, batch, &masks))));
      const double value = g.value(loss)(0, 0);
      if (!std::isfinite(value))
        throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch) + ", batch starting " +
                           std::to_string(start));
      g.backward(loss);
      if (cfg.grad_clip > 0.0) dc::clip_grad_norm(model.params(), cfg.grad_clip);
      opt.step(model.params());
      total += value * static_cast<double>(idx.size());
    }
    curve.train.push_back(total / static_cast<double>(train_idx.size()));

    double val = std::numeric_limits<double>::quiet_NaN();
    if (!val_idx.empty()) {
      double acc = 0.0;
      for (std::size_t start = 0; start < val_idx.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(val_idx.size(), start + cfg.batch_size);
        const std::span<const std::size_t> idx(val_idx.data() + start, stop - start);
        const Batch batch = make_batch(data, idx, t1);
        Graph g;
        Var loss = g.mean(g.square(g.sub(g.constant(batch.future), model.forward(g, batch, nullptr))));
        acc += g.value(loss)(0, 0) * static_cast<double>(idx.size());
      }
      val = acc / static_cast<double>(val_idx.size());
    }
    curve.val.push_back(val);
    spdlog::debug("epoch {:3d} train {:.6f} val {:.6f}", epoch, curve.train.back(), val);
  }
  model.set_trained(true);
  return curve;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = rng.uniform_index(n);
  return out;
}

EnsembleModel train_mlp_ensemble(std::span<const WindowExample> data, std::size_t member_count,
                                 const ModelConfig& config, const TrainConfig& cfg, LossCurve* mean_curve) {
  if (member_count < 2) throw InvalidArgument("ensemble needs at least 2 members");
  if (data.empty()) throw InvalidArgument("train: empty dataset");
  const Rng root(cfg.seed);
  EnsembleModel ens;
  for (std::size_t m = 0; m < member_count; ++m) {
    Rng boot = root.substream("bootstrap").substream(m);
    const auto idx = bootstrap_indices(data.size(), boot);
    MlpModel member(config, 0.0, root.substream("member_init").substream(m).seed());
    TrainConfig member_cfg = cfg;
    member_cfg.seed = root.substream("member_train").substream(m).seed();
    spdlog::info("training ensemble member {}/{}", m + 1, member_count);
    const LossCurve c = train_mlp(member, data, idx, member_cfg);
    if (mean_curve) {
      if (m == 0) *mean_curve = LossCurve{std::vector<double>(c.train.size()), std::vector<double>(c.val.size())};
      const double w = 1.0 / static_cast<double>(member_count);
      for (std::size_t e = 0; e < c.train.size(); ++e) {
        mean_curve->train[e] += w * c.train[e];
        mean_curve->val[e] += w * c.val[e];
      }
    }
    ens.members.push_back(std::move(member));
  }
  return ens;
}

namespace {

Batch single_batch(const FeatureVector& fv, std::size_t t1, std::size_t copies) {
  const FeatureVector* f[] = {&fv};
  Batch one = make_batch(f, {}, t1);
  if (copies == 1) return one;
  const auto n = static_cast<Eigen::Index>(copies);
  Batch b;
  for (const auto& m : one.past) b.past.push_back(m.replicate(n, 1));
  b.env = one.env.replicate(n, 1);
  b.intention = one.intention.replicate(n, 1);
  return b;
}

dc::Tensor row_sample(const Matrix& y, Eigen::Index r, std::size_t t2) {
  return dc::Tensor({t2, kJointFeatures}, std::vector<double>(y.row(r).data(), y.row(r).data() + y.cols()));
}

}  // namespace

PredictionResult ensemble_predict(const EnsembleModel& ensemble, const FeatureVector& fv, std::size_t n_samples) {
  if (ensemble.members.empty()) throw InvalidArgument("ensemble has no members");
  if (n_samples == 0) throw InvalidArgument("n_samples must be >= 1");
  std::vector<dc::Tensor> outputs;
  for (const auto& member : ensemble.members) {
    if (!member.trained()) throw InvalidArgument("ensemble member is untrained");
    auto& m = const_cast<MlpModel&>(member);  // forward only
    Graph g;
    const Matrix& y = g.value(m.forward(g, single_batch(fv, m.config().t1, 1), nullptr));
    outputs.push_back(row_sample(y, 0, m.config().t2));
  }
  PredictionResult r;
  for (std::size_t k = 0; k < n_samples; ++k) r.samples.push_back(outputs[k % outputs.size()]);
  r.compute_stats();
  return r;
}

PredictionResult mc_dropout_predict(const MlpModel& model, const DropoutConfig& dropout, const FeatureVector& fv,
                                    std::uint64_t seed) {
  dropout.validate();
  if (!model.trained()) throw InvalidArgument("model is untrained; load a trained checkpoint before predicting");
  // The mask rate at test time is the configured one, not the training one.
  MlpModel stochastic = MlpModel::from_checkpoint(model.to_checkpoint("mc-dropout"), model.config(), dropout.rate);
  Rng rng = Rng(seed).substream("dropout");
  Graph g;
  const Matrix& y =
      g.value(stochastic.forward(g, single_batch(fv, model.config().t1, dropout.n_forward_passes), &rng));
  PredictionResult r;
  for (Eigen::Index k = 0; k < y.rows(); ++k) r.samples.push_back(row_sample(y, k, model.config().t2));
  r.compute_stats();
  return r;
}

dc::Checkpoint ensemble_checkpoint(const EnsembleModel& ensemble, const std::string& method) {
  dc::Checkpoint ck;
  ck.method = method;
  ck.trained = !ensemble.members.empty();
  ck.meta["members"] = std::to_string(ensemble.members.size());
  for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
    const auto& member = ensemble.members[m];
    ck.trained = ck.trained && member.trained();
    for (std::size_t i = 0; i < member.params().size(); ++i)
      ck.params.add("member" + std::to_string(m) + "/" + member.params()[i].name, member.params()[i].value);
  }
  return ck;
}

EnsembleModel ensemble_from_checkpoint(const dc::Checkpoint& ckpt, const ModelConfig& config) {
  const auto it = ckpt.meta.find("members");
  if (it == ckpt.meta.end()) throw FormatError("ensemble checkpoint lacks a member count");
  const std::size_t count = std::stoul(it->second);
  EnsembleModel ens;
  for (std::size_t m = 0; m < count; ++m) {
    MlpModel member(config, 0.0, 0);
    const std::string prefix = "member" + std::to_string(m) + "/";
    for (std::size_t i = 0; i < member.params().size(); ++i) {
      auto& p = member.params()[i];
      const std::string name = prefix + p.name;
      if (!ckpt.params.contains(name)) throw FormatError("ensemble checkpoint lacks tensor " + name);
      const auto& v = ckpt.params.get(name).value;
      if (v.shape() != p.value.shape()) throw FormatError("tensor " + name + " has the wrong shape");
      p.value = v;
    }
    member.set_trained(ckpt.trained);
    ens.members.push_back(std::move(member));
  }
  return ens;
}

}  // namespace ipred
