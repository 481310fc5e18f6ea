#include "ipred/cvae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <spdlog/spdlog.h>

#include "ipred/diffcore/optim.hpp"
#include "ipred/error.hpp"

namespace ipred {

using dc::Graph;
using dc::Matrix;
using dc::Tensor;
using dc::Var;

void ModelConfig::validate() const {
  if (t1 == 0 || t2 == 0 || lstm_hidden == 0 || env_embed == 0 || latent_dim == 0)
    throw InvalidArgument("model dimensions must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("model dt must be positive");
  if (enc_hidden.empty() || dec_hidden.empty()) throw InvalidArgument("encoder and decoder need hidden layers");
  for (auto h : enc_hidden)
    if (h == 0) throw InvalidArgument("hidden widths must be positive");
  for (auto h : dec_hidden)
    if (h == 0) throw InvalidArgument("hidden widths must be positive");
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be >= 0");
}

// ---------------------------------------------------------------------------
// Batching

Batch make_batch(std::span<const FeatureVector* const> features, std::span<const Tensor* const> futures,
                 std::size_t t1) {
  if (features.empty()) throw InvalidArgument("make_batch: empty batch");
  if (!futures.empty() && futures.size() != features.size())
    throw ShapeError("make_batch: features and futures differ in count");
  const auto B = static_cast<Eigen::Index>(features.size());
  Batch b;
  b.past.assign(t1, Matrix(B, static_cast<Eigen::Index>(kJointFeatures)));
  b.env.resize(B, static_cast<Eigen::Index>(kEnvFeatures));
  b.intention = Matrix::Zero(B, kBranchCount);
  if (!futures.empty()) b.future.resize(B, static_cast<Eigen::Index>(futures[0]->size()));
  for (Eigen::Index r = 0; r < B; ++r) {
    const FeatureVector& fv = *features[static_cast<std::size_t>(r)];
    fv.validate(t1);
    for (std::size_t k = 0; k < t1; ++k)
      for (std::size_t f = 0; f < kJointFeatures; ++f)
        b.past[k](r, static_cast<Eigen::Index>(f)) = fv.past_joint.at(k, f);
    for (std::size_t f = 0; f < kEnvFeatures; ++f) b.env(r, static_cast<Eigen::Index>(f)) = fv.environment[f];
    b.intention(r, fv.intention.branch()) = 1.0;
    if (!futures.empty()) {
      const Tensor& y = *futures[static_cast<std::size_t>(r)];
      if (static_cast<Eigen::Index>(y.size()) != b.future.cols()) throw ShapeError("make_batch: ragged futures");
      for (std::size_t f = 0; f < y.size(); ++f) b.future(r, static_cast<Eigen::Index>(f)) = y[f];
    }
  }
  return b;
}

Batch make_batch(std::span<const WindowExample> examples, std::span<const std::size_t> indices, std::size_t t1) {
  std::vector<const FeatureVector*> fvs;
  std::vector<const Tensor*> ys;
  fvs.reserve(indices.size());
  ys.reserve(indices.size());
  for (std::size_t i : indices) {
    fvs.push_back(&examples[i].fv);
    ys.push_back(&examples[i].future);
  }
  return make_batch(fvs, ys, t1);
}

// ---------------------------------------------------------------------------
// Embedder

ConditionEmbedder ConditionEmbedder::make(const ModelConfig& cfg) {
  return ConditionEmbedder{dc::LstmBlock{"embed.lstm", kJointFeatures, cfg.lstm_hidden},
                           dc::DenseBlock{"embed.env", kEnvFeatures, cfg.env_embed, dc::Activation::tanh}};
}

void ConditionEmbedder::init(dc::ParamStore& store, Rng& rng) const {
  lstm.init(store, rng);
  env.init(store, rng);
}

Var ConditionEmbedder::forward(Graph& g, dc::ParamStore& store, const Batch& batch) const {
  std::vector<Var> steps;
  steps.reserve(batch.past.size());
  for (const auto& m : batch.past) steps.push_back(g.constant(m));
  Var h = lstm.run(g, store, steps);
  Var e = env.forward(g, store, g.constant(batch.env));
  const Var parts[] = {h, e};
  return g.concat_cols(parts);
}

// ---------------------------------------------------------------------------
// Model

namespace {

std::vector<dc::DenseBlock> mlp_blocks(const std::string& prefix, std::size_t in, const std::vector<std::size_t>& widths) {
  std::vector<dc::DenseBlock> out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    out.push_back({prefix + "." + std::to_string(i), in, widths[i], dc::Activation::tanh});
    in = widths[i];
  }
  return out;
}

Var run_mlp(Graph& g, dc::ParamStore& store, const std::vector<dc::DenseBlock>& blocks, Var x) {
  for (const auto& b : blocks) x = b.forward(g, store, x);
  return x;
}

Matrix row_of(const Tensor& t) { return Matrix(t.matrix()); }

Tensor row_tensor(const Matrix& m, Eigen::Index r) {
  return Tensor::vector(std::vector<double>(m.row(r).data(), m.row(r).data() + m.cols()));
}

}  // namespace

CvaeModel::CvaeModel(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  embedder_ = ConditionEmbedder::make(config_);
  const std::size_t xc = config_.condition_dim() + config_.intention_dim();
  encoder_ = mlp_blocks("enc", xc + config_.output_dim(), config_.enc_hidden);
  enc_mu_ = {"enc.mu", config_.enc_hidden.back(), config_.latent_dim, dc::Activation::identity};
  enc_log_var_ = {"enc.log_var", config_.enc_hidden.back(), config_.latent_dim, dc::Activation::identity};
  decoder_ = mlp_blocks("dec", xc + config_.latent_dim, config_.dec_hidden);
  dec_out_ = {"dec.out", config_.dec_hidden.back(), config_.output_dim(), dc::Activation::identity};

  Rng rng = Rng(init_seed).substream("init");
  embedder_.init(params_, rng);
  for (const auto& b : encoder_) b.init(params_, rng);
  enc_mu_.init(params_, rng);
  enc_log_var_.init(params_, rng);
  for (const auto& b : decoder_) b.init(params_, rng);
  dec_out_.init(params_, rng);
}

Var CvaeModel::intention_input(Graph& g, const Matrix& intention) const { return g.constant(intention); }

Var CvaeModel::embed(Graph& g, const Batch& batch) { return embedder_.forward(g, params_, batch); }

std::pair<Var, Var> CvaeModel::encode(Graph& g, Var x, Var c, Var y) {
  std::vector<Var> parts{x};
  if (config_.use_intention) parts.push_back(c);
  parts.push_back(y);
  Var h = run_mlp(g, params_, encoder_, g.concat_cols(parts));
  return {enc_mu_.forward(g, params_, h), enc_log_var_.forward(g, params_, h)};
}

Var CvaeModel::decode(Graph& g, Var x, Var c, Var z) {
  std::vector<Var> parts{x};
  if (config_.use_intention) parts.push_back(c);
  parts.push_back(z);
  Var h = run_mlp(g, params_, decoder_, g.concat_cols(parts));
  return dec_out_.forward(g, params_, h);
}

Var CvaeModel::elbo(Graph& g, const Batch& batch, const Matrix& eps) {
  if (batch.future.rows() != static_cast<Eigen::Index>(batch.size()))
    throw ShapeError("elbo: batch has no ground-truth futures");
  if (eps.rows() != batch.future.rows() || eps.cols() != static_cast<Eigen::Index>(config_.latent_dim))
    throw ShapeError("elbo: noise matrix has the wrong shape");
  Var x = embed(g, batch);
  Var c = intention_input(g, batch.intention);
  Var y = g.constant(batch.future);
  auto [mu, log_var] = encode(g, x, c, y);
  Var z = g.add(mu, g.mul(g.exp(g.scale(log_var, 0.5)), g.constant(eps)));
  Var y_hat = decode(g, x, c, z);

  const double batch_size = static_cast<double>(batch.size());
  Var recon = g.mean(g.square(g.sub(y, y_hat)));  // mean over batch and output dims
  // sum over latent dims, mean over batch
  Var kl_terms = g.sub(g.add_scalar(g.add(g.exp(log_var), g.square(mu)), -1.0), log_var);
  Var kl = g.scale(g.sum(kl_terms), 0.5 / batch_size);
  return g.add(recon, g.scale(kl, config_.beta));
}

Tensor CvaeModel::embed_condition(const FeatureVector& fv) const {
  const FeatureVector* f[] = {&fv};
  const Batch b = make_batch(f, {}, config_.t1);
  Graph g;
  auto& self = const_cast<CvaeModel&>(*this);  // forward only, parameters are not written
  Var x = self.embed(g, b);
  return row_tensor(g.value(x), 0);
}

std::pair<Tensor, Tensor> CvaeModel::encode(const Tensor& x, const IntentionOneHot& c, const Tensor& y) const {
  if (x.size() != config_.condition_dim()) throw ShapeError("encode: x must have " + std::to_string(config_.condition_dim()) + " entries");
  if (y.size() != config_.output_dim()) throw ShapeError("encode: y must have " + std::to_string(config_.output_dim()) + " entries");
  Graph g;
  auto& self = const_cast<CvaeModel&>(*this);
  const auto cv = c.values();
  Matrix cm(1, kBranchCount);
  for (int i = 0; i < kBranchCount; ++i) cm(0, i) = cv[static_cast<std::size_t>(i)];
  auto [mu, lv] = self.encode(g, g.constant(row_of(x)), g.constant(cm), g.constant(row_of(y)));
  return {row_tensor(g.value(mu), 0), row_tensor(g.value(lv), 0)};
}

Tensor CvaeModel::decode(const Tensor& x, const IntentionOneHot& c, const Tensor& z) const {
  if (x.size() != config_.condition_dim()) throw ShapeError("decode: x must have " + std::to_string(config_.condition_dim()) + " entries");
  if (z.size() != config_.latent_dim) throw ShapeError("decode: z must have " + std::to_string(config_.latent_dim) + " entries");
  Graph g;
  auto& self = const_cast<CvaeModel&>(*this);
  const auto cv = c.values();
  Matrix cm(1, kBranchCount);
  for (int i = 0; i < kBranchCount; ++i) cm(0, i) = cv[static_cast<std::size_t>(i)];
  Var out = self.decode(g, g.constant(row_of(x)), g.constant(cm), g.constant(row_of(z)));
  return row_tensor(g.value(out), 0);
}

dc::Checkpoint CvaeModel::to_checkpoint(const std::string& method) const {
  dc::Checkpoint ck;
  ck.method = method;
  ck.trained = trained_;
  ck.params = params_;
  return ck;
}

CvaeModel CvaeModel::from_checkpoint(const dc::Checkpoint& ckpt, ModelConfig config) {
  CvaeModel m(std::move(config), 0);
  if (!m.params_.same_layout(ckpt.params))
    throw FormatError("checkpoint parameters do not match the model configuration");
  for (std::size_t i = 0; i < m.params_.size(); ++i) m.params_[i].value = ckpt.params[i].value;
  m.trained_ = ckpt.trained;
  return m;
}

// ---------------------------------------------------------------------------
// Latent helpers and losses

Tensor reparameterize(const Tensor& mu, const Tensor& log_var, const Tensor& eps) {
  if (mu.size() != log_var.size() || mu.size() != eps.size())
    throw ShapeError("reparameterize: mu, log_var and eps must have equal length");
  Tensor z = mu;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + std::exp(0.5 * log_var[i]) * eps[i];
  return z;
}

LatentSample sample_latent(const Tensor& mu, const Tensor& log_var, Rng& rng) {
  Tensor eps(mu.shape());
  for (double& e : eps.data()) e = rng.normal();
  Tensor z = reparameterize(mu, log_var, eps);
  return {std::move(z), mu, log_var, std::move(eps)};
}

double kl_divergence(const Tensor& mu, const Tensor& log_var) {
  if (mu.size() != log_var.size()) throw ShapeError("kl_divergence: mu and log_var differ in length");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) kl += std::exp(log_var[i]) + mu[i] * mu[i] - 1.0 - log_var[i];
  return 0.5 * kl;
}

double elbo_loss(const Tensor& y, const Tensor& y_hat, const Tensor& mu, const Tensor& log_var, double beta) {
  if (beta < 0.0) throw InvalidArgument("elbo_loss: beta must be >= 0");
  if (y.size() != y_hat.size()) throw ShapeError("elbo_loss: y and y_hat differ in length");
  double sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sq += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return sq / static_cast<double>(y.size()) + beta * kl_divergence(mu, log_var);
}

// ---------------------------------------------------------------------------
// Training

LossCurve train(CvaeModel& model, std::span<const WindowExample> data, const TrainConfig& cfg) {
  if (data.empty()) throw InvalidArgument("train: empty dataset");
  if (cfg.batch_size == 0) throw InvalidArgument("train: batch size must be positive");
  const ModelConfig& mc = model.config();
  const Rng root(cfg.seed);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split = root.substream("val_split");
  for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[split.uniform_index(i + 1)]);
  auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(data.size())));
  if (n_val >= data.size()) n_val = 0;
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  dc::OptimizerState opt(model.params(), dc::AdamConfig{cfg.learning_rate});
  Rng shuffle = root.substream("shuffle");
  Rng noise = root.substream("eps");
  const auto latent = static_cast<Eigen::Index>(mc.latent_dim);

  LossCurve curve;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = train_idx.size(); i-- > 1;) std::swap(train_idx[i], train_idx[shuffle.uniform_index(i + 1)]);
    double total = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(train_idx.data() + start, stop - start);
      const Batch batch = make_batch(data, idx, mc.t1);
      Matrix eps(static_cast<Eigen::Index>(idx.size()), latent);
      for (Eigen::Index k = 0; k < eps.size(); ++k) eps.data()[k] = noise.normal();

      model.params().zero_grad();
      Graph g;
      Var loss = model.elbo(g, batch, eps);
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
      // Fixed noise so validation losses are comparable across epochs.
      Rng val_noise = root.substream("val_eps");
      double acc = 0.0;
      for (std::size_t start = 0; start < val_idx.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(val_idx.size(), start + cfg.batch_size);
        const std::span<const std::size_t> idx(val_idx.data() + start, stop - start);
        const Batch batch = make_batch(data, idx, mc.t1);
        Matrix eps(static_cast<Eigen::Index>(idx.size()), latent);
        for (Eigen::Index k = 0; k < eps.size(); ++k) eps.data()[k] = val_noise.normal();
        Graph g;
        acc += g.value(model.elbo(g, batch, eps))(0, 0) * static_cast<double>(idx.size());
      }
      val = acc / static_cast<double>(val_idx.size());
    }
    curve.val.push_back(val);
    spdlog::debug("epoch {:3d} train {:.6f} val {:.6f}", epoch, curve.train.back(), val);
  }
  model.set_trained(true);
  return curve;
}

// ---------------------------------------------------------------------------
// Prediction

void PredictionResult::compute_stats() {
  if (samples.empty()) throw InvalidArgument("prediction has no samples");
  const auto shape = samples.front().shape();
  mean = Tensor(shape, 0.0);
  variance = Tensor(shape, 0.0);
  const double n = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    if (s.shape() != shape) throw ShapeError("prediction samples differ in shape");
    for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i];
  }
  for (double& m : mean.data()) m /= n;
  for (const auto& s : samples)
    for (std::size_t i = 0; i < s.size(); ++i) variance[i] += (s[i] - mean[i]) * (s[i] - mean[i]);
  for (double& v : variance.data()) v /= n;
}

PredictionResult PredictionResult::to_world(const Normalizer& norm) const {
  PredictionResult out;
  for (const auto& s : samples) {
    Tensor w = s;
    for (std::size_t k = 0; k + 1 < w.size(); k += 2) {
      const Point2 p = norm.to_world({w[k], w[k + 1]});
      w[k] = p.x;
      w[k + 1] = p.y;
    }
    out.samples.push_back(std::move(w));
  }
  out.compute_stats();
  return out;
}

namespace {

PredictionResult decode_samples(const CvaeModel& model, const FeatureVector& fv, std::span<const int> branches,
                                std::size_t n_samples, std::uint64_t seed) {
  if (!model.trained()) throw InvalidArgument("model is untrained; load a trained checkpoint before predicting");
  if (n_samples == 0) throw InvalidArgument("n_samples must be >= 1");
  if (branches.empty()) throw InvalidArgument("at least one intention branch is required");
  const ModelConfig& mc = model.config();
  const auto n = static_cast<Eigen::Index>(n_samples);

  Rng rng = Rng(seed).substream("latent");
  Matrix z(n, static_cast<Eigen::Index>(mc.latent_dim));
  for (Eigen::Index k = 0; k < z.size(); ++k) z.data()[k] = rng.normal();
  Matrix c = Matrix::Zero(n, kBranchCount);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int b = branches[static_cast<std::size_t>(r) % branches.size()];
    c(r, IntentionOneHot(b).branch()) = 1.0;
  }

  auto& m = const_cast<CvaeModel&>(model);  // forward only
  const FeatureVector* f[] = {&fv};
  const Batch one = make_batch(f, {}, mc.t1);
  Graph g;
  const Matrix x1 = g.value(m.embed(g, one));
  const Matrix x = x1.replicate(n, 1);
  Var out = m.decode(g, g.constant(x), g.constant(c), g.constant(z));
  const Matrix& y = g.value(out);

  PredictionResult res;
  for (Eigen::Index r = 0; r < n; ++r)
    res.samples.emplace_back(std::vector<std::size_t>{mc.t2, kJointFeatures},
                             std::vector<double>(y.row(r).data(), y.row(r).data() + y.cols()));
  res.compute_stats();
  return res;
}

}  // namespace

PredictionResult predict(const CvaeModel& model, const FeatureVector& fv, std::size_t n_samples, std::uint64_t seed) {
  const int b[] = {fv.intention.branch()};
  return decode_samples(model, fv, b, n_samples, seed);
}

PredictionResult predict_over_intentions(const CvaeModel& model, const FeatureVector& fv,
                                         std::span<const int> branches, std::size_t n_samples, std::uint64_t seed) {
  return decode_samples(model, fv, branches, n_samples, seed);
}

std::vector<std::pair<Tensor, Tensor>> latent_grid(const CvaeModel& model, const FeatureVector& fv,
                                                   std::span<const Tensor> grid) {
  if (model.config().latent_dim != 2) throw InvalidArgument("latent_grid requires a 2-D latent space");
  if (!model.trained()) throw InvalidArgument("model is untrained; load a trained checkpoint first");
  const Tensor x = model.embed_condition(fv);
  std::vector<std::pair<Tensor, Tensor>> out;
  out.reserve(grid.size());
  for (const auto& z : grid) out.emplace_back(z, model.decode(x, fv.intention, z));
  return out;
}

std::vector<Tensor> make_grid(double lo, double hi, std::size_t steps) {
  if (steps == 0) throw InvalidArgument("grid needs at least one step");
  if (!(hi >= lo)) throw InvalidArgument("grid bounds must satisfy min <= max");
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < steps; ++i)
    for (std::size_t j = 0; j < steps; ++j) {
      const double a = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
      const double b = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(steps - 1);
      out.push_back(Tensor::vector({a, b}));
    }
  return out;
}

}  // namespace ipred
