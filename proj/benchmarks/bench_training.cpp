#include <benchmark/benchmark.h>

#include "ipred/cvae.hpp"
#include "ipred/diffcore/optim.hpp"
#include "ipred/intention.hpp"
#include "ipred/synthdata.hpp"

namespace {

const std::vector<ipred::WindowExample>& windows() {
  static const auto w = [] {
    const auto spec = ipred::RoundaboutSpec::default_spec();
    const auto ds = ipred::generate_dataset(spec, ipred::ScenarioParams{}, 20, 0.8, 1);
    return ipred::extract_windows(ds, ds.train_ids, 5, 5);
  }();
  return w;
}

// One forward/backward/Adam step of the full-size CVAE on a minibatch.
void BM_CvaeTrainStep(benchmark::State& state) {
  const auto& data = windows();
  const auto batch_size = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> idx(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) idx[i] = i % data.size();
  const ipred::Batch batch = ipred::make_batch(data, idx, 5);
  ipred::CvaeModel model(ipred::ModelConfig{}, 1);
  ipred::dc::OptimizerState opt(model.params());
  ipred::Rng rng(2);
  ipred::dc::Matrix eps(static_cast<Eigen::Index>(batch_size), 2);
  for (auto _ : state) {
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = rng.normal();
    model.params().zero_grad();
    ipred::dc::Graph g;
    const auto loss = model.elbo(g, batch, eps);
    g.backward(loss);
    opt.step(model.params());
    benchmark::DoNotOptimize(g.value(loss)(0, 0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch_size));
}
BENCHMARK(BM_CvaeTrainStep)->Arg(1)->Arg(64)->Arg(256);

void BM_Predict100(benchmark::State& state) {
  ipred::CvaeModel model(ipred::ModelConfig{}, 1);
  model.set_trained(true);
  const auto& fv = windows().front().fv;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ipred::predict(model, fv, 100, seed++).mean[0]);
}
BENCHMARK(BM_Predict100);

}  // namespace
