#include "commands.hpp"

#include <iostream>
#include <map>
#include <spdlog/spdlog.h>
#include <sstream>

#include "ipred/diffcore/checkpoint.hpp"
#include "ipred/error.hpp"
#include "ipred/io.hpp"
#include "ipred/methods.hpp"
#include "ipred/metrics.hpp"
#include "ipred/pipeline.hpp"
#include "ipred/synthdata.hpp"

namespace ipred::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

constexpr const char* kCheckpointFile = "model.ipm";
constexpr const char* kSidecarFile = "model.json";

struct FileConfig {
  Json model = Json::object();
  Json train = Json::object();
  Json scenario = Json::object();
};

FileConfig load_config(const GlobalOptions& g) {
  FileConfig c;
  if (!g.config) return c;
  const Json j = io::read_json_file(*g.config);
  if (!j.is_object()) throw FormatError(g.config->string() + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "model") c.model = it.value();
    else if (it.key() == "train") c.train = it.value();
    else if (it.key() == "scenario") c.scenario = it.value();
    else throw FormatError(g.config->string() + ": unknown section '" + it.key() + "' (expected model, train, scenario)");
  }
  return c;
}

void guard_outputs(const std::vector<fs::path>& files, bool force) {
  if (force) return;
  for (const auto& f : files)
    if (fs::exists(f)) throw Error(f.string() + " already exists; pass --force to overwrite");
}

io::Provenance provenance(std::uint64_t seed, const Json& effective) {
  return io::Provenance{seed, io::digest(effective.dump()), ""};
}

struct LoadedModel {
  TrainedMethod method;
  Json sidecar;
};

LoadedModel load_model(const fs::path& dir) {
  const fs::path ckpt_path = dir / kCheckpointFile;
  if (!fs::exists(ckpt_path)) throw Error("no checkpoint at " + ckpt_path.string());
  const Json sidecar = io::read_json_file(dir / kSidecarFile);
  const ModelConfig config = io::model_config_from_json(sidecar.at("model"));
  const dc::Checkpoint ckpt = dc::load_checkpoint(ckpt_path);
  if (!ckpt.trained) throw Error(ckpt_path.string() + " holds an untrained model");
  return {TrainedMethod::from_checkpoint(ckpt, config), sidecar};
}

const Episode& find_case(const Dataset& ds, const std::string& id) {
  for (const auto& ep : ds.episodes)
    if (ep.case_id == id) return ep;
  throw InvalidArgument("no case '" + id + "' in the dataset");
}

Json tensor_steps(const dc::Tensor& flat) {
  Json steps = Json::array();
  for (std::size_t k = 0; k + 3 < flat.size(); k += kJointFeatures)
    steps.push_back({flat[k], flat[k + 1], flat[k + 2], flat[k + 3]});
  return steps;
}

std::map<std::string, ReferencePath> path_map(std::span<const ReferencePath> paths) {
  std::map<std::string, ReferencePath> out;
  for (const auto& p : paths) out.emplace(p.id(), p);
  return out;
}

}  // namespace

void cmd_gen_data(const GlobalOptions& g, const GenDataOptions& o) {
  if (o.cases < kMinCases)
    throw InvalidArgument("--cases must be at least " + std::to_string(kMinCases) + ", got " + std::to_string(o.cases));
  const FileConfig fc = load_config(g);
  const ScenarioParams params = io::scenario_from_json(fc.scenario);
  const RoundaboutSpec spec = RoundaboutSpec::default_spec();
  guard_outputs({g.out / "manifest.json", g.out / "trajectories.csv", g.out / "paths.json"}, g.force);

  const Json effective{{"command", "gen-data"},
                       {"cases", o.cases},
                       {"split", o.split},
                       {"roundabout", io::to_json(spec)},
                       {"scenario", io::to_json(params)}};
  const Dataset ds = generate_dataset(spec, params, o.cases, o.split, Rng(g.seed).substream("data").seed());
  io::write_dataset(g.out, ds, provenance(g.seed, effective));
  std::size_t interacting = 0, pass = 0;
  for (const auto& ep : ds.episodes) {
    interacting += ep.interacting;
    pass += ep.label == Negotiation::pass;
  }
  std::cout << "episodes " << ds.episodes.size() << " train " << ds.train_ids.size() << " test " << ds.test_ids.size()
            << " interacting " << interacting << " pass " << pass << "\n";
}

void cmd_train(const GlobalOptions& g, const TrainOptions& o) {
  const Method method = method_from_string(o.method);
  const FileConfig fc = load_config(g);
  MethodOptions opts;
  opts.model = io::model_config_from_json(fc.model);
  opts.train = io::train_config_from_json(fc.train);
  if (o.beta) opts.model.beta = *o.beta;
  if (o.epochs) opts.train.epochs = *o.epochs;
  if (o.members) opts.ensemble_members = *o.members;
  if (o.member_epochs) opts.member_epochs = *o.member_epochs;
  if (o.dropout) opts.dropout_rate = *o.dropout;
  opts.baseline_intention = o.baseline_intention;
  opts.train.seed = Rng(g.seed).substream("model").seed();
  opts.model.validate();
  if (opts.model.beta < 0.0) throw InvalidArgument("beta must be >= 0");

  const fs::path ckpt_path = g.out / kCheckpointFile;
  guard_outputs({ckpt_path, g.out / kSidecarFile, g.out / "loss.csv"}, g.force);

  const Dataset ds = io::read_dataset(o.data);
  const std::string data_digest = io::digest(io::read_file(o.data / "manifest.json"));
  const ModelConfig used = method_model_config(method, opts);
  const auto windows = extract_windows(ds, ds.train_ids, used.t1, used.t2);
  if (windows.empty()) throw Error("dataset has no training windows");

  Json effective{{"command", "train"},
                 {"method", to_string(method)},
                 {"data_digest", data_digest},
                 {"model", io::to_json(used)},
                 {"train", io::to_json(opts.train)}};
  if (method == Method::mlp_ensemble) {
    effective["members"] = opts.ensemble_members;
    effective["member_epochs"] = opts.member_epochs == 0 ? opts.train.epochs : opts.member_epochs;
  }
  if (method == Method::mc_dropout) effective["dropout_rate"] = opts.dropout_rate;
  const io::Provenance prov = provenance(g.seed, effective);

  spdlog::info("training {} on {} windows from {} episodes", to_string(method), windows.size(), ds.train_ids.size());
  const TrainingRun run = train_method(method, windows, opts);

  dc::Checkpoint ckpt = run.method.checkpoint();
  ckpt.meta["seed"] = std::to_string(g.seed);
  ckpt.meta["config_digest"] = prov.config_digest;
  ckpt.meta["version"] = io::to_json(prov).at("version").get<std::string>();

  fs::create_directories(g.out);
  dc::save_checkpoint(ckpt_path, ckpt);
  Json sidecar = effective;
  sidecar["provenance"] = io::to_json(prov);
  io::write_file(g.out / kSidecarFile, sidecar.dump(2) + "\n");
  std::ostringstream loss;
  loss << io::provenance_comment(prov) << "\n";
  io::write_loss_csv(loss, run.curve);
  io::write_file(g.out / "loss.csv", loss.str());
  std::cout << "method " << to_string(method) << " epochs " << run.curve.train.size() << " final train loss "
            << io::format_number(run.curve.train.back()) << "\n";
}

void cmd_predict(const GlobalOptions& g, const PredictOptions& o) {
  if (o.samples == 0) throw InvalidArgument("--samples must be >= 1");
  guard_outputs({g.out / "predictions.json", g.out / "beliefs.csv"}, g.force);
  const LoadedModel lm = load_model(o.model);
  const Dataset ds = io::read_dataset(o.data);
  if (ds.test_ids.empty() && !o.case_id) throw Error("dataset has no test cases");
  const Episode& ep = find_case(ds, o.case_id ? *o.case_id : ds.episodes.at(ds.test_ids.front()).case_id);
  const ModelConfig& mc = lm.method.config();
  const auto paths = build_reference_paths(ds.spec);
  const auto by_id = path_map(paths);
  const Normalizer norm = ds.spec.normalizer();

  const Json effective{{"command", "predict"},
                       {"model_digest", lm.sidecar.at("provenance").at("config_digest")},
                       {"data_digest", io::digest(io::read_file(o.data / "manifest.json"))},
                       {"case_id", ep.case_id},
                       {"samples", o.samples}};
  const io::Provenance prov = provenance(g.seed, effective);
  const Rng sampling = Rng(g.seed).substream("sampling");

  const BeliefTrace trace_a = track_vehicle(ep.car_a, paths);
  const BeliefTrace trace_b = track_vehicle(ep.car_b, paths);
  std::ostringstream beliefs;
  beliefs << io::provenance_comment(prov) << "\n" << io::kBeliefHeader << "\n";
  io::write_belief_rows(beliefs, ep.case_id, trace_a);
  io::write_belief_rows(beliefs, ep.case_id, trace_b);

  Json steps = Json::array();
  std::size_t independent = 0;
  const std::size_t n = std::min(ep.car_a.size(), ep.car_b.size());
  for (std::size_t end = mc.t1 - 1; end < n; ++end) {
    const IntentionBelief pair_beliefs[] = {trace_a.path_beliefs[end], trace_b.path_beliefs[end]};
    const auto pairs = select_pairs(pair_beliefs, by_id);
    const IntentionBelief& b_branch = trace_b.branch_beliefs[end];
    const int argmax = static_cast<int>(b_branch.argmax());
    auto plausible = plausible_branches(b_branch);
    if (plausible.empty()) plausible.push_back(argmax);
    const FeatureVector fv =
        make_features(ep.car_a, ep.car_b, ep.front_a, ep.front_b, end, mc.t1, IntentionOneHot(argmax), norm);
    const PredictionResult world =
        lm.method.predict(fv, plausible, o.samples, sampling.substream(end).seed()).to_world(norm);
    Json step = io::prediction_to_json(ep.case_id, ep.car_b[end].t, world);
    step["interacting"] = !pairs.empty();
    if (pairs.empty()) {
      step["note"] = "no interacting pair; A and B predicted from marginal inputs";
      ++independent;
    }
    step["intention"] = argmax;
    step["plausible"] = plausible;
    steps.push_back(std::move(step));
  }
  if (independent > 0)
    spdlog::info("{} of {} steps had no interacting pair; predicted from marginal inputs", independent, steps.size());

  Json doc{{"provenance", io::to_json(prov)},
           {"method", to_string(lm.method.method())},
           {"case_id", ep.case_id},
           {"steps", std::move(steps)}};
  fs::create_directories(g.out);
  io::write_file(g.out / "predictions.json", doc.dump(2) + "\n");
  io::write_file(g.out / "beliefs.csv", beliefs.str());
  std::cout << "case " << ep.case_id << " steps " << doc.at("steps").size() << " samples " << o.samples << "\n";
}

void cmd_eval(const GlobalOptions& g, const EvalOptions& o) {
  if (o.samples < 2) throw InvalidArgument("--samples must be >= 2 for NLL");
  guard_outputs({g.out / "eval.json", g.out / "eval.txt"}, g.force);
  std::vector<std::string> names = o.methods;
  if (names.empty())
    for (Method m : all_methods()) names.emplace_back(to_string(m));

  std::vector<LoadedModel> models;
  Json model_digests = Json::object();
  for (const auto& name : names) {
    const Method m = method_from_string(name);
    const fs::path dir = o.models / name;
    if (!fs::exists(dir / kCheckpointFile))
      throw Error("no checkpoint for method '" + name + "' at " + (dir / kCheckpointFile).string());
    models.push_back(load_model(dir));
    if (models.back().method.method() != m)
      throw Error((dir / kCheckpointFile).string() + " holds method " + to_string(models.back().method.method()) +
                  ", expected " + name);
    model_digests[name] = models.back().sidecar.at("provenance").at("config_digest");
  }
  const ModelConfig& first = models.front().method.config();
  for (const auto& lm : models)
    if (lm.method.config().t1 != first.t1 || lm.method.config().t2 != first.t2)
      throw Error("methods disagree on the history/horizon lengths");

  const Dataset ds = io::read_dataset(o.data);
  const auto cases = bimodal_test_set(ds, first.t1, first.t2);
  if (cases.empty()) throw Error("the test split has no bimodal cases");

  const Json effective{{"command", "eval"},
                       {"data_digest", io::digest(io::read_file(o.data / "manifest.json"))},
                       {"models", model_digests},
                       {"samples", o.samples}};
  const io::Provenance prov = provenance(g.seed, effective);

  std::vector<NamedPredictor> predictors;
  const Normalizer norm = ds.spec.normalizer();
  for (const auto& lm : models) predictors.push_back(make_predictor(lm.method, norm));
  EvalReport report = evaluate(predictors, cases, o.samples, Rng(g.seed).substream("sampling").seed());
  report.config_digest = prov.config_digest;

  Json doc = Json::parse(report.to_json());
  doc["provenance"] = io::to_json(prov);
  fs::create_directories(g.out);
  io::write_file(g.out / "eval.json", doc.dump(2) + "\n");
  const std::string table = report.to_table();
  io::write_file(g.out / "eval.txt", io::provenance_comment(prov) + "\n" + table);
  std::cout << table;
}

void cmd_latent_grid(const GlobalOptions& g, const LatentGridOptions& o) {
  guard_outputs({g.out / "latent_grid.json"}, g.force);
  const LoadedModel lm = load_model(o.model);
  const auto* cvae = std::get_if<CvaeModel>(&lm.method.model());
  if (!cvae) throw InvalidArgument(std::string("latent-grid needs a CVAE model, got ") + to_string(lm.method.method()));
  const ModelConfig& mc = cvae->config();
  const Dataset ds = io::read_dataset(o.data);
  const auto paths = build_reference_paths(ds.spec);
  const Normalizer norm = ds.spec.normalizer();

  std::vector<EvalCase> cases;
  for (std::size_t id : ds.test_ids)
    if (auto c = make_bimodal_case(ds.episodes[id], ds.spec, paths, mc.t1, mc.t2)) cases.push_back(std::move(*c));
  const EvalCase* chosen = nullptr;
  for (const auto& c : cases)
    if (!o.case_id || c.case_id == *o.case_id) {
      chosen = &c;
      break;
    }
  if (!chosen)
    throw InvalidArgument(o.case_id ? "case '" + *o.case_id + "' has no bimodal window in the test split"
                                    : std::string("the test split has no bimodal cases"));

  FeatureVector fv = chosen->fv;
  if (o.branch) fv.intention = IntentionOneHot(*o.branch);
  const auto grid = make_grid(o.min, o.max, o.steps);
  const auto decoded = latent_grid(*cvae, fv, grid);

  const Json effective{{"command", "latent-grid"},
                       {"model_digest", lm.sidecar.at("provenance").at("config_digest")},
                       {"data_digest", io::digest(io::read_file(o.data / "manifest.json"))},
                       {"case_id", chosen->case_id},
                       {"branch", fv.intention.branch()},
                       {"min", o.min},
                       {"max", o.max},
                       {"steps", o.steps}};
  const io::Provenance prov = provenance(g.seed, effective);

  Json points = Json::array();
  for (const auto& [z, y] : decoded) {
    dc::Tensor world = y;
    for (std::size_t k = 0; k + 1 < world.size(); k += 2) {
      const Point2 p = norm.to_world({world[k], world[k + 1]});
      world[k] = p.x;
      world[k + 1] = p.y;
    }
    points.push_back(Json{{"z", z.data()}, {"future", tensor_steps(world)}});
  }

  // Encoder means of every bimodal test case under its true future and
  // true intention, for a latent scatter coloured by pass/yield.
  Json encoded = Json::array();
  for (const auto& c : cases) {
    const FeatureVector truth_fv = [&] {
      FeatureVector f = c.fv;
      f.intention = IntentionOneHot(c.b_exit);
      return f;
    }();
    dc::Tensor y_model = c.truth;
    for (std::size_t k = 0; k + 1 < y_model.size(); k += 2) {
      const Point2 p = norm.to_model({y_model[k], y_model[k + 1]});
      y_model[k] = p.x;
      y_model[k + 1] = p.y;
    }
    const auto [mu, log_var] = cvae->encode(cvae->embed_condition(truth_fv), truth_fv.intention, y_model);
    encoded.push_back(Json{{"case_id", c.case_id}, {"label", to_string(c.label)}, {"mu", mu.data()}});
  }

  const auto onehot = fv.intention.values();
  Json doc{{"provenance", io::to_json(prov)},
           {"method", to_string(lm.method.method())},
           {"case_id", chosen->case_id},
           {"t", chosen->t},
           {"intention", std::vector<double>(onehot.begin(), onehot.end())},
           {"grid", std::move(points)},
           {"encoded", std::move(encoded)}};
  fs::create_directories(g.out);
  io::write_file(g.out / "latent_grid.json", doc.dump(2) + "\n");
  std::cout << "case " << chosen->case_id << " grid points " << decoded.size() << "\n";
}

}  // namespace ipred::cli
