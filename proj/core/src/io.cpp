#include "ipred/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ipred/error.hpp"
#include "ipred/rng.hpp"
#include "ipred/version.hpp"

namespace ipred::io {

namespace fs = std::filesystem;

Json to_json(const Provenance& p) {
  return Json{{"tool", "ipred"},
              {"version", p.version.empty() ? kVersion : p.version},
              {"seed", p.seed},
              {"config_digest", p.config_digest}};
}

std::string provenance_comment(const Provenance& p) {
  return "# ipred " + (p.version.empty() ? std::string(kVersion) : p.version) + " seed=" + std::to_string(p.seed) +
         " config=" + p.config_digest;
}

std::string digest(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_name(text)));
  return buf;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, ptr);
}

namespace {

double parse_number(std::string_view s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("line " + std::to_string(line) + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double number_or_nan(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json nan_or_number(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

template <class F>
void for_each_key(const Json& j, const char* what, F&& handle) {
  if (!j.is_object()) throw FormatError(std::string(what) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!handle(it.key(), it.value())) throw FormatError(std::string("unknown ") + what + " key '" + it.key() + "'");
}

}  // namespace

void write_trajectory_rows(std::ostream& out, const std::string& case_id, const Trajectory& traj) {
  for (const auto& s : traj.samples())
    out << case_id << ',' << traj.agent_id() << ',' << format_number(s.t) << ',' << format_number(s.pos.x) << ','
        << format_number(s.pos.y) << ',' << format_number(s.v) << '\n';
}

TrajectoryTable read_trajectory_csv(std::istream& in) {
  TrajectoryTable table;
  std::map<std::string, std::vector<std::pair<std::string, std::vector<TrajectorySample>>>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kTrajectoryHeader)
        throw FormatError("line " + std::to_string(line_no) + ": expected header '" + kTrajectoryHeader + "'");
      header_seen = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 6) throw FormatError("line " + std::to_string(line_no) + ": expected 6 fields");
    const std::string case_id(f[0]), agent(f[1]);
    auto [it, inserted] = rows.try_emplace(case_id);
    if (inserted) table.case_order.push_back(case_id);
    auto& agents = it->second;
    if (agents.empty() || agents.back().first != agent) {
      for (const auto& a : agents)
        if (a.first == agent)
          throw FormatError("line " + std::to_string(line_no) + ": rows of agent " + agent + " are not contiguous");
      agents.emplace_back(agent, std::vector<TrajectorySample>{});
    }
    agents.back().second.push_back({parse_number(f[2], line_no),
                                    {parse_number(f[3], line_no), parse_number(f[4], line_no)},
                                    parse_number(f[5], line_no)});
  }
  if (!header_seen) throw FormatError("trajectory CSV has no header");
  for (auto& [case_id, agents] : rows) {
    auto& out = table.cases[case_id];
    for (auto& [agent, samples] : agents) out.emplace_back(agent, std::move(samples));
  }
  return table;
}

Json to_json(const ReferencePath& path) {
  Json pts = Json::array();
  for (const auto& p : path.polyline()) pts.push_back({p.x, p.y});
  return Json{{"id", path.id()}, {"entry_branch", path.entry_branch()}, {"exit_branch", path.exit_branch()},
              {"points", std::move(pts)}};
}

ReferencePath reference_path_from_json(const Json& j) {
  std::vector<Point2> pts;
  for (const auto& p : j.at("points")) {
    if (!p.is_array() || p.size() != 2) throw FormatError("path points must be [x, y] pairs");
    pts.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return ReferencePath(j.at("id").get<std::string>(), j.at("entry_branch").get<int>(), j.at("exit_branch").get<int>(),
                       std::move(pts));
}

Json to_json(const ModelConfig& c) {
  return Json{{"t1", c.t1},
              {"t2", c.t2},
              {"dt", c.dt},
              {"lstm_hidden", c.lstm_hidden},
              {"env_embed", c.env_embed},
              {"enc_hidden", c.enc_hidden},
              {"dec_hidden", c.dec_hidden},
              {"latent_dim", c.latent_dim},
              {"beta", c.beta},
              {"use_intention", c.use_intention}};
}

ModelConfig model_config_from_json(const Json& j, ModelConfig c) {
  for_each_key(j, "model config", [&](const std::string& k, const Json& v) {
    if (k == "t1") c.t1 = v.get<std::size_t>();
    else if (k == "t2") c.t2 = v.get<std::size_t>();
    else if (k == "dt") c.dt = v.get<double>();
    else if (k == "lstm_hidden") c.lstm_hidden = v.get<std::size_t>();
    else if (k == "env_embed") c.env_embed = v.get<std::size_t>();
    else if (k == "enc_hidden") c.enc_hidden = v.get<std::vector<std::size_t>>();
    else if (k == "dec_hidden") c.dec_hidden = v.get<std::vector<std::size_t>>();
    else if (k == "latent_dim") c.latent_dim = v.get<std::size_t>();
    else if (k == "beta") c.beta = v.get<double>();
    else if (k == "use_intention") c.use_intention = v.get<bool>();
    else return false;
    return true;
  });
  c.validate();
  return c;
}

Json to_json(const TrainConfig& c) {
  return Json{{"epochs", c.epochs},       {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
              {"val_fraction", c.val_fraction}, {"seed", c.seed},       {"grad_clip", c.grad_clip}};
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  for_each_key(j, "train config", [&](const std::string& k, const Json& v) {
    if (k == "epochs") c.epochs = v.get<std::size_t>();
    else if (k == "batch_size") c.batch_size = v.get<std::size_t>();
    else if (k == "learning_rate") c.learning_rate = v.get<double>();
    else if (k == "val_fraction") c.val_fraction = v.get<double>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "grad_clip") c.grad_clip = v.get<double>();
    else return false;
    return true;
  });
  return c;
}

Json to_json(const RoundaboutSpec& s) {
  Json routes = Json::array();
  for (const auto& [e, x] : s.routes) routes.push_back({e, x});
  return Json{{"center", {s.center.x, s.center.y}},
              {"ring_radius", s.ring_radius},
              {"branch_count", s.branch_count},
              {"branch_angles", s.branch_angles},
              {"entry_offset", s.entry_offset},
              {"exit_offset", s.exit_offset},
              {"lane_offset", s.lane_offset},
              {"junction_gap", s.junction_gap},
              {"approach_length", s.approach_length},
              {"vertex_spacing", s.vertex_spacing},
              {"routes", std::move(routes)}};
}

RoundaboutSpec roundabout_from_json(const Json& j) {
  RoundaboutSpec s;
  const auto& c = j.at("center");
  s.center = {c.at(0).get<double>(), c.at(1).get<double>()};
  s.ring_radius = j.at("ring_radius").get<double>();
  s.branch_count = j.at("branch_count").get<int>();
  s.branch_angles = j.at("branch_angles").get<std::vector<double>>();
  s.entry_offset = j.at("entry_offset").get<double>();
  s.exit_offset = j.at("exit_offset").get<double>();
  s.lane_offset = j.at("lane_offset").get<double>();
  s.junction_gap = j.at("junction_gap").get<double>();
  s.approach_length = j.at("approach_length").get<double>();
  s.vertex_spacing = j.at("vertex_spacing").get<double>();
  for (const auto& r : j.at("routes")) s.routes.emplace_back(r.at(0).get<int>(), r.at(1).get<int>());
  s.validate();
  return s;
}

Json to_json(const ScenarioParams& p) {
  Json j{{"speed_min", p.speed_min},       {"speed_max", p.speed_max},
         {"noise_sigma", p.noise_sigma},   {"pass_prob", p.pass_prob},
         {"exit_before_prob", p.exit_before_prob}, {"a_branches", p.a_branches},
         {"duration_min", p.duration_min}, {"duration_max", p.duration_max},
         {"headway_min", p.headway_min},   {"headway_max", p.headway_max},
         {"smooth_window", p.smooth_window}};
  j["force_a_branch"] = p.force_a_branch ? Json(*p.force_a_branch) : Json(nullptr);
  j["force_b_exit"] = p.force_b_exit ? Json(*p.force_b_exit) : Json(nullptr);
  j["force_label"] = p.force_label ? Json(to_string(*p.force_label)) : Json(nullptr);
  return j;
}

ScenarioParams scenario_from_json(const Json& j) {
  ScenarioParams p;
  for_each_key(j, "scenario", [&](const std::string& k, const Json& v) {
    if (k == "speed_min") p.speed_min = v.get<double>();
    else if (k == "speed_max") p.speed_max = v.get<double>();
    else if (k == "noise_sigma") p.noise_sigma = v.get<double>();
    else if (k == "pass_prob") p.pass_prob = v.get<double>();
    else if (k == "exit_before_prob") p.exit_before_prob = v.get<double>();
    else if (k == "a_branches") p.a_branches = v.get<std::vector<int>>();
    else if (k == "duration_min") p.duration_min = v.get<double>();
    else if (k == "duration_max") p.duration_max = v.get<double>();
    else if (k == "headway_min") p.headway_min = v.get<double>();
    else if (k == "headway_max") p.headway_max = v.get<double>();
    else if (k == "smooth_window") p.smooth_window = v.get<int>();
    else if (k == "force_a_branch") { if (!v.is_null()) p.force_a_branch = v.get<int>(); }
    else if (k == "force_b_exit") { if (!v.is_null()) p.force_b_exit = v.get<int>(); }
    else if (k == "force_label") { if (!v.is_null()) p.force_label = negotiation_from_string(v.get<std::string>()); }
    else return false;
    return true;
  });
  p.validate();
  return p;
}

void write_belief_rows(std::ostream& out, const std::string& case_id, const BeliefTrace& trace) {
  for (std::size_t k = 0; k < trace.t.size(); ++k) {
    const auto& b = trace.path_beliefs[k];
    for (std::size_t i = 0; i < b.hypotheses.size(); ++i)
      out << case_id << ',' << trace.vehicle_id << ',' << format_number(trace.t[k]) << ',' << b.hypotheses[i] << ','
          << format_number(b.probs[i]) << '\n';
  }
}

Json prediction_to_json(const std::string& case_id, double t, const PredictionResult& world) {
  Json samples = Json::array();
  for (const auto& s : world.samples) {
    Json steps = Json::array();
    for (std::size_t k = 0; k + 3 < s.size(); k += kJointFeatures) steps.push_back({s[k], s[k + 1], s[k + 2], s[k + 3]});
    samples.push_back(std::move(steps));
  }
  return Json{{"case_id", case_id}, {"t", t}, {"samples", std::move(samples)}};
}

void write_loss_csv(std::ostream& out, const LossCurve& curve) {
  out << kLossHeader << '\n';
  for (std::size_t e = 0; e < curve.train.size(); ++e)
    out << e << ',' << format_number(curve.train[e]) << ','
        << format_number(e < curve.val.size() ? curve.val[e] : std::numeric_limits<double>::quiet_NaN()) << '\n';
}

void write_dataset(const fs::path& dir, const Dataset& ds, const Provenance& prov) {
  fs::create_directories(dir);
  Json cases = Json::array();
  std::vector<char> is_train(ds.episodes.size(), 0);
  for (std::size_t i : ds.train_ids) is_train.at(i) = 1;
  std::ostringstream csv;
  csv << provenance_comment(prov) << '\n' << kTrajectoryHeader << '\n';
  for (std::size_t i = 0; i < ds.episodes.size(); ++i) {
    const Episode& ep = ds.episodes[i];
    cases.push_back(Json{{"case_id", ep.case_id},
                         {"seed", ep.seed},
                         {"split", is_train[i] ? "train" : "test"},
                         {"label", to_string(ep.label)},
                         {"interacting", ep.interacting},
                         {"a_entry", ep.a_entry},
                         {"a_exit", ep.a_exit},
                         {"b_entry", ep.b_entry},
                         {"b_exit", ep.b_exit},
                         {"t_b_diverge", nan_or_number(ep.t_b_diverge)},
                         {"t_b_pre_exit", nan_or_number(ep.t_b_pre_exit)},
                         {"t_b_conflict", nan_or_number(ep.t_b_conflict)},
                         {"t_a_conflict", nan_or_number(ep.t_a_conflict)}});
    write_trajectory_rows(csv, ep.case_id, ep.car_a);
    write_trajectory_rows(csv, ep.case_id, ep.car_b);
    if (ep.front_a) write_trajectory_rows(csv, ep.case_id, *ep.front_a);
    if (ep.front_b) write_trajectory_rows(csv, ep.case_id, *ep.front_b);
  }
  Json manifest{{"provenance", to_json(prov)},
                {"seed", ds.seed},
                {"split_ratio", ds.split_ratio},
                {"train_count", ds.train_ids.size()},
                {"test_count", ds.test_ids.size()},
                {"roundabout", to_json(ds.spec)},
                {"scenario", to_json(ds.params)},
                {"cases", std::move(cases)}};
  Json paths = Json::array();
  for (const auto& p : build_reference_paths(ds.spec)) paths.push_back(to_json(p));
  Json paths_doc{{"provenance", to_json(prov)}, {"paths", std::move(paths)}};

  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  write_file(dir / "trajectories.csv", csv.str());
  write_file(dir / "paths.json", paths_doc.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  const Json manifest = read_json_file(dir / "manifest.json");
  Dataset ds;
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.split_ratio = manifest.at("split_ratio").get<double>();
  ds.spec = roundabout_from_json(manifest.at("roundabout"));
  ds.params = scenario_from_json(manifest.at("scenario"));

  std::ifstream csv(dir / "trajectories.csv", std::ios::binary);
  if (!csv) throw Error("cannot open " + (dir / "trajectories.csv").string());
  TrajectoryTable table = read_trajectory_csv(csv);

  for (const auto& c : manifest.at("cases")) {
    Episode ep;
    ep.case_id = c.at("case_id").get<std::string>();
    ep.seed = c.at("seed").get<std::uint64_t>();
    ep.label = negotiation_from_string(c.at("label").get<std::string>());
    ep.interacting = c.at("interacting").get<bool>();
    ep.a_entry = c.at("a_entry").get<int>();
    ep.a_exit = c.at("a_exit").get<int>();
    ep.b_entry = c.at("b_entry").get<int>();
    ep.b_exit = c.at("b_exit").get<int>();
    ep.t_b_diverge = number_or_nan(c.at("t_b_diverge"));
    ep.t_b_pre_exit = number_or_nan(c.at("t_b_pre_exit"));
    ep.t_b_conflict = number_or_nan(c.at("t_b_conflict"));
    ep.t_a_conflict = number_or_nan(c.at("t_a_conflict"));
    const auto it = table.cases.find(ep.case_id);
    if (it == table.cases.end()) throw FormatError("no trajectories for " + ep.case_id);
    bool has_a = false, has_b = false;
    for (auto& traj : it->second) {
      if (traj.agent_id() == "A") ep.car_a = traj, has_a = true;
      else if (traj.agent_id() == "B") ep.car_b = traj, has_b = true;
      else if (traj.agent_id() == "FA") ep.front_a = traj;
      else if (traj.agent_id() == "FB") ep.front_b = traj;
      else throw FormatError("unexpected agent " + traj.agent_id() + " in " + ep.case_id);
    }
    if (!has_a || !has_b) throw FormatError(ep.case_id + " lacks car A or car B");
    const std::string split = c.at("split").get<std::string>();
    const std::size_t index = ds.episodes.size();
    if (split == "train") ds.train_ids.push_back(index);
    else if (split == "test") ds.test_ids.push_back(index);
    else throw FormatError("unknown split '" + split + "' for " + ep.case_id);
    ds.episodes.push_back(std::move(ep));
  }
  return ds;
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace ipred::io
