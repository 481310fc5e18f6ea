#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "ipred/cvae.hpp"
#include "ipred/geometry.hpp"
#include "ipred/pipeline.hpp"
#include "ipred/synthdata.hpp"

namespace ipred::io {

using Json = nlohmann::ordered_json;

// Stamped into every artifact.
struct Provenance {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string version;  // defaults to kVersion when empty
};

Json to_json(const Provenance& p);
// "# ipred <version> seed=<seed> config=<digest>"
std::string provenance_comment(const Provenance& p);

// 16 hex digits of the FNV-1a hash of `text`.
std::string digest(std::string_view text);

// Shortest decimal that reads back to the same double.
std::string format_number(double v);

// Trajectory CSV: case_id,agent_id,t,x,y,v. Lines starting with '#' are
// comments.
inline constexpr const char* kTrajectoryHeader = "case_id,agent_id,t,x,y,v";
void write_trajectory_rows(std::ostream& out, const std::string& case_id, const Trajectory& traj);

struct TrajectoryTable {
  std::vector<std::string> case_order;
  std::map<std::string, std::vector<Trajectory>> cases;  // agents in file order
};
TrajectoryTable read_trajectory_csv(std::istream& in);

Json to_json(const ReferencePath& path);
ReferencePath reference_path_from_json(const Json& j);

// The *_from_json readers accept partial objects: absent keys keep `base`.
// Unknown keys are rejected.
Json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j, ModelConfig base = {});
Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});
Json to_json(const RoundaboutSpec& s);
RoundaboutSpec roundabout_from_json(const Json& j);
Json to_json(const ScenarioParams& p);
ScenarioParams scenario_from_json(const Json& j);

// Belief log CSV: case_id,vehicle_id,t,path_id,prob
inline constexpr const char* kBeliefHeader = "case_id,vehicle_id,t,path_id,prob";
void write_belief_rows(std::ostream& out, const std::string& case_id, const BeliefTrace& trace);

// {case_id, t, samples: [[[xA, yA, xB, yB] x T2] x N]}
Json prediction_to_json(const std::string& case_id, double t, const PredictionResult& world);

inline constexpr const char* kLossHeader = "epoch,train,val";
void write_loss_csv(std::ostream& out, const LossCurve& curve);

// Dataset directory layout: manifest.json, trajectories.csv, paths.json.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds, const Provenance& prov);
Dataset read_dataset(const std::filesystem::path& dir);

void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);

}  // namespace ipred::io
