#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "ipred/error.hpp"
#include "ipred/io.hpp"
#include "ipred/methods.hpp"

using namespace ipred;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ipred_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("numbers round trip through their shortest form") {
    Rng rng(51);
    for (int k = 0; k < 1000; ++k) {
      const double v = rng.normal(0.0, 1e3) * std::pow(10.0, rng.uniform(-10.0, 10.0));
      CHECK(std::stod(io::format_number(v)) == v);
    }
    CHECK(io::format_number(0.1) == "0.1");
    CHECK(io::format_number(2.0) == "2");
    CHECK(io::format_number(std::nan("")) == "nan");
  }

  TEST_CASE("digest and provenance") {
    CHECK(io::digest("").size() == 16);
    CHECK(io::digest("") == "cbf29ce484222325");
    CHECK(io::digest("a") == "af63dc4c8601ec8c");
    CHECK(io::digest("abc") != io::digest("abd"));
    const io::Provenance p{7, "0123456789abcdef", "1.2.3"};
    CHECK(io::provenance_comment(p) == "# ipred 1.2.3 seed=7 config=0123456789abcdef");
    const auto j = io::to_json(p);
    CHECK(j["seed"] == 7);
    CHECK(j["config_digest"] == "0123456789abcdef");
  }

  TEST_CASE("trajectory CSV round trip") {
    const Trajectory a("A", {{0.0, {1.5, -2.25}, 3.0}, {0.2, {1.6, -2.0}, 3.1}});
    const Trajectory b("B", {{0.0, {0.1, 0.2}, 0.0}});
    std::stringstream ss;
    ss << "# comment\n" << io::kTrajectoryHeader << "\n";
    io::write_trajectory_rows(ss, "c1", a);
    io::write_trajectory_rows(ss, "c1", b);
    io::write_trajectory_rows(ss, "c2", a);
    const auto table = io::read_trajectory_csv(ss);
    REQUIRE(table.case_order == std::vector<std::string>{"c1", "c2"});
    const auto& c1 = table.cases.at("c1");
    REQUIRE(c1.size() == 2);
    CHECK(c1[0].agent_id() == "A");
    CHECK(c1[0][1].pos.y == -2.0);
    CHECK(c1[1][0].v == 0.0);

    std::stringstream bad("case_id,agent,t\n");
    CHECK_THROWS_AS(io::read_trajectory_csv(bad), FormatError);
  }

  TEST_CASE("config JSON accepts partial overrides and rejects unknown keys") {
    const auto mc = io::model_config_from_json(io::Json{{"beta", 0.0}, {"latent_dim", 2}});
    CHECK(mc.beta == 0.0);
    CHECK(mc.lstm_hidden == 16);
    CHECK_THROWS(io::model_config_from_json(io::Json{{"betta", 0.1}}));
    const ModelConfig back = io::model_config_from_json(io::to_json(ModelConfig{}));
    CHECK(back.enc_hidden == ModelConfig{}.enc_hidden);
    const auto tc = io::train_config_from_json(io::Json{{"epochs", 3}});
    CHECK(tc.epochs == 3);
    CHECK(tc.batch_size == TrainConfig{}.batch_size);

    ScenarioParams sp;
    sp.force_label = Negotiation::yield;
    const auto sp2 = io::scenario_from_json(io::to_json(sp));
    CHECK(sp2.force_label == Negotiation::yield);
    CHECK_FALSE(sp2.force_a_branch.has_value());
    const auto spec = io::roundabout_from_json(io::to_json(RoundaboutSpec::default_spec()));
    CHECK(spec.routes.size() == 19);
  }

  TEST_CASE("dataset directory round trip") {
    const auto spec = RoundaboutSpec::default_spec();
    const auto ds = generate_dataset(spec, ScenarioParams{}, 12, 0.75, 21);
    const fs::path dir = scratch_dir("dataset");
    io::write_dataset(dir, ds, io::Provenance{21, io::digest("x"), ""});
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "trajectories.csv"));
    CHECK(fs::exists(dir / "paths.json"));
    CHECK(io::read_file(dir / "trajectories.csv").rfind("# ipred ", 0) == 0);
    const auto back = io::read_dataset(dir);
    CHECK(back.seed == 21);
    CHECK(back.train_ids == ds.train_ids);
    CHECK(back.test_ids == ds.test_ids);
    REQUIRE(back.episodes.size() == ds.episodes.size());
    for (std::size_t i = 0; i < ds.episodes.size(); ++i) {
      const auto& e = ds.episodes[i];
      const auto& f = back.episodes[i];
      CHECK(f.case_id == e.case_id);
      CHECK(f.b_exit == e.b_exit);
      CHECK(f.label == e.label);
      CHECK(f.interacting == e.interacting);
      CHECK(f.front_a.has_value() == e.front_a.has_value());
      REQUIRE(f.car_b.size() == e.car_b.size());
      for (std::size_t k = 0; k < e.car_b.size(); ++k) CHECK(f.car_b[k].pos.x == e.car_b[k].pos.x);
      CHECK((std::isnan(e.t_b_conflict) ? std::isnan(f.t_b_conflict) : f.t_b_conflict == e.t_b_conflict));
    }
    // Windows built from the re-read data are identical.
    const auto w0 = extract_windows(ds, ds.train_ids, 5, 5), w1 = extract_windows(back, back.train_ids, 5, 5);
    REQUIRE(w0.size() == w1.size());
    for (std::size_t i = 0; i < w0.size(); ++i) {
      CHECK(w0[i].fv.past_joint == w1[i].fv.past_joint);
      CHECK(w0[i].fv.environment == w1[i].fv.environment);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("loss CSV and prediction JSON") {
    std::stringstream ss;
    io::write_loss_csv(ss, LossCurve{{1.5, 0.75}, {2.0, std::nan("")}});
    CHECK(ss.str() == "epoch,train,val\n0,1.5,2\n1,0.75,nan\n");
    PredictionResult r;
    r.samples.assign(3, dc::Tensor({5, 4}, 1.0));
    r.compute_stats();
    const auto j = io::prediction_to_json("c", 1.2, r);
    CHECK(j["samples"].size() == 3);
    CHECK(j["samples"][0].size() == 5);
    CHECK(j["samples"][0][0].size() == 4);
  }

  TEST_CASE("method names") {
    for (Method m : all_methods()) CHECK(method_from_string(to_string(m)) == m);
    CHECK(all_methods().size() == 4);
    try {
      method_from_string("gan");
      FAIL("expected an error");
    } catch (const InvalidArgument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("proposed") != std::string::npos);
      CHECK(msg.find("mc-dropout") != std::string::npos);
    }
  }
}
