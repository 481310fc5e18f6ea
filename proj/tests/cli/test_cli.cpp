#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int status = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(IPRED_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const fs::path& work() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "ipred_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Generated once and shared by the tests below.
const fs::path& dataset() {
  static const fs::path dir = [] {
    const fs::path d = work() / "data";
    const auto r = run("--seed 7 --out " + q(d) + " gen-data --cases 200");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    return d;
  }();
  return dir;
}

const fs::path& proposed_model() {
  static const fs::path dir = [] {
    const fs::path d = work() / "models" / "proposed";
    const auto r = run("--seed 3 --out " + q(d) + " train --data " + q(dataset()) + " --method proposed --epochs 2");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    return d;
  }();
  return dir;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("gen-data splits 200 cases into 160/40 and reruns are identical") {
    const auto manifest = json::parse(slurp(dataset() / "manifest.json"));
    CHECK(manifest["train_count"] == 160);
    CHECK(manifest["test_count"] == 40);
    CHECK(manifest["provenance"]["seed"] == 7);

    const fs::path again = work() / "data_again";
    const auto r = run("--seed 7 --out " + q(again) + " gen-data --cases 200");
    REQUIRE(r.status == 0);
    for (const char* f : {"manifest.json", "trajectories.csv", "paths.json"})
      CHECK_MESSAGE(slurp(dataset() / f) == slurp(again / f), f);
  }

  TEST_CASE("gen-data rejects too few cases and existing outputs") {
    auto r = run("--out " + q(work() / "tiny") + " gen-data --cases 5");
    CHECK(r.status != 0);
    CHECK(r.output.find("error") != std::string::npos);
    r = run("--seed 7 --out " + q(dataset()) + " gen-data --cases 200");
    CHECK(r.status != 0);
    CHECK(r.output.find("--force") != std::string::npos);
  }

  TEST_CASE("train rejects an unknown method and lists the valid ones") {
    const auto r = run("--out " + q(work() / "bad") + " train --data " + q(dataset()) + " --method gan");
    CHECK(r.status != 0);
    for (const char* m : {"proposed", "cvae-noI", "mlp-ensemble", "mc-dropout"})
      CHECK(r.output.find(m) != std::string::npos);
  }

  TEST_CASE("train writes checkpoint, sidecar and loss curve; same seed gives identical files") {
    const fs::path m = proposed_model();
    CHECK(fs::exists(m / "model.ipm"));
    CHECK(fs::exists(m / "model.json"));
    const std::string loss = slurp(m / "loss.csv");
    CHECK(loss.find("epoch,train,val") != std::string::npos);
    const fs::path again = work() / "proposed_again";
    const auto r =
        run("--seed 3 --out " + q(again) + " train --data " + q(dataset()) + " --method proposed --epochs 2");
    REQUIRE(r.status == 0);
    CHECK(slurp(again / "loss.csv") == loss);
    CHECK(slurp(again / "model.ipm") == slurp(m / "model.ipm"));

    const fs::path beta0 = work() / "beta0";
    const auto b = run("--seed 3 --out " + q(beta0) + " train --data " + q(dataset()) +
                       " --method proposed --epochs 1 --beta 0");
    REQUIRE(b.status == 0);
    CHECK(json::parse(slurp(beta0 / "model.json"))["model"]["beta"] == 0.0);
  }

  TEST_CASE("predict: 10 samples per step, beliefs sum to 1, updates at least 0.4 s apart") {
    const fs::path out = work() / "pred";
    const auto r = run("--seed 5 --out " + q(out) + " predict --model " + q(proposed_model()) + " --data " +
                       q(dataset()) + " --samples 10");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const auto doc = json::parse(slurp(out / "predictions.json"));
    REQUIRE(doc["steps"].size() > 0);
    for (const auto& step : doc["steps"]) {
      CHECK(step["samples"].size() == 10);
      CHECK(step["samples"][0].size() == 5);
      CHECK(step["samples"][0][0].size() == 4);
      CHECK(step.contains("interacting"));
    }

    std::ifstream in(out / "beliefs.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# ipred", 0) == 0);
    std::getline(in, line);
    CHECK(line == "case_id,vehicle_id,t,path_id,prob");
    // (vehicle, t) -> path -> prob, in file order.
    std::map<std::string, std::vector<std::pair<double, std::map<std::string, double>>>> rows;
    while (std::getline(in, line)) {
      const auto c = split(line);
      REQUIRE(c.size() == 5);
      auto& series = rows[c[1]];
      const double t = std::stod(c[2]);
      if (series.empty() || std::abs(series.back().first - t) > 1e-9) series.push_back({t, {}});
      series.back().second[c[3]] = std::stod(c[4]);
    }
    CHECK(rows.size() == 2);
    for (const auto& [vehicle, series] : rows) {
      double last_change = series.front().first;
      for (std::size_t i = 0; i < series.size(); ++i) {
        double sum = 0.0;
        for (const auto& [path, p] : series[i].second) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        if (i > 0 && series[i].second != series[i - 1].second) {
          CHECK(series[i].first - last_change >= 0.4 - 1e-9);
          last_change = series[i].first;
        }
      }
    }

    const fs::path again = work() / "pred_again";
    REQUIRE(run("--seed 5 --out " + q(again) + " predict --model " + q(proposed_model()) + " --data " +
                q(dataset()) + " --samples 10")
                .status == 0);
    CHECK(slurp(again / "predictions.json") == slurp(out / "predictions.json"));
  }

  TEST_CASE("eval: single-method table and missing checkpoint names the method") {
    const fs::path out = work() / "eval";
    const fs::path models = proposed_model().parent_path();
    auto r = run("--out " + q(out) + " eval --data " + q(dataset()) + " --models " + q(models) +
                 " --methods proposed --samples 10");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const auto doc = json::parse(slurp(out / "eval.json"));
    CHECK(doc["methods"].size() == 1);
    const std::string table = slurp(out / "eval.txt");
    CHECK(table.find("proposed") != std::string::npos);
    CHECK(table.find("NLL") != std::string::npos);

    r = run("--out " + q(work() / "eval2") + " eval --data " + q(dataset()) + " --models " + q(models) +
            " --methods proposed,mc-dropout");
    CHECK(r.status != 0);
    CHECK(r.output.find("mc-dropout") != std::string::npos);
  }

  TEST_CASE("latent-grid gives 25 points with the fixed intention recorded") {
    const fs::path out = work() / "grid";
    const auto r = run("--out " + q(out) + " latent-grid --model " + q(proposed_model()) + " --data " +
                       q(dataset()) + " --min -2 --max 2 --steps 5");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const auto doc = json::parse(slurp(out / "latent_grid.json"));
    CHECK(doc["grid"].size() == 25);
    CHECK(doc["intention"].size() == 8);
    double ones = 0.0;
    for (const auto& v : doc["intention"]) ones += v.get<double>();
    CHECK(ones == 1.0);
    CHECK(doc["grid"][0]["z"] == json::array({-2.0, -2.0}));
    CHECK(doc["grid"][0]["future"].size() == 5);
  }
}
