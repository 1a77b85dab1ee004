#include "heavyica/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using heavyica::Json;

namespace {

struct RunOutput {
  int status = -1;
  Json report;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("heavyica_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const Json& config) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << config.dump(2);
    return p;
  }

  RunOutput run(const std::string& args) {
    const fs::path out = dir_ / "stdout.json";
    const std::string cmd = std::string(HEAVYICA_CLI_PATH) + " " + args + " > " + out.string();
    const int raw = std::system(cmd.c_str());
    RunOutput r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.report = Json::parse(heavyica::read_file(out), nullptr, false);
    return r;
  }

  fs::path dir_;
};

Json cauchy_config(std::size_t N) {
  return Json{{"model", {{"n", 2}, {"sources", {{"family", "cauchy"}}}, {"mixing", "unitary-random"}}},
              {"N_samples", N},
              {"seed", 7}};
}

}  // namespace

TEST_F(Cli, GenerateIsReproducible) {
  const auto cfg = write_config("c.json", cauchy_config(500));
  ASSERT_EQ(run("generate --config " + cfg.string() + " --out " + (dir_ / "a").string()).status, 0);
  ASSERT_EQ(run("generate --config " + cfg.string() + " --out " + (dir_ / "b").string()).status, 0);
  const std::string a = heavyica::read_file(dir_ / "a" / "samples.csv");
  EXPECT_EQ(a, heavyica::read_file(dir_ / "b" / "samples.csv"));
  EXPECT_EQ(a.substr(0, a.find('\n')), "x1,x2");
  EXPECT_EQ(heavyica::read_csv(dir_ / "a" / "samples.csv").rows(), 500);

  const auto side = Json::parse(heavyica::read_file(dir_ / "a" / "samples.json"));
  EXPECT_EQ(side["seeds"]["root"], 7);
  EXPECT_EQ(side["model"]["A"].size(), 2u);

  const auto other = run("generate --config " + cfg.string() + " --seed 8 --out " + (dir_ / "c").string());
  ASSERT_EQ(other.status, 0);
  EXPECT_NE(a, heavyica::read_file(dir_ / "c" / "samples.csv"));
}

TEST_F(Cli, RefusesToOverwriteWithoutForce) {
  const auto cfg = write_config("c.json", cauchy_config(100));
  const std::string args = "generate --config " + cfg.string() + " --out " + dir_.string();
  ASSERT_EQ(run(args).status, 0);
  const auto again = run(args);
  EXPECT_EQ(again.status, 1);
  EXPECT_EQ(again.report["status"], "error");
  EXPECT_EQ(again.report["error_kind"], "io");
  EXPECT_EQ(run(args + " --force").status, 0);
}

TEST_F(Cli, CauchyWithNonUnitaryMixingIsRejected) {
  Json c = cauchy_config(100);
  c["model"]["mixing"] = "random-cond(5)";
  const auto r = run("pipeline --config " + write_config("c.json", c).string() + " --out " + dir_.string());
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.report["error_kind"], "configuration");
  EXPECT_TRUE(r.report.contains("stage"));
  EXPECT_TRUE(r.report["message"].is_string());
  EXPECT_FALSE(fs::exists(dir_ / "pipeline.json"));
}

TEST_F(Cli, PipelineReport) {
  Json c = cauchy_config(40000);
  c["skip_orthogonalization"] = true;
  const auto r = run("pipeline --config " + write_config("c.json", c).string() + " --out " + dir_.string());
  ASSERT_EQ(r.status, 0) << r.report.dump();
  EXPECT_EQ(r.report["command"], "pipeline");
  EXPECT_EQ(r.report["status"], "ok");
  EXPECT_EQ(r.report["per_column_error"].size(), 2u);
  EXPECT_EQ(r.report["permutation"].size(), 2u);
  EXPECT_TRUE(r.report["sample_budget_warning"].is_string());
  EXPECT_EQ(r.report["recovered_columns"].size(), 2u);
  EXPECT_EQ(Json::parse(heavyica::read_file(dir_ / "pipeline.json")), r.report);
}

TEST_F(Cli, StagesChainThroughFiles) {
  const auto gen_cfg = write_config("g.json", cauchy_config(20000));
  ASSERT_EQ(run("generate --config " + gen_cfg.string() + " --out " + dir_.string()).status, 0);
  Json c = cauchy_config(20000);
  c["input"] = (dir_ / "samples.csv").string();
  c["truth"] = (dir_ / "samples.json").string();
  c["skip_orthogonalization"] = true;
  const auto damp = run("damp --config " + write_config("d.json", c).string() + " --out " + dir_.string());
  ASSERT_EQ(damp.status, 0) << damp.report.dump();
  EXPECT_GT(damp.report["R"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir_ / "damped.csv"));

  Json rc = cauchy_config(20000);
  rc["input"] = (dir_ / "damped.csv").string();
  rc["truth"] = (dir_ / "samples.json").string();
  rc["symmetrize"] = false;
  const auto rec = run("recover --config " + write_config("r.json", rc).string() + " --out " + dir_.string());
  ASSERT_EQ(rec.status, 0) << rec.report.dump();

  Json ec{{"truth", (dir_ / "samples.json").string()}, {"evaluate", {{"report", (dir_ / "recover.json").string()}}}};
  const auto ev = run("evaluate --config " + write_config("e.json", ec).string() + " --out " + dir_.string());
  ASSERT_EQ(ev.status, 0) << ev.report.dump();
  EXPECT_LE(ev.report["amari_index"].get<double>(), 1.0);
}

TEST_F(Cli, EvaluateIdenticalMatrices) {
  const Json A = Json::array({Json::array({0.6, -0.8}), Json::array({0.8, 0.6})});
  Json c{{"evaluate", {{"true_A", A}, {"recovered", Json::array({Json::array({-0.6, -0.8}), Json::array({-0.8, 0.6})})}}}};
  const auto r = run("evaluate --config " + write_config("e.json", c).string() + " --out " + dir_.string());
  ASSERT_EQ(r.status, 0) << r.report.dump();
  EXPECT_NEAR(r.report["amari_index"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(r.report["per_column_error"][0].get<double>(), 0.0, 1e-12);
}

TEST_F(Cli, UnknownConfigKeyFails) {
  const auto r = run("generate --config " + write_config("c.json", Json{{"N_sample", 10}}).string() + " --out " +
                     dir_.string());
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.report["error_kind"], "configuration");
}

TEST(Csv, RoundTripIsExact) {
  heavyica::SampleMatrix s;
  s.data.resize(3, 2);
  s.data << 0.1, -1e-300, 1.0 / 3.0, 12345678.9, -0.0, 5e300;
  const auto back = heavyica::parse_csv(heavyica::to_csv(s));
  EXPECT_EQ(back.data, s.data);
  EXPECT_THROW(heavyica::parse_csv("x1,x2\n1,2\n3\n"), std::exception);
}
