#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rnls/app.hpp"

using namespace rnls;
using app::json;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("rnls_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path dir(const std::string& name) const { return root_ / name; }

  static json load(const fs::path& p) {
    std::ifstream is(p);
    return json::parse(is);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  }

  fs::path root_;
};

json small_evolve() {
  return {{"omega", {0.5}}, {"gamma", {1.0, 1.4}}, {"L", 10.0}, {"N", 64}, {"c", 0.5}, {"T", 0.1}};
}

}  // namespace

TEST_F(Cli, RegimeReportsNonExistence) {
  testing::internal::CaptureStdout();
  const int rc = app::run_command("regime", {{"omega", {1.2}}, {"gamma", {1.0, std::sqrt(2.0)}}}, dir("r"));
  const std::string out = testing::internal::GetCapturedStdout();
  EXPECT_EQ(rc, 0);
  EXPECT_EQ(out, "NonExistence(a)\n");
  EXPECT_EQ(load(dir("r") / "manifest.json")["headline"]["regime"], "NonExistence(a)");
}

TEST_F(Cli, UnknownKeyIsConfigError) {
  testing::internal::CaptureStderr();
  const int rc = app::run_command("regime", {{"omgea", {0.5}}}, dir("e"));
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_EQ(rc, 2);
  const auto rec = load(dir("e") / "error.json");
  EXPECT_EQ(rec["code"], "UnknownKey");
  EXPECT_EQ(rec["error_class"], "config");
  EXPECT_EQ(rec["exit_code"], 2);
  EXPECT_NE(err.find("UnknownKey"), std::string::npos);
}

TEST_F(Cli, UnknownCommandAndPreset) {
  testing::internal::CaptureStderr();
  EXPECT_EQ(app::run_command("teleport", json::object(), dir("a")), 2);
  EXPECT_EQ(app::run_command("evolve", {{"preset", "no-such-preset"}}, dir("b")), 2);
  testing::internal::GetCapturedStderr();
  EXPECT_EQ(load(dir("b") / "error.json")["code"], "UnknownPreset");
}

TEST_F(Cli, UnwritableOutputIsIoError) {
  std::ofstream(dir("file")) << "x";
  testing::internal::CaptureStderr();
  const int rc = app::run_command("regime", json::object(), dir("file") / "sub");
  testing::internal::GetCapturedStderr();
  EXPECT_EQ(rc, 4);
}

TEST_F(Cli, GroundstateNonConvergenceKeepsBestIterate) {
  testing::internal::CaptureStderr();
  testing::internal::CaptureStdout();
  const json cfg = {{"omega", {0.5}}, {"gamma", {2.0, 8.0}}, {"L", 6.0}, {"N", 64}, {"max_iter", 3}, {"tol", 1e-14}};
  const int rc = app::run_command("groundstate", cfg, dir("g"));
  testing::internal::GetCapturedStdout();
  testing::internal::GetCapturedStderr();
  EXPECT_EQ(rc, 3);
  EXPECT_EQ(load(dir("g") / "error.json")["code"], "NonConvergence");
  EXPECT_TRUE(fs::exists(dir("g") / "groundstate_best.rnls"));
  const auto snap = snapshot::read((dir("g") / "groundstate_best.rnls").string());
  EXPECT_NEAR(mass(snap.field), 1.0, 1e-10);
}

TEST_F(Cli, ShootHeadline) {
  testing::internal::CaptureStdout();
  ASSERT_EQ(app::run_command("shoot", json::object(), dir("s")), 0);
  testing::internal::GetCapturedStdout();
  const auto m = load(dir("s") / "manifest.json");
  EXPECT_NEAR(m["headline"]["mass"].get<double>(), 5.85043, 5.85043 * 5e-3);
  EXPECT_EQ(slurp(dir("s") / "profile.csv").substr(0, 4), "r,u\n");
}

TEST_F(Cli, ManifestChecksumsMatchFiles) {
  testing::internal::CaptureStdout();
  ASSERT_EQ(app::run_command("evolve", small_evolve(), dir("m")), 0);
  testing::internal::GetCapturedStdout();
  const auto m = load(dir("m") / "manifest.json");
  EXPECT_EQ(m["command"], "evolve");
  EXPECT_EQ(m["code_version"], app::kVersion);
  EXPECT_EQ(m["grid"]["N"][0], 64);
  ASSERT_EQ(m["artifacts"].size(), 3u);
  for (const auto& a : m["artifacts"]) {
    const fs::path p = dir("m") / a["path"].get<std::string>();
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(fs::file_size(p), a["bytes"].get<std::size_t>());
    EXPECT_EQ(app::sha256_file(p), a["sha256"]);
  }
  const std::string trace = slurp(dir("m") / "trace.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "t,mass,energy,grad_norm,linf,lz,tail_fraction");
  EXPECT_EQ(m["headline"]["verdict"], "Global");
}

TEST_F(Cli, RunsAreDeterministic) {
  testing::internal::CaptureStdout();
  ASSERT_EQ(app::run_command("evolve", small_evolve(), dir("one")), 0);
  ASSERT_EQ(app::run_command("evolve", small_evolve(), dir("two")), 0);
  testing::internal::GetCapturedStdout();
  for (const char* f : {"snapshot_t0.rnls", "snapshot_final.rnls", "trace.csv"})
    EXPECT_EQ(app::sha256_file(dir("one") / f), app::sha256_file(dir("two") / f)) << f;
  const auto a = load(dir("one") / "manifest.json"), b = load(dir("two") / "manifest.json");
  EXPECT_EQ(a["artifacts"], b["artifacts"]);
  EXPECT_EQ(a["headline"], b["headline"]);
}

TEST_F(Cli, SnapshotRestartReproducesState) {
  testing::internal::CaptureStdout();
  ASSERT_EQ(app::run_command("evolve", small_evolve(), dir("first")), 0);
  json cfg = {{"omega", {0.5}}, {"gamma", {1.0, 1.4}}, {"T", 0.1},
              {"init_snapshot", (dir("first") / "snapshot_t0.rnls").string()}};
  ASSERT_EQ(app::run_command("evolve", cfg, dir("again")), 0);
  testing::internal::GetCapturedStdout();
  EXPECT_EQ(app::sha256_file(dir("first") / "snapshot_final.rnls"), app::sha256_file(dir("again") / "snapshot_final.rnls"));
}

TEST_F(Cli, PresetsCoverExperimentSets) {
  const auto p = app::presets();
  EXPECT_EQ(p.size(), 12u);
  for (const auto& [name, cfg] : p.items()) {
    EXPECT_NO_THROW(app::physics(app::Config(cfg, app::keys({app::kPhysicsKeys, app::kGridKeys, app::kEvolveKeys}, {}))))
        << name;
  }
  json over = {{"preset", "freeq0-0.98-om0.5-g1-sqrt2"}, {"N", 64}};
  const auto merged = app::apply_preset(over);
  EXPECT_EQ(merged["N"], 64);
  EXPECT_EQ(merged["c"], 0.98);
}

TEST_F(Cli, PresetEvolveIsGlobal) {
  testing::internal::CaptureStdout();
  ASSERT_EQ(app::run_command("evolve", {{"preset", "freeq0-0.98-om0.5-g1-sqrt2"}}, dir("p")), 0);
  testing::internal::GetCapturedStdout();
  const auto h = load(dir("p") / "manifest.json")["headline"];
  EXPECT_EQ(h["verdict"], "Global");
  EXPECT_LE(h["mass_drift"].get<double>(), 1e-10);
}

TEST_F(Cli, GaugeCheckRejectsNonSymmetric) {
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  EXPECT_EQ(app::run_command("gauge-check", {{"N", 64}}, dir("ok")), 0);
  EXPECT_EQ(app::run_command("gauge-check", {{"C", {{0.0, 1.0}, {2.0, 0.0}}}}, dir("bad")), 2);
  testing::internal::GetCapturedStderr();
  testing::internal::GetCapturedStdout();
  EXPECT_LE(load(dir("ok") / "manifest.json")["headline"]["max_error"].get<double>(), 1e-8);
  EXPECT_EQ(load(dir("bad") / "error.json")["code"], "NonSymmetricGauge");
}

TEST_F(Cli, ScanSweepWritesRunsSorted) {
  testing::internal::CaptureStdout();
  const json cfg = {{"source", "FreeQ0"}, {"omega", {0.5}}, {"gamma", {1.0, 1.4}}, {"L", 10.0}, {"N", 64},
                    {"T", 0.1}, {"mode", "sweep"}, {"c_values", {0.6, 0.2}}, {"workers", 2}};
  ASSERT_EQ(app::run_command("scan", cfg, dir("sw")), 0);
  testing::internal::GetCapturedStdout();
  std::istringstream is(slurp(dir("sw") / "runs.csv"));
  std::string header, a, b;
  std::getline(is, header);
  std::getline(is, a);
  std::getline(is, b);
  EXPECT_EQ(header, "c,verdict,t_detect,final_grad_norm,final_linf");
  EXPECT_EQ(a.substr(0, 11), "0.2,Global,");
  EXPECT_EQ(b.substr(0, 11), "0.6,Global,");
}

TEST_F(Cli, InequalitiesAndVortexSweep) {
  testing::internal::CaptureStdout();
  ASSERT_EQ(app::run_command("check-inequalities", {{"omega", {0.7}}, {"N", 64}, {"L", 10.0}, {"samples", 5}}, dir("i")),
            0);
  ASSERT_EQ(app::run_command("vortex-sweep", {{"omega", {1.2}}, {"gamma", {1.0, 1.0}}, {"m_hi", 12}}, dir("v")), 0);
  testing::internal::GetCapturedStdout();
  const auto hi = load(dir("i") / "manifest.json")["headline"];
  EXPECT_TRUE(hi["all_satisfied"].get<bool>());
  EXPECT_NEAR(hi["gn_ratio_q0"].get<double>(), 1.0, 1e-3);
  const auto hv = load(dir("v") / "manifest.json")["headline"];
  EXPECT_NEAR(hv["slope"].get<double>(), hv["expected_slope"].get<double>(), 0.05 * std::abs(hv["expected_slope"].get<double>()));
}

TEST_F(Cli, ExecutableExitCodes) {
  const std::string exe = RNLS_CLI_PATH;
  const std::string quiet = " >/dev/null 2>&1";
  auto status = [](int raw) { return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1; };
  EXPECT_EQ(status(std::system((exe + " --version" + quiet).c_str())), 0);
  EXPECT_EQ(status(std::system((exe + " bogus" + quiet).c_str())), 2);
  const std::string out = dir("x").string();
  EXPECT_EQ(status(std::system((exe + " regime -o " + out + " -s omega=[0.5]" + quiet).c_str())), 0);
  EXPECT_EQ(status(std::system((exe + " regime -o " + out + " -s bogus=1" + quiet).c_str())), 2);
  EXPECT_EQ(status(std::system((exe + " regime -o " + out + " -c /nonexistent.json" + quiet).c_str())), 4);
}
