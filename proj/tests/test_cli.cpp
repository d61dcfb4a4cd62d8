#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SPDC_SIM_EXE) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "spdc_cli_test" / name;
  fs::remove_all(p);
  return p;
}

json load(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, PhaseMapSmallGrid) {
  const auto dir = scratch("phase3");
  const auto r = run("--preset led -o " + dir.string() + " phase-map --grid-n 3 --extent 1");
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream in(dir / "phase_map.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# spdc-sim ", 0), 0u);
  EXPECT_NE(line.find("config_hash="), std::string::npos);
  std::getline(in, line);
  EXPECT_EQ(line, "q_px_mrad,q_py_mrad,phi_rad");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (rows == 5) EXPECT_EQ(line, "0,0,0");
  }
  EXPECT_EQ(rows, 9);
  EXPECT_TRUE(fs::exists(dir / "phase_map.json"));
  EXPECT_TRUE(fs::exists(dir / "effective_config.json"));
}

TEST(Cli, PhaseDifferenceIsFlat) {
  const auto dir = scratch("diff");
  const auto r = run("--preset led -o " + dir.string() + " phase-map --grid-n 61 --extent 6 --diff 395 415");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = load(dir / "phase_diff.json");
  double worst = 0;
  for (std::size_t row = 0; row < j["q_py_mrad"].size(); ++row) {
    for (std::size_t col = 0; col < j["q_px_mrad"].size(); ++col) {
      if (std::hypot(j["q_px_mrad"][col].get<double>(), j["q_py_mrad"][row].get<double>()) <= 6.0) {
        worst = std::max(worst, std::abs(j["phi_rad"][row][col].get<double>()));
      }
    }
  }
  EXPECT_LE(worst, 0.35);
  EXPECT_GT(worst, 0.0);
}

TEST(Cli, ConfigErrorsExitTwoAndNameTheKey) {
  const auto dir = scratch("bad");
  auto r = run("-o " + dir.string() + " predict --pump.angular_radius_mrd 5");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("pump.angular_radius_mrd"), std::string::npos) << r.output;
  r = run("-o " + dir.string() + " predict --pump.polarization_sign 3");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("pump.polarization_sign"), std::string::npos) << r.output;
  const auto cfg = dir.parent_path() / "bad_config.json";
  {
    std::ofstream os(cfg);
    os << R"({"crystal": {"sellmeier": {"ordinary": [1, 2, 3]}}})";
  }
  r = run("-c " + cfg.string() + " -o " + dir.string() + " predict");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("crystal.sellmeier.ordinary"), std::string::npos) << r.output;
  EXPECT_EQ(run("predict --preset nope").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST(Cli, EnvironmentNamesDefaultConfig) {
  const auto dir = scratch("env");
  fs::create_directories(dir);
  const auto cfg = dir / "cfg.json";
  {
    std::ofstream os(cfg);
    os << R"({"pump": {"angular_radius_mrad": 0.13}})";
  }
  const auto r = run("-o " + dir.string() + " predict 2>&1; SPDC_SIM_CONFIG=" + cfg.string() + " " + SPDC_SIM_EXE +
                     " -o " + (dir / "b").string() + " predict");
  ASSERT_NE(r.output.find("concurrence"), std::string::npos);
  EXPECT_DOUBLE_EQ(load(dir / "b" / "effective_config.json")["pump"]["angular_radius_mrad"].get<double>(), 0.13);
}

TEST(Cli, PredictPresets) {
  const auto laser = scratch("laser");
  ASSERT_EQ(run("--preset laser -o " + laser.string() + " predict").code, 0);
  const auto ml = load(laser / "metrics.json");
  EXPECT_GE(ml["concurrence"].get<double>(), 0.999);
  EXPECT_GE(ml["purity"].get<double>(), 0.999);
  const auto rho = load(laser / "rho.json");
  EXPECT_LT(rho["re"][0][3].get<double>(), 0.0);

  const auto led = scratch("led");
  ASSERT_EQ(run("--preset led -o " + led.string() + " predict").code, 0);
  EXPECT_NEAR(load(led / "metrics.json")["concurrence"].get<double>(), 0.552, 0.03);

  const auto off = scratch("off");
  ASSERT_EQ(run("--preset led-misaligned -o " + off.string() + " predict").code, 0);
  const auto mo = load(off / "metrics.json");
  EXPECT_NEAR(mo["concurrence"].get<double>(), 0.553, 0.03);
  EXPECT_GT(std::abs(mo["mu"]["arg_rad"].get<double>()), 0.1);
  EXPECT_TRUE(mo.contains("fidelity_to_centered"));
}

TEST(Cli, TomographyNoiselessAndRefit) {
  const auto dir = scratch("tomo");
  auto r = run("--preset led -o " + dir.string() + " tomo-sim --noiseless --tomo.counts_per_setting 1e5 --tomo.T_s 10");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto m = load(dir / "tomo_metrics.json");
  EXPECT_TRUE(m["converged"].get<bool>());
  EXPECT_GE(m["fidelity_to_predicted"].get<double>(), 1 - 1e-6);
  r = run("--preset led -o " + dir.string() + " tomo-fit --counts " + (dir / "counts.csv").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NEAR(load(dir / "fit_metrics.json")["nll"].get<double>(), m["nll"].get<double>(), 1e-9);
  EXPECT_EQ(run("-o " + dir.string() + " tomo-fit --counts /nonexistent.csv").code, 2);
}

TEST(Cli, FringeVisibilities) {
  const auto laser = scratch("fr_laser");
  ASSERT_EQ(run("--preset laser -o " + laser.string() + " fringes --noiseless").code, 0);
  auto j = load(laser / "fringes.json");
  EXPECT_NEAR(j["V_HV"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(j["V_AD"].get<double>(), j["abs_re_mu"].get<double>(), 1e-9);
  EXPECT_GE(j["V_AD"].get<double>(), 0.998);
  EXPECT_TRUE(fs::exists(laser / "fringe_D.csv"));
  EXPECT_TRUE(fs::exists(laser / "visibility_A.json"));

  const auto led = scratch("fr_led");
  ASSERT_EQ(run("--preset led -o " + led.string() + " fringes --noiseless").code, 0);
  ASSERT_EQ(run("--preset led -o " + led.string() + " predict").code, 0);
  EXPECT_NEAR(load(led / "fringes.json")["V_AD"].get<double>(), load(led / "mu.json")["abs"].get<double>(), 1e-6);

  const auto off = scratch("fr_off");
  ASSERT_EQ(run("--preset led-misaligned -o " + off.string() + " fringes --noiseless").code, 0);
  ASSERT_EQ(run("--preset led-misaligned -o " + off.string() + " predict").code, 0);
  EXPECT_LT(load(off / "fringes.json")["V_AD"].get<double>(), load(off / "mu.json")["abs"].get<double>() - 0.05);
}

TEST(Cli, Sweep) {
  const auto dir = scratch("sweep");
  ASSERT_EQ(run("--preset led -o " + dir.string() + " sweep --radii 0.13,5.6").code, 0);
  std::ifstream in(dir / "sweep.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line, "radius_mrad,concurrence,purity");
  double r, c, p;
  char comma;
  in >> r >> comma >> c >> comma >> p;
  EXPECT_GE(c, 0.999);
  in >> r >> comma >> c >> comma >> p;
  EXPECT_NEAR(c, 0.552, 0.03);
  EXPECT_NEAR(p, 0.652, 0.03);

  EXPECT_EQ(run("--preset led -o " + dir.string() + " sweep").code, 2);
  EXPECT_EQ(run("--preset led -o " + dir.string() + " sweep --radii 5,1").code, 2);
  ASSERT_EQ(run("--preset led -o " + dir.string() + " sweep --log-sweep 0.1 10 20").code, 0);
}

TEST(Cli, NumericFailureExitsThree) {
  const auto dir = scratch("cal");
  EXPECT_EQ(run("--preset led -o " + dir.string() + " calibrate --target 0.999").code, 3);
  const auto ok = run("--preset led -o " + dir.string() + " calibrate");
  ASSERT_EQ(ok.code, 0) << ok.output;
  EXPECT_NEAR(load(dir / "calibration.json")["cut_angle_deg"].get<double>(), 28.7058, 1e-3);
}

TEST(Cli, DeterministicOutputsAndConfigEcho) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const std::string args = " --preset led-misaligned --tomo.counts_per_setting 2000 --tomo.T_s 10 ";
  ASSERT_EQ(run(args + "-o " + a.string() + " tomo-sim").code, 0);
  ASSERT_EQ(run(args + "-o " + a.string() + " fringes").code, 0);
  const std::string first_counts = slurp(a / "counts.csv");
  const std::string first_rho = slurp(a / "tomo_rho.json");
  const std::string first_fringe = slurp(a / "fringe_D.csv");
  ASSERT_EQ(run(args + "-o " + a.string() + " tomo-sim").code, 0);
  EXPECT_EQ(slurp(a / "counts.csv"), first_counts);
  EXPECT_EQ(slurp(a / "tomo_rho.json"), first_rho);

  // Re-running from the echoed configuration reproduces the results.
  fs::create_directories(b);
  fs::copy_file(a / "effective_config.json", b / "echo.json");
  ASSERT_EQ(run("-c " + (b / "echo.json").string() + " -o " + b.string() + " tomo-sim").code, 0);
  ASSERT_EQ(run("-c " + (b / "echo.json").string() + " -o " + b.string() + " fringes").code, 0);
  EXPECT_EQ(slurp(b / "counts.csv"), first_counts);
  EXPECT_EQ(slurp(b / "tomo_rho.json"), first_rho);
  EXPECT_EQ(slurp(b / "fringe_D.csv"), first_fringe);
}
