// spdc-sim: command-line front end for the phase-map, prediction,
// tomography, fringe and bandwidth-sweep pipelines.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "spdc/config.hpp"
#include "spdc/errors.hpp"
#include "spdc/fringes.hpp"
#include "spdc/io.hpp"
#include "spdc/optics.hpp"
#include "spdc/pumpmodel.hpp"
#include "spdc/statekit.hpp"
#include "spdc/tomography.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spdc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitNotConverged = 4;
constexpr double kDeg = std::numbers::pi / 180.0;

struct NotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Session {
  RunConfig cfg;
  fs::path out;
  io::Provenance prov;

  fs::path file(const std::string& name) const { return out / name; }
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write " + path.string());
  body(os);
}

Session open_session(const std::string& command, const std::string& preset, std::string config_file,
                     std::vector<std::pair<std::string, std::string>> overrides, const std::string& out_dir) {
  if (config_file.empty()) {
    if (const char* env = std::getenv("SPDC_SIM_CONFIG")) config_file = env;
  }
  if (!out_dir.empty()) overrides.emplace_back("output.directory", json(out_dir).dump());
  Session s;
  s.cfg = load_run_config(preset, config_file, overrides);
  s.out = s.cfg.output.directory;
  s.prov = {command, s.cfg.hash()};
  fs::create_directories(s.out);
  write_json(s.file("effective_config.json"), s.cfg.effective);
  return s;
}

CoherenceParameterd predict_mu(const RunConfig& c, const IntegrationRegion& region) {
  if (c.n_lambda > 1) return mu_spectral(region, c.pump, c.crystal, c.n_lambda);
  return mu_angular(region, c.pump, c.crystal);
}

DensityMatrixd predicted_state(const RunConfig& c) {
  return state_from_mu(predict_mu(c, c.region), c.pump.polarization_sign);
}

json state_metrics(const DensityMatrixd& rho) {
  return {{"concurrence", concurrence(rho)}, {"purity", purity(rho)}};
}

// ---------------------------------------------------------------------------

int cmd_phase_map(const Session& s, int grid_n, double extent, double lambda_nm,
                  const std::vector<double>& diff) {
  if (grid_n < 2) throw UsageError("--grid-n must be at least 2");
  if (!(extent > 0.0)) throw UsageError("--extent must be positive");
  const auto grid = GridSpec::square(extent, grid_n);
  PhaseMap map;
  std::string stem;
  if (!diff.empty()) {
    map = phase_difference_map(grid, diff[0], diff[1], s.cfg.crystal);
    stem = "phase_diff";
  } else {
    map = phase_map(grid, lambda_nm > 0.0 ? lambda_nm : s.cfg.pump.center_nm, s.cfg.crystal);
    stem = "phase_map";
  }
  double max_abs = 0.0;
  double max_abs_disc = 0.0;
  for (Eigen::Index r = 0; r < map.phi.rows(); ++r) {
    for (Eigen::Index c = 0; c < map.phi.cols(); ++c) {
      const double v = std::abs(map.phi(r, c));
      max_abs = std::max(max_abs, v);
      if (std::hypot(map.qx[c], map.qy[r]) <= extent) max_abs_disc = std::max(max_abs_disc, v);
    }
  }
  if (s.cfg.output.csv) write_text(s.file(stem + ".csv"), [&](std::ostream& os) { io::write_phase_map_csv(os, map, s.prov); });
  json meta = {{"provenance", io::provenance_json(s.prov)}};
  if (!diff.empty()) meta["diff_nm"] = {diff[0], diff[1]};
  if (s.cfg.output.json) write_json(s.file(stem + ".json"), io::phase_map_json(map, meta));
  std::cout << stem << ": " << grid_n << "x" << grid_n << " grid, |q| <= " << extent
            << " mrad, max|phi| = " << io::format_sig(max_abs, 6)
            << " rad (inside disc " << io::format_sig(max_abs_disc, 6) << ")\n";
  return kExitOk;
}

int cmd_predict(const Session& s) {
  const auto mu = predict_mu(s.cfg, s.cfg.region);
  const auto rho = state_from_mu(mu, s.cfg.pump.polarization_sign);
  json metrics = state_metrics(rho);
  metrics["mu"] = io::mu_json(mu);
  metrics["provenance"] = io::provenance_json(s.prov);
  if (s.cfg.region.center_x_mrad != 0.0 || s.cfg.region.center_y_mrad != 0.0) {
    IntegrationRegion centred = s.cfg.region;
    centred.center_x_mrad = centred.center_y_mrad = 0.0;
    const auto rho_c = state_from_mu(predict_mu(s.cfg, centred), s.cfg.pump.polarization_sign);
    metrics["fidelity_to_centered"] = fidelity(rho, rho_c);
    metrics["fidelity_to_centered_root"] = fidelity(rho, rho_c, FidelityConvention::kRoot);
  }
  write_json(s.file("mu.json"), io::mu_json(mu));
  write_json(s.file("rho.json"), io::density_matrix_json(rho));
  write_json(s.file("metrics.json"), metrics);
  std::cout << "mu = " << io::format_sig(mu.value().real(), 6) << " + " << io::format_sig(mu.value().imag(), 6)
            << "i  concurrence = " << io::format_sig(metrics["concurrence"].get<double>(), 6)
            << "  purity = " << io::format_sig(metrics["purity"].get<double>(), 6) << '\n';
  return kExitOk;
}

int report_tomography(const Session& s, const std::vector<CountRecord>& records, const TomographyResult& fit,
                      const std::string& prefix) {
  const auto predicted = predicted_state(s.cfg);
  json metrics = state_metrics(fit.rho);
  metrics["nll"] = fit.nll;
  metrics["intensity"] = fit.intensity;
  metrics["iterations"] = fit.iterations;
  metrics["converged"] = fit.converged;
  metrics["winning_restart"] = fit.winning_restart;
  metrics["fidelity_to_predicted"] = fidelity(fit.rho, predicted);
  metrics["fidelity_to_predicted_root"] = fidelity(fit.rho, predicted, FidelityConvention::kRoot);
  metrics["predicted"] = state_metrics(predicted);
  metrics["records"] = records.size();
  metrics["provenance"] = io::provenance_json(s.prov);
  write_json(s.file(prefix + "_rho.json"), io::density_matrix_json(fit.rho));
  write_json(s.file(prefix + "_metrics.json"), metrics);
  std::cout << "reconstructed concurrence = " << io::format_sig(metrics["concurrence"].get<double>(), 6)
            << "  purity = " << io::format_sig(metrics["purity"].get<double>(), 6)
            << "  fidelity to predicted = " << io::format_sig(metrics["fidelity_to_predicted"].get<double>(), 6)
            << '\n';
  if (!fit.converged) {
    throw NotConverged("maximum-likelihood fit did not converge (cost " + io::format_sig(fit.nll, 9) + " after " +
                       std::to_string(fit.iterations) + " evaluations)");
  }
  return kExitOk;
}

MlseOptions mlse_options(const RunConfig& c) {
  MlseOptions o;
  o.random_restarts = c.tomo.restarts;
  o.seed = c.tomo.seed;
  return o;
}

int cmd_tomo_sim(const Session& s) {
  CountSimulation sim;
  sim.rate_max = s.cfg.tomo.counts_per_setting / s.cfg.tomo.acquisition_s;
  sim.acquisition_s = s.cfg.tomo.acquisition_s;
  sim.singles_signal = s.cfg.tomo.singles_signal;
  sim.singles_idler = s.cfg.tomo.singles_idler;
  sim.tau_c_s = s.cfg.tomo.tau_c_ns * 1e-9;
  sim.seed = s.cfg.tomo.seed;
  sim.noiseless = s.cfg.tomo.noiseless;
  auto records = subtract_accidentals(simulate_counts(predicted_state(s.cfg), sim));
  if (s.cfg.output.csv) write_text(s.file("counts.csv"), [&](std::ostream& os) { io::write_counts_csv(os, records, s.prov); });
  return report_tomography(s, records, mlse_reconstruct(records, mlse_options(s.cfg)), "tomo");
}

int cmd_tomo_fit(const Session& s, const std::string& counts_path) {
  std::ifstream in(counts_path);
  if (!in) throw UsageError("cannot open counts file '" + counts_path + "'");
  const auto records = io::read_counts_csv(in);
  return report_tomography(s, records, mlse_reconstruct(records, mlse_options(s.cfg)), "fit");
}

int cmd_fringes(const Session& s) {
  const auto mu = predict_mu(s.cfg, s.cfg.region);
  const auto rho = state_from_mu(mu, s.cfg.pump.polarization_sign);
  const std::vector<PolarizationLabel> signals = {PolarizationLabel::H, PolarizationLabel::V, PolarizationLabel::D,
                                                  PolarizationLabel::A};
  json summary = {{"provenance", io::provenance_json(s.prov)}, {"abs_re_mu", std::abs(mu.value().real())}};
  for (std::size_t k = 0; k < signals.size(); ++k) {
    FringeSimulation sim;
    sim.rate_max = s.cfg.fringe.rate_max;
    sim.acquisition_s = s.cfg.fringe.acquisition_s;
    sim.seed = s.cfg.fringe.seed + k;
    sim.noiseless = s.cfg.fringe.noiseless || !s.cfg.fringe.simulate;
    const auto scan = simulate_fringe(rho, signals[k], s.cfg.fringe.thetas_deg, sim);
    const auto fit = fit_visibility(scan);
    const std::string name = to_string(signals[k]);
    if (s.cfg.output.csv) {
      write_text(s.file("fringe_" + name + ".csv"), [&](std::ostream& os) { io::write_fringe_csv(os, scan, &fit, s.prov); });
    }
    write_json(s.file("visibility_" + name + ".json"), io::visibility_json(fit));
    summary["V_" + name] = fit.visibility;
    summary["V_" + name + "_stderr"] = fit.visibility_stderr;
  }
  summary["V_HV"] = summary["V_H"];
  summary["V_AD"] = summary["V_D"];
  write_json(s.file("fringes.json"), summary);
  std::cout << "V_HV = " << io::format_sig(summary["V_HV"].get<double>(), 6)
            << "  V_AD = " << io::format_sig(summary["V_AD"].get<double>(), 6)
            << "  |Re mu| = " << io::format_sig(summary["abs_re_mu"].get<double>(), 6) << '\n';
  return kExitOk;
}

int cmd_sweep(const Session& s, std::vector<double> radii, const std::vector<double>& log_sweep) {
  if (!log_sweep.empty()) {
    const double lo = log_sweep[0];
    const double hi = log_sweep[1];
    const double n = log_sweep[2];
    if (!(lo > 0.0) || !(hi > lo) || n < 2 || n != std::floor(n)) {
      throw UsageError("--log-sweep needs 0 < min < max and an integer count >= 2");
    }
    radii.clear();
    const int count = static_cast<int>(n);
    for (int k = 0; k < count; ++k) radii.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1)));
  }
  if (radii.empty()) throw UsageError("sweep needs --radii or --log-sweep");
  std::vector<SweepRow> rows;
  try {
    rows = bandwidth_sweep(radii, s.cfg.pump, s.cfg.crystal, s.cfg.region.grid_n);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  write_text(s.file("sweep.csv"), [&](std::ostream& os) { io::write_sweep_csv(os, rows, s.prov); });
  for (const auto& r : rows) {
    std::cout << io::format_sig(r.radius_mrad, 6) << " mrad: concurrence " << io::format_sig(r.concurrence, 6)
              << "  purity " << io::format_sig(r.purity, 6) << '\n';
  }
  return kExitOk;
}

int cmd_calibrate(const Session& s, double target, double lo_deg, double hi_deg) {
  if (!(target > 0.0 && target < 1.0)) throw UsageError("--target must lie in (0, 1)");
  if (!(lo_deg > 0.0 && hi_deg > lo_deg && hi_deg < 90.0)) throw UsageError("invalid cut-angle bracket");
  const double cut = calibrate_cut_angle(target, s.cfg.region, s.cfg.pump, s.cfg.crystal, lo_deg * kDeg, hi_deg * kDeg);
  CrystalConfig crystal = s.cfg.crystal;
  crystal.axis_tilt = axis_tilt_from_cut(cut);
  const auto mu = mu_angular(s.cfg.region, s.cfg.pump, crystal);
  const auto rho = state_from_mu(mu, s.cfg.pump.polarization_sign);
  json result = state_metrics(rho);
  result["cut_angle_deg"] = cut / kDeg;
  result["optic_axis_tilt_deg"] = crystal.axis_tilt / kDeg;
  result["target_abs_mu"] = target;
  result["mu"] = io::mu_json(mu);
  result["provenance"] = io::provenance_json(s.prov);
  write_json(s.file("calibration.json"), result);
  std::cout << "cut angle = " << io::format_sig(cut / kDeg, 8) << " deg  |mu| = " << io::format_sig(mu.magnitude(), 8)
            << '\n';
  return kExitOk;
}

// Pulls "--section.key value" and "--section.key=value" out of argv.
std::vector<std::pair<std::string, std::string>> extract_overrides(std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<std::string> kept;
  for (std::size_t k = 0; k < args.size(); ++k) {
    const std::string& a = args[k];
    if (a.rfind("--", 0) != 0) {
      kept.push_back(a);
      continue;
    }
    const auto eq = a.find('=');
    const std::string name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    if (name.find('.') == std::string::npos) {
      kept.push_back(a);
      continue;
    }
    if (eq != std::string::npos) {
      out.emplace_back(name, a.substr(eq + 1));
    } else {
      if (k + 1 >= args.size()) throw UsageError("override --" + name + " needs a value");
      out.emplace_back(name, args[++k]);
    }
  }
  args = std::move(kept);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::pair<std::string, std::string>> overrides;
  try {
    overrides = extract_overrides(args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App app{"Pump-incoherence entanglement simulator", "spdc-sim"};
  app.set_version_flag("--version", SPDC_VERSION);
  app.require_subcommand(1);
  app.footer("Any config field may be overridden as --section.key VALUE (e.g. --pump.angular_radius_mrad 5.6).\n"
             "SPDC_SIM_CONFIG names a default config file.");

  std::string preset;
  std::string config_file;
  std::string out_dir;
  app.add_option("--preset", preset, "Named parameter set")->check(CLI::IsMember(preset_names()));
  app.add_option("-c,--config", config_file, "JSON config file");
  app.add_option("-o,--out", out_dir, "Output directory (overrides output.directory)");

  auto* phase = app.add_subcommand("phase-map", "Relative phase map phi(q_px, q_py)");
  int grid_n = 121;
  double extent = 6.0;
  double lambda_nm = 0.0;
  std::vector<double> diff;
  phase->add_option("--grid-n", grid_n, "Samples per axis")->capture_default_str();
  phase->add_option("--extent", extent, "Half-width of the grid, mrad")->capture_default_str();
  phase->add_option("--lambda", lambda_nm, "Pump wavelength, nm (default: pump.lambda_nm)");
  phase->add_option("--diff", diff, "Map phi(L2) - phi(L1) instead")->expected(2);

  auto* predict = app.add_subcommand("predict", "Coherence parameter, predicted state and metrics");
  auto* tomo_sim = app.add_subcommand("tomo-sim", "Simulate tomography counts and reconstruct");
  bool tomo_noiseless = false;
  tomo_sim->add_flag("--noiseless", tomo_noiseless, "Use expected counts");

  auto* tomo_fit = app.add_subcommand("tomo-fit", "Reconstruct a state from a counts CSV");
  std::string counts_path;
  tomo_fit->add_option("--counts", counts_path, "Counts CSV")->required();

  auto* fringes = app.add_subcommand("fringes", "Polarization-correlation fringes and visibilities");
  bool fringe_noiseless = false;
  fringes->add_flag("--noiseless", fringe_noiseless, "Use expected counts");

  auto* sweep = app.add_subcommand("sweep", "Concurrence and purity against angular radius");
  std::vector<double> radii;
  std::vector<double> log_sweep;
  sweep->add_option("--radii", radii, "Radii in mrad")->delimiter(',');
  sweep->add_option("--log-sweep", log_sweep, "MIN MAX COUNT log-spaced radii")->expected(3);

  auto* calibrate = app.add_subcommand("calibrate", "Fit the cut angle to a target |mu|");
  double target = 0.552;
  double lo_deg = 28.0;
  double hi_deg = 30.0;
  calibrate->add_option("--target", target, "Target |mu| (= concurrence)")->capture_default_str();
  calibrate->add_option("--lo", lo_deg, "Bracket low end, degrees")->capture_default_str();
  calibrate->add_option("--hi", hi_deg, "Bracket high end, degrees")->capture_default_str();

  app.fallthrough();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    if (tomo_noiseless) overrides.emplace_back("tomo.noiseless", "true");
    if (fringe_noiseless) overrides.emplace_back("fringe.noiseless", "true");
    const Session s = open_session(command, preset, config_file, overrides, out_dir);

    if (phase->parsed()) return cmd_phase_map(s, grid_n, extent, lambda_nm, diff);
    if (predict->parsed()) return cmd_predict(s);
    if (tomo_sim->parsed()) return cmd_tomo_sim(s);
    if (tomo_fit->parsed()) return cmd_tomo_fit(s, counts_path);
    if (fringes->parsed()) return cmd_fringes(s);
    if (sweep->parsed()) return cmd_sweep(s, radii, log_sweep);
    if (calibrate->parsed()) return cmd_calibrate(s, target, lo_deg, hi_deg);
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NotConverged& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }
}
