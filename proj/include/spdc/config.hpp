#pragma once

// Run configuration for the command-line front end. A configuration is a
// JSON document layered as: built-in defaults <- named preset <- config file
// <- dot-path overrides. Unknown keys are rejected with their full path.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "spdc/fringes.hpp"
#include "spdc/optics.hpp"
#include "spdc/pumpmodel.hpp"
#include "spdc/tomography.hpp"

namespace spdc {

struct TomoSection {
  /// Mean counts of the brightest setting of a Bell state.
  double counts_per_setting = 1e5;
  double acquisition_s = 10.0;
  double singles_signal = 0.0;
  double singles_idler = 0.0;
  double tau_c_ns = 1.0;
  std::uint64_t seed = 1;
  int restarts = 8;
  bool noiseless = false;
};

struct FringeSection {
  std::vector<double> thetas_deg;
  double rate_max = 700.0;
  double acquisition_s = 10.0;
  std::uint64_t seed = 1;
  bool simulate = true;
  bool noiseless = false;
};

struct OutputSection {
  std::string directory = "out";
  bool csv = true;
  bool json = true;
};

struct RunConfig {
  CrystalConfig crystal;
  PumpSpec pump;
  IntegrationRegion region;
  int n_lambda = 1;
  TomoSection tomo;
  FringeSection fringe;
  OutputSection output;
  /// Fully merged document; re-loading it reproduces this configuration.
  /// hash() covers everything except the output section.
  nlohmann::json effective;

  std::uint64_t hash() const;
};

/// Default cut angle of the shipped presets, in degrees. Frozen from a
/// one-off calibration of the LED prediction against its reference
/// concurrence (see `spdc-sim calibrate`).
inline constexpr double kCalibratedCutAngleDeg = 28.7058;

/// Built-in document with every key.
nlohmann::json default_config_json();

std::vector<std::string> preset_names();
/// Partial document for a preset ("laser", "led", "led-misaligned").
nlohmann::json preset_json(const std::string& name);

/// Recursively overlays `overlay` on `base`. Keys absent from `base` raise
/// ConfigError, except that optic_axis_tilt_deg and cut_angle_deg replace
/// one another.
void merge_config(nlohmann::json& base, const nlohmann::json& overlay, const std::string& path = "");

/// Sets `dot.path` to `value` (parsed as JSON, falling back to a string).
void apply_override(nlohmann::json& doc, const std::string& dot_path, const std::string& value);

/// Validates and converts a merged document.
RunConfig parse_run_config(const nlohmann::json& doc);

/// defaults <- preset (optional) <- file (optional) <- overrides.
RunConfig load_run_config(const std::string& preset, const std::string& file,
                          const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace spdc
