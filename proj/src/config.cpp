#include "spdc/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "spdc/errors.hpp"

namespace spdc {
namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr const char* kTiltKey = "optic_axis_tilt_deg";
constexpr const char* kCutKey = "cut_angle_deg";

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& field(const json& section, const std::string& path, const std::string& key) {
  if (!section.contains(key)) throw ConfigError(join(path, key), "missing");
  return section.at(key);
}

double number(const json& section, const std::string& path, const std::string& key) {
  const json& v = field(section, path, key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(join(path, key), "must be finite");
  return d;
}

double positive(const json& section, const std::string& path, const std::string& key) {
  const double d = number(section, path, key);
  if (!(d > 0.0)) throw ConfigError(join(path, key), "must be positive");
  return d;
}

double non_negative(const json& section, const std::string& path, const std::string& key) {
  const double d = number(section, path, key);
  if (!(d >= 0.0)) throw ConfigError(join(path, key), "must be non-negative");
  return d;
}

std::int64_t integer(const json& section, const std::string& path, const std::string& key) {
  const json& v = field(section, path, key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v.get<std::int64_t>();
}

bool boolean(const json& section, const std::string& path, const std::string& key) {
  const json& v = field(section, path, key);
  if (!v.is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return v.get<bool>();
}

std::vector<double> numbers(const json& section, const std::string& path, const std::string& key,
                            std::size_t expected_size = 0) {
  const json& v = field(section, path, key);
  if (!v.is_array()) throw ConfigError(join(path, key), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(join(path, key), "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  if (expected_size != 0 && out.size() != expected_size) {
    throw ConfigError(join(path, key), "expected " + std::to_string(expected_size) + " values");
  }
  return out;
}

SellmeierTerms terms(const json& s, const std::string& path, const std::string& key) {
  const auto v = numbers(s, path, key, 4);
  return {v[0], v[1], v[2], v[3]};
}

const json& section(const json& doc, const std::string& name) {
  const json& s = field(doc, "", name);
  if (!s.is_object()) throw ConfigError(name, "expected an object");
  return s;
}

json thetas_default() {
  json a = json::array();
  for (int t = 0; t <= 360; t += 10) a.push_back(t);
  return a;
}

}  // namespace

std::uint64_t RunConfig::hash() const {
  // The output section only says where results go, not what they are.
  json physics = effective;
  if (physics.is_object()) physics.erase("output");
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : physics.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

json default_config_json() {
  const auto bbo = SellmeierModel::bbo();
  return {
      {"crystal",
       {{"L_mm", 0.5},
        {kCutKey, kCalibratedCutAngleDeg},
        {"sellmeier",
         {{"ordinary", {bbo.ordinary.a, bbo.ordinary.b, bbo.ordinary.c, bbo.ordinary.d}},
          {"extraordinary", {bbo.extraordinary.a, bbo.extraordinary.b, bbo.extraordinary.c, bbo.extraordinary.d}},
          {"valid_range_um", {bbo.min_um, bbo.max_um}}}}}},
      {"pump",
       {{"lambda_nm", 405.0},
        {"fwhm_nm", 20.0},
        {"polarization_sign", 1},
        {"angular_radius_mrad", 5.6},
        {"center_mrad", {0.0, 0.0}}}},
      {"integration", {{"grid_n", 201}, {"n_lambda", 1}}},
      {"tomo",
       {{"counts_per_setting", 1e5},
        {"T_s", 10.0},
        {"singles_s", 0.0},
        {"singles_i", 0.0},
        {"tau_c_ns", 1.0},
        {"seed", 1},
        {"restarts", 8},
        {"noiseless", false}}},
      {"fringe",
       {{"thetas_deg", thetas_default()},
        {"rate_max", 700.0},
        {"T_s", 10.0},
        {"seed", 1},
        {"simulate", true},
        {"noiseless", false}}},
      {"output", {{"directory", "out"}, {"formats", {"csv", "json"}}}},
  };
}

std::vector<std::string> preset_names() { return {"laser", "led", "led-misaligned"}; }

json preset_json(const std::string& name) {
  // Laser: 2 nm bandwidth, Gaussian-waist divergence 0.13 mrad, -45 degree
  // pump, ~700 coincidences/s with 10 s per point.
  if (name == "laser") {
    return {{"pump", {{"fwhm_nm", 2.0}, {"polarization_sign", -1}, {"angular_radius_mrad", 0.13}}},
            {"tomo", {{"counts_per_setting", 7000.0}, {"T_s", 10.0}, {"singles_s", 20000.0}, {"singles_i", 20000.0}}},
            {"fringe", {{"rate_max", 700.0}, {"T_s", 10.0}}}};
  }
  // LED: 20 nm bandwidth, 5.6 mrad iris-limited angular bandwidth, +45 degree
  // pump, ~0.04 coincidences/s with an hour per point.
  json led = {{"pump", {{"fwhm_nm", 20.0}, {"polarization_sign", 1}, {"angular_radius_mrad", 5.6}}},
              {"tomo", {{"counts_per_setting", 144.0}, {"T_s", 3600.0}, {"singles_s", 300.0}, {"singles_i", 300.0}}},
              {"fringe", {{"rate_max", 0.04}, {"T_s", 3600.0}}}};
  if (name == "led") return led;
  if (name == "led-misaligned") {
    led["pump"]["center_mrad"] = {1.8, 4.6};
    return led;
  }
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

void merge_config(json& base, const json& overlay, const std::string& path) {
  if (!overlay.is_object()) throw ConfigError(path, "expected an object");
  if (overlay.contains(kTiltKey) && overlay.contains(kCutKey)) {
    throw ConfigError(path, std::string("give exactly one of ") + kTiltKey + " and " + kCutKey);
  }
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key = it.key();
    const std::string here = join(path, key);
    const bool angle_key = path == "crystal" && (key == kTiltKey || key == kCutKey);
    if (angle_key) {
      base.erase(key == kTiltKey ? kCutKey : kTiltKey);
      base[key] = it.value();
      continue;
    }
    if (!base.contains(key)) throw ConfigError(here, "unknown key");
    if (base[key].is_object()) {
      merge_config(base[key], it.value(), here);
    } else {
      base[key] = it.value();
    }
  }
}

void apply_override(json& doc, const std::string& dot_path, const std::string& value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json overlay = parsed;
  std::vector<std::string> parts;
  std::stringstream ss(dot_path);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError(dot_path, "malformed override path");
    parts.push_back(p);
  }
  if (parts.empty()) throw ConfigError(dot_path, "malformed override path");
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) overlay = json{{*it, overlay}};
  merge_config(doc, overlay);
}

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
  RunConfig cfg;
  cfg.effective = doc;

  const json& crystal = section(doc, "crystal");
  cfg.crystal.length_mm = positive(crystal, "crystal", "L_mm");
  const bool has_tilt = crystal.contains(kTiltKey);
  const bool has_cut = crystal.contains(kCutKey);
  if (has_tilt == has_cut) {
    throw ConfigError("crystal", std::string("give exactly one of ") + kTiltKey + " and " + kCutKey);
  }
  const double angle = has_tilt ? positive(crystal, "crystal", kTiltKey) : positive(crystal, "crystal", kCutKey);
  if (!(angle < 90.0)) throw ConfigError(join("crystal", has_tilt ? kTiltKey : kCutKey), "must be below 90 degrees");
  cfg.crystal.axis_tilt = has_tilt ? angle * kDeg : axis_tilt_from_cut(angle * kDeg);

  const json& sm = field(crystal, "crystal", "sellmeier");
  if (!sm.is_object()) throw ConfigError("crystal.sellmeier", "expected an object");
  cfg.crystal.sellmeier.ordinary = terms(sm, "crystal.sellmeier", "ordinary");
  cfg.crystal.sellmeier.extraordinary = terms(sm, "crystal.sellmeier", "extraordinary");
  const auto range = numbers(sm, "crystal.sellmeier", "valid_range_um", 2);
  if (!(range[0] > 0.0 && range[1] > range[0])) {
    throw ConfigError("crystal.sellmeier.valid_range_um", "must be an ascending positive pair");
  }
  cfg.crystal.sellmeier.min_um = range[0];
  cfg.crystal.sellmeier.max_um = range[1];

  const json& pump = section(doc, "pump");
  cfg.pump.center_nm = positive(pump, "pump", "lambda_nm");
  cfg.pump.fwhm_nm = non_negative(pump, "pump", "fwhm_nm");
  const auto sign = integer(pump, "pump", "polarization_sign");
  if (sign != 1 && sign != -1) throw ConfigError("pump.polarization_sign", "must be +1 or -1");
  cfg.pump.polarization_sign = static_cast<int>(sign);
  cfg.crystal.pump_sign = cfg.pump.polarization_sign;
  cfg.region.radius_mrad = positive(pump, "pump", "angular_radius_mrad");
  const auto center = numbers(pump, "pump", "center_mrad", 2);
  cfg.region.center_x_mrad = center[0];
  cfg.region.center_y_mrad = center[1];

  const json& integ = section(doc, "integration");
  const auto grid_n = integer(integ, "integration", "grid_n");
  if (grid_n < 3 || grid_n % 2 == 0 || grid_n > 20001) {
    throw ConfigError("integration.grid_n", "must be odd and in [3, 20001]");
  }
  cfg.region.grid_n = static_cast<int>(grid_n);
  const auto n_lambda = integer(integ, "integration", "n_lambda");
  if (n_lambda < 1 || n_lambda > 1001) throw ConfigError("integration.n_lambda", "must be in [1, 1001]");
  cfg.n_lambda = static_cast<int>(n_lambda);

  const json& tomo = section(doc, "tomo");
  cfg.tomo.counts_per_setting = positive(tomo, "tomo", "counts_per_setting");
  cfg.tomo.acquisition_s = positive(tomo, "tomo", "T_s");
  cfg.tomo.singles_signal = non_negative(tomo, "tomo", "singles_s");
  cfg.tomo.singles_idler = non_negative(tomo, "tomo", "singles_i");
  cfg.tomo.tau_c_ns = positive(tomo, "tomo", "tau_c_ns");
  const auto tseed = integer(tomo, "tomo", "seed");
  if (tseed < 0) throw ConfigError("tomo.seed", "must be non-negative");
  cfg.tomo.seed = static_cast<std::uint64_t>(tseed);
  const auto restarts = integer(tomo, "tomo", "restarts");
  if (restarts < 0 || restarts > 256) throw ConfigError("tomo.restarts", "must be in [0, 256]");
  cfg.tomo.restarts = static_cast<int>(restarts);
  cfg.tomo.noiseless = boolean(tomo, "tomo", "noiseless");

  const json& fringe = section(doc, "fringe");
  cfg.fringe.thetas_deg = numbers(fringe, "fringe", "thetas_deg");
  if (cfg.fringe.thetas_deg.size() < 4) throw ConfigError("fringe.thetas_deg", "need at least 4 angles");
  for (std::size_t k = 1; k < cfg.fringe.thetas_deg.size(); ++k) {
    if (!(cfg.fringe.thetas_deg[k] > cfg.fringe.thetas_deg[k - 1])) {
      throw ConfigError("fringe.thetas_deg", "must be strictly increasing");
    }
  }
  cfg.fringe.rate_max = positive(fringe, "fringe", "rate_max");
  cfg.fringe.acquisition_s = positive(fringe, "fringe", "T_s");
  const auto fseed = integer(fringe, "fringe", "seed");
  if (fseed < 0) throw ConfigError("fringe.seed", "must be non-negative");
  cfg.fringe.seed = static_cast<std::uint64_t>(fseed);
  cfg.fringe.simulate = boolean(fringe, "fringe", "simulate");
  cfg.fringe.noiseless = boolean(fringe, "fringe", "noiseless");

  const json& out = section(doc, "output");
  const json& dir = field(out, "output", "directory");
  if (!dir.is_string() || dir.get<std::string>().empty()) {
    throw ConfigError("output.directory", "expected a non-empty string");
  }
  cfg.output.directory = dir.get<std::string>();
  const json& formats = field(out, "output", "formats");
  if (!formats.is_array()) throw ConfigError("output.formats", "expected an array of strings");
  cfg.output.csv = cfg.output.json = false;
  for (const auto& f : formats) {
    if (f == "csv") {
      cfg.output.csv = true;
    } else if (f == "json") {
      cfg.output.json = true;
    } else {
      throw ConfigError("output.formats", "unknown format " + f.dump());
    }
  }

  try {
    cfg.crystal.validate();
    cfg.region.validate();
    cfg.pump.validate();
  } catch (const DomainError& e) {
    throw ConfigError("", e.what());
  }
  if (!cfg.crystal.sellmeier.in_range(cfg.pump.center_nm)) {
    throw ConfigError("pump.lambda_nm", "outside the dispersion model's valid range");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& preset, const std::string& file,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  json doc = default_config_json();
  if (!preset.empty()) merge_config(doc, preset_json(preset));
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("", "cannot open config file '" + file + "'");
    json user;
    try {
      user = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("", std::string("config file is not valid JSON: ") + e.what());
    }
    merge_config(doc, user);
  }
  for (const auto& [path, value] : overrides) apply_override(doc, path, value);
  return parse_run_config(doc);
}

}  // namespace spdc
