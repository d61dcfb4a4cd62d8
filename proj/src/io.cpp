#include "spdc/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "spdc/errors.hpp"

#ifndef SPDC_VERSION
#define SPDC_VERSION "dev"
#endif

namespace spdc::io {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& s, int line_no, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DomainError("counts CSV line " + std::to_string(line_no) + ": bad " + column + " '" + s + "'");
  }
}

}  // namespace

std::string format_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

double round_sig(double v, int digits) { return std::stod(format_sig(v, digits)); }

std::string hex_hash(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_provenance(std::ostream& os, const Provenance& p) {
  os << "# spdc-sim " << SPDC_VERSION << " command=" << p.command << " config_hash=" << hex_hash(p.config_hash)
     << "\n";
}

json provenance_json(const Provenance& p) {
  return {{"tool", "spdc-sim"}, {"version", SPDC_VERSION}, {"command", p.command},
          {"config_hash", hex_hash(p.config_hash)}};
}

void write_phase_map_csv(std::ostream& os, const PhaseMap& map, const Provenance& p) {
  write_provenance(os, p);
  os << "q_px_mrad,q_py_mrad,phi_rad\n";
  for (Eigen::Index r = 0; r < map.phi.rows(); ++r) {
    for (Eigen::Index c = 0; c < map.phi.cols(); ++c) {
      os << format_sig(map.qx[c], 9) << ',' << format_sig(map.qy[r], 9) << ',' << format_sig(map.phi(r, c), 9)
         << '\n';
    }
  }
}

json phase_map_json(const PhaseMap& map, const json& config_metadata) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < map.phi.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < map.phi.cols(); ++c) row.push_back(round_sig(map.phi(r, c), 9));
    rows.push_back(std::move(row));
  }
  json qx = json::array();
  json qy = json::array();
  for (Eigen::Index c = 0; c < map.qx.size(); ++c) qx.push_back(round_sig(map.qx[c], 9));
  for (Eigen::Index r = 0; r < map.qy.size(); ++r) qy.push_back(round_sig(map.qy[r], 9));
  return {{"wavelength_nm", map.wavelength_nm},
          {"q_px_mrad", qx},
          {"q_py_mrad", qy},
          {"phi_rad", rows},
          {"layout", "phi_rad[row = q_py index][column = q_px index]"},
          {"config_hash", hex_hash(map.config_hash)},
          {"config", config_metadata}};
}

json density_matrix_json(const DensityMatrixd& rho) {
  json re = json::array();
  json im = json::array();
  for (int r = 0; r < 4; ++r) {
    json rr = json::array();
    json ri = json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(round_sig(rho(r, c).real(), 12));
      ri.push_back(round_sig(rho(r, c).imag(), 12));
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return {{"basis", {"HH", "HV", "VH", "VV"}}, {"re", re}, {"im", im}};
}

DensityMatrixd density_matrix_from_json(const json& j) {
  if (!j.contains("re") || !j.contains("im")) throw DomainError("density matrix JSON needs 're' and 'im'");
  if (j.contains("basis") && j["basis"] != json({"HH", "HV", "VH", "VV"})) {
    throw DomainError("density matrix JSON must use basis [HH, HV, VH, VV]");
  }
  Matrix4c<double> m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      m(r, c) = {j.at("re").at(r).at(c).get<double>(), j.at("im").at(r).at(c).get<double>()};
    }
  }
  // Values carry 12 significant digits; renormalize within that precision.
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10 || std::abs(m.trace().real() - 1.0) > 1e-10) {
    throw DomainError("density matrix JSON is not a valid state");
  }
  return DensityMatrixd::normalized(m);
}

json mu_json(const CoherenceParameterd& mu) {
  return {{"re", mu.value().real()}, {"im", mu.value().imag()}, {"abs", mu.magnitude()}, {"arg_rad", mu.phase()}};
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const Provenance& p) {
  write_provenance(os, p);
  os << "radius_mrad,concurrence,purity\n";
  for (const auto& r : rows) {
    os << format_sig(r.radius_mrad, 6) << ',' << format_sig(r.concurrence, 6) << ',' << format_sig(r.purity, 6)
       << '\n';
  }
}

void write_counts_csv(std::ostream& os, const std::vector<CountRecord>& records, const Provenance& p) {
  write_provenance(os, p);
  os << "setting_id,signal,idler,T_s,raw,singles_s,singles_i,tau_c_ns,accidentals,corrected\n";
  for (const auto& r : records) {
    os << r.setting.id << ',' << to_string(r.setting.signal) << ',' << to_string(r.setting.idler) << ','
       << format_sig(r.acquisition_s, 12) << ',' << format_sig(r.raw, 12) << ',' << format_sig(r.singles_signal, 12)
       << ',' << format_sig(r.singles_idler, 12) << ',' << format_sig(r.tau_c_s * 1e9, 12) << ','
       << format_sig(r.accidentals, 12) << ',' << format_sig(r.corrected, 12) << '\n';
  }
}

std::vector<CountRecord> read_counts_csv(std::istream& is) {
  static const std::vector<std::string> kHeader = {"setting_id", "signal",    "idler",    "T_s",
                                                   "raw",        "singles_s", "singles_i", "tau_c_ns",
                                                   "accidentals", "corrected"};
  std::vector<CountRecord> out;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (!header_seen) {
      if (cells != kHeader) throw DomainError("counts CSV header mismatch at line " + std::to_string(line_no));
      header_seen = true;
      continue;
    }
    if (cells.size() != kHeader.size()) {
      throw DomainError("counts CSV line " + std::to_string(line_no) + ": expected 10 columns");
    }
    CountRecord r;
    r.setting.id = static_cast<int>(parse_number(cells[0], line_no, "setting_id"));
    r.setting.signal = label_from_string(cells[1]);
    r.setting.idler = label_from_string(cells[2]);
    r.acquisition_s = parse_number(cells[3], line_no, "T_s");
    r.raw = parse_number(cells[4], line_no, "raw");
    r.singles_signal = parse_number(cells[5], line_no, "singles_s");
    r.singles_idler = parse_number(cells[6], line_no, "singles_i");
    r.tau_c_s = parse_number(cells[7], line_no, "tau_c_ns") * 1e-9;
    r.accidentals = parse_number(cells[8], line_no, "accidentals");
    r.corrected = parse_number(cells[9], line_no, "corrected");
    if (r.raw < 0.0 || r.accidentals < 0.0) {
      throw DomainError("counts CSV line " + std::to_string(line_no) + ": negative raw or accidental counts");
    }
    out.push_back(r);
  }
  if (!header_seen) throw DomainError("counts CSV is empty");
  return out;
}

void write_fringe_csv(std::ostream& os, const FringeScan& scan, const VisibilityFit* fit, const Provenance& p) {
  write_provenance(os, p);
  os << "# signal=" << to_string(scan.signal) << "\n";
  os << "theta_deg,probability,counts,fit_counts\n";
  for (std::size_t k = 0; k < scan.thetas_deg.size(); ++k) {
    os << format_sig(scan.thetas_deg[k], 9) << ',' << format_sig(scan.probabilities[k], 9) << ',';
    if (scan.counts) os << format_sig((*scan.counts)[k], 9);
    os << ',';
    if (fit) os << format_sig(fit->model(scan.thetas_deg[k]), 9);
    os << '\n';
  }
}

json visibility_json(const VisibilityFit& fit) {
  return {{"V", fit.visibility},
          {"V_stderr", fit.visibility_stderr},
          {"delta_rad", fit.delta_rad},
          {"a", fit.mean_level},
          {"b", fit.modulation},
          {"b_sin", fit.b_sin},
          {"b_cos", fit.b_cos},
          {"residual_rms", fit.residual_rms}};
}

}  // namespace spdc::io
