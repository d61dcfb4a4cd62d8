#pragma once

// Plain-text interchange formats: CSV tables (with '#' provenance comments)
// and JSON documents.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "spdc/fringes.hpp"
#include "spdc/optics.hpp"
#include "spdc/pumpmodel.hpp"
#include "spdc/statekit.hpp"
#include "spdc/tomography.hpp"

namespace spdc::io {

using nlohmann::json;

struct Provenance {
  std::string command;
  std::uint64_t config_hash = 0;
};

/// "%.<digits>g" formatting.
std::string format_sig(double v, int digits);
/// v rounded to `digits` significant digits (so JSON dumps stay short).
double round_sig(double v, int digits);
std::string hex_hash(std::uint64_t h);

void write_provenance(std::ostream& os, const Provenance& p);
json provenance_json(const Provenance& p);

/// q_px_mrad,q_py_mrad,phi_rad; rows ascending in q_py then q_px, 9 significant digits.
void write_phase_map_csv(std::ostream& os, const PhaseMap& map, const Provenance& p);
json phase_map_json(const PhaseMap& map, const json& config_metadata);

/// {"basis":["HH","HV","VH","VV"],"re":[[...]],"im":[[...]]}, 12 significant digits.
json density_matrix_json(const DensityMatrixd& rho);
DensityMatrixd density_matrix_from_json(const json& j);

/// {"re","im","abs","arg_rad"}
json mu_json(const CoherenceParameterd& mu);

/// radius_mrad,concurrence,purity with 6 significant digits.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const Provenance& p);

/// setting_id,signal,idler,T_s,raw,singles_s,singles_i,tau_c_ns,accidentals,corrected
void write_counts_csv(std::ostream& os, const std::vector<CountRecord>& records, const Provenance& p);
std::vector<CountRecord> read_counts_csv(std::istream& is);

/// theta_deg,probability,counts,fit_counts
void write_fringe_csv(std::ostream& os, const FringeScan& scan, const VisibilityFit* fit, const Provenance& p);
/// {V, V_stderr, delta_rad, a, b}
json visibility_json(const VisibilityFit& fit);

}  // namespace spdc::io
