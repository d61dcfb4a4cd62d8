#pragma once

// Coherence parameter mu: the average of exp(i phi) over the pump modes that
// take part in down-conversion, plus the experimental-geometry estimators
// used to size that region.

#include <complex>
#include <functional>
#include <vector>

#include "spdc/optics.hpp"
#include "spdc/statekit.hpp"

namespace spdc {

/// Disc in transverse pump-angle space (mrad).
struct IntegrationRegion {
  double center_x_mrad = 0.0;
  double center_y_mrad = 0.0;
  double radius_mrad = 5.6;
  int grid_n = 201;

  void validate() const;
};

struct PumpSpec {
  double center_nm = 405.0;
  double fwhm_nm = 0.0;
  int polarization_sign = +1;

  void validate() const;
};

enum class DiscQuadrature {
  /// Cell-centre nodes weighted by the exact area of their cell inside the disc.
  kAreaWeighted,
  /// Cell-centre nodes inside the disc, equal weights.
  kMaskedMidpoint,
};

/// Optional radial intensity profile |E0|^2(r), r in mrad from the region
/// centre. Empty means uniform.
using RadialProfile = std::function<double(double)>;

struct QuadratureOptions {
  DiscQuadrature rule = DiscQuadrature::kAreaWeighted;
  RadialProfile profile;
};

/// Scalar phase field phi(q_px, q_py, lambda) to be averaged.
using PhaseField = std::function<double(double, double, double)>;

/// Phase field of the crystal stack described by `config`.
PhaseField crystal_phase_field(const CrystalConfig& config);

/// Average of exp(i phi) over the disc at the pump centre wavelength.
CoherenceParameterd mu_angular(const IntegrationRegion& region, const PumpSpec& pump,
                               const CrystalConfig& config, const QuadratureOptions& options = {});

/// Same, for an arbitrary phase field (used by tests and sensitivity studies).
CoherenceParameterd mu_angular(const IntegrationRegion& region, double lambda_nm,
                               const PhaseField& field, const QuadratureOptions& options = {});

/// Additionally averages uniformly over `n_lambda` wavelengths spanning
/// centre +- FWHM/2. n_lambda == 1 reproduces mu_angular exactly.
CoherenceParameterd mu_spectral(const IntegrationRegion& region, const PumpSpec& pump,
                                const CrystalConfig& config, int n_lambda,
                                const QuadratureOptions& options = {});

/// Wavelengths used by mu_spectral.
std::vector<double> spectral_nodes(const PumpSpec& pump, int n_lambda);

struct SweepRow {
  double radius_mrad;
  double concurrence;
  double purity;
};

/// Concurrence and purity of the centred-disc prediction for each radius.
std::vector<SweepRow> bandwidth_sweep(const std::vector<double>& radii_mrad, const PumpSpec& pump,
                                      const CrystalConfig& config, int grid_n = 201);

/// Angular bandwidth of the pump seen through the collection irises:
/// (r_s - r_p)/l_s + (r_i - r_p)/l_i, returned in mrad. Lengths in mm.
double angular_bandwidth_from_irises(double r_s, double r_p, double l_s, double r_i, double l_i);

/// Far-field divergence half-angle lambda / (pi w0) of a Gaussian waist, in mrad.
double gaussian_divergence_half_angle(double waist_mm, double lambda_nm);

/// Finds the cut angle in [lo, hi] (radians) whose centred-disc |mu| equals
/// `target_abs_mu`, by bisection. |mu| decreases with cut angle over the
/// physically relevant bracket; throws NumericError without a sign change.
double calibrate_cut_angle(double target_abs_mu, const IntegrationRegion& region, const PumpSpec& pump,
                           CrystalConfig config, double lo, double hi, double tol = 1e-6);

}  // namespace spdc
