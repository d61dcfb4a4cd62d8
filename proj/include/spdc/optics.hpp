#pragma once

// Pump refraction and birefringent phase accumulation through a type-I
// double-crystal stack. Crystal 1 has its optic axis in the y-z plane,
// crystal 2 in the x-z plane; both are tilted by the same angle from x-y.
//
// Units: angles in radians, wavelengths in nm, crystal lengths in mm.
// Transverse pump angles (q_px, q_py) are in mrad at the I/O boundary only.

#include <array>
#include <cstdint>
#include <string>

#include <Eigen/Core>

namespace spdc {

/// Three-term Sellmeier law n^2 = a + b / (lambda^2 - c) - d lambda^2 with
/// lambda in micrometres.
struct SellmeierTerms {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  double index(double lambda_um) const;
};

/// Dispersion of a uniaxial crystal: ordinary index n_o and principal
/// extraordinary index (the value of n_e at 90 degrees to the optic axis).
struct SellmeierModel {
  SellmeierTerms ordinary;
  SellmeierTerms extraordinary;
  double min_um = 0.0;
  double max_um = 0.0;

  /// beta-barium borate, Eimerl et al. (1987) coefficients, 0.189-3.5 um.
  static SellmeierModel bbo();

  bool in_range(double lambda_nm) const;
  void check_range(double lambda_nm) const;
};

double n_ordinary(double lambda_nm, const SellmeierModel& model);
double n_principal_extraordinary(double lambda_nm, const SellmeierModel& model);

/// Index seen by an extraordinary wave whose wavevector makes angle `theta`
/// with the optic axis. Equals n_o at 0 and the principal value at pi/2;
/// even and pi-periodic in theta.
double n_extraordinary(double theta, double lambda_nm, const SellmeierModel& model);

/// Angle between Poynting vector and wavevector of the extraordinary wave.
/// Non-negative for a negative uniaxial crystal, zero at 0 and pi/2.
double walkoff_angle(double theta, double lambda_nm, const SellmeierModel& model);

struct CrystalConfig {
  double length_mm = 0.5;
  /// Optic-axis tilt from the x-y plane, shared by both crystals.
  double axis_tilt = 0.0;
  SellmeierModel sellmeier = SellmeierModel::bbo();
  int pump_sign = +1;

  void validate() const;
  /// Stable 64-bit FNV-1a hash of every field, used for provenance.
  std::uint64_t hash() const;
};

/// Direction of one pump plane-wave component outside the crystal.
class PumpDirection {
 public:
  /// alpha: polar angle from z; gamma: azimuth of the transverse part from x.
  static PumpDirection from_angles(double alpha, double gamma, double lambda_nm);
  /// Transverse angle components in mrad; alpha = |q|, gamma = atan2(q_py, q_px).
  static PumpDirection from_transverse_mrad(double q_px, double q_py, double lambda_nm);

  double alpha() const { return alpha_; }
  /// Normalized to [0, 2 pi).
  double gamma() const { return gamma_; }
  double cos_gamma() const { return cos_gamma_; }
  double sin_gamma() const { return sin_gamma_; }
  double wavelength_nm() const { return lambda_nm_; }

 private:
  PumpDirection(double alpha, double gamma, double c, double s, double lambda_nm)
      : alpha_(alpha), gamma_(gamma), cos_gamma_(c), sin_gamma_(s), lambda_nm_(lambda_nm) {}

  double alpha_;
  double gamma_;
  double cos_gamma_;
  double sin_gamma_;
  double lambda_nm_;
};

enum class Crystal { kFirst = 1, kSecond = 2 };

struct RefractionSolution {
  Crystal crystal = Crystal::kFirst;
  double psi_e = 0.0;     // internal wavevector angle from z
  double theta = 0.0;     // wavevector to optic axis
  double walkoff = 0.0;   // Omega
  double poynting = 0.0;  // beta = Omega - psi_e
  double n_eff = 0.0;
  int iterations = 0;
  bool used_bisection = false;
};

/// Simultaneous solution of Snell's law with the angle-dependent index and
/// the wavevector/optic-axis dot product. Fixed-point iteration, falling back
/// to bisection in theta; throws NumericError if neither converges.
RefractionSolution solve_refraction(const PumpDirection& dir, Crystal crystal,
                                    const CrystalConfig& config);

/// Residuals of the two defining equations evaluated at `sol`:
/// {|sin alpha - n_e(theta) sin psi|, |cos theta - axis dot product|}.
std::array<double, 2> refraction_residuals(const RefractionSolution& sol,
                                           const PumpDirection& dir,
                                           const CrystalConfig& config);

/// Phase accumulated from the entrance face to the crystal mid-plane.
double half_crystal_phase(const RefractionSolution& sol, double lambda_nm,
                          const CrystalConfig& config);

/// phi = Phi_1 - Phi_2, unwrapped.
double relative_phase(const PumpDirection& dir, const CrystalConfig& config);

/// Convenience overload taking transverse angles in mrad.
double relative_phase_mrad(double q_px, double q_py, double lambda_nm,
                           const CrystalConfig& config);

struct GridSpec {
  double qx_min = -6.0;
  double qx_max = 6.0;
  int nx = 121;
  double qy_min = -6.0;
  double qy_max = 6.0;
  int ny = 121;

  static GridSpec square(double half_extent_mrad, int n);
};

/// phi sampled on a rectangular grid. Rows follow q_py, columns follow q_px,
/// both ascending.
struct PhaseMap {
  double wavelength_nm = 0.0;
  Eigen::VectorXd qx;
  Eigen::VectorXd qy;
  Eigen::MatrixXd phi;
  std::uint64_t config_hash = 0;
};

PhaseMap phase_map(const GridSpec& grid, double lambda_nm, const CrystalConfig& config);

/// Pointwise phi(lambda_b) - phi(lambda_a) on a common grid.
PhaseMap phase_difference_map(const GridSpec& grid, double lambda_a_nm,
                              double lambda_b_nm, const CrystalConfig& config);

/// Phase-matching angle for degenerate type-I emission (signal = idler =
/// 2 lambda_p) at the given external half-opening angle, by bisection.
double degenerate_cut_angle(double lambda_p_nm, double half_opening_external,
                            const SellmeierModel& model);

/// Tilt from the x-y plane corresponding to a cut angle (pi/2 - cut).
inline double axis_tilt_from_cut(double cut_angle) {
  return 1.5707963267948966 - cut_angle;
}

}  // namespace spdc
