#pragma once

// Polarization-correlation fringes: the signal projector is fixed and the
// idler analyses linear polarization at angle theta from H.

#include <cstdint>
#include <optional>
#include <vector>

#include "spdc/statekit.hpp"

namespace spdc {

struct FringeScan {
  PolarizationLabel signal = PolarizationLabel::H;
  std::vector<double> thetas_deg;
  std::vector<double> probabilities;
  /// Present for simulated or measured scans.
  std::optional<std::vector<double>> counts;
  double acquisition_s = 0.0;
};

struct VisibilityFit {
  double visibility = 0.0;
  double visibility_stderr = 0.0;
  /// Model a + b sin(2 theta + delta).
  double delta_rad = 0.0;
  double mean_level = 0.0;
  double modulation = 0.0;
  double b_sin = 0.0;
  double b_cos = 0.0;
  double residual_rms = 0.0;

  double model(double theta_deg) const;
};

FringeScan predict_fringe(const DensityMatrixd& rho, PolarizationLabel signal,
                          const std::vector<double>& thetas_deg);

struct FringeSimulation {
  double rate_max = 700.0;
  double acquisition_s = 10.0;
  std::uint64_t seed = 1;
  bool noiseless = false;
};

/// Poisson counts with mean 2 rate_max T p(theta).
FringeScan simulate_fringe(const DensityMatrixd& rho, PolarizationLabel signal,
                           const std::vector<double>& thetas_deg, const FringeSimulation& sim);

/// Weighted linear least squares of counts on {1, sin 2theta, cos 2theta}
/// with weights 1 / max(counts, 1). Throws DomainError when fewer than four
/// distinct angles are given or they span less than 180 degrees.
VisibilityFit fit_visibility(const FringeScan& scan);

/// Evenly spaced angles lo, lo + step, ..., <= hi (degrees).
std::vector<double> angle_range(double lo_deg, double hi_deg, double step_deg);

}  // namespace spdc
