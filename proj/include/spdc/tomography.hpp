#pragma once

// Virtual two-qubit polarization tomography: sixteen product projective
// settings, Poisson coincidence counts with accidentals, and a
// maximum-likelihood reconstruction over physical density matrices.

#include <cstdint>
#include <vector>

#include "spdc/statekit.hpp"

namespace spdc {

struct MeasurementSetting {
  int id = 0;
  PolarizationLabel signal = PolarizationLabel::H;
  PolarizationLabel idler = PolarizationLabel::H;

  /// P_signal (x) P_idler.
  Matrix4c<double> projector() const;
};

/// {H, V, D, R} x {H, V, D, R}; id = 4 * signal_index + idler_index.
std::vector<MeasurementSetting> canonical_settings();

/// Rank of the real Gram matrix Tr(M_a M_b) of the settings' projectors.
int tomographic_rank(const std::vector<MeasurementSetting>& settings);

struct CountRecord {
  MeasurementSetting setting;
  double acquisition_s = 0.0;
  double raw = 0.0;
  double singles_signal = 0.0;  // s^-1
  double singles_idler = 0.0;   // s^-1
  double tau_c_s = 0.0;
  double accidentals = 0.0;
  double corrected = 0.0;
};

struct CountSimulation {
  /// Coincidence rate of the brightest setting of a Bell state, s^-1.
  double rate_max = 1e4;
  double acquisition_s = 10.0;
  double singles_signal = 0.0;
  double singles_idler = 0.0;
  double tau_c_s = 1e-9;
  std::uint64_t seed = 1;
  /// Emit the Poisson means instead of samples.
  bool noiseless = false;
};

/// S_s * S_i * tau_c * T.
double accidental_counts(double singles_signal, double singles_idler, double tau_c_s, double acquisition_s);

/// One record per canonical setting with raw counts drawn from
/// Poisson(2 rate_max T p + accidentals). `corrected` is left equal to raw.
std::vector<CountRecord> simulate_counts(const DensityMatrixd& rho, const CountSimulation& sim);

/// corrected = raw - accidentals; negative values are kept.
std::vector<CountRecord> subtract_accidentals(std::vector<CountRecord> records);

struct MlseOptions {
  int random_restarts = 8;
  std::uint64_t seed = 7;
  int max_evaluations = 200000;
  bool parallel = true;
};

struct TomographyResult {
  DensityMatrixd rho = DensityMatrixd::maximally_mixed();
  double nll = 0.0;
  double intensity = 0.0;
  int iterations = 0;
  bool converged = false;
  int winning_restart = -1;
  std::vector<double> fitted_probabilities;
};

/// rho(t) = T^dagger T / Tr[T^dagger T] with T lower triangular (16 reals).
Matrix4c<double> cholesky_state(const double* t);

/// Parameters t with cholesky_state(t) proportional to `rho` (rho regularized
/// slightly so the factor exists for rank-deficient states).
std::vector<double> cholesky_parameters(const Matrix4c<double>& rho);

/// Least-squares linear inversion of corrected counts, projected onto the
/// closest physical state (eigenvalue simplex projection).
DensityMatrixd linear_inversion(const std::vector<CountRecord>& records);

/// Nearest density matrix in Frobenius norm to a Hermitian matrix of unit trace.
DensityMatrixd project_to_physical(const Matrix4c<double>& m);

/// Gaussian-approximation negative log-likelihood
/// sum (N p - n)^2 / (2 N p), p floored at 1e-12.
double mlse_cost(const Matrix4c<double>& rho, double intensity, const std::vector<CountRecord>& records);

/// Maximum-likelihood reconstruction by Nelder-Mead over (t, log N) from
/// seeded random starts plus the linear-inversion estimate. The lowest cost
/// wins, ties broken by restart index.
TomographyResult mlse_reconstruct(const std::vector<CountRecord>& records, const MlseOptions& options = {});

}  // namespace spdc
