#include "spdc/fringes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "spdc/errors.hpp"

namespace spdc {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void check_angles(const std::vector<double>& thetas) {
  for (std::size_t k = 1; k < thetas.size(); ++k) {
    if (!(thetas[k] > thetas[k - 1])) throw DomainError("fringe angles must be strictly increasing");
  }
}

}  // namespace

double VisibilityFit::model(double theta_deg) const {
  const double t = 2.0 * theta_deg * kDeg;
  return mean_level + b_sin * std::sin(t) + b_cos * std::cos(t);
}

FringeScan predict_fringe(const DensityMatrixd& rho, PolarizationLabel signal,
                          const std::vector<double>& thetas_deg) {
  check_angles(thetas_deg);
  const auto ps = PolarizationProjectord::from_label(signal);
  FringeScan scan;
  scan.signal = signal;
  scan.thetas_deg = thetas_deg;
  for (double th : thetas_deg) {
    scan.probabilities.push_back(born_probability(rho, ps, PolarizationProjectord::linear(th * kDeg)));
  }
  return scan;
}

FringeScan simulate_fringe(const DensityMatrixd& rho, PolarizationLabel signal,
                           const std::vector<double>& thetas_deg, const FringeSimulation& sim) {
  if (!(sim.rate_max > 0.0) || !(sim.acquisition_s > 0.0)) {
    throw DomainError("fringe simulation needs positive rate and acquisition time");
  }
  FringeScan scan = predict_fringe(rho, signal, thetas_deg);
  scan.acquisition_s = sim.acquisition_s;
  std::mt19937_64 rng(sim.seed);
  std::vector<double> counts;
  for (double p : scan.probabilities) {
    const double mean = 2.0 * sim.rate_max * sim.acquisition_s * p;
    if (sim.noiseless) {
      counts.push_back(mean);
    } else if (mean > 0.0) {
      std::poisson_distribution<long long> draw(mean);
      counts.push_back(static_cast<double>(draw(rng)));
    } else {
      counts.push_back(0.0);
    }
  }
  scan.counts = std::move(counts);
  return scan;
}

VisibilityFit fit_visibility(const FringeScan& scan) {
  if (!scan.counts) throw DomainError("visibility fit needs counts");
  const auto& y = *scan.counts;
  const auto& th = scan.thetas_deg;
  if (y.size() != th.size()) throw DomainError("counts and angles differ in length");
  check_angles(th);
  const std::set<double> distinct(th.begin(), th.end());
  if (distinct.size() < 4) throw DomainError("ill-posed fit: need at least 4 distinct angles");
  if (th.back() - th.front() < 180.0) throw DomainError("ill-posed fit: angles span less than 180 degrees");

  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd w(n);
  Eigen::VectorXd yy(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = 2.0 * th[k] * kDeg;
    x(k, 0) = 1.0;
    x(k, 1) = std::sin(t);
    x(k, 2) = std::cos(t);
    w[k] = 1.0 / std::max(y[k], 1.0);
    yy[k] = y[k];
  }
  const Eigen::Matrix3d normal = x.transpose() * w.asDiagonal() * x;
  const Eigen::Vector3d rhs = x.transpose() * w.asDiagonal() * yy;
  Eigen::LDLT<Eigen::Matrix3d> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericError("fringe normal equations are singular");
  const Eigen::Vector3d beta = ldlt.solve(rhs);
  const Eigen::Matrix3d cov = ldlt.solve(Eigen::Matrix3d::Identity());

  VisibilityFit fit;
  fit.mean_level = beta[0];
  fit.b_sin = beta[1];
  fit.b_cos = beta[2];
  fit.modulation = std::hypot(beta[1], beta[2]);
  fit.delta_rad = std::atan2(beta[2], beta[1]);
  fit.visibility = fit.modulation / fit.mean_level;

  // First-order propagation of the parameter covariance to V.
  Eigen::Vector3d grad;
  grad[0] = -fit.visibility / fit.mean_level;
  if (fit.modulation > 0.0) {
    grad[1] = beta[1] / (fit.mean_level * fit.modulation);
    grad[2] = beta[2] / (fit.mean_level * fit.modulation);
  } else {
    grad[1] = grad[2] = 1.0 / fit.mean_level;
  }
  fit.visibility_stderr = std::sqrt(std::max(0.0, grad.dot(cov * grad)));

  const Eigen::VectorXd resid = yy - x * beta;
  fit.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  return fit;
}

std::vector<double> angle_range(double lo_deg, double hi_deg, double step_deg) {
  if (!(step_deg > 0.0) || !(hi_deg >= lo_deg)) throw DomainError("invalid angle range");
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi_deg - lo_deg) / step_deg + 1e-9));
  for (int k = 0; k <= n; ++k) out.push_back(lo_deg + step_deg * k);
  return out;
}

}  // namespace spdc
