#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>

#include "spdc/errors.hpp"
#include "spdc/pumpmodel.hpp"

using namespace spdc;
using cd = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

CrystalConfig crystal() {
  CrystalConfig c;
  c.axis_tilt = axis_tilt_from_cut(28.7058 * kDeg);
  return c;
}

IntegrationRegion disc(double radius, double cx = 0.0, double cy = 0.0, int n = 201) {
  IntegrationRegion r;
  r.radius_mrad = radius;
  r.center_x_mrad = cx;
  r.center_y_mrad = cy;
  r.grid_n = n;
  return r;
}

PumpSpec led() {
  PumpSpec p;
  p.fwhm_nm = 20.0;
  return p;
}

// Polar Gauss-Legendre (radial) x trapezoid (azimuthal) average of
// exp(i phi), independent of the library's Cartesian quadrature.
cd polar_average(const std::function<double(double, double)>& phi, double cx, double cy, double radius) {
  static const double x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                              0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
  static const double w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                              0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  const int panels = 24;
  const int n_theta = 720;
  cd sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = radius * p / panels;
    const double b = radius * (p + 1) / panels;
    for (int k = 0; k < 8; ++k) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * x[k];
      const double wr = 0.5 * (b - a) * w[k] * r;
      cd ring = 0.0;
      for (int j = 0; j < n_theta; ++j) {
        const double t = 2 * kPi * j / n_theta;
        ring += std::exp(cd(0, phi(cx + r * std::cos(t), cy + r * std::sin(t))));
      }
      sum += wr * ring * (2 * kPi / n_theta);
    }
  }
  return sum / (kPi * radius * radius);
}

}  // namespace

TEST(MuAngular, ConstantPhase) {
  const PhaseField c = [](double, double, double) { return 0.7; };
  for (auto rule : {DiscQuadrature::kAreaWeighted, DiscQuadrature::kMaskedMidpoint}) {
    const auto mu = mu_angular(disc(2.0, 0.3, -0.4, 31), 405.0, c, {rule, {}});
    EXPECT_NEAR(std::abs(mu.value() - std::exp(cd(0, 0.7))), 0.0, 1e-13);
    EXPECT_NEAR(mu.magnitude(), 1.0, 1e-13);
  }
}

TEST(MuAngular, LinearPhaseMatchesBesselOracle) {
  // phi = k q_x over a centred disc: mu = 2 J1(kR) / (kR).
  const double k = 0.9;
  const double radius = 4.0;
  const PhaseField f = [k](double qx, double, double) { return k * qx; };
  const auto mu = mu_angular(disc(radius), 405.0, f);
  const double oracle = 2 * std::cyl_bessel_j(1.0, k * radius) / (k * radius);
  EXPECT_NEAR(mu.value().real(), oracle, 2e-5);
  EXPECT_NEAR(mu.value().imag(), 0.0, 1e-12);
}

TEST(MuAngular, QuadraticPhaseMatchesClosedForm) {
  // phi = a r^2: mu = (exp(i a R^2) - 1) / (i a R^2).
  const double a = 0.05;
  const double radius = 5.0;
  const PhaseField f = [a](double qx, double qy, double) { return a * (qx * qx + qy * qy); };
  const auto mu = mu_angular(disc(radius), 405.0, f);
  const cd z(0, a * radius * radius);
  const cd oracle = (std::exp(z) - 1.0) / z;
  EXPECT_LT(std::abs(mu.value() - oracle), 2e-5);
}

TEST(MuAngular, CrystalPhaseMatchesPolarQuadrature) {
  const auto cfg = crystal();
  const auto phi = [&](double qx, double qy) { return relative_phase_mrad(qx, qy, 405.0, cfg); };
  for (auto [cx, cy] : {std::pair{0.0, 0.0}, std::pair{1.8, 4.6}}) {
    const auto mu = mu_angular(disc(5.6, cx, cy), led(), cfg);
    const cd oracle = polar_average(phi, cx, cy, 5.6);
    EXPECT_LT(std::abs(mu.value() - oracle), 1e-4) << cx << "," << cy;
  }
}

TEST(MuAngular, LaserAndLedReferenceValues) {
  const auto cfg = crystal();
  const auto t0 = std::chrono::steady_clock::now();
  const auto laser = mu_angular(disc(0.13), PumpSpec{}, cfg);
  EXPECT_GE(laser.magnitude(), 0.999);
  const auto centred = mu_angular(disc(5.6), led(), cfg);
  EXPECT_NEAR(centred.magnitude(), 0.552, 0.03);
  EXPECT_NEAR(centred.value().imag(), 0.0, 5e-4);
  const auto off = mu_angular(disc(5.6, 1.8, 4.6), led(), cfg);
  EXPECT_NEAR(off.magnitude(), 0.553, 0.03);
  EXPECT_GT(std::abs(off.phase()), 0.1);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 30.0);
}

TEST(MuAngular, ResolutionConvergence) {
  const auto cfg = crystal();
  for (auto [cx, cy] : {std::pair{0.0, 0.0}, std::pair{1.8, 4.6}}) {
    const auto a = mu_angular(disc(5.6, cx, cy, 201), led(), cfg);
    const auto b = mu_angular(disc(5.6, cx, cy, 401), led(), cfg);
    EXPECT_LT(std::abs(a.value() - b.value()), 1e-4);
  }
}

TEST(MuAngular, ShrinkingRadiusApproachesOne) {
  const auto cfg = crystal();
  double prev = 0.0;
  for (double r : {1.0, 0.5, 0.25, 0.1}) {
    const double m = mu_angular(disc(r), PumpSpec{}, cfg).magnitude();
    EXPECT_GE(m, prev - 1e-4);
    EXPECT_LE(m, 1.0);
    prev = m;
  }
  // Small disc: phi is linear, so |mu| = 2 J1(kR)/(kR) with k = |grad phi|.
  const double h = 1e-3;
  const double gx = (relative_phase_mrad(h, 0, 405.0, cfg) - relative_phase_mrad(-h, 0, 405.0, cfg)) / (2 * h);
  const double gy = (relative_phase_mrad(0, h, 405.0, cfg) - relative_phase_mrad(0, -h, 405.0, cfg)) / (2 * h);
  const double kr = std::hypot(gx, gy) * 0.1;
  EXPECT_NEAR(prev, 2 * std::cyl_bessel_j(1.0, kr) / kr, 2e-6);
}

TEST(MuAngular, ResolutionError) {
  const PhaseField f = [](double, double, double) { return 0.0; };
  // The coarsest admissible grid still places all nine nodes inside the disc.
  EXPECT_NO_THROW(mu_angular(disc(1.0, 0.0, 0.0, 3), 405.0, f, {DiscQuadrature::kMaskedMidpoint, {}}));
  IntegrationRegion bad = disc(1.0);
  bad.grid_n = 200;
  EXPECT_THROW(mu_angular(bad, 405.0, f), DomainError);
  EXPECT_THROW(mu_angular(disc(-1.0), 405.0, f), DomainError);
}

TEST(MuAngular, RadialProfileHook) {
  const double k = 0.9;
  const PhaseField f = [k](double qx, double, double) { return k * qx; };
  const auto uniform = mu_angular(disc(4.0), 405.0, f);
  const auto flat = mu_angular(disc(4.0), 405.0, f, {DiscQuadrature::kAreaWeighted, [](double) { return 2.0; }});
  EXPECT_NEAR(std::abs(uniform.value() - flat.value()), 0.0, 1e-14);
  const auto peaked =
      mu_angular(disc(4.0), 405.0, f, {DiscQuadrature::kAreaWeighted, [](double r) { return std::exp(-r * r); }});
  EXPECT_GT(peaked.magnitude(), uniform.magnitude());
}

TEST(MuSpectral, SingleSampleIsBitIdentical) {
  const auto cfg = crystal();
  for (auto [cx, cy] : {std::pair{0.0, 0.0}, std::pair{1.8, 4.6}}) {
    const auto a = mu_angular(disc(5.6, cx, cy), led(), cfg);
    const auto b = mu_spectral(disc(5.6, cx, cy), led(), cfg, 1);
    EXPECT_EQ(a.value().real(), b.value().real());
    EXPECT_EQ(a.value().imag(), b.value().imag());
  }
}

TEST(MuSpectral, LedBandwidthBarelyMatters) {
  const auto cfg = crystal();
  const auto a = mu_angular(disc(5.6), led(), cfg);
  const auto b = mu_spectral(disc(5.6), led(), cfg, 7);
  EXPECT_LT(std::abs(a.magnitude() - b.magnitude()), 0.01);
  PumpSpec laser;
  laser.fwhm_nm = 2.0;
  EXPECT_GE(mu_spectral(disc(0.13), laser, cfg, 5).magnitude(), 0.999);
  EXPECT_THROW(mu_spectral(disc(5.6), led(), cfg, 0), DomainError);
}

TEST(MuSpectral, Nodes) {
  const auto nodes = spectral_nodes(led(), 5);
  ASSERT_EQ(nodes.size(), 5u);
  EXPECT_DOUBLE_EQ(nodes.front(), 395.0);
  EXPECT_DOUBLE_EQ(nodes[2], 405.0);
  EXPECT_DOUBLE_EQ(nodes.back(), 415.0);
  EXPECT_EQ(spectral_nodes(led(), 1), std::vector<double>{405.0});
}

TEST(Sweep, MonotoneAndEndpoints) {
  const auto cfg = crystal();
  std::vector<double> radii;
  for (int k = 0; k < 20; ++k) radii.push_back(0.1 * std::pow(100.0, k / 19.0));
  const auto rows = bandwidth_sweep(radii, led(), cfg);
  ASSERT_EQ(rows.size(), 20u);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_LE(rows[k].concurrence, rows[k - 1].concurrence) << k;
    EXPECT_LE(rows[k].purity, rows[k - 1].purity) << k;
  }
  const auto ends = bandwidth_sweep({0.13, 5.6}, led(), cfg);
  EXPECT_GE(ends[0].concurrence, 0.999);
  EXPECT_NEAR(ends[1].concurrence, 0.552, 0.03);
  EXPECT_NEAR(ends[1].purity, 0.5 * (1 + ends[1].concurrence * ends[1].concurrence), 1e-12);
  EXPECT_THROW(bandwidth_sweep({}, led(), cfg), DomainError);
  EXPECT_THROW(bandwidth_sweep({1.0, 0.5}, led(), cfg), DomainError);
  EXPECT_THROW(bandwidth_sweep({-1.0}, led(), cfg), DomainError);
}

TEST(Estimators, IrisBandwidth) {
  EXPECT_NEAR(angular_bandwidth_from_irises(3, 1, 1000, 3, 1000), 4.0, 1e-12);
  EXPECT_NEAR(angular_bandwidth_from_irises(3, 1, 2000, 3, 2000), 2.0, 1e-12);
  // A geometry producing the LED estimate: 2.4 mm irises over a 0.4 mm spot at 714.29 mm.
  EXPECT_NEAR(angular_bandwidth_from_irises(2.4, 0.4, 2000.0 / 2.8, 2.4, 2000.0 / 2.8), 5.6, 1e-9);
  EXPECT_THROW(angular_bandwidth_from_irises(1, 2, 1000, 3, 1000), DomainError);
  EXPECT_THROW(angular_bandwidth_from_irises(3, 1, 0, 3, 1000), DomainError);
}

TEST(Estimators, GaussianDivergence) {
  EXPECT_NEAR(gaussian_divergence_half_angle(1.0, 405.0), 0.1289, 1e-4);
  EXPECT_NEAR(gaussian_divergence_half_angle(2.0, 405.0), 0.5 * gaussian_divergence_half_angle(1.0, 405.0), 1e-15);
  EXPECT_NEAR(gaussian_divergence_half_angle(2.0, 810.0), gaussian_divergence_half_angle(1.0, 405.0), 1e-15);
  EXPECT_THROW(gaussian_divergence_half_angle(0.0, 405.0), DomainError);
}

TEST(Calibration, RecoversKnownCut) {
  auto cfg = crystal();
  const double target = mu_angular(disc(5.6), led(), cfg).magnitude();
  const double cut = calibrate_cut_angle(target, disc(5.6), led(), cfg, 28 * kDeg, 30 * kDeg);
  EXPECT_NEAR(cut / kDeg, 28.7058, 1e-4);
  EXPECT_THROW(calibrate_cut_angle(0.999, disc(5.6), led(), cfg, 28 * kDeg, 30 * kDeg), NumericError);
}
