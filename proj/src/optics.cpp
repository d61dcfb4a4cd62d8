#include "spdc/optics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spdc/errors.hpp"

namespace spdc {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFixedPointTol = 1e-12;
constexpr int kFixedPointCap = 100;

class Fnv1a {
 public:
  void add(double v) { add_bytes(std::bit_cast<std::uint64_t>(v)); }
  void add(int v) { add_bytes(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  std::uint64_t value() const { return h_; }

 private:
  void add_bytes(std::uint64_t bits) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (bits >> (8 * i)) & 0xffu;
      h_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

// Component of the optic axis seen along the transverse direction of the
// pump: sin(gamma) for crystal 1 (axis in y-z), cos(gamma) for crystal 2.
double azimuth_factor(const PumpDirection& dir, Crystal crystal) {
  return crystal == Crystal::kFirst ? dir.sin_gamma() : dir.cos_gamma();
}

}  // namespace

double SellmeierTerms::index(double lambda_um) const {
  const double l2 = lambda_um * lambda_um;
  return std::sqrt(a + b / (l2 - c) - d * l2);
}

SellmeierModel SellmeierModel::bbo() {
  SellmeierModel m;
  m.ordinary = {2.7359, 0.01878, 0.01822, 0.01354};
  m.extraordinary = {2.3753, 0.01224, 0.01667, 0.01516};
  m.min_um = 0.189;
  m.max_um = 3.5;
  return m;
}

bool SellmeierModel::in_range(double lambda_nm) const {
  const double um = lambda_nm * 1e-3;
  return std::isfinite(um) && um >= min_um && um <= max_um;
}

void SellmeierModel::check_range(double lambda_nm) const {
  if (!in_range(lambda_nm)) {
    std::ostringstream os;
    os << "wavelength " << lambda_nm << " nm outside dispersion model range ["
       << min_um * 1e3 << ", " << max_um * 1e3 << "] nm";
    throw DomainError(os.str());
  }
}

double n_ordinary(double lambda_nm, const SellmeierModel& model) {
  model.check_range(lambda_nm);
  return model.ordinary.index(lambda_nm * 1e-3);
}

double n_principal_extraordinary(double lambda_nm, const SellmeierModel& model) {
  model.check_range(lambda_nm);
  return model.extraordinary.index(lambda_nm * 1e-3);
}

double n_extraordinary(double theta, double lambda_nm, const SellmeierModel& model) {
  const double no = n_ordinary(lambda_nm, model);
  const double ne = n_principal_extraordinary(lambda_nm, model);
  // Same as n_o sqrt((1 + tan^2) / (1 + (n_o tan / n_e)^2)) without the pole at pi/2.
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return no * ne / std::sqrt(ne * ne * c * c + no * no * s * s);
}

double walkoff_angle(double theta, double lambda_nm, const SellmeierModel& model) {
  const double no = n_ordinary(lambda_nm, model);
  const double ne = n_principal_extraordinary(lambda_nm, model);
  const double ratio = (no * no) / (ne * ne);
  return std::atan2(ratio * std::sin(theta), std::cos(theta)) - theta;
}

void CrystalConfig::validate() const {
  if (!(length_mm > 0.0) || !std::isfinite(length_mm)) {
    throw DomainError("crystal length must be positive");
  }
  if (!(axis_tilt > 0.0 && axis_tilt < kPi / 2)) {
    throw DomainError("optic-axis tilt must lie in (0, pi/2)");
  }
  if (pump_sign != 1 && pump_sign != -1) {
    throw DomainError("pump polarization sign must be +1 or -1");
  }
  if (!(sellmeier.min_um > 0.0 && sellmeier.max_um > sellmeier.min_um)) {
    throw DomainError("dispersion model has an empty validity range");
  }
}

std::uint64_t CrystalConfig::hash() const {
  Fnv1a h;
  h.add(length_mm);
  h.add(axis_tilt);
  for (const auto* t : {&sellmeier.ordinary, &sellmeier.extraordinary}) {
    h.add(t->a);
    h.add(t->b);
    h.add(t->c);
    h.add(t->d);
  }
  h.add(sellmeier.min_um);
  h.add(sellmeier.max_um);
  h.add(pump_sign);
  return h.value();
}

PumpDirection PumpDirection::from_angles(double alpha, double gamma, double lambda_nm) {
  if (!(alpha >= 0.0 && alpha < kPi / 2)) {
    throw DomainError("pump incidence angle must lie in [0, pi/2)");
  }
  double g = std::fmod(gamma, 2 * kPi);
  if (g < 0) g += 2 * kPi;
  return PumpDirection(alpha, g, std::cos(g), std::sin(g), lambda_nm);
}

PumpDirection PumpDirection::from_transverse_mrad(double q_px, double q_py, double lambda_nm) {
  const double r = std::hypot(q_px, q_py);
  const double alpha = r * 1e-3;
  if (!(alpha < kPi / 2)) {
    throw DomainError("transverse pump angle too large");
  }
  if (r == 0.0) {
    return PumpDirection(0.0, 0.0, 1.0, 0.0, lambda_nm);
  }
  double g = std::atan2(q_py, q_px);
  if (g < 0) g += 2 * kPi;
  return PumpDirection(alpha, g, q_px / r, q_py / r, lambda_nm);
}

RefractionSolution solve_refraction(const PumpDirection& dir, Crystal crystal,
                                    const CrystalConfig& config) {
  const double lambda = dir.wavelength_nm();
  const auto& model = config.sellmeier;
  const double sin_alpha = std::sin(dir.alpha());
  const double f = azimuth_factor(dir, crystal);
  const double cos_tilt = std::cos(config.axis_tilt);
  const double sin_tilt = std::sin(config.axis_tilt);

  auto psi_of = [&](double theta) {
    return std::asin(sin_alpha / n_extraordinary(theta, lambda, model));
  };
  auto theta_of = [&](double psi) {
    return std::acos(clamp_unit(std::sin(psi) * f * cos_tilt + std::cos(psi) * sin_tilt));
  };

  RefractionSolution sol;
  sol.crystal = crystal;

  // Seed from the ordinary refracted direction.
  const double psi_o = std::asin(sin_alpha / n_ordinary(lambda, model));
  double theta = theta_of(psi_o);
  bool converged = false;
  for (int k = 0; k < kFixedPointCap; ++k) {
    const double next = theta_of(psi_of(theta));
    ++sol.iterations;
    const double step = std::abs(next - theta);
    theta = next;
    if (step < kFixedPointTol) {
      converged = true;
      break;
    }
  }

  if (!converged) {
    sol.used_bisection = true;
    auto g = [&](double t) { return theta_of(psi_of(t)) - t; };
    double lo = 0.0;
    double hi = kPi;
    double glo = g(lo);
    if (glo * g(hi) > 0.0) {
      throw NumericError("refraction solve: no bracket for bisection", std::abs(glo));
    }
    for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
      const double mid = 0.5 * (lo + hi);
      const double gm = g(mid);
      if ((gm > 0.0) == (glo > 0.0)) {
        lo = mid;
        glo = gm;
      } else {
        hi = mid;
      }
    }
    theta = 0.5 * (lo + hi);
    const double residual = std::abs(g(theta));
    if (residual > 1e-10) {
      throw NumericError("refraction solve did not converge", residual);
    }
  }

  sol.theta = theta;
  sol.psi_e = psi_of(theta);
  sol.n_eff = n_extraordinary(theta, lambda, model);
  sol.walkoff = walkoff_angle(theta, lambda, model);
  sol.poynting = sol.walkoff - sol.psi_e;
  return sol;
}

std::array<double, 2> refraction_residuals(const RefractionSolution& sol,
                                           const PumpDirection& dir,
                                           const CrystalConfig& config) {
  const double n = n_extraordinary(sol.theta, dir.wavelength_nm(), config.sellmeier);
  const double f = azimuth_factor(dir, sol.crystal);
  const double snell = std::abs(std::sin(dir.alpha()) - n * std::sin(sol.psi_e));
  const double axis = std::abs(std::cos(sol.theta) -
                               (std::sin(sol.psi_e) * f * std::cos(config.axis_tilt) +
                                std::cos(sol.psi_e) * std::sin(config.axis_tilt)));
  return {snell, axis};
}

double half_crystal_phase(const RefractionSolution& sol, double lambda_nm,
                          const CrystalConfig& config) {
  const double cos_beta = std::cos(sol.poynting);
  if (std::abs(cos_beta) < 1e-9) {
    throw NumericError("Poynting vector parallel to the crystal face", cos_beta);
  }
  const double half_length_nm = 0.5 * config.length_mm * 1e6;
  return 2 * kPi * sol.n_eff / lambda_nm * (std::cos(sol.walkoff) / cos_beta) * half_length_nm;
}

double relative_phase(const PumpDirection& dir, const CrystalConfig& config) {
  const double lambda = dir.wavelength_nm();
  const auto first = solve_refraction(dir, Crystal::kFirst, config);
  const auto second = solve_refraction(dir, Crystal::kSecond, config);
  return half_crystal_phase(first, lambda, config) - half_crystal_phase(second, lambda, config);
}

double relative_phase_mrad(double q_px, double q_py, double lambda_nm,
                           const CrystalConfig& config) {
  return relative_phase(PumpDirection::from_transverse_mrad(q_px, q_py, lambda_nm), config);
}

GridSpec GridSpec::square(double half_extent_mrad, int n) {
  return {-half_extent_mrad, half_extent_mrad, n, -half_extent_mrad, half_extent_mrad, n};
}

namespace {

Eigen::VectorXd axis_samples(double lo, double hi, int n, const char* name) {
  if (n < 2) {
    throw DomainError(std::string("phase map needs at least 2 samples along ") + name);
  }
  if (!(hi > lo)) {
    throw DomainError(std::string("phase map axis ") + name + " must be ascending");
  }
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  v[n - 1] = hi;
  return v;
}

}  // namespace

PhaseMap phase_map(const GridSpec& grid, double lambda_nm, const CrystalConfig& config) {
  config.validate();
  config.sellmeier.check_range(lambda_nm);
  PhaseMap map;
  map.wavelength_nm = lambda_nm;
  map.qx = axis_samples(grid.qx_min, grid.qx_max, grid.nx, "q_px");
  map.qy = axis_samples(grid.qy_min, grid.qy_max, grid.ny, "q_py");
  map.phi.resize(grid.ny, grid.nx);
  map.config_hash = config.hash();
  for (int r = 0; r < grid.ny; ++r) {
    for (int c = 0; c < grid.nx; ++c) {
      try {
        map.phi(r, c) = relative_phase_mrad(map.qx[c], map.qy[r], lambda_nm, config);
      } catch (const NumericError& e) {
        std::ostringstream os;
        os << e.what() << " at (q_px, q_py) = (" << map.qx[c] << ", " << map.qy[r] << ") mrad";
        throw NumericError(os.str(), e.residual());
      } catch (const DomainError& e) {
        std::ostringstream os;
        os << e.what() << " at (q_px, q_py) = (" << map.qx[c] << ", " << map.qy[r] << ") mrad";
        throw DomainError(os.str());
      }
    }
  }
  return map;
}

PhaseMap phase_difference_map(const GridSpec& grid, double lambda_a_nm,
                              double lambda_b_nm, const CrystalConfig& config) {
  PhaseMap a = phase_map(grid, lambda_a_nm, config);
  const PhaseMap b = phase_map(grid, lambda_b_nm, config);
  a.phi = b.phi - a.phi;
  a.wavelength_nm = lambda_b_nm;
  return a;
}

double degenerate_cut_angle(double lambda_p_nm, double half_opening_external,
                            const SellmeierModel& model) {
  const double lambda_dc = 2.0 * lambda_p_nm;
  const double n_dc = n_ordinary(lambda_dc, model);
  const double psi_int = std::asin(std::sin(half_opening_external) / n_dc);
  const double target = n_dc * std::cos(psi_int);

  auto h = [&](double theta) { return n_extraordinary(theta, lambda_p_nm, model) - target; };
  double lo = 0.0;
  double hi = kPi / 2;
  double hlo = h(lo);
  const double hhi = h(hi);
  if (hlo == 0.0) return lo;
  if (hhi == 0.0) return hi;
  if ((hlo > 0.0) == (hhi > 0.0)) {
    throw DomainError("type-I phase matching infeasible for this dispersion model");
  }
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    const double hm = h(mid);
    if ((hm > 0.0) == (hlo > 0.0)) {
      lo = mid;
      hlo = hm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace spdc
