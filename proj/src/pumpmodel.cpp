#include "spdc/pumpmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spdc/errors.hpp"

namespace spdc {
namespace {

constexpr int kMinInsideNodes = 9;

// Antiderivative of sqrt(R^2 - x^2).
double chord_primitive(double x, double r) {
  const double xc = std::clamp(x, -r, r);
  return 0.5 * (xc * std::sqrt(std::max(0.0, r * r - xc * xc)) + r * r * std::asin(xc / r));
}

// Exact area of {x^2 + y^2 <= r^2} intersected with [x0, x1] x [y0, y1].
double disc_rect_overlap(double x0, double x1, double y0, double y1, double r) {
  const double a = std::max(x0, -r);
  const double b = std::min(x1, r);
  if (!(b > a)) return 0.0;

  std::vector<double> cuts = {a, b};
  for (double y : {y0, y1}) {
    if (std::abs(y) < r) {
      const double xb = std::sqrt(r * r - y * y);
      for (double c : {-xb, xb}) {
        if (c > a && c < b) cuts.push_back(c);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());

  double area = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k];
    const double hi = cuts[k + 1];
    if (!(hi > lo)) continue;
    const double mid = 0.5 * (lo + hi);
    const double s = std::sqrt(std::max(0.0, r * r - mid * mid));
    const bool upper_is_chord = s < y1;
    const bool lower_is_chord = -s > y0;
    const double upper = upper_is_chord ? s : y1;
    const double lower = lower_is_chord ? -s : y0;
    if (!(upper > lower)) continue;
    const double chord = chord_primitive(hi, r) - chord_primitive(lo, r);
    const double width = hi - lo;
    area += (upper_is_chord ? chord : y1 * width) - (lower_is_chord ? -chord : y0 * width);
  }
  return area;
}

}  // namespace

void IntegrationRegion::validate() const {
  if (!(radius_mrad > 0.0) || !std::isfinite(radius_mrad)) {
    throw DomainError("integration radius must be positive");
  }
  if (grid_n < 3 || grid_n % 2 == 0) {
    throw DomainError("integration grid size must be odd and at least 3");
  }
  if (!std::isfinite(center_x_mrad) || !std::isfinite(center_y_mrad)) {
    throw DomainError("integration centre must be finite");
  }
}

void PumpSpec::validate() const {
  if (!(center_nm > 0.0)) throw DomainError("pump centre wavelength must be positive");
  if (!(fwhm_nm >= 0.0)) throw DomainError("pump bandwidth must be non-negative");
  if (polarization_sign != 1 && polarization_sign != -1) {
    throw DomainError("pump polarization sign must be +1 or -1");
  }
}

PhaseField crystal_phase_field(const CrystalConfig& config) {
  return [config](double qx, double qy, double lambda_nm) {
    return relative_phase_mrad(qx, qy, lambda_nm, config);
  };
}

CoherenceParameterd mu_angular(const IntegrationRegion& region, double lambda_nm,
                               const PhaseField& field, const QuadratureOptions& options) {
  region.validate();
  const int n = region.grid_n;
  const double r = region.radius_mrad;
  const double h = 2.0 * r / n;
  const double cell_area = h * h;

  // Cell centres, mirror-symmetric about zero; n is odd so zero is a node.
  std::vector<double> offsets(n, 0.0);
  for (int i = 0; i < (n - 1) / 2; ++i) {
    offsets[i] = -r + h * (i + 0.5);
    offsets[n - 1 - i] = -offsets[i];
  }

  int inside = 0;
  std::complex<double> total = 0.0;
  double weight_total = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    const double y = offsets[iy];
    std::complex<double> row_sum = 0.0;
    double row_weight = 0.0;
    for (int ix = 0; ix < n; ++ix) {
      const double x = offsets[ix];
      const bool centre_inside = x * x + y * y <= r * r;
      if (centre_inside) ++inside;

      double w = 0.0;
      if (options.rule == DiscQuadrature::kMaskedMidpoint) {
        w = centre_inside ? 1.0 : 0.0;
      } else {
        const double ax = std::abs(x);
        const double ay = std::abs(y);
        const double far = std::hypot(ax + 0.5 * h, ay + 0.5 * h);
        const double near = std::hypot(std::max(0.0, ax - 0.5 * h), std::max(0.0, ay - 0.5 * h));
        if (far <= r) {
          w = 1.0;
        } else if (near < r) {
          w = disc_rect_overlap(x - 0.5 * h, x + 0.5 * h, y - 0.5 * h, y + 0.5 * h, r) / cell_area;
        }
      }
      if (w <= 0.0) continue;
      if (options.profile) w *= options.profile(std::hypot(x, y));

      const double phi = field(region.center_x_mrad + x, region.center_y_mrad + y, lambda_nm);
      row_sum += w * std::complex<double>(std::cos(phi), std::sin(phi));
      row_weight += w;
    }
    total += row_sum;
    weight_total += row_weight;
  }

  if (inside < kMinInsideNodes) {
    std::ostringstream os;
    os << "integration grid too coarse: " << inside << " nodes inside the disc (need "
       << kMinInsideNodes << ")";
    throw DomainError(os.str());
  }
  if (!(weight_total > 0.0)) throw DomainError("integration weights sum to zero");
  std::complex<double> mu = total / weight_total;
  const double m = std::abs(mu);
  if (m > 1.0) mu /= m;
  return CoherenceParameterd(mu);
}

CoherenceParameterd mu_angular(const IntegrationRegion& region, const PumpSpec& pump,
                               const CrystalConfig& config, const QuadratureOptions& options) {
  pump.validate();
  config.validate();
  config.sellmeier.check_range(pump.center_nm);
  return mu_angular(region, pump.center_nm, crystal_phase_field(config), options);
}

std::vector<double> spectral_nodes(const PumpSpec& pump, int n_lambda) {
  if (n_lambda < 1) throw DomainError("need at least one spectral sample");
  if (n_lambda == 1) return {pump.center_nm};
  std::vector<double> out(n_lambda);
  const double lo = pump.center_nm - 0.5 * pump.fwhm_nm;
  for (int k = 0; k < n_lambda; ++k) {
    out[k] = lo + pump.fwhm_nm * static_cast<double>(k) / static_cast<double>(n_lambda - 1);
  }
  return out;
}

CoherenceParameterd mu_spectral(const IntegrationRegion& region, const PumpSpec& pump,
                                const CrystalConfig& config, int n_lambda,
                                const QuadratureOptions& options) {
  pump.validate();
  config.validate();
  const auto lambdas = spectral_nodes(pump, n_lambda);
  for (double l : lambdas) config.sellmeier.check_range(l);
  const auto field = crystal_phase_field(config);
  std::complex<double> sum = 0.0;
  for (double l : lambdas) sum += mu_angular(region, l, field, options).value();
  return CoherenceParameterd(sum / static_cast<double>(lambdas.size()));
}

std::vector<SweepRow> bandwidth_sweep(const std::vector<double>& radii_mrad, const PumpSpec& pump,
                                      const CrystalConfig& config, int grid_n) {
  if (radii_mrad.empty()) throw DomainError("bandwidth sweep needs at least one radius");
  for (std::size_t k = 0; k < radii_mrad.size(); ++k) {
    if (!(radii_mrad[k] > 0.0)) throw DomainError("sweep radii must be positive");
    if (k > 0 && !(radii_mrad[k] > radii_mrad[k - 1])) {
      throw DomainError("sweep radii must be strictly ascending");
    }
  }
  std::vector<SweepRow> rows;
  rows.reserve(radii_mrad.size());
  for (double r : radii_mrad) {
    IntegrationRegion region{0.0, 0.0, r, grid_n};
    const double c = mu_angular(region, pump, config).magnitude();
    rows.push_back({r, c, 0.5 * (1.0 + c * c)});
  }
  return rows;
}

double angular_bandwidth_from_irises(double r_s, double r_p, double l_s, double r_i, double l_i) {
  if (!(r_s > r_p) || !(r_i > r_p)) {
    throw DomainError("iris radius must exceed the pump spot radius");
  }
  if (!(l_s > 0.0) || !(l_i > 0.0)) throw DomainError("iris distances must be positive");
  if (!(r_p >= 0.0)) throw DomainError("pump spot radius must be non-negative");
  return ((r_s - r_p) / l_s + (r_i - r_p) / l_i) * 1e3;
}

double gaussian_divergence_half_angle(double waist_mm, double lambda_nm) {
  if (!(waist_mm > 0.0)) throw DomainError("beam waist must be positive");
  // nm / mm = 1e-6 rad; report in mrad.
  return lambda_nm / (std::numbers::pi * waist_mm) * 1e-3;
}

double calibrate_cut_angle(double target_abs_mu, const IntegrationRegion& region, const PumpSpec& pump,
                           CrystalConfig config, double lo, double hi, double tol) {
  if (!(hi > lo)) throw DomainError("calibration bracket must be ascending");
  auto excess = [&](double cut) {
    config.axis_tilt = axis_tilt_from_cut(cut);
    return mu_angular(region, pump, config).magnitude() - target_abs_mu;
  };
  double flo = excess(lo);
  const double fhi = excess(hi);
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw NumericError("target |mu| not bracketed by the cut-angle range",
                       std::min(std::abs(flo), std::abs(fhi)));
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = excess(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace spdc
