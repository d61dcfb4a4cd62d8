#include "spdc/tomography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <random>
#include <tuple>

#include <Eigen/Dense>

#include "spdc/errors.hpp"
#include "spdc/simplex.hpp"

namespace spdc {
namespace {

constexpr int kCholeskyParams = 16;
constexpr int kParams = kCholeskyParams + 1;  // plus log intensity
constexpr double kProbabilityFloor = 1e-12;

constexpr std::array<PolarizationLabel, 4> kTomographyLabels = {
    PolarizationLabel::H, PolarizationLabel::V, PolarizationLabel::D, PolarizationLabel::R};

// Position of each strictly-lower entry (row, col) in the parameter vector:
// real part at index k, imaginary part at k + 1.
constexpr std::array<std::tuple<int, int, int>, 6> kOffDiagonal = {{
    {1, 0, 4}, {2, 1, 6}, {3, 2, 8}, {2, 0, 10}, {3, 1, 12}, {3, 0, 14},
}};

Matrix4c<double> lower_factor(const double* t) {
  Matrix4c<double> T = Matrix4c<double>::Zero();
  for (int i = 0; i < 4; ++i) T(i, i) = t[i];
  for (const auto& [r, c, k] : kOffDiagonal) T(r, c) = {t[k], t[k + 1]};
  return T;
}

std::vector<CountRecord> canonical_order(std::vector<CountRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const CountRecord& a, const CountRecord& b) {
    return std::tie(a.setting.id, a.corrected, a.raw) < std::tie(b.setting.id, b.corrected, b.raw);
  });
  return records;
}

struct Problem {
  std::vector<Matrix4c<double>> projectors;
  std::vector<double> counts;

  explicit Problem(const std::vector<CountRecord>& records) {
    for (const auto& r : records) {
      projectors.push_back(r.setting.projector());
      counts.push_back(r.corrected);
    }
  }

  double probability(const Matrix4c<double>& rho, std::size_t k) const {
    return (rho * projectors[k]).trace().real();
  }

  double cost(const Matrix4c<double>& rho, double intensity) const {
    double total = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const double expected = intensity * std::max(probability(rho, k), kProbabilityFloor);
      const double diff = expected - counts[k];
      total += diff * diff / (2.0 * expected);
    }
    return total;
  }

  // Cost over the optimizer's parameters. T and c T describe the same state,
  // so (|t|^2 - 1)^2 pins the scale without moving the optimum in rho.
  double objective(const Eigen::VectorXd& x) const {
    const Matrix4c<double> rho = cholesky_state(x.data());
    const double gauge = x.head(kCholeskyParams).squaredNorm() - 1.0;
    return cost(rho, std::exp(x[kCholeskyParams])) + gauge * gauge;
  }

  double total_counts() const {
    double s = 0.0;
    for (double c : counts) s += c;
    return s;
  }

  double total_probability(const Matrix4c<double>& rho) const {
    double s = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) s += probability(rho, k);
    return s;
  }
};

Eigen::VectorXd start_from_state(const Problem& problem, const Matrix4c<double>& rho) {
  Eigen::VectorXd x(kParams);
  const auto t = cholesky_parameters(rho);
  for (int i = 0; i < kCholeskyParams; ++i) x[i] = t[i];
  x.head(kCholeskyParams).normalize();
  const Matrix4c<double> norm_rho = cholesky_state(x.data());
  const double p = std::max(problem.total_probability(norm_rho), kProbabilityFloor);
  x[kCholeskyParams] = std::log(std::max(problem.total_counts(), 1.0) / p);
  return x;
}

struct RestartOutcome {
  SimplexResult best;
  bool converged = false;
  int evaluations = 0;
};

// Repeated Nelder-Mead from the incumbent until a fresh simplex no longer
// improves it.
RestartOutcome polish(const Problem& problem, Eigen::VectorXd x, int max_evaluations) {
  RestartOutcome out;
  auto fn = [&](const Eigen::VectorXd& v) { return problem.objective(v); };
  SimplexOptions opt;
  opt.initial_step = 0.2;
  opt.max_evaluations = max_evaluations;
  double previous = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 50 && out.evaluations < max_evaluations; ++round) {
    opt.max_evaluations = max_evaluations - out.evaluations;
    auto r = nelder_mead(fn, x, opt);
    out.evaluations += r.evaluations;
    const bool improved = r.f < previous - opt.ftol * std::max(1.0, std::abs(r.f));
    if (round == 0 || r.f < out.best.f) out.best = r;
    x = out.best.x;
    if (r.converged && !improved) {
      out.converged = true;
      break;
    }
    previous = out.best.f;
    opt.initial_step = std::max(1e-3, opt.initial_step * 0.5);
  }
  out.best.evaluations = out.evaluations;
  return out;
}

}  // namespace

Matrix4c<double> MeasurementSetting::projector() const {
  return kron(PolarizationProjectord::from_label(signal).matrix(),
              PolarizationProjectord::from_label(idler).matrix());
}

std::vector<MeasurementSetting> canonical_settings() {
  std::vector<MeasurementSetting> out;
  out.reserve(16);
  for (int s = 0; s < 4; ++s) {
    for (int i = 0; i < 4; ++i) {
      out.push_back({4 * s + i, kTomographyLabels[s], kTomographyLabels[i]});
    }
  }
  return out;
}

int tomographic_rank(const std::vector<MeasurementSetting>& settings) {
  const auto n = static_cast<Eigen::Index>(settings.size());
  Eigen::MatrixXd gram(n, n);
  std::vector<Matrix4c<double>> ps;
  for (const auto& s : settings) ps.push_back(s.projector());
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) gram(a, b) = (ps[a] * ps[b]).trace().real();
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

double accidental_counts(double singles_signal, double singles_idler, double tau_c_s, double acquisition_s) {
  return singles_signal * singles_idler * tau_c_s * acquisition_s;
}

std::vector<CountRecord> simulate_counts(const DensityMatrixd& rho, const CountSimulation& sim) {
  if (!(sim.rate_max > 0.0) || !(sim.acquisition_s > 0.0)) {
    throw DomainError("count simulation needs positive rate and acquisition time");
  }
  if (sim.singles_signal < 0.0 || sim.singles_idler < 0.0 || sim.tau_c_s < 0.0) {
    throw DomainError("singles rates and coincidence window must be non-negative");
  }
  std::mt19937_64 rng(sim.seed);
  const double acc = accidental_counts(sim.singles_signal, sim.singles_idler, sim.tau_c_s, sim.acquisition_s);
  std::vector<CountRecord> out;
  for (const auto& s : canonical_settings()) {
    const double p = born_probability(rho, PolarizationProjectord::from_label(s.signal),
                                      PolarizationProjectord::from_label(s.idler));
    const double mean = 2.0 * sim.rate_max * sim.acquisition_s * p + acc;
    CountRecord r;
    r.setting = s;
    r.acquisition_s = sim.acquisition_s;
    r.singles_signal = sim.singles_signal;
    r.singles_idler = sim.singles_idler;
    r.tau_c_s = sim.tau_c_s;
    r.accidentals = acc;
    if (sim.noiseless) {
      r.raw = mean;
    } else if (mean > 0.0) {
      std::poisson_distribution<long long> draw(mean);
      r.raw = static_cast<double>(draw(rng));
    }
    r.corrected = r.raw;
    out.push_back(r);
  }
  return out;
}

std::vector<CountRecord> subtract_accidentals(std::vector<CountRecord> records) {
  for (auto& r : records) r.corrected = r.raw - r.accidentals;
  return records;
}

Matrix4c<double> cholesky_state(const double* t) {
  const Matrix4c<double> T = lower_factor(t);
  const Matrix4c<double> m = T.adjoint() * T;
  const double tr = m.trace().real();
  if (!(tr > 0.0)) return Matrix4c<double>::Identity() * 0.25;
  return m / tr;
}

std::vector<double> cholesky_parameters(const Matrix4c<double>& rho) {
  // rho = T^dagger T with T lower triangular: factor the index-reversed
  // matrix J rho J = L L^dagger, then T = J L^dagger J.
  Matrix4c<double> reversed;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) reversed(i, j) = rho(3 - i, 3 - j);
  reversed = 0.5 * (reversed + reversed.adjoint()).eval();
  reversed += Matrix4c<double>::Identity() * 1e-10;
  Eigen::LLT<Matrix4c<double>> llt(reversed);
  if (llt.info() != Eigen::Success) {
    throw NumericError("Cholesky factorization of the starting state failed");
  }
  const Matrix4c<double> Lh = llt.matrixL().adjoint();
  Matrix4c<double> T;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) T(i, j) = Lh(3 - i, 3 - j);

  std::vector<double> t(kCholeskyParams, 0.0);
  for (int i = 0; i < 4; ++i) t[i] = T(i, i).real();
  for (const auto& [r, c, k] : kOffDiagonal) {
    t[k] = T(r, c).real();
    t[k + 1] = T(r, c).imag();
  }
  return t;
}

DensityMatrixd project_to_physical(const Matrix4c<double>& m) {
  const Matrix4c<double> h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c<double>> es(h);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed in physical projection");
  Eigen::Vector4d w = es.eigenvalues();
  // Euclidean projection of the spectrum onto the probability simplex.
  Eigen::Vector4d sorted = w;
  std::sort(sorted.data(), sorted.data() + 4, std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (int k = 0; k < 4; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / (k + 1);
    if (sorted[k] - candidate > 0.0) shift = candidate;
  }
  for (int k = 0; k < 4; ++k) w[k] = std::max(0.0, w[k] - shift);
  const Matrix4c<double> out = es.eigenvectors() * w.cast<std::complex<double>>().asDiagonal() *
                               es.eigenvectors().adjoint();
  return DensityMatrixd::normalized(out);
}

DensityMatrixd linear_inversion(const std::vector<CountRecord>& records) {
  const auto m = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXcd a(m, 16);
  Eigen::VectorXcd b(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Matrix4c<double> p = records[k].setting.projector();
    // Tr(rho M) = sum_ij rho_ij M_ji, with rho stored column-major.
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) a(k, i + 4 * j) = p(j, i);
    b[k] = records[k].corrected;
  }
  const Eigen::VectorXcd x = a.completeOrthogonalDecomposition().solve(b);
  Matrix4c<double> rho = Eigen::Map<const Matrix4c<double>>(x.data());
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) return DensityMatrixd::maximally_mixed();
  return project_to_physical(rho / tr);
}

double mlse_cost(const Matrix4c<double>& rho, double intensity, const std::vector<CountRecord>& records) {
  return Problem(canonical_order(records)).cost(rho, intensity);
}

TomographyResult mlse_reconstruct(const std::vector<CountRecord>& input, const MlseOptions& options) {
  if (input.size() < 16) throw DomainError("tomography needs at least 16 records");
  std::vector<MeasurementSetting> settings;
  for (const auto& r : input) settings.push_back(r.setting);
  if (tomographic_rank(settings) < 16) throw DomainError("measurement settings are not tomographically complete");

  const auto records = canonical_order(input);
  const Problem problem(records);
  if (!(problem.total_counts() > 0.0)) throw DomainError("total corrected counts must be positive");

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(start_from_state(problem, linear_inversion(records).matrix()));
  for (int k = 0; k < options.random_restarts; ++k) {
    std::seed_seq seq{static_cast<std::uint64_t>(options.seed), static_cast<std::uint64_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> t(kCholeskyParams);
    for (double& v : t) v = normal(rng);
    starts.push_back(start_from_state(problem, cholesky_state(t.data())));
  }

  std::vector<RestartOutcome> outcomes(starts.size());
  if (options.parallel) {
    std::vector<std::future<RestartOutcome>> jobs;
    for (const auto& s : starts) {
      jobs.push_back(std::async(std::launch::async, [&problem, s, &options] {
        return polish(problem, s, options.max_evaluations);
      }));
    }
    for (std::size_t k = 0; k < jobs.size(); ++k) outcomes[k] = jobs[k].get();
  } else {
    for (std::size_t k = 0; k < starts.size(); ++k) outcomes[k] = polish(problem, starts[k], options.max_evaluations);
  }

  // Lowest cost wins; strict comparison keeps the lowest index on ties.
  std::size_t winner = 0;
  for (std::size_t k = 1; k < outcomes.size(); ++k) {
    if (outcomes[k].best.f < outcomes[winner].best.f) winner = k;
  }
  const auto& best = outcomes[winner];

  TomographyResult result;
  const Matrix4c<double> rho = cholesky_state(best.best.x.data());
  result.rho = DensityMatrixd::normalized(rho);
  result.intensity = std::exp(best.best.x[kCholeskyParams]);
  result.nll = problem.cost(result.rho.matrix(), result.intensity);
  result.iterations = 0;
  for (const auto& o : outcomes) result.iterations += o.evaluations;
  // Converged if any restart that reached the winning cost stopped on tolerance.
  for (const auto& o : outcomes) {
    if (o.converged && o.best.f <= best.best.f + 1e-8 * std::max(1.0, std::abs(best.best.f))) {
      result.converged = true;
    }
  }
  result.winning_restart = static_cast<int>(winner);
  // Report probabilities in the caller's record order.
  for (const auto& r : input) {
    result.fitted_probabilities.push_back((result.rho.matrix() * r.setting.projector()).trace().real());
  }
  return result;
}

}  // namespace spdc
