#pragma once

// Two-qubit polarization states. Basis order is {HH, HV, VH, VV} with the
// signal photon as the first (most significant) qubit.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "spdc/errors.hpp"

namespace spdc {

template <typename Scalar>
using Matrix2c = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
template <typename Scalar>
using Matrix4c = Eigen::Matrix<std::complex<Scalar>, 4, 4>;
template <typename Scalar>
using Vector2c = Eigen::Matrix<std::complex<Scalar>, 2, 1>;
template <typename Scalar>
using Vector4c = Eigen::Matrix<std::complex<Scalar>, 4, 1>;

inline constexpr std::array<const char*, 4> kBasisLabels = {"HH", "HV", "VH", "VV"};

/// Kronecker product of two single-qubit operators (a acts on the signal).
template <typename Scalar>
Matrix4c<Scalar> kron(const Matrix2c<Scalar>& a, const Matrix2c<Scalar>& b) {
  Matrix4c<Scalar> out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return out;
}

/// Eigenvalues (ascending) of a Hermitian matrix.
template <typename Derived>
auto hermitian_eigenvalues(const Eigen::MatrixBase<Derived>& m) {
  using MatrixType = typename Derived::PlainObject;
  Eigen::SelfAdjointEigenSolver<MatrixType> es(m.eval(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("Hermitian eigensolver did not converge");
  }
  return es.eigenvalues().eval();
}

/// Principal square root of a positive-semidefinite Hermitian matrix.
/// Eigenvalues in (-1e-10, 0) are clamped to zero; anything more negative throws.
template <typename Derived>
typename Derived::PlainObject hermitian_sqrt(const Eigen::MatrixBase<Derived>& m) {
  using MatrixType = typename Derived::PlainObject;
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  Eigen::SelfAdjointEigenSolver<MatrixType> es(m.eval());
  if (es.info() != Eigen::Success) {
    throw NumericError("Hermitian eigensolver did not converge");
  }
  auto w = es.eigenvalues().eval();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] < Real(-1e-10)) {
      throw DomainError("matrix square root of a non-positive-semidefinite matrix");
    }
    w[i] = std::sqrt(std::max(w[i], Real(0)));
  }
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

/// 4x4 complex Hermitian, unit-trace, positive-semidefinite matrix.
/// Immutable once constructed; every constructor validates the invariants.
template <typename Scalar>
class DensityMatrix {
 public:
  using MatrixType = Matrix4c<Scalar>;

  static constexpr Scalar kHermitianTol = Scalar(1e-12);
  static constexpr Scalar kTraceTol = Scalar(1e-12);
  static constexpr Scalar kEigenTol = Scalar(1e-10);

  /// Validates `m` and stores its Hermitian part.
  static DensityMatrix from_matrix(const MatrixType& m) {
    const Scalar asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= kHermitianTol)) {
      throw DomainError("density matrix is not Hermitian (deviation " + std::to_string(double(asym)) + ")");
    }
    MatrixType h = Scalar(0.5) * (m + m.adjoint());
    const std::complex<Scalar> tr = h.trace();
    if (!(std::abs(tr - std::complex<Scalar>(1)) <= kTraceTol)) {
      throw DomainError("density matrix trace differs from 1 (" + std::to_string(double(tr.real())) + ")");
    }
    const auto w = hermitian_eigenvalues(h);
    if (!(w[0] >= -kEigenTol)) {
      throw DomainError("density matrix has a negative eigenvalue (" + std::to_string(double(w[0])) + ")");
    }
    return DensityMatrix(h);
  }

  /// Normalizes an arbitrary positive matrix (Hermitian part, divided by trace).
  static DensityMatrix normalized(const MatrixType& m) {
    MatrixType h = Scalar(0.5) * (m + m.adjoint());
    const Scalar tr = h.trace().real();
    if (!(tr > Scalar(0))) throw DomainError("cannot normalize a matrix with non-positive trace");
    return from_matrix(h / tr);
  }

  static DensityMatrix pure(const Vector4c<Scalar>& ket) {
    const Scalar n = ket.norm();
    if (!(n > Scalar(0))) throw DomainError("zero state vector");
    const Vector4c<Scalar> v = ket / n;
    return from_matrix(v * v.adjoint());
  }

  static DensityMatrix maximally_mixed() {
    return DensityMatrix(MatrixType::Identity() * Scalar(0.25));
  }

  const MatrixType& matrix() const { return m_; }
  std::complex<Scalar> operator()(int r, int c) const { return m_(r, c); }

 private:
  explicit DensityMatrix(const MatrixType& m) : m_(m) {}
  MatrixType m_;
};

using DensityMatrixd = DensityMatrix<double>;

/// Complex coherence mu with |mu| <= 1.
template <typename Scalar>
class CoherenceParameter {
 public:
  explicit CoherenceParameter(std::complex<Scalar> mu) : mu_(mu) {
    if (!(std::abs(mu) <= Scalar(1) + Scalar(1e-12))) {
      throw DomainError("|mu| exceeds 1");
    }
  }
  std::complex<Scalar> value() const { return mu_; }
  Scalar magnitude() const { return std::abs(mu_); }
  Scalar phase() const { return std::arg(mu_); }

 private:
  std::complex<Scalar> mu_;
};

using CoherenceParameterd = CoherenceParameter<double>;

enum class PolarizationLabel { H, V, D, A, R, L, Linear };

/// Rank-1 single-qubit projector |v><v|.
template <typename Scalar>
class PolarizationProjector {
 public:
  static PolarizationProjector H() { return from_ket({1, 0}, PolarizationLabel::H, "H"); }
  static PolarizationProjector V() { return from_ket({0, 1}, PolarizationLabel::V, "V"); }
  static PolarizationProjector D() { return from_ket({1, 1}, PolarizationLabel::D, "D"); }
  static PolarizationProjector A() { return from_ket({1, -1}, PolarizationLabel::A, "A"); }
  /// R = (H - iV)/sqrt(2), L = (H + iV)/sqrt(2).
  static PolarizationProjector R() {
    return from_ket({std::complex<Scalar>(1), std::complex<Scalar>(0, -1)}, PolarizationLabel::R, "R");
  }
  static PolarizationProjector L() {
    return from_ket({std::complex<Scalar>(1), std::complex<Scalar>(0, 1)}, PolarizationLabel::L, "L");
  }
  /// Linear polarization at `theta` radians from H.
  static PolarizationProjector linear(Scalar theta) {
    return from_ket({std::cos(theta), std::sin(theta)}, PolarizationLabel::Linear, "linear");
  }

  static PolarizationProjector from_label(PolarizationLabel label) {
    switch (label) {
      case PolarizationLabel::H: return H();
      case PolarizationLabel::V: return V();
      case PolarizationLabel::D: return D();
      case PolarizationLabel::A: return A();
      case PolarizationLabel::R: return R();
      case PolarizationLabel::L: return L();
      case PolarizationLabel::Linear: break;
    }
    throw DomainError("linear projector needs an angle");
  }

  const Matrix2c<Scalar>& matrix() const { return p_; }
  PolarizationLabel label() const { return label_; }
  const std::string& name() const { return name_; }

 private:
  static PolarizationProjector from_ket(Vector2c<Scalar> v, PolarizationLabel label, std::string name) {
    v.normalize();
    return PolarizationProjector(v * v.adjoint(), label, std::move(name));
  }
  PolarizationProjector(Matrix2c<Scalar> p, PolarizationLabel label, std::string name)
      : p_(std::move(p)), label_(label), name_(std::move(name)) {}

  Matrix2c<Scalar> p_;
  PolarizationLabel label_;
  std::string name_;
};

using PolarizationProjectord = PolarizationProjector<double>;

inline const char* to_string(PolarizationLabel l) {
  switch (l) {
    case PolarizationLabel::H: return "H";
    case PolarizationLabel::V: return "V";
    case PolarizationLabel::D: return "D";
    case PolarizationLabel::A: return "A";
    case PolarizationLabel::R: return "R";
    case PolarizationLabel::L: return "L";
    case PolarizationLabel::Linear: return "linear";
  }
  return "?";
}

inline PolarizationLabel label_from_string(const std::string& s) {
  if (s == "H") return PolarizationLabel::H;
  if (s == "V") return PolarizationLabel::V;
  if (s == "D") return PolarizationLabel::D;
  if (s == "A") return PolarizationLabel::A;
  if (s == "R") return PolarizationLabel::R;
  if (s == "L") return PolarizationLabel::L;
  throw DomainError("unknown polarization label '" + s + "'");
}

/// rho = [[1/2, 0, 0, s mu/2], 0, 0, [s mu*/2, 0, 0, 1/2]] with s the pump sign.
template <typename Scalar>
DensityMatrix<Scalar> state_from_mu(const CoherenceParameter<Scalar>& mu, int pump_sign = 1) {
  if (pump_sign != 1 && pump_sign != -1) throw DomainError("pump sign must be +1 or -1");
  Matrix4c<Scalar> m = Matrix4c<Scalar>::Zero();
  const std::complex<Scalar> c = Scalar(pump_sign) * mu.value() / Scalar(2);
  m(0, 0) = Scalar(0.5);
  m(3, 3) = Scalar(0.5);
  m(0, 3) = c;
  m(3, 0) = std::conj(c);
  return DensityMatrix<Scalar>::from_matrix(m);
}

template <typename Scalar>
DensityMatrix<Scalar> bell_phi_plus() {
  const Scalar s = Scalar(1) / std::sqrt(Scalar(2));
  Vector4c<Scalar> v(s, 0, 0, s);
  return DensityMatrix<Scalar>::pure(v);
}

template <typename Scalar>
Scalar purity(const DensityMatrix<Scalar>& rho) {
  // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return rho.matrix().cwiseAbs2().sum();
}

/// Wootters concurrence. The square roots of the eigenvalues of rho rho~ are
/// obtained as the singular values of sqrt(rho) sqrt(rho~), which keeps
/// near-zero terms at rounding level instead of its square root.
template <typename Scalar>
Scalar concurrence(const DensityMatrix<Scalar>& rho) {
  Matrix2c<Scalar> sy;
  sy << Scalar(0), std::complex<Scalar>(0, -1), std::complex<Scalar>(0, 1), Scalar(0);
  const Matrix4c<Scalar> yy = kron(sy, sy);
  const Matrix4c<Scalar> flipped = yy * rho.matrix().conjugate() * yy;
  const Matrix4c<Scalar> prod = hermitian_sqrt(rho.matrix()) * hermitian_sqrt(flipped);
  Eigen::JacobiSVD<Matrix4c<Scalar>> svd(prod);
  const auto s = svd.singularValues();  // descending
  return std::max(Scalar(0), s[0] - s[1] - s[2] - s[3]);
}

enum class FidelityConvention {
  kSquared,  // [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2
  kRoot,     // Tr sqrt(sqrt(rho) sigma sqrt(rho))
};

/// Uhlmann fidelity, computed as the nuclear norm of sqrt(rho) sqrt(sigma).
template <typename Scalar>
Scalar fidelity(const DensityMatrix<Scalar>& rho, const DensityMatrix<Scalar>& sigma,
                FidelityConvention convention = FidelityConvention::kSquared) {
  const Matrix4c<Scalar> prod = hermitian_sqrt(rho.matrix()) * hermitian_sqrt(sigma.matrix());
  Eigen::JacobiSVD<Matrix4c<Scalar>> svd(prod);
  const Scalar root = std::min(Scalar(1), svd.singularValues().sum());
  return convention == FidelityConvention::kSquared ? root * root : root;
}

/// Tr[rho (P_s (x) P_i)], clamped to [0, 1].
template <typename Scalar>
Scalar born_probability(const DensityMatrix<Scalar>& rho, const PolarizationProjector<Scalar>& signal,
                        const PolarizationProjector<Scalar>& idler) {
  const Scalar p = (rho.matrix() * kron(signal.matrix(), idler.matrix())).trace().real();
  return std::clamp(p, Scalar(0), Scalar(1));
}

/// Applies U_s (x) U_i to rho.
template <typename Scalar>
DensityMatrix<Scalar> apply_local_unitaries(const DensityMatrix<Scalar>& rho, const Matrix2c<Scalar>& us,
                                            const Matrix2c<Scalar>& ui) {
  const Matrix4c<Scalar> u = kron(us, ui);
  return DensityMatrix<Scalar>::normalized(u * rho.matrix() * u.adjoint());
}

template <typename Scalar>
Scalar frobenius_distance(const DensityMatrix<Scalar>& a, const DensityMatrix<Scalar>& b) {
  return (a.matrix() - b.matrix()).norm();
}

}  // namespace spdc
