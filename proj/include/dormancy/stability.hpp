#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dormancy/equilibria.hpp"
#include "dormancy/model.hpp"

namespace dormancy {

/// Analytic Jacobian of rhs6 in the coordinate order (n1a, n1i, n2a, n2d, n2i, n3).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 6, 6> jacobian6(const ModelParams& p, const Eigen::MatrixBase<Derived>& n) {
  using S = typename Derived::Scalar;
  const S n1a = n[0], n2a = n[2], n3 = n[5];
  const S hosts = n.template head<5>().sum();
  const S c(p.C), d(p.D), q(p.q);
  const S g1 = S(p.lambda1 - p.mu1) - c * hosts - d * n3;
  const S g2 = S(p.lambda2 - p.mu1) - c * hosts - d * n3;
  const S rv(p.r + p.v);
  const S mv(p.m * p.v);

  Eigen::Matrix<S, 6, 6> j;
  const S c1 = -c * n1a;
  const S c2 = -c * n2a;
  j << g1 + c1, c1 + S(p.r), c1, c1, c1, -d * n1a,
       d * n3, -rv, S(0), S(0), S(0), d * n1a,
       c2, c2, g2 + c2, c2 + S(p.sigma), c2 + S(p.r), -d * n2a,
       S(0), S(0), q * d * n3, -S(p.kappa * p.mu1 + p.sigma), S(0), q * d * n2a,
       S(0), S(0), (S(1) - q) * d * n3, S(0), -rv, (S(1) - q) * d * n2a,
       -d * n3, mv, -(S(1) - q) * d * n3, S(0), mv, -d * n1a - (S(1) - q) * d * n2a - S(p.mu3);
  return j;
}

/// Jacobian of rhs3 on (n1a, n1i, n3).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 3> jacobian3(const ModelParams& p, const Eigen::MatrixBase<Derived>& n) {
  using S = typename Derived::Scalar;
  Eigen::Matrix<S, 6, 1> full = Eigen::Matrix<S, 6, 1>::Zero();
  full[0] = n[0];
  full[1] = n[1];
  full[5] = n[2];
  const auto j = jacobian6(p, full);
  const int idx[3] = {0, 1, 5};
  Eigen::Matrix<S, 3, 3> out;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) out(a, b) = j(idx[a], idx[b]);
  return out;
}

/// Jacobian of rhs4 on (n2a, n2d, n2i, n3).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 4, 4> jacobian4(const ModelParams& p, const Eigen::MatrixBase<Derived>& n) {
  using S = typename Derived::Scalar;
  Eigen::Matrix<S, 6, 1> full = Eigen::Matrix<S, 6, 1>::Zero();
  full.template segment<4>(2) = n;
  return jacobian6(p, full).template bottomRightCorner<4, 4>();
}

/// Invader block of the Jacobian at n*, on (2a, 2d, 2i).
Eigen::Matrix3d matrix_A(const ModelParams& p, const HostVirusEquilibrium& n_star);
/// Invader block of the Jacobian at ñ, on (1a, 1i).
Eigen::Matrix2d matrix_F(const ModelParams& p, const DormancyVirusEquilibrium& n_tilde);

/// (lambda2-lambda1)(r+v)(kappa mu1+sigma) + qDn3*(v sigma - r kappa mu1)
double det_A_closed_form(const ModelParams& p, double n3_star);
/// (lambda2-lambda1)(r+v) + qDñ3(v sigma - r kappa mu1)/(kappa mu1+sigma)
double det_F_closed_form(const ModelParams& p, double n3_tilde);

/// Tolerance on |Re lambda| below which a spectrum counts as non-hyperbolic.
inline constexpr double kHyperbolicTol = 1e-9;

enum class StabilityClass { Stable, Unstable, NonHyperbolic };
std::string_view to_string(StabilityClass c);

struct SpectrumReport {
  Eigen::MatrixXd matrix;
  std::vector<std::complex<double>> eigenvalues;  ///< descending real part
  StabilityClass classification = StabilityClass::NonHyperbolic;
  int real_negative = 0;
  int real_positive = 0;
  int real_zero = 0;
  int complex_pairs = 0;
  int stable_complex_pairs = 0;
  double spectral_abscissa = 0.0;
  double trace_error = 0.0;  ///< |sum lambda - trace| relative
  double det_error = 0.0;    ///< |prod lambda - det| relative
  double max_residual = 0.0;  ///< worst eigenpair residual
  /// For boundary equilibria: distance between the full spectrum and the
  /// union of the diagonal block spectra.
  std::optional<double> block_error;
};

SpectrumReport analyze_spectrum(const Eigen::MatrixXd& m);

enum class EquilibriumKind { NStar, NTilde, X };
std::string_view to_string(EquilibriumKind k);

/// Spectrum of jacobian6 at the named equilibrium, embedded in six types.
/// Throws PreconditionError when the equilibrium is missing.
SpectrumReport classify_equilibrium(const ModelParams& p, EquilibriumKind which);

/// Stability of n* within the three-type system (and ñ within the four-type one).
SpectrumReport host_virus_subsystem_spectrum(const ModelParams& p, const HostVirusEquilibrium& n_star);
SpectrumReport dormancy_virus_subsystem_spectrum(const ModelParams& p, const DormancyVirusEquilibrium& n_tilde);

enum class BifurcationTarget { NStar, NTilde };

struct BifurcationPoint {
  double m = 0.0;
  bool exists = false;
  double max_re = 0.0;  ///< spectral abscissa of the subsystem Jacobian
  bool leading_complex = false;
  StabilityClass classification = StabilityClass::NonHyperbolic;
};

struct BifurcationReport {
  BifurcationTarget target = BifurcationTarget::NStar;
  std::vector<BifurcationPoint> points;
  double m_star = 0.0;  ///< transcritical point, closed form
  std::optional<double> m_hopf;
  /// m is treated as a real parameter; only integral values are meaningful
  /// for the individual-based model.
  std::string m_convention = "real (ODE analysis)";
};

/// Existence and stability on an evenly spaced m grid (count >= 1). A Hopf
/// point is a stable-to-unstable change with a complex leading pair, refined by
/// bisection to 1e-6 in m.
BifurcationReport bifurcation_sweep(const ModelParams& p, double m_min, double m_max, int count,
                                    BifurcationTarget target);

double transcritical_m(const ModelParams& p, BifurcationTarget target);

}  // namespace dormancy
