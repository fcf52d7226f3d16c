#include "dormancy/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "dormancy/eigen.hpp"
#include "dormancy/errors.hpp"

namespace dormancy {
namespace {

// Largest distance in a greedy nearest-neighbour matching of two spectra.
double spectrum_distance(const std::vector<std::complex<double>>& a, std::vector<std::complex<double>> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (const auto& z : a) {
    auto best = std::min_element(b.begin(), b.end(),
                                 [&](const auto& u, const auto& w) { return std::abs(u - z) < std::abs(w - z); });
    worst = std::max(worst, std::abs(*best - z));
    b.erase(best);
  }
  return worst;
}

bool is_real(const std::complex<double>& z) { return std::abs(z.imag()) <= 1e-12 * std::max(1.0, std::abs(z)); }

}  // namespace

Eigen::Matrix3d matrix_A(const ModelParams& p, const HostVirusEquilibrium& n_star) {
  if (!n_star.exists) throw PreconditionError("matrix A needs the host-virus equilibrium n*");
  const double n3 = n_star.n3();
  Eigen::Matrix3d a;
  a << p.lambda2 - p.mu1 - p.C * (n_star.n1a() + n_star.n1i()) - p.D * n3, p.sigma, p.r,
       p.q * p.D * n3, -p.kappa * p.mu1 - p.sigma, 0.0,
       (1.0 - p.q) * p.D * n3, 0.0, -p.r - p.v;
  return a;
}

Eigen::Matrix2d matrix_F(const ModelParams& p, const DormancyVirusEquilibrium& n_tilde) {
  if (!n_tilde.exists) throw PreconditionError("matrix F needs the dormancy-virus equilibrium");
  const double hosts = n_tilde.n2a() + n_tilde.n2d() + n_tilde.n2i();
  const double n3 = n_tilde.n3();
  Eigen::Matrix2d f;
  f << p.lambda1 - p.mu1 - p.C * hosts - p.D * n3, p.r,
       p.D * n3, -(p.r + p.v);
  return f;
}

double det_A_closed_form(const ModelParams& p, double n3_star) {
  const double dormant_out = p.kappa * p.mu1 + p.sigma;
  return (p.lambda2 - p.lambda1) * (p.r + p.v) * dormant_out +
         p.q * p.D * n3_star * (p.v * p.sigma - p.r * p.kappa * p.mu1);
}

double det_F_closed_form(const ModelParams& p, double n3_tilde) {
  const double dormant_out = p.kappa * p.mu1 + p.sigma;
  return (p.lambda2 - p.lambda1) * (p.r + p.v) +
         p.q * p.D * n3_tilde * (p.v * p.sigma - p.r * p.kappa * p.mu1) / dormant_out;
}

std::string_view to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::Stable: return "hyperbolically-stable";
    case StabilityClass::Unstable: return "hyperbolically-unstable";
    case StabilityClass::NonHyperbolic: return "non-hyperbolic";
  }
  return "unknown";
}

std::string_view to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::NStar: return "n_star";
    case EquilibriumKind::NTilde: return "n_tilde";
    case EquilibriumKind::X: return "x";
  }
  return "unknown";
}

SpectrumReport analyze_spectrum(const Eigen::MatrixXd& m) {
  SpectrumReport rep;
  rep.matrix = m;
  rep.eigenvalues = eigenvalues(m);

  bool any_zero = false;
  bool any_positive = false;
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
    const auto z = rep.eigenvalues[i];
    if (std::abs(z.real()) < kHyperbolicTol) any_zero = true;
    else if (z.real() > 0.0) any_positive = true;
    if (is_real(z)) {
      if (std::abs(z.real()) < kHyperbolicTol) ++rep.real_zero;
      else if (z.real() < 0.0) ++rep.real_negative;
      else ++rep.real_positive;
    } else if (z.imag() > 0.0) {
      ++rep.complex_pairs;
      if (z.real() <= -kHyperbolicTol) ++rep.stable_complex_pairs;
    }
  }
  rep.classification = any_positive ? StabilityClass::Unstable
                       : any_zero   ? StabilityClass::NonHyperbolic
                                    : StabilityClass::Stable;
  rep.spectral_abscissa = rep.eigenvalues.empty() ? 0.0 : rep.eigenvalues.front().real();

  std::complex<double> sum = 0.0, prod = 1.0;
  for (const auto& z : rep.eigenvalues) {
    sum += z;
    prod *= z;
  }
  const double trace = m.trace();
  const double det = m.determinant();
  const double norm = std::max(1.0, m.cwiseAbs().rowwise().sum().maxCoeff());
  rep.trace_error = std::abs(sum - trace) / std::max(std::abs(trace), norm);
  const double det_floor = std::pow(norm, static_cast<double>(m.rows())) * 1e-14;
  rep.det_error = std::abs(prod - det) / std::max(std::abs(det), det_floor);

  for (const auto& z : rep.eigenvalues) rep.max_residual = std::max(rep.max_residual, eigenpair_residual(m, z));
  return rep;
}

SpectrumReport host_virus_subsystem_spectrum(const ModelParams& p, const HostVirusEquilibrium& n_star) {
  if (!n_star.exists) throw PreconditionError("host-virus equilibrium does not exist: " + n_star.failure);
  return analyze_spectrum(jacobian3(p, n_star.value));
}

SpectrumReport dormancy_virus_subsystem_spectrum(const ModelParams& p, const DormancyVirusEquilibrium& n_tilde) {
  if (!n_tilde.exists) throw PreconditionError("dormancy-virus equilibrium does not exist: " + n_tilde.failure);
  return analyze_spectrum(jacobian4(p, n_tilde.value));
}

SpectrumReport classify_equilibrium(const ModelParams& p, EquilibriumKind which) {
  switch (which) {
    case EquilibriumKind::NStar: {
      const auto eq = host_virus_equilibrium(p);
      if (!eq.exists) throw PreconditionError("host-virus equilibrium does not exist: " + eq.failure);
      auto rep = analyze_spectrum(jacobian6(p, eq.embedded()));
      auto blocks = eigenvalues(jacobian3(p, eq.value));
      const auto invader = eigenvalues(matrix_A(p, eq));
      blocks.insert(blocks.end(), invader.begin(), invader.end());
      rep.block_error = spectrum_distance(rep.eigenvalues, blocks);
      return rep;
    }
    case EquilibriumKind::NTilde: {
      const auto eq = dormancy_virus_equilibrium(p);
      if (!eq.exists) throw PreconditionError("dormancy-virus equilibrium does not exist: " + eq.failure);
      auto rep = analyze_spectrum(jacobian6(p, eq.embedded()));
      auto blocks = eigenvalues(jacobian4(p, eq.value));
      const auto invader = eigenvalues(matrix_F(p, eq));
      blocks.insert(blocks.end(), invader.begin(), invader.end());
      rep.block_error = spectrum_distance(rep.eigenvalues, blocks);
      return rep;
    }
    case EquilibriumKind::X: {
      const auto eq = coexistence_equilibrium(p);
      if (!eq.defined) throw PreconditionError("coexistence equilibrium undefined: " + eq.failure);
      return analyze_spectrum(jacobian6(p, eq.value));
    }
  }
  throw PreconditionError("unknown equilibrium");
}

double transcritical_m(const ModelParams& p, BifurcationTarget target) {
  const auto lv = lv_equilibria(p);
  if (target == BifurcationTarget::NStar) return (p.r + p.v) * (1.0 + p.mu3 / (p.D * lv.bar_n1a)) / p.v;
  return (p.r + p.v) * (1.0 + p.mu3 / ((1.0 - p.q) * p.D * lv.bar_n2a)) / p.v;
}

namespace {

BifurcationPoint evaluate_at(ModelParams p, double m, BifurcationTarget target) {
  p.m = m;
  BifurcationPoint pt;
  pt.m = m;
  SpectrumReport rep;
  if (target == BifurcationTarget::NStar) {
    const auto eq = host_virus_equilibrium(p);
    pt.exists = eq.exists;
    if (!eq.exists) return pt;
    rep = analyze_spectrum(jacobian3(p, eq.value));
  } else {
    const auto eq = dormancy_virus_equilibrium(p);
    pt.exists = eq.exists;
    if (!eq.exists) return pt;
    rep = analyze_spectrum(jacobian4(p, eq.value));
  }
  pt.max_re = rep.spectral_abscissa;
  pt.leading_complex = !is_real(rep.eigenvalues.front());
  pt.classification = rep.classification;
  return pt;
}

}  // namespace

BifurcationReport bifurcation_sweep(const ModelParams& p, double m_min, double m_max, int count,
                                    BifurcationTarget target) {
  if (count < 1 || !(m_min <= m_max) || !(m_min >= 1.0))
    throw ConfigError("bifurcation range needs 1 <= m_min <= m_max and count >= 1");
  BifurcationReport rep;
  rep.target = target;
  rep.m_star = transcritical_m(p, target);
  for (int i = 0; i < count; ++i) {
    const double m = count == 1 ? m_min : m_min + (m_max - m_min) * i / (count - 1);
    rep.points.push_back(evaluate_at(p, m, target));
  }
  if (std::none_of(rep.points.begin(), rep.points.end(), [](const auto& pt) { return pt.exists; })) {
    rep.points.clear();
    return rep;
  }
  for (std::size_t i = 1; i < rep.points.size(); ++i) {
    const auto& a = rep.points[i - 1];
    const auto& b = rep.points[i];
    if (!(a.exists && b.exists && a.max_re < 0.0 && b.max_re > 0.0 && b.leading_complex)) continue;
    double lo = a.m, hi = b.m;
    while (hi - lo > 1e-6) {
      const double mid = 0.5 * (lo + hi);
      const auto pt = evaluate_at(p, mid, target);
      if (pt.exists && pt.max_re < 0.0) lo = mid;
      else hi = mid;
    }
    rep.m_hopf = 0.5 * (lo + hi);
    break;
  }
  return rep;
}

}  // namespace dormancy
