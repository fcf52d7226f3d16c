#include <random>

#include "doctest.h"
#include "dormancy/eigen.hpp"
#include "dormancy/errors.hpp"
#include "dormancy/ode.hpp"
#include "dormancy/stability.hpp"
#include "fixtures.hpp"

using namespace dormancy;

namespace {

ModelParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ModelParams p;
  p.mu1 = 0.2 + u(rng);
  p.lambda1 = p.mu1 + 0.2 + 3 * u(rng);
  p.lambda2 = p.mu1 + 0.2 + 3 * u(rng);
  p.C = 0.2 + 2 * u(rng);
  p.D = 0.05 + 2 * u(rng);
  p.q = 0.01 + 0.98 * u(rng);
  p.r = 0.05 + 3 * u(rng);
  p.v = 0.05 + 3 * u(rng);
  p.m = 1 + std::floor(30 * u(rng));
  p.sigma = 0.05 + 3 * u(rng);
  p.kappa = 2 * u(rng);
  p.mu3 = 0.05 + 2 * u(rng);
  p.K = 1000;
  return p;
}

double det3_cofactor(const Eigen::Matrix3d& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

}  // namespace

TEST_CASE("analytic Jacobian matches central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_params(rng);
    Vec6 x;
    for (int i = 0; i < 6; ++i) x[i] = u(rng);
    const auto j = jacobian6(p, x);
    double worst = 0.0;
    for (int c = 0; c < 6; ++c) {
      const double h = 1e-6 * (1.0 + std::abs(x[c]));
      Vec6 a = x, b = x;
      a[c] += h;
      b[c] -= h;
      const Vec6 fd = (rhs6(p, a) - rhs6(p, b)) / (2 * h);
      for (int r = 0; r < 6; ++r)
        worst = std::max(worst, std::abs(fd[r] - j(r, c)) / std::max(1.0, std::abs(j(r, c))));
    }
    REQUIRE(worst < 1e-5);
  }
}

TEST_CASE("subsystem Jacobians are principal submatrices") {
  const auto p = fixtures::fig7();
  Eigen::Vector3d n3(0.3, 0.2, 4.0);
  Vec6 full = Vec6::Zero();
  full << 0.3, 0.2, 0, 0, 0, 4.0;
  const auto j6 = jacobian6(p, full);
  const auto j3 = jacobian3(p, n3);
  const int idx[3] = {0, 1, 5};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) CHECK(j3(a, b) == j6(idx[a], idx[b]));
  Eigen::Vector4d n4(0.6, 0.3, 0.2, 3.0);
  CHECK(jacobian4(p, n4).isApprox(jacobian6(p, (Vec6() << 0, 0, 0.6, 0.3, 0.2, 3.0).finished()).bottomRightCorner<4, 4>()));
}

TEST_CASE("Jacobian at the empty state") {
  const auto p = fixtures::fig7();
  const auto j = jacobian6(p, Vec6::Zero());
  CHECK(j(0, 0) == doctest::Approx(p.lambda1 - p.mu1));
  CHECK(j(1, 1) == doctest::Approx(-(p.r + p.v)));
  CHECK(j(2, 2) == doctest::Approx(p.lambda2 - p.mu1));
  CHECK(j(3, 3) == doctest::Approx(-(p.kappa * p.mu1 + p.sigma)));
  CHECK(j(4, 4) == doctest::Approx(-(p.r + p.v)));
  CHECK(j(5, 5) == doctest::Approx(-p.mu3));
}

TEST_CASE("block structure at n*") {
  const auto p = fixtures::fig7();
  const auto eq = host_virus_equilibrium(p);
  const auto j = jacobian6(p, eq.embedded());
  for (int r : {2, 3, 4})
    for (int c : {0, 1, 5}) CHECK(j(r, c) == 0.0);
  CHECK(j.block<3, 3>(2, 2) == matrix_A(p, eq));
  CHECK(matrix_A(p, eq)(0, 0) == doctest::Approx(-2.12));
}

TEST_CASE("determinant identities over random draws") {
  std::mt19937_64 rng(17);
  int checked_a = 0, checked_f = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto p = random_params(rng);
    const auto ns = host_virus_equilibrium(p);
    if (ns.exists) {
      ++checked_a;
      const auto a = matrix_A(p, ns);
      const double closed = det_A_closed_form(p, ns.n3());
      const double scale = std::max({std::abs(closed), (p.r + p.v) * (p.kappa * p.mu1 + p.sigma) * std::abs(p.lambda2 - p.lambda1), 1e-12});
      CHECK(std::abs(det3_cofactor(a) - closed) / scale < 1e-8);
      const auto c = invasion_conditions(p, ns, DormancyVirusEquilibrium{});
      if (!c.inv2_critical && std::abs(closed) > 1e-9) CHECK(c.inv2 == (closed > 0.0));
      const auto ev = eigenvalues(a);
      CHECK(std::abs(ev.front().imag()) < 1e-9);
    }
    const auto nt = dormancy_virus_equilibrium(p);
    if (nt.exists) {
      ++checked_f;
      const auto f = matrix_F(p, nt);
      const double closed = det_F_closed_form(p, nt.n3());
      const double scale = std::max({std::abs(closed), (p.r + p.v) * std::abs(p.lambda2 - p.lambda1), 1e-12});
      CHECK(std::abs(f.determinant() - closed) / scale < 1e-8);
      CHECK(std::abs(eigenvalues(f).front().imag()) < 1e-9);
    }
  }
  CHECK(checked_a > 1000);
  CHECK(checked_f > 1000);
}

TEST_CASE("critical boundary: lambda2 = lambda1 and q = 0 gives det A = 0") {
  const auto p = fixtures::fig7(3.15, 0.0);
  CHECK(det_A_closed_form(p, host_virus_equilibrium(p).n3()) == 0.0);
}

TEST_CASE("dark-green probe spectra") {
  const auto p = fixtures::fig7();
  const auto ns = classify_equilibrium(p, EquilibriumKind::NStar);
  CHECK(ns.classification == StabilityClass::Unstable);
  REQUIRE(ns.block_error.has_value());
  CHECK(*ns.block_error < 1e-8);

  const auto x = classify_equilibrium(p, EquilibriumKind::X);
  CHECK(x.classification == StabilityClass::Stable);
  CHECK(x.real_negative == 4);
  CHECK(x.complex_pairs == 1);
  CHECK(x.stable_complex_pairs == 1);
  CHECK(x.max_residual < 1e-9);
  CHECK(x.trace_error < 1e-8);
  CHECK(x.det_error < 1e-8);

  const auto nt = classify_equilibrium(p, EquilibriumKind::NTilde);
  CHECK(nt.classification == StabilityClass::Unstable);
  CHECK(*nt.block_error < 1e-8);
  CHECK(host_virus_subsystem_spectrum(p, host_virus_equilibrium(p)).classification == StabilityClass::Stable);
  CHECK(dormancy_virus_subsystem_spectrum(p, dormancy_virus_equilibrium(p)).classification ==
        StabilityClass::Stable);
}

TEST_CASE("founder-control probes: x is a saddle with one unstable direction") {
  for (double q : {0.6, 0.8}) {
    const auto rep = classify_equilibrium(fixtures::fig9(3.2, q), EquilibriumKind::X);
    CHECK(rep.classification == StabilityClass::Unstable);
    CHECK(rep.real_positive == 1);
    CHECK(rep.max_residual < 1e-9);
  }
}

TEST_CASE("missing equilibria are precondition errors") {
  auto p = fixtures::fig7();
  p.m = 1;
  CHECK_THROWS_AS(classify_equilibrium(p, EquilibriumKind::NStar), PreconditionError);
  CHECK_THROWS_AS(matrix_A(p, host_virus_equilibrium(p)), PreconditionError);
}

TEST_CASE("block spectra at boundary equilibria over random draws") {
  std::mt19937_64 rng(23);
  int checked = 0;
  for (int trial = 0; trial < 1000 && checked < 300; ++trial) {
    const auto p = random_params(rng);
    if (!host_virus_equilibrium(p).exists) continue;
    ++checked;
    const auto rep = classify_equilibrium(p, EquilibriumKind::NStar);
    CHECK(*rep.block_error < 1e-8 * std::max(1.0, rep.matrix.cwiseAbs().maxCoeff()));
    CHECK(rep.trace_error < 1e-8);
  }
  CHECK(checked > 50);
}

TEST_CASE("transcritical point solves bar_n1a = n1a*") {
  const auto p = fixtures::fig7();
  const double ms = transcritical_m(p, BifurcationTarget::NStar);
  auto at = p;
  at.m = ms;
  CHECK(p.mu3 * (p.r + p.v) / (p.D * (ms * p.v - (p.r + p.v))) == doctest::Approx(lv_equilibria(p).bar_n1a));
  at.m = ms + 1e-3;
  const auto eq = host_virus_equilibrium(at);
  REQUIRE(eq.exists);
  CHECK(host_virus_subsystem_spectrum(at, eq).classification == StabilityClass::Stable);
}

TEST_CASE("bifurcation sweeps") {
  auto p = fixtures::fig7();
  auto rep = bifurcation_sweep(p, 1.0, 50.0, 50, BifurcationTarget::NStar);
  REQUIRE(!rep.points.empty());
  CHECK_FALSE(rep.points.front().exists);
  CHECK(rep.points.back().exists);

  p.r = 0.05;
  rep = bifurcation_sweep(p, 1.0, 1000.0, 400, BifurcationTarget::NStar);
  REQUIRE(rep.m_hopf.has_value());
  auto before = p, after = p;
  before.m = *rep.m_hopf - 1e-3;
  after.m = *rep.m_hopf + 1e-3;
  CHECK(host_virus_subsystem_spectrum(before, host_virus_equilibrium(before)).classification == StabilityClass::Stable);
  CHECK(host_virus_subsystem_spectrum(after, host_virus_equilibrium(after)).classification == StabilityClass::Unstable);

  p = fixtures::fig7();
  p.r = 3.0;
  rep = bifurcation_sweep(p, 1.0, 1000.0, 400, BifurcationTarget::NStar);
  CHECK_FALSE(rep.m_hopf.has_value());

  p = fixtures::fig7();
  p.lambda1 = 0.5;  // bar_n1a < 0: never coexists
  rep = bifurcation_sweep(p, 1.0, 100.0, 20, BifurcationTarget::NStar);
  CHECK(rep.points.empty());
  CHECK_THROWS_AS(bifurcation_sweep(p, 5.0, 1.0, 10, BifurcationTarget::NStar), ConfigError);
}
