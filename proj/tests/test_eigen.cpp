#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "dormancy/eigen.hpp"

using namespace dormancy;
using cd = std::complex<double>;

namespace {

Eigen::MatrixXd companion(const std::vector<double>& coeffs) {
  // monic polynomial z^n + c[0] z^{n-1} + ... + c[n-1]
  const auto n = static_cast<Eigen::Index>(coeffs.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(0, i) = -coeffs[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < n; ++i) m(i, i - 1) = 1.0;
  return m;
}

// Largest distance in a nearest-neighbour matching against Eigen's solver.
double distance_to_oracle(const Eigen::MatrixXd& m, const std::vector<cd>& got) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  std::vector<cd> want(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  double worst = 0.0;
  for (const auto& z : got) {
    auto best = std::min_element(want.begin(), want.end(),
                                 [&](const cd& a, const cd& b) { return std::abs(a - z) < std::abs(b - z); });
    worst = std::max(worst, std::abs(*best - z));
    want.erase(best);
  }
  return worst;
}

}  // namespace

TEST_CASE("identity has eigenvalue one with multiplicity six") {
  const auto ev = eigenvalues(Eigen::MatrixXd::Identity(6, 6));
  REQUIRE(ev.size() == 6);
  for (const auto& z : ev) {
    CHECK(z.real() == doctest::Approx(1.0));
    CHECK(z.imag() == 0.0);
  }
}

TEST_CASE("companion matrix of (z^2+1)(z-2)(z+3)") {
  // z^4 + z^3 - 5 z^2 + z - 6
  const auto m = companion({1, -5, 1, -6});
  const auto ev = eigenvalues(m);
  REQUIRE(ev.size() == 4);
  CHECK(std::abs(ev[0] - cd(2, 0)) < 1e-12);
  CHECK(std::abs(ev[1] - cd(0, 1)) < 1e-12);
  CHECK(std::abs(ev[2] - cd(0, -1)) < 1e-12);
  CHECK(std::abs(ev[3] - cd(-3, 0)) < 1e-12);
  CHECK(ev[1] == std::conj(ev[2]));
  for (const auto& z : ev) CHECK(eigenpair_residual(m, z) < 1e-9);
}

TEST_CASE("sextic companion with known roots") {
  // roots -1, -2, 3, 0.5, -1 +- 2i
  std::vector<cd> roots{-1, -2, 3, 0.5, cd(-1, 2), cd(-1, -2)};
  std::vector<cd> poly{1};
  for (const auto& r : roots) {
    std::vector<cd> next(poly.size() + 1, 0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] -= r * poly[i];
    }
    poly = next;
  }
  std::vector<double> c;
  for (std::size_t i = 1; i < poly.size(); ++i) c.push_back(poly[i].real());
  const auto ev = eigenvalues(companion(c));
  for (const auto& r : roots) {
    double best = 1e9;
    for (const auto& z : ev) best = std::min(best, std::abs(z - r));
    CHECK(best < 1e-9);
  }
}

TEST_CASE("closed form agrees with QR for n <= 3") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int n = 1; n <= 3; ++n) {
    for (int trial = 0; trial < 500; ++trial) {
      Eigen::MatrixXd m(n, n);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
      const auto qr = eigenvalues(m);
      const auto cf = eigenvalues_closed_form(m);
      REQUIRE(qr.size() == cf.size());
      for (std::size_t i = 0; i < qr.size(); ++i) CHECK(std::abs(qr[i] - cf[i]) < 1e-8);
    }
  }
  CHECK_THROWS_AS(eigenvalues_closed_form(Eigen::MatrixXd::Identity(4, 4)), PreconditionError);
}

TEST_CASE("random matrices against the Eigen oracle") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + trial % 6;
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng) * (trial % 3 == 0 ? 100.0 : 1.0);
    const auto ev = eigenvalues(m);
    REQUIRE(ev.size() == static_cast<std::size_t>(n));
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    CHECK(distance_to_oracle(m, ev) < 1e-8 * scale);
    cd sum = 0;
    for (const auto& z : ev) sum += z;
    CHECK(std::abs(sum - m.trace()) < 1e-10 * scale * n);
    for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i - 1].real() >= ev[i].real());
  }
}

TEST_CASE("badly scaled matrices are balanced") {
  Eigen::MatrixXd m(3, 3);
  m << 1, 1e8, 0, 1e-8, 1, 1e8, 0, 1e-8, 1;
  auto b = m;
  balance(b);
  CHECK(b.cwiseAbs().maxCoeff() < 10);
  // characteristic polynomial (1-z)^3 - 2(1-z); an unbalanced QR loses the splitting
  const auto ev = eigenvalues(m);
  CHECK(ev[0].real() == doctest::Approx(1 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK(ev[1].real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ev[2].real() == doctest::Approx(1 - std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("upper triangular and zero matrices") {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(5, 5);
  for (const auto& e : eigenvalues(z)) CHECK(std::abs(e) == 0.0);
  Eigen::MatrixXd t(3, 3);
  t << 1, 2, 3, 0, -4, 5, 0, 0, 6;
  const auto ev = eigenvalues(t);
  CHECK(ev[0].real() == doctest::Approx(6));
  CHECK(ev[1].real() == doctest::Approx(1));
  CHECK(ev[2].real() == doctest::Approx(-4));
}

TEST_CASE("non-square and non-finite input rejected") {
  CHECK_THROWS_AS(eigenvalues(Eigen::MatrixXd::Zero(2, 3)), PreconditionError);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(0, 1) = std::nan("");
  CHECK_THROWS_AS(eigenvalues(m), PreconditionError);
}

TEST_CASE("works for long double scalars") {
  Eigen::Matrix<long double, 2, 2> m;
  m << 0, -1, 1, 0;
  const auto ev = eigenvalues(m);
  CHECK(std::abs(ev[0] - std::complex<long double>(0, 1)) < 1e-15L);
}
