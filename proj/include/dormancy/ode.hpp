#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dormancy/errors.hpp"
#include "dormancy/model.hpp"

namespace dormancy {

template <typename Scalar, int N>
using StateVector = Eigen::Matrix<Scalar, N, 1>;

// Right-hand sides in rescaled (per-K) units. Coordinates of the six-type
// state are ordered (n1a, n1i, n2a, n2d, n2i, n3).

template <typename Derived>
StateVector<typename Derived::Scalar, 6> rhs6(const ModelParams& p, const Eigen::MatrixBase<Derived>& n) {
  using S = typename Derived::Scalar;
  const S n1a = n[0], n1i = n[1], n2a = n[2], n2d = n[3], n2i = n[4], n3 = n[5];
  const S hosts = n1a + n1i + n2a + n2d + n2i;
  const S g1 = S(p.lambda1 - p.mu1) - S(p.C) * hosts - S(p.D) * n3;
  const S g2 = S(p.lambda2 - p.mu1) - S(p.C) * hosts - S(p.D) * n3;
  const S burst = S(p.m * p.v);

  StateVector<S, 6> d;
  d[0] = n1a * g1 + S(p.r) * n1i;
  d[1] = S(p.D) * n3 * n1a - S(p.r + p.v) * n1i;
  d[2] = n2a * g2 + S(p.r) * n2i + S(p.sigma) * n2d;
  d[3] = S(p.q * p.D) * n3 * n2a - S(p.kappa * p.mu1 + p.sigma) * n2d;
  d[4] = S((1.0 - p.q) * p.D) * n3 * n2a - S(p.r + p.v) * n2i;
  d[5] = -S(p.D) * n3 * n1a - S((1.0 - p.q) * p.D) * n3 * n2a + burst * (n1i + n2i) - S(p.mu3) * n3;
  return d;
}

/// Host-virus system without dormancy on (n1a, n1i, n3).
template <typename Derived>
StateVector<typename Derived::Scalar, 3> rhs3(const ModelParams& p, const Eigen::MatrixBase<Derived>& n) {
  using S = typename Derived::Scalar;
  const S n1a = n[0], n1i = n[1], n3 = n[2];
  StateVector<S, 3> d;
  d[0] = n1a * (S(p.lambda1 - p.mu1) - S(p.C) * (n1a + n1i) - S(p.D) * n3) + S(p.r) * n1i;
  d[1] = S(p.D) * n1a * n3 - S(p.r + p.v) * n1i;
  d[2] = S(p.m * p.v) * n1i - S(p.D) * n1a * n3 - S(p.mu3) * n3;
  return d;
}

/// Single host with dormancy on (n2a, n2d, n2i, n3).
template <typename Derived>
StateVector<typename Derived::Scalar, 4> rhs4(const ModelParams& p, const Eigen::MatrixBase<Derived>& n) {
  using S = typename Derived::Scalar;
  const S n2a = n[0], n2d = n[1], n2i = n[2], n3 = n[3];
  StateVector<S, 4> d;
  d[0] = n2a * (S(p.lambda2 - p.mu1) - S(p.C) * (n2a + n2i + n2d) - S(p.D) * n3) + S(p.sigma) * n2d +
         S(p.r) * n2i;
  d[1] = S(p.q * p.D) * n2a * n3 - S(p.kappa * p.mu1 + p.sigma) * n2d;
  d[2] = S((1.0 - p.q) * p.D) * n2a * n3 - S(p.r + p.v) * n2i;
  d[3] = S(p.m * p.v) * n2i - S((1.0 - p.q) * p.D) * n2a * n3 - S(p.mu3) * n3;
  return d;
}

/// Virus-free Lotka-Volterra competition on (n1a, n2a).
template <typename Derived>
StateVector<typename Derived::Scalar, 2> rhs2(const ModelParams& p, const Eigen::MatrixBase<Derived>& n) {
  using S = typename Derived::Scalar;
  const S total = n[0] + n[1];
  StateVector<S, 2> d;
  d[0] = n[0] * (S(p.lambda1 - p.mu1) - S(p.C) * total);
  d[1] = n[1] * (S(p.lambda2 - p.mu1) - S(p.C) * total);
  return d;
}

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double h_init = 1e-3;
  double h_min = 1e-12;
  double h_max = 0.5;
  double t_end = 100.0;
  /// Spacing of the dense-output grid; 0 records only the endpoints.
  double output_stride = 0.0;
  /// Zero out negative overshoot of magnitude <= clamp_threshold after each step.
  bool clamp_nonnegative = true;
  double clamp_threshold = 1e-14;
  /// Stop once ||rhs||_inf < convergence_tol at an accepted step.
  bool stop_on_convergence = false;
  double convergence_tol = 1e-10;
  std::size_t max_steps = 50'000'000;
};

inline void validate(const IntegratorConfig& cfg) {
  if (!(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0)) throw ConfigError("integrator tolerances must be positive");
  if (!(cfg.h_min > 0.0 && cfg.h_min <= cfg.h_init && cfg.h_init <= cfg.h_max))
    throw ConfigError("integrator step bounds must satisfy 0 < h_min <= h_init <= h_max");
  if (!(cfg.t_end > 0.0)) throw ConfigError("integrator t_end must be positive");
  if (cfg.output_stride < 0.0) throw ConfigError("output_stride must be nonnegative");
}

enum class IntegrationStatus { Completed, Converged, StepUnderflow, StepLimit };

template <typename Scalar, int N>
struct OdeSolution {
  std::vector<double> times;
  std::vector<StateVector<Scalar, N>> states;
  StateVector<Scalar, N> final_state;
  double final_time = 0.0;
  IntegrationStatus status = IntegrationStatus::Completed;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  /// Smallest coordinate seen at an accepted step before clamping.
  Scalar min_before_clamp = Scalar(0);
};

namespace detail {
// Dormand-Prince 5(4) tableau with Hairer's order-4 continuous extension.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};
}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration of y' = rhs(y) from t = 0 to
/// cfg.t_end. Samples on the dense-output grid come from the continuous
/// extension, so the grid does not constrain the step size.
///
/// Step underflow below h_min is reported through `status`; the solution then
/// ends at the last accepted state.
template <typename Rhs, typename Derived>
auto integrate(Rhs&& rhs, const Eigen::MatrixBase<Derived>& y0, const IntegratorConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  constexpr int N = Derived::RowsAtCompileTime;
  static_assert(N != Eigen::Dynamic, "integrate expects a fixed-size state");
  using Vec = StateVector<Scalar, N>;
  using T = detail::Dopri5;
  using std::abs;
  using std::max;
  using std::min;
  using std::pow;
  using std::sqrt;

  validate(cfg);

  OdeSolution<Scalar, N> sol;
  Vec y = y0;
  double t = 0.0;
  double h = cfg.h_init;
  sol.min_before_clamp = y.minCoeff();

  double next_output = 0.0;
  const bool dense = cfg.output_stride > 0.0;
  std::size_t output_index = 0;
  auto emit = [&](double time, const Vec& state) {
    sol.times.push_back(time);
    sol.states.push_back(state);
  };
  emit(0.0, y);
  if (dense) next_output = cfg.output_stride * static_cast<double>(++output_index);

  Vec k1 = rhs(y);
  Vec k2, k3, k4, k5, k6, k7, ynew, err;
  double fac_old = 1e-4;

  if (cfg.stop_on_convergence && k1.cwiseAbs().maxCoeff() < Scalar(cfg.convergence_tol)) {
    sol.status = IntegrationStatus::Converged;
    sol.final_state = y;
    sol.final_time = t;
    return sol;
  }

  while (t < cfg.t_end) {
    if (sol.accepted_steps + sol.rejected_steps >= cfg.max_steps) {
      sol.status = IntegrationStatus::StepLimit;
      break;
    }
    if (t + h > cfg.t_end) h = cfg.t_end - t;
    const Scalar hs = Scalar(h);

    k2 = rhs(y + hs * (T::a21 * k1));
    k3 = rhs(y + hs * (T::a31 * k1 + T::a32 * k2));
    k4 = rhs(y + hs * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
    k5 = rhs(y + hs * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
    k6 = rhs(y + hs * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5));
    ynew = y + hs * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 + T::a76 * k6);
    k7 = rhs(ynew);
    err = hs * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);

    Scalar acc(0);
    for (int i = 0; i < N; ++i) {
      const Scalar scale = Scalar(cfg.abs_tol) + Scalar(cfg.rel_tol) * max(abs(y[i]), abs(ynew[i]));
      const Scalar ratio = err[i] / scale;
      acc += ratio * ratio;
    }
    const double err_norm = static_cast<double>(sqrt(acc / Scalar(N)));

    if (err_norm <= 1.0) {
      // Lund-stabilized PI controller (Hairer's dopri5 defaults).
      const double fac11 = pow(max(err_norm, 1e-300), 0.17);
      double fac = fac11 / pow(fac_old, 0.04) / 0.9;
      fac = max(1.0 / 10.0, min(1.0 / 0.2, fac));
      fac_old = max(err_norm, 1e-4);

      if (dense) {
        const Vec r1 = y;
        const Vec r2 = ynew - y;
        const Vec r3 = hs * k1 - r2;
        const Vec r4 = r2 - hs * k7 - r3;
        const Vec r5 = hs * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 + T::d6 * k6 + T::d7 * k7);
        while (next_output < t + h && next_output < cfg.t_end) {
          const Scalar theta = Scalar((next_output - t) / h);
          const Scalar theta1 = Scalar(1) - theta;
          emit(next_output, r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5))));
          next_output = cfg.output_stride * static_cast<double>(++output_index);
        }
      }

      t += h;
      y = ynew;
      sol.min_before_clamp = min(sol.min_before_clamp, y.minCoeff());
      if (cfg.clamp_nonnegative) {
        for (int i = 0; i < N; ++i)
          if (y[i] < Scalar(0) && y[i] >= Scalar(-cfg.clamp_threshold)) y[i] = Scalar(0);
      }
      k1 = rhs(y);
      ++sol.accepted_steps;

      if (cfg.stop_on_convergence && k1.cwiseAbs().maxCoeff() < Scalar(cfg.convergence_tol)) {
        sol.status = IntegrationStatus::Converged;
        break;
      }
      h = min(cfg.h_max, h / fac);
    } else {
      ++sol.rejected_steps;
      h = h / min(1.0 / 0.2, pow(err_norm, 0.2) / 0.9);
      if (h < cfg.h_min) {
        sol.status = IntegrationStatus::StepUnderflow;
        break;
      }
    }
  }

  if (sol.times.back() != t) emit(t, y);
  sol.final_state = y;
  sol.final_time = t;
  return sol;
}

}  // namespace dormancy
