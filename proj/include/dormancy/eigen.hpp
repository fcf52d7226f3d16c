#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "dormancy/errors.hpp"

namespace dormancy {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Orders eigenvalues by descending real part, ties by descending imaginary part.
template <typename Scalar>
void sort_spectrum(std::vector<std::complex<Scalar>>& values) {
  std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable. Eigenvalues are unchanged exactly.
template <typename Derived>
void balance(Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  constexpr Scalar radix = 2;
  constexpr Scalar sqrdx = radix * radix;
  const Eigen::Index n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar r = 0, c = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += abs(a(j, i));
        r += abs(a(i, j));
      }
      if (c == Scalar(0) || r == Scalar(0)) continue;
      const Scalar s = c + r;
      Scalar f = 1;
      Scalar g = r / radix;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < Scalar(0.95) * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

/// Householder reduction to upper Hessenberg form (similarity transform).
template <typename Derived>
void hessenberg_reduce(Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  const Eigen::Index n = a.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v;
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    v = a.col(k).tail(len);
    const Scalar alpha = v.norm();
    if (alpha == Scalar(0)) continue;
    const Scalar sign_alpha = v[0] >= Scalar(0) ? -alpha : alpha;
    v[0] -= sign_alpha;
    const Scalar vnorm2 = v.squaredNorm();
    if (vnorm2 == Scalar(0)) continue;
    // A <- (I - 2vv'/v'v) A (I - 2vv'/v'v) on the trailing block
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> w = (v.transpose() * a.bottomRows(len)) * (Scalar(2) / vnorm2);
    a.bottomRows(len) -= v * w;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z = (a.rightCols(len) * v) * (Scalar(2) / vnorm2);
    a.rightCols(len) -= z * v.transpose();
    a.col(k).tail(len - 1).setZero();
    a(k + 1, k) = sign_alpha;
  }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
/// Complex conjugate pairs come out as exact conjugates.
template <typename Scalar>
std::vector<std::complex<Scalar>> hessenberg_qr(DenseMatrix<Scalar> h, int max_iter_per_value = 60) {
  using std::abs;
  using std::sqrt;
  const int n = static_cast<int>(h.rows());
  std::vector<std::complex<Scalar>> out(static_cast<std::size_t>(n));
  if (n == 0) return out;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  // one-based accessor keeps the index arithmetic of the classical formulation
  auto a = [&h](int i, int j) -> Scalar& { return h(i - 1, j - 1); };
  auto sign = [](Scalar x, Scalar y) { return y >= Scalar(0) ? abs(x) : -abs(x); };

  Scalar anorm = 0;
  for (int i = 1; i <= n; ++i)
    for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += abs(a(i, j));

  int nn = n;
  Scalar t = 0;
  while (nn >= 1) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l >= 2; --l) {
        Scalar s = abs(a(l - 1, l - 1)) + abs(a(l, l));
        if (s == Scalar(0)) s = anorm;
        if (abs(a(l, l - 1)) <= eps * s) {
          a(l, l - 1) = 0;
          break;
        }
      }
      Scalar x = a(nn, nn);
      if (l == nn) {
        out[static_cast<std::size_t>(nn - 1)] = {x + t, 0};
        --nn;
      } else {
        Scalar y = a(nn - 1, nn - 1);
        Scalar w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          const Scalar p = Scalar(0.5) * (y - x);
          const Scalar q = p * p + w;
          Scalar z = sqrt(abs(q));
          x += t;
          if (q >= Scalar(0)) {
            z = p + sign(z, p);
            Scalar lo = x + z, hi = x + z;
            if (z != Scalar(0)) hi = x - w / z;
            out[static_cast<std::size_t>(nn - 2)] = {lo, 0};
            out[static_cast<std::size_t>(nn - 1)] = {hi, 0};
          } else {
            out[static_cast<std::size_t>(nn - 2)] = {x + p, -z};
            out[static_cast<std::size_t>(nn - 1)] = {x + p, z};
          }
          nn -= 2;
        } else {
          if (its == max_iter_per_value) throw ConvergenceError("QR eigenvalue iteration did not converge");
          if (its > 0 && its % 10 == 0) {
            // exceptional shift
            t += x;
            for (int i = 1; i <= nn; ++i) a(i, i) -= x;
            const Scalar s = abs(a(nn, nn - 1)) + abs(a(nn - 1, nn - 2));
            y = x = Scalar(0.75) * s;
            w = Scalar(-0.4375) * s * s;
          }
          ++its;
          int m = nn - 2;
          Scalar p = 0, q = 0, r = 0, z = 0;
          for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            Scalar s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = abs(p) + abs(q) + abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const Scalar u = abs(a(m, m - 1)) * (abs(q) + abs(r));
            const Scalar v = abs(p) * (abs(a(m - 1, m - 1)) + abs(z) + abs(a(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a(i, i - 2) = 0;
            if (i != m + 2) a(i, i - 3) = 0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0;
              if (k != nn - 1) r = a(k + 2, k - 1);
              x = abs(p) + abs(q) + abs(r);
              if (x != Scalar(0)) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const Scalar s = sign(sqrt(p * p + q * q + r * r), p);
            if (s == Scalar(0)) continue;
            if (k == m) {
              if (l != m) a(k, k - 1) = -a(k, k - 1);
            } else {
              a(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              p = a(k, j) + q * a(k + 1, j);
              if (k != nn - 1) {
                p += r * a(k + 2, j);
                a(k + 2, j) -= p * z;
              }
              a(k + 1, j) -= p * y;
              a(k, j) -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
              p = x * a(i, k) + y * a(i, k + 1);
              if (k != nn - 1) {
                p += z * a(i, k + 2);
                a(i, k + 2) -= p * r;
              }
              a(i, k + 1) -= p * q;
              a(i, k) -= p;
            }
          }
        }
      }
    } while (nn >= 1 && l < nn - 1);
  }
  return out;
}

/// Roots of the characteristic polynomial for n <= 3.
template <typename Derived>
std::vector<std::complex<typename Derived::Scalar>> eigenvalues_closed_form(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using C = std::complex<Scalar>;
  using std::abs;
  using std::acos;
  using std::cbrt;
  using std::cos;
  using std::sqrt;
  const Eigen::Index n = m.rows();
  if (n != m.cols() || n > 3) throw PreconditionError("closed-form eigenvalues need a square matrix with n <= 3");

  // roots of z^2 + b z + c
  auto quadratic = [](Scalar b, Scalar c) -> std::vector<C> {
    const Scalar disc = b * b - Scalar(4) * c;
    if (disc >= Scalar(0)) {
      const Scalar qq = Scalar(-0.5) * (b + (b >= Scalar(0) ? sqrt(disc) : -sqrt(disc)));
      const Scalar z1 = qq;
      const Scalar z2 = qq != Scalar(0) ? c / qq : Scalar(0);
      return {C(z1, 0), C(z2, 0)};
    }
    const Scalar re = Scalar(-0.5) * b, im = Scalar(0.5) * sqrt(-disc);
    return {C(re, im), C(re, -im)};
  };

  std::vector<C> roots;
  if (n == 1) {
    roots = {C(m(0, 0), 0)};
  } else if (n == 2) {
    roots = quadratic(-(m(0, 0) + m(1, 1)), m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
  } else if (n == 3) {
    // z^3 + a z^2 + b z + c
    const Scalar a = -m.trace();
    const Scalar b = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                     m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    const Scalar c = -m.determinant();
    const Scalar p = b - a * a / Scalar(3);
    const Scalar q = Scalar(2) * a * a * a / Scalar(27) - a * b / Scalar(3) + c;
    const Scalar disc = q * q / Scalar(4) + p * p * p / Scalar(27);
    Scalar t;
    if (disc > Scalar(0)) {
      const Scalar sd = sqrt(disc);
      t = cbrt(-q / Scalar(2) + sd) + cbrt(-q / Scalar(2) - sd);
    } else if (p == Scalar(0)) {
      t = 0;
    } else {
      const Scalar arg = std::clamp(Scalar(3) * q / (Scalar(2) * p) * sqrt(Scalar(-3) / p), Scalar(-1), Scalar(1));
      t = Scalar(2) * sqrt(-p / Scalar(3)) * cos(acos(arg) / Scalar(3));
    }
    Scalar z = t - a / Scalar(3);
    for (int it = 0; it < 3; ++it) {
      const Scalar f = ((z + a) * z + b) * z + c;
      const Scalar df = (Scalar(3) * z + Scalar(2) * a) * z + b;
      if (df == Scalar(0)) break;
      z -= f / df;
    }
    roots = quadratic(a + z, b + (a + z) * z);
    roots.push_back(C(z, 0));
  }
  sort_spectrum(roots);
  return roots;
}

/// All eigenvalues of a real square matrix: balancing, Hessenberg reduction and
/// shifted QR, falling back to the characteristic polynomial when n <= 3 and
/// the iteration stalls.
template <typename Derived>
std::vector<std::complex<typename Derived::Scalar>> eigenvalues(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw PreconditionError("eigenvalues need a square matrix");
  DenseMatrix<Scalar> a = m;
  if (!a.allFinite()) throw PreconditionError("eigenvalues need a finite matrix");
  balance(a);
  hessenberg_reduce(a);
  std::vector<std::complex<Scalar>> values;
  try {
    values = hessenberg_qr<Scalar>(std::move(a));
  } catch (const ConvergenceError&) {
    if (m.rows() > 3) throw;
    values = eigenvalues_closed_form(m);
  }
  sort_spectrum(values);
  return values;
}

/// Relative eigenpair residual ||M v - lambda v|| / ||v|| with v from two steps
/// of inverse iteration at a slightly perturbed shift.
template <typename Derived>
typename Derived::Scalar eigenpair_residual(const Eigen::MatrixBase<Derived>& m,
                                            std::complex<typename Derived::Scalar> lambda) {
  using Scalar = typename Derived::Scalar;
  using C = std::complex<Scalar>;
  using CMatrix = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic>;
  using CVector = Eigen::Matrix<C, Eigen::Dynamic, 1>;
  const Eigen::Index n = m.rows();
  const CMatrix mc = m.template cast<C>();
  const Scalar scale = std::max(Scalar(1), static_cast<Scalar>(m.cwiseAbs().maxCoeff()));
  const C shift = lambda + C(Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() * scale, 0);
  const Eigen::PartialPivLU<CMatrix> lu(mc - shift * CMatrix::Identity(n, n));
  CVector v = CVector::Ones(n);
  for (int it = 0; it < 3; ++it) {
    v = lu.solve(v);
    v /= v.norm();
  }
  return (mc * v - lambda * v).norm() / v.norm();
}

}  // namespace dormancy
