#include "dormancy/equilibria.hpp"

#include <cmath>

namespace dormancy {
namespace {

bool near(double a, double b) { return std::abs(a - b) < kCriticalTol; }

}  // namespace

Vec6 HostVirusEquilibrium::embedded() const {
  Vec6 out = Vec6::Zero();
  out[0] = value[0];
  out[1] = value[1];
  out[5] = value[2];
  return out;
}

Vec6 DormancyVirusEquilibrium::embedded() const {
  Vec6 out = Vec6::Zero();
  out.segment<3>(2) = value.head<3>();
  out[5] = value[3];
  return out;
}

LvEquilibria lv_equilibria(const ModelParams& p) {
  return {(p.lambda1 - p.mu1) / p.C, (p.lambda2 - p.mu1) / p.C};
}

HostVirusEquilibrium host_virus_equilibrium(const ModelParams& p) {
  HostVirusEquilibrium eq;
  const double rv = p.r + p.v;
  const double excess = p.m * p.v - rv;
  if (!(p.C > 0.0 && p.D > 0.0)) {
    eq.failure = "C > 0 and D > 0 required";
    return eq;
  }
  if (near(excess, 0.0)) eq.critical = true;
  if (!(excess > 0.0)) {
    eq.failure = "m*v > r+v violated";
    return eq;
  }
  const double bar = lv_equilibria(p).bar_n1a;
  const double n1a = p.mu3 * rv / (p.D * excess);
  const double n3 = (p.lambda1 - p.mu1 - p.C * n1a) * rv / (p.D * (p.C * n1a + p.v));
  const double n1i = p.D * n1a * n3 / rv;
  eq.value << n1a, n1i, n3;
  if (near(bar, n1a)) eq.critical = true;
  if (!(bar > n1a)) {
    eq.failure = "bar_n1a > n1a* violated";
    return eq;
  }
  eq.exists = true;
  return eq;
}

DormancyVirusEquilibrium dormancy_virus_equilibrium(const ModelParams& p) {
  DormancyVirusEquilibrium eq;
  const double rv = p.r + p.v;
  const double dormant_out = p.kappa * p.mu1 + p.sigma;
  const double excess = p.m * p.v - rv;
  if (!(p.C > 0.0 && p.D > 0.0)) {
    eq.failure = "C > 0 and D > 0 required";
    return eq;
  }
  if (!(p.q < 1.0)) {
    eq.failure = "q < 1 required";
    return eq;
  }
  if (!(dormant_out > 0.0)) {
    eq.failure = "kappa*mu1 + sigma > 0 required";
    return eq;
  }
  if (near(excess, 0.0)) eq.critical = true;
  if (!(excess > 0.0)) {
    eq.failure = "m*v > r+v violated";
    return eq;
  }
  const double bar = lv_equilibria(p).bar_n2a;
  const double n2a = p.mu3 * rv / ((1.0 - p.q) * p.D * excess);
  const double denom =
      p.D * (p.C * n2a * (p.q / dormant_out + (1.0 - p.q) / rv) + p.q * p.kappa * p.mu1 / dormant_out +
             (1.0 - p.q) * p.v / rv);
  const double n3 = (p.lambda2 - p.mu1 - p.C * n2a) / denom;
  const double n2d = p.q * p.D * n2a * n3 / dormant_out;
  const double n2i = (1.0 - p.q) * p.D * n2a * n3 / rv;
  eq.value << n2a, n2d, n2i, n3;
  if (near(bar, n2a)) eq.critical = true;
  if (!(bar > n2a)) {
    eq.failure = "bar_n2a > n2a~ violated";
    return eq;
  }
  eq.exists = true;
  return eq;
}

CoexistenceEquilibrium coexistence_equilibrium(const ModelParams& p) {
  CoexistenceEquilibrium eq;
  const double rv = p.r + p.v;
  const double dormant_out = p.kappa * p.mu1 + p.sigma;
  const double trade = p.r * p.kappa * p.mu1 - p.v * p.sigma;
  const double excess = p.m * p.v - rv;
  if (!(p.q > 0.0)) eq.failure = "q > 0 required";
  else if (!(p.C > 0.0 && p.D > 0.0)) eq.failure = "C > 0 and D > 0 required";
  else if (near(trade, 0.0)) eq.failure = "r*kappa*mu1 = v*sigma";
  else if (near(excess, 0.0)) eq.failure = "m*v = r+v";
  else if (near(p.lambda1, p.lambda2)) eq.failure = "lambda1 = lambda2";
  if (!eq.failure.empty()) return eq;

  const double x3 = ((p.lambda2 - p.lambda1) / (p.q * p.D)) * (dormant_out * rv / trade);
  const double alpha = p.D * x3 / rv;
  const double beta = (1.0 - p.q) * p.D * x3 / rv;
  const double gamma = p.q * p.D * x3 / dormant_out;
  const double hosts = (p.lambda1 - p.mu1 - p.D * x3 * p.v / rv) / p.C;
  const double n1a_star = p.mu3 * rv / (p.D * excess);

  // x1a + (1-q) x2a = n1a*,  (1+alpha) x1a + (1+beta+gamma) x2a = hosts
  const double det = (1.0 + beta + gamma) - (1.0 - p.q) * (1.0 + alpha);
  if (std::abs(det) < kCriticalTol) {
    eq.failure = "singular 2x2 system for (x1a, x2a)";
    return eq;
  }
  const double x1a = (n1a_star * (1.0 + beta + gamma) - (1.0 - p.q) * hosts) / det;
  const double x2a = (hosts - (1.0 + alpha) * n1a_star) / det;
  eq.value << x1a, alpha * x1a, x2a, gamma * x2a, beta * x2a, x3;
  eq.defined = true;
  eq.positive = (eq.value.array() > 0.0).all();
  if (!eq.positive) eq.failure = "not coordinatewise positive";
  return eq;
}

double invasion_threshold(const ModelParams& p, double n3) {
  const double dormant_out = p.kappa * p.mu1 + p.sigma;
  return p.q * p.D * n3 * (p.v * p.sigma - p.r * p.kappa * p.mu1) / ((p.r + p.v) * dormant_out);
}

InvasionConditions invasion_conditions(const ModelParams& p, const HostVirusEquilibrium& n_star,
                                       const DormancyVirusEquilibrium& n_tilde) {
  InvasionConditions c;
  const double gap = p.lambda1 - p.lambda2;
  if (n_star.exists) {
    c.inv2_applicable = true;
    c.theta_star = invasion_threshold(p, n_star.n3());
    c.inv2 = gap < c.theta_star;
    c.inv2_critical = near(gap, c.theta_star);
  }
  if (n_tilde.exists) {
    c.inv1_applicable = true;
    c.theta_tilde = invasion_threshold(p, n_tilde.n3());
    c.inv1 = gap > c.theta_tilde;
    c.inv1_critical = near(gap, c.theta_tilde);
  }
  return c;
}

EquilibriumReport equilibrium_report(const ModelParams& p) {
  EquilibriumReport rep;
  rep.lv = lv_equilibria(p);
  rep.n_star = host_virus_equilibrium(p);
  rep.n_tilde = dormancy_virus_equilibrium(p);
  rep.x = coexistence_equilibrium(p);
  rep.conditions = invasion_conditions(p, rep.n_star, rep.n_tilde);
  rep.coex13 = rep.n_star.exists;
  rep.coex23 = rep.n_tilde.exists;
  rep.degenerate = p.q == 0.0 || near(p.r * p.kappa * p.mu1, p.v * p.sigma) || near(p.m * p.v, p.r + p.v) ||
                   rep.n_star.critical || rep.n_tilde.critical || rep.conditions.inv2_critical ||
                   rep.conditions.inv1_critical;
  return rep;
}

}  // namespace dormancy
