#include "dormancy/branching.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/LU>

#include "dormancy/errors.hpp"

namespace dormancy {

std::string_view to_string(Direction d) {
  return d == Direction::Inv2 ? "2-invades-13" : "1-invades-23";
}

std::string_view to_string(Criticality c) {
  switch (c) {
    case Criticality::Sub: return "subcritical";
    case Criticality::Critical: return "critical";
    case Criticality::Super: return "supercritical";
  }
  return "unknown";
}

Eigen::VectorXd BranchingProcess::total_rates() const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(types());
  for (const auto& c : channels) r[c.type] += c.rate;
  return r;
}

Eigen::MatrixXd BranchingProcess::channel_mean_matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(types(), types());
  for (const auto& c : channels) {
    for (int j = 0; j < types(); ++j) m(c.type, j) += c.rate * c.offspring[static_cast<std::size_t>(j)];
    m(c.type, c.type) -= c.rate;
  }
  return m;
}

BranchingProcess bp_rates_inv2(const ModelParams& p, const HostVirusEquilibrium& n_star) {
  if (!n_star.exists) throw PreconditionError("type-2 invasion needs n*: " + n_star.failure);
  const double n3 = n_star.n3();
  BranchingProcess bp;
  bp.direction = Direction::Inv2;
  bp.type_names = {"2a", "2d", "2i"};
  //                         2a 2d 2i
  bp.channels = {
      {"2a_birth", 0, p.lambda2, {2, 0, 0}},
      {"2a_death", 0, p.mu1 + p.C * (n_star.n1a() + n_star.n1i()), {0, 0, 0}},
      {"2a_infection", 0, (1.0 - p.q) * p.D * n3, {0, 0, 1}},
      {"2a_dormancy", 0, p.q * p.D * n3, {0, 1, 0}},
      {"2d_resuscitation", 1, p.sigma, {1, 0, 0}},
      {"2d_death", 1, p.kappa * p.mu1, {0, 0, 0}},
      {"2i_recovery", 2, p.r, {1, 0, 0}},
      {"2i_lysis", 2, p.v, {0, 0, 0}},
  };
  return bp;
}

BranchingProcess bp_rates_inv1(const ModelParams& p, const DormancyVirusEquilibrium& n_tilde) {
  if (!n_tilde.exists) throw PreconditionError("type-1 invasion needs the dormancy-virus equilibrium: " + n_tilde.failure);
  const double hosts = n_tilde.n2a() + n_tilde.n2d() + n_tilde.n2i();
  BranchingProcess bp;
  bp.direction = Direction::Inv1;
  bp.type_names = {"1a", "1i"};
  bp.channels = {
      {"1a_birth", 0, p.lambda1, {2, 0}},
      {"1a_death", 0, p.mu1 + p.C * hosts, {0, 0}},
      {"1a_infection", 0, p.D * n_tilde.n3(), {0, 1}},
      {"1i_recovery", 1, p.r, {1, 0}},
      {"1i_lysis", 1, p.v, {0, 0}},
  };
  return bp;
}

Eigen::MatrixXd mean_matrix(const ModelParams& p, const EquilibriumReport& eq, Direction which) {
  if (which == Direction::Inv2) {
    if (!eq.n_star.exists) throw PreconditionError("J* needs n*: " + eq.n_star.failure);
    const double n3 = eq.n_star.n3();
    Eigen::MatrixXd j(3, 3);
    j << p.lambda2 - p.mu1 - p.C * (eq.n_star.n1a() + eq.n_star.n1i()) - p.D * n3, p.q * p.D * n3,
        (1.0 - p.q) * p.D * n3,
        p.sigma, -p.kappa * p.mu1 - p.sigma, 0.0,
        p.r, 0.0, -p.r - p.v;
    return j;
  }
  if (!eq.n_tilde.exists) throw PreconditionError("J~ needs the dormancy-virus equilibrium: " + eq.n_tilde.failure);
  const double hosts = eq.n_tilde.n2a() + eq.n_tilde.n2d() + eq.n_tilde.n2i();
  const double n3 = eq.n_tilde.n3();
  Eigen::MatrixXd j(2, 2);
  j << p.lambda1 - p.mu1 - p.C * hosts - p.D * n3, p.D * n3,
      p.r, -(p.r + p.v);
  return j;
}

PerronResult perron(const Eigen::MatrixXd& m, std::uint64_t max_iter) {
  const Eigen::Index n = m.rows();
  const double rho = 1.0 + m.diagonal().cwiseAbs().maxCoeff();
  const Eigen::MatrixXd b = m.transpose() + rho * Eigen::MatrixXd::Identity(n, n);
  if ((b.array() < 0.0).any()) throw PreconditionError("Perron iteration needs nonnegative off-diagonal rates");

  PerronResult out;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double estimate = 0.0;
  for (std::uint64_t it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd w = b * v;
    const double next = w.sum() / v.sum();
    v = w / w.sum();
    out.iterations = it;
    if (it > 1 && std::abs(next - estimate) < 1e-12) {
      estimate = next;
      break;
    }
    estimate = next;
    if (it == max_iter) throw ConvergenceError("Perron power iteration did not converge");
  }
  // a few extra sweeps settle the vector once the eigenvalue has converged
  for (int extra = 0; extra < 50; ++extra) {
    const Eigen::VectorXd w = b * v;
    v = w / w.sum();
  }
  out.value = estimate - rho;
  out.left_vector = v;
  out.residual = (m.transpose() * v - out.value * v).cwiseAbs().maxCoeff();
  return out;
}

namespace {

double offspring_product(const BpChannel& c, const Eigen::VectorXd& s) {
  double prod = 1.0;
  for (std::size_t j = 0; j < c.offspring.size(); ++j)
    for (int k = 0; k < c.offspring[j]; ++k) prod *= s[static_cast<Eigen::Index>(j)];
  return prod;
}

// Jacobian of extinction_map.
Eigen::MatrixXd extinction_map_jacobian(const BranchingProcess& bp, const Eigen::VectorXd& s) {
  const auto totals = bp.total_rates();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(bp.types(), bp.types());
  for (const auto& c : bp.channels) {
    for (std::size_t j = 0; j < c.offspring.size(); ++j) {
      const int power = c.offspring[j];
      if (power == 0) continue;
      double partial = power * std::pow(s[static_cast<Eigen::Index>(j)], power - 1);
      for (std::size_t k = 0; k < c.offspring.size(); ++k)
        if (k != j) partial *= std::pow(s[static_cast<Eigen::Index>(k)], c.offspring[k]);
      d(c.type, static_cast<Eigen::Index>(j)) += c.rate * partial / totals[c.type];
    }
  }
  return d;
}

}  // namespace

Eigen::VectorXd extinction_map(const BranchingProcess& bp, const Eigen::VectorXd& s) {
  const auto totals = bp.total_rates();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(bp.types());
  for (const auto& c : bp.channels) out[c.type] += c.rate * offspring_product(c, s);
  return out.cwiseQuotient(totals);
}

double extinction_residual(const BranchingProcess& bp, const Eigen::VectorXd& s) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(bp.types());
  for (const auto& c : bp.channels) g[c.type] += c.rate * (offspring_product(c, s) - s[c.type]);
  return g.cwiseAbs().maxCoeff();
}

ExtinctionResult extinction_fixed_point(const BranchingProcess& bp, double tol, std::uint64_t max_iter) {
  if ((bp.total_rates().array() <= 0.0).any()) throw PreconditionError("every type needs a positive total event rate");
  ExtinctionResult out;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(bp.types());
  for (std::uint64_t it = 1;; ++it) {
    const Eigen::VectorXd next = extinction_map(bp, s);
    // iterates from 0 increase monotonically towards the minimal solution
    if (((next - s).array() < -1e-15).any()) throw std::logic_error("extinction iteration lost monotonicity");
    const double step = (next - s).cwiseAbs().maxCoeff();
    s = next;
    out.iterations = it;
    if (step < tol) break;
    if (it >= max_iter) throw ConvergenceError("extinction fixed point did not converge (near-critical parameters?)");
  }
  const double before = extinction_residual(bp, s);
  const Eigen::MatrixXd jac = extinction_map_jacobian(bp, s) - Eigen::MatrixXd::Identity(bp.types(), bp.types());
  const Eigen::VectorXd delta = jac.fullPivLu().solve(-(extinction_map(bp, s) - s));
  const Eigen::VectorXd polished = (s + delta).cwiseMax(0.0).cwiseMin(1.0);
  if (delta.allFinite() && extinction_residual(bp, polished) <= before) {
    s = polished;
    out.newton_polished = true;
  }
  out.s = s;
  out.residual = extinction_residual(bp, s);
  return out;
}

BranchingReport analyze_branching(const ModelParams& p, Direction which) {
  const auto eq = equilibrium_report(p);
  BranchingReport rep;
  rep.which = which;
  if (which == Direction::Inv2) {
    rep.process = bp_rates_inv2(p, eq.n_star);
    if (!(p.q > 0.0 && p.q < 1.0 && p.r > 0.0 && p.sigma > 0.0))
      throw PreconditionError("type-2 branching process needs 0 < q < 1, r > 0 and sigma > 0 (irreducibility)");
  } else {
    rep.process = bp_rates_inv1(p, eq.n_tilde);
    if (!(p.r > 0.0 && p.D * eq.n_tilde.n3() > 0.0))
      throw PreconditionError("type-1 branching process needs r > 0 and D*n3 > 0 (irreducibility)");
  }
  rep.mean_matrix = mean_matrix(p, eq, which);
  rep.perron = perron(rep.mean_matrix);
  const double lambda = rep.perron.value;
  rep.criticality = std::abs(lambda) < kNearCriticalTol ? Criticality::Critical
                    : lambda > 0.0                      ? Criticality::Super
                                                        : Criticality::Sub;
  if (rep.criticality == Criticality::Critical) {
    rep.extinction_probs = Eigen::VectorXd::Ones(rep.process.types());
    rep.fixed_point_residual = 0.0;
    return rep;
  }
  const auto fp = extinction_fixed_point(rep.process);
  rep.fixed_point_iterations = fp.iterations;
  rep.extinction_probs = fp.s;
  if (rep.criticality == Criticality::Sub) {
    if ((1.0 - fp.s.array()).maxCoeff() > 1e-6)
      throw ConvergenceError("subcritical process but extinction probabilities below one");
    rep.extinction_probs.setOnes();
  }
  rep.fixed_point_residual = extinction_residual(rep.process, rep.extinction_probs);
  return rep;
}

BpRun simulate_bp(const BranchingProcess& bp, std::vector<std::int64_t> counts, Rng& rng, const BpSimConfig& cfg) {
  if (counts.size() != static_cast<std::size_t>(bp.types())) throw PreconditionError("initial state has wrong size");
  BpRun run;
  double t = 0.0;
  double next_record = 0.0;
  const std::size_t nc = bp.channels.size();
  std::vector<double> rates(nc);
  auto record_until = [&](double time) {
    if (cfg.record_stride <= 0.0) return;
    while (next_record <= time && next_record <= cfg.t_max) {
      run.path.push_back({next_record, counts});
      next_record += cfg.record_stride;
    }
  };
  while (true) {
    const std::int64_t total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    if (total == 0) {
      run.extinct = true;
      break;
    }
    if (cfg.population_cap > 0 && total >= cfg.population_cap) {
      run.reached_cap = true;
      break;
    }
    double a0 = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      rates[c] = bp.channels[c].rate * static_cast<double>(counts[static_cast<std::size_t>(bp.channels[c].type)]);
      a0 += rates[c];
    }
    const double dt = exponential(rng, a0);
    if (t + dt > cfg.t_max) {
      record_until(cfg.t_max);
      t = cfg.t_max;
      break;
    }
    record_until(t + dt);
    t += dt;
    double target = open_uniform(rng) * a0;
    std::size_t pick = 0;
    for (; pick + 1 < nc; ++pick) {
      if (target <= rates[pick] && rates[pick] > 0.0) break;
      target -= rates[pick];
    }
    while (rates[pick] == 0.0) --pick;  // guard against rounding past the last live channel
    const auto& ch = bp.channels[pick];
    --counts[static_cast<std::size_t>(ch.type)];
    for (std::size_t j = 0; j < ch.offspring.size(); ++j) counts[j] += ch.offspring[j];
  }
  run.end_time = t;
  run.final_counts = counts;
  return run;
}

}  // namespace dormancy
