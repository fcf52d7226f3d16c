#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dormancy/equilibria.hpp"
#include "dormancy/model.hpp"
#include "dormancy/rng.hpp"

namespace dormancy {

/// Which host type invades: Inv2 is type 2 entering the (1,3) equilibrium n*,
/// Inv1 is type 1 entering the (2,3) equilibrium ñ.
enum class Direction { Inv2, Inv1 };
std::string_view to_string(Direction d);

/// One per-capita event of a linear branching process: an individual of type
/// `type` is replaced by `offspring` (counts per type) at rate `rate`.
struct BpChannel {
  std::string name;
  int type = 0;
  double rate = 0.0;
  std::vector<int> offspring;
};

/// Linear birth-death-switching process in a frozen resident environment.
struct BranchingProcess {
  Direction direction = Direction::Inv2;
  std::vector<std::string> type_names;
  std::vector<BpChannel> channels;

  int types() const { return static_cast<int>(type_names.size()); }
  /// Sum of channel rates per type.
  Eigen::VectorXd total_rates() const;
  /// Mean matrix assembled from the channels: M(i,j) is the rate of change of
  /// the expected type-j count generated by one type-i individual.
  Eigen::MatrixXd channel_mean_matrix() const;
};

/// Types (2a, 2d, 2i) against the resident n*.
BranchingProcess bp_rates_inv2(const ModelParams& p, const HostVirusEquilibrium& n_star);
/// Types (1a, 1i) against the resident ñ. Competition uses all three type-2
/// host classes.
BranchingProcess bp_rates_inv1(const ModelParams& p, const DormancyVirusEquilibrium& n_tilde);

/// Mean matrix written out entrywise: J* (3x3) for Inv2, J̃ (2x2) for Inv1.
/// Equals the transpose of matrix_A / matrix_F with identical arithmetic.
Eigen::MatrixXd mean_matrix(const ModelParams& p, const EquilibriumReport& eq, Direction which);

enum class Criticality { Sub, Critical, Super };
std::string_view to_string(Criticality c);

/// |perron value| below which a process is reported critical.
inline constexpr double kNearCriticalTol = 1e-6;

struct PerronResult {
  double value = 0.0;
  Eigen::VectorXd left_vector;  ///< nonnegative, sums to 1
  std::uint64_t iterations = 0;
  double residual = 0.0;  ///< ||pi M - value pi||_inf
};

/// Power iteration on M^T + rho I with rho = 1 + max|diag M|, stopped when
/// successive eigenvalue estimates differ by < 1e-12.
PerronResult perron(const Eigen::MatrixXd& m, std::uint64_t max_iter = 10'000'000);

struct ExtinctionResult {
  Eigen::VectorXd s;
  std::uint64_t iterations = 0;
  double residual = 0.0;  ///< sup-norm of the rate-weighted fixed-point equations
  bool newton_polished = false;
};

/// First-jump generating-function map s -> f(s).
Eigen::VectorXd extinction_map(const BranchingProcess& bp, const Eigen::VectorXd& s);
/// sup_i |sum_c rate_c (prod_j s_j^{offspring_j} - s_i)|.
double extinction_residual(const BranchingProcess& bp, const Eigen::VectorXd& s);

/// Minimal fixed point of extinction_map by monotone iteration from 0,
/// followed by one Newton step. Throws ConvergenceError when the cap is hit.
ExtinctionResult extinction_fixed_point(const BranchingProcess& bp, double tol = 1e-14,
                                        std::uint64_t max_iter = 10'000'000);

struct BranchingReport {
  Direction which = Direction::Inv2;
  BranchingProcess process;
  Eigen::MatrixXd mean_matrix;
  Eigen::VectorXd extinction_probs;
  Criticality criticality = Criticality::Critical;
  PerronResult perron;
  std::uint64_t fixed_point_iterations = 0;
  double fixed_point_residual = 0.0;
};

/// Complete analysis for one direction. Throws PreconditionError when the base
/// equilibrium is missing or the mean matrix is reducible.
BranchingReport analyze_branching(const ModelParams& p, Direction which);

struct BpSample {
  double time = 0.0;
  std::vector<std::int64_t> counts;
};

struct BpRun {
  bool extinct = false;
  bool reached_cap = false;
  double end_time = 0.0;
  std::vector<std::int64_t> final_counts;
  std::vector<BpSample> path;  ///< sampled every record_stride when requested
};

struct BpSimConfig {
  double t_max = 1e3;
  /// Stop once the total population reaches this size (0 disables).
  std::int64_t population_cap = 0;
  /// Spacing of the recorded path; 0 records nothing.
  double record_stride = 0.0;
};

/// Exact Gillespie simulation of the branching process.
BpRun simulate_bp(const BranchingProcess& bp, std::vector<std::int64_t> initial, Rng& rng, const BpSimConfig& cfg);

}  // namespace dormancy
