#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dormancy/branching.hpp"
#include "dormancy/model.hpp"

namespace dormancy {

struct InvasionExperiment {
  Direction direction = Direction::Inv2;
  ModelParams params;
  std::vector<double> K_list{1000};
  int replicas = 1000;
  double beta = 0.05;
  double delta = 0.1;
  double b_factor = 2.0;
  double t_max = 1e3;
  std::uint64_t event_cap = 1'000'000'000;
  std::uint64_t fate_event_cap = 5'000'000'000;
  std::uint64_t base_seed = 20240601;
  /// Continue successful replicas to the fate targets.
  bool fate = false;
  unsigned threads = 0;
};

/// Reads the optional `experiment` table (keys direction, K_list, replicas,
/// beta, delta, b_factor, t_max, event_cap, fate_event_cap, seed, fate).
InvasionExperiment experiment_from_json(const ModelParams& p, const nlohmann::json& table);
nlohmann::json to_json(const InvasionExperiment& exp);

enum class InvasionOutcome { Success, Failure, Undecided };
enum class Fate { NotRun, Coexistence, InvaderFixation, ResidentFixation, Undecided };
std::string_view to_string(InvasionOutcome o);
std::string_view to_string(Fate f);

struct ReplicaRecord {
  double K = 0.0;
  int replica = 0;
  InvasionOutcome outcome = InvasionOutcome::Undecided;
  std::optional<double> T_beta;
  std::optional<double> T_0;
  Fate fate = Fate::NotRun;
  std::optional<double> fate_time;  ///< absolute time the fate target was hit
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double center = 0.0;
  /// half-width divided by z
  double sigma = 0.0;
};

/// Wilson score interval for k successes in n trials.
Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.959963984540054);

struct FateTally {
  int coexistence = 0;
  int invader_fixation = 0;
  int resident_fixation = 0;
  int undecided = 0;
  std::optional<double> mean_fixation_time_over_logK;
};

struct PerKSummary {
  double K = 0.0;
  int successes = 0;
  int failures = 0;
  int undecided = 0;
  Interval success_probability;  ///< over decided replicas
  std::optional<double> mean_T_beta_over_logK;
  std::optional<double> stderr_T_beta_over_logK;
  std::optional<double> q10_T_beta_over_logK;
  std::optional<double> median_T_beta_over_logK;
  std::optional<double> q90_T_beta_over_logK;
  std::optional<double> median_T0_over_logK;
  std::optional<FateTally> fate;
};

struct InvasionTheory {
  double invasion_probability = 0.0;  ///< 1 - s of the active invader type
  double perron_value = 0.0;          ///< lambda* or lambda~
  double inverse_perron = 0.0;
  /// 1/lambda + 1/|leading eigenvalue of the reverse direction|, when both exist.
  std::optional<double> fixation_timescale;
  Criticality criticality = Criticality::Critical;
};

struct InvasionResult {
  InvasionExperiment experiment;
  InvasionTheory theory;
  std::vector<PerKSummary> per_K;
  std::vector<ReplicaRecord> replicas;
  std::vector<std::string> warnings;
};

/// Refuses (PreconditionError) when the resident equilibrium is missing or not
/// stable in its own subsystem, or when K times its smallest coordinate is
/// below 10.
InvasionResult run_invasion(const InvasionExperiment& exp);

/// run_invasion with fate continuation enabled: successful replicas continue
/// until they enter the delta-neighbourhood of x, of the invader's own
/// host-virus equilibrium (resident host extinct) or of the resident
/// equilibrium (invader extinct), or until t_max.
InvasionResult run_fate(InvasionExperiment exp);

void write_replicas_csv(std::ostream& out, const InvasionResult& result);
nlohmann::json to_json(const InvasionResult& result);

}  // namespace dormancy
