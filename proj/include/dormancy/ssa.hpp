#pragma once

#include <bitset>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dormancy/model.hpp"
#include "dormancy/rng.hpp"

namespace dormancy {

struct SsaConfig {
  std::uint64_t seed = 20240601;
  double t_max = 1e3;
  std::uint64_t event_cap = 1'000'000'000;
  double record_stride = 1.0;
  bool record_trajectory = true;
};

void validate(const SsaConfig& cfg);

/// Subset of the six types, bit i for coordinate i of PopulationState.
using TypeSet = std::bitset<6>;
inline constexpr TypeSet kType1Set{0b000011};
inline constexpr TypeSet kType2Set{0b011100};
inline constexpr TypeSet kVirionSet{0b100000};

TypeSet parse_type_set(std::string_view names);  ///< e.g. "2a,2d,2i" or "2"
std::string format_type_set(TypeSet set);

/// Every coordinate of N/K exceeds beta.
struct BetaStop {
  double beta = 0.05;
  bool halt = true;
};

/// Sum of the counts in `set` is zero.
struct ExtinctionStop {
  TypeSet set;
  bool halt = true;
};

/// Sum of the counts in `set` equals floor(epsilon K).
struct EpsilonStop {
  TypeSet set;
  double epsilon = 0.02;
  bool halt = false;
};

/// ||N/K - point||_inf <= delta, and every type in require_extinct has count 0.
struct NeighborhoodStop {
  std::string label;
  Vec6 point = Vec6::Zero();
  double delta = 0.1;
  TypeSet require_extinct;
  bool halt = true;
};

/// Some coordinate in `coords` leaves [center - half_width, center + half_width].
struct BandExitStop {
  Vec6 center = Vec6::Zero();
  TypeSet coords;
  double half_width = 0.04;
  bool halt = false;
};

struct StoppingSpec {
  std::optional<BetaStop> beta;
  std::vector<ExtinctionStop> extinction;
  std::vector<EpsilonStop> epsilon;
  std::vector<NeighborhoodStop> neighborhood;
  std::optional<BandExitStop> band;
};

enum class Termination { TMax, EventCap, Absorbing, Halted };
std::string_view to_string(Termination t);

struct StopHit {
  std::string label;
  std::optional<double> time;
};

struct SsaOutcome {
  std::vector<double> times;
  std::vector<PopulationState> states;
  /// One entry per requested stop, in the order beta, extinction, epsilon,
  /// neighborhood, band.
  std::vector<StopHit> hits;
  PopulationState final_state;
  double final_time = 0.0;
  std::uint64_t events = 0;
  Termination reason = Termination::TMax;
  std::optional<std::string> halted_by;

  std::optional<double> hit_time(std::string_view label) const;
};

/// Labels used in SsaOutcome::hits for the given spec.
std::vector<std::string> stop_labels(const StoppingSpec& stops);

/// Exact direct-method simulation from `initial` at time `t_start`, drawing
/// from `rng`. Stopping predicates are checked at the start and after every
/// jump.
SsaOutcome run_ssa(const ModelParams& p, const PopulationState& initial, const SsaConfig& cfg,
                   const StoppingSpec& stops, Rng& rng, double t_start = 0.0);

/// Same, with a generator seeded from cfg.seed.
SsaOutcome run_ssa(const ModelParams& p, const PopulationState& initial, const SsaConfig& cfg,
                   const StoppingSpec& stops = {});

struct MeanPathPoint {
  double time = 0.0;
  Vec6 mean = Vec6::Zero();
  Vec6 stderr_ = Vec6::Zero();
};

/// Pointwise mean and standard error of N(t)/K over replicas seeded with
/// replica_rng(cfg.seed, r), on the record grid up to cfg.t_max.
std::vector<MeanPathPoint> mean_path(const ModelParams& p, const PopulationState& initial, const SsaConfig& cfg,
                                     int replicas, unsigned threads = 0);

void write_trajectory_csv(std::ostream& out, const SsaOutcome& outcome);
nlohmann::json hits_json(const SsaOutcome& outcome);

}  // namespace dormancy
