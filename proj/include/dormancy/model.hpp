#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace dormancy {

/// Rate constants of the host-virus-dormancy model plus the carrying capacity.
///
/// Pairwise rates (C, D) are per pair and get divided by K in the individual
/// based model; in the rescaled ODE they enter unscaled.
struct ModelParams {
  double lambda1 = 0.0;  ///< birth rate of 1a
  double lambda2 = 0.0;  ///< birth rate of 2a
  double mu1 = 0.0;      ///< natural death rate of active hosts
  double C = 0.0;        ///< competition strength
  double D = 0.0;        ///< virion contact rate
  double q = 0.0;        ///< probability that a 2a-virion contact triggers dormancy
  double r = 0.0;        ///< recovery rate of infected hosts
  double v = 0.0;        ///< lysis rate
  double m = 1.0;        ///< burst size; must be integral for stochastic runs
  double sigma = 0.0;    ///< resuscitation rate
  double kappa = 0.0;    ///< dormant death-rate factor
  double mu3 = 0.0;      ///< virion degradation rate
  double K = 1.0;        ///< carrying capacity

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Parameter keys in serialization order.
inline constexpr std::array<std::string_view, 13> kParamKeys{
    "lambda1", "lambda2", "mu1", "C", "D", "q", "r", "v", "m", "sigma", "kappa", "mu3", "K"};

double& param_ref(ModelParams& p, std::string_view key);
double param_value(const ModelParams& p, std::string_view key);

/// Throws ConfigError on a violated invariant. Returns soft warnings, e.g. when
/// the standing fitness ordering 0 < mu1 < lambda2 fails.
std::vector<std::string> validate(const ModelParams& p);

/// Extra requirements of the individual-based model: integral m and K.
void require_stochastic(const ModelParams& p);

/// Host and virion types in state-vector order.
enum class Type : int { A1 = 0, I1 = 1, A2 = 2, D2 = 3, I2 = 4, V3 = 5 };
inline constexpr int kTypeCount = 6;
inline constexpr std::array<std::string_view, 6> kTypeNames{"n1a", "n1i", "n2a", "n2d", "n2i", "n3"};

using Counts = std::array<std::int64_t, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Absolute particle counts of the six types.
struct PopulationState {
  Counts counts{};

  std::int64_t& operator[](Type t) { return counts[static_cast<std::size_t>(t)]; }
  std::int64_t operator[](Type t) const { return counts[static_cast<std::size_t>(t)]; }

  std::int64_t n1() const { return counts[0] + counts[1]; }
  std::int64_t n2() const { return counts[2] + counts[3] + counts[4]; }
  bool valid() const;
  Vec6 rescaled(double K) const;

  friend bool operator==(const PopulationState&, const PopulationState&) = default;
};

/// Rounds K * point to the nearest lattice state (negative entries become 0).
PopulationState lattice_point(const Vec6& point, double K);

enum class TransitionKind : std::uint8_t {
  Birth1a,
  Death1a,
  Infection1a,
  Recovery1i,
  Lysis1i,
  Birth2a,
  Death2a,
  Infection2a,
  Dormancy2a,
  Recovery2i,
  Lysis2i,
  Resuscitation2d,
  Death2d,
  VirionDecay,
};
inline constexpr std::size_t kTransitionCount = 14;

std::string_view to_string(TransitionKind kind);

struct Transition {
  TransitionKind kind;
  Counts delta;
  double rate;
};

/// Change vector of a transition; lysis releases `burst` virions.
Counts transition_delta(TransitionKind kind, std::int64_t burst);

/// Rates of all 14 transitions, indexed by TransitionKind.
std::array<double, kTransitionCount> transition_rates(const ModelParams& p, const PopulationState& s);

std::array<Transition, kTransitionCount> enumerate_transitions(const ModelParams& p, const PopulationState& s);

double total_rate(const ModelParams& p, const PopulationState& s);

}  // namespace dormancy
