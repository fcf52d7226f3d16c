#include "dormancy/model.hpp"

#include <cmath>
#include <sstream>

#include "dormancy/errors.hpp"

namespace dormancy {

double& param_ref(ModelParams& p, std::string_view key) {
  if (key == "lambda1") return p.lambda1;
  if (key == "lambda2") return p.lambda2;
  if (key == "mu1") return p.mu1;
  if (key == "C") return p.C;
  if (key == "D") return p.D;
  if (key == "q") return p.q;
  if (key == "r") return p.r;
  if (key == "v") return p.v;
  if (key == "m") return p.m;
  if (key == "sigma") return p.sigma;
  if (key == "kappa") return p.kappa;
  if (key == "mu3") return p.mu3;
  if (key == "K") return p.K;
  throw ConfigError("unknown parameter key '" + std::string(key) + "'");
}

double param_value(const ModelParams& p, std::string_view key) {
  return param_ref(const_cast<ModelParams&>(p), key);
}

std::vector<std::string> validate(const ModelParams& p) {
  for (auto key : kParamKeys) {
    const double x = param_value(p, key);
    if (!std::isfinite(x)) throw ConfigError("parameter " + std::string(key) + " is not finite");
    if (x < 0.0) throw ConfigError("parameter " + std::string(key) + " must be nonnegative");
  }
  if (p.q > 1.0) throw ConfigError("parameter q must lie in [0,1]");
  if (p.m < 1.0) throw ConfigError("parameter m (burst size) must be >= 1");
  if (p.K < 1.0) throw ConfigError("parameter K must be >= 1");

  std::vector<std::string> warnings;
  if (!(0.0 < p.mu1 && p.mu1 < p.lambda2)) {
    std::ostringstream os;
    os << "fitness ordering 0 < mu1 < lambda2 violated (mu1=" << p.mu1 << ", lambda2=" << p.lambda2 << ")";
    warnings.push_back(os.str());
  }
  return warnings;
}

void require_stochastic(const ModelParams& p) {
  validate(p);
  if (p.m != std::floor(p.m)) throw ConfigError("stochastic runs need an integral burst size m");
  if (p.K != std::floor(p.K)) throw ConfigError("stochastic runs need an integral carrying capacity K");
}

bool PopulationState::valid() const {
  for (auto c : counts)
    if (c < 0) return false;
  return true;
}

Vec6 PopulationState::rescaled(double K) const {
  Vec6 out;
  for (int i = 0; i < kTypeCount; ++i) out[i] = static_cast<double>(counts[i]) / K;
  return out;
}

PopulationState lattice_point(const Vec6& point, double K) {
  PopulationState s;
  for (int i = 0; i < kTypeCount; ++i) s.counts[i] = std::max<std::int64_t>(0, std::llround(K * point[i]));
  return s;
}

std::string_view to_string(TransitionKind kind) {
  switch (kind) {
    case TransitionKind::Birth1a: return "1a_birth";
    case TransitionKind::Death1a: return "1a_death";
    case TransitionKind::Infection1a: return "1a_infection";
    case TransitionKind::Recovery1i: return "1i_recovery";
    case TransitionKind::Lysis1i: return "1i_lysis";
    case TransitionKind::Birth2a: return "2a_birth";
    case TransitionKind::Death2a: return "2a_death";
    case TransitionKind::Infection2a: return "2a_infection";
    case TransitionKind::Dormancy2a: return "2a_dormancy";
    case TransitionKind::Recovery2i: return "2i_recovery";
    case TransitionKind::Lysis2i: return "2i_lysis";
    case TransitionKind::Resuscitation2d: return "2d_resuscitation";
    case TransitionKind::Death2d: return "2d_death";
    case TransitionKind::VirionDecay: return "virion_decay";
  }
  return "unknown";
}

Counts transition_delta(TransitionKind kind, std::int64_t burst) {
  //                        1a  1i  2a  2d  2i  3
  switch (kind) {
    case TransitionKind::Birth1a: return {+1, 0, 0, 0, 0, 0};
    case TransitionKind::Death1a: return {-1, 0, 0, 0, 0, 0};
    case TransitionKind::Infection1a: return {-1, +1, 0, 0, 0, -1};
    case TransitionKind::Recovery1i: return {+1, -1, 0, 0, 0, 0};
    case TransitionKind::Lysis1i: return {0, -1, 0, 0, 0, burst};
    case TransitionKind::Birth2a: return {0, 0, +1, 0, 0, 0};
    case TransitionKind::Death2a: return {0, 0, -1, 0, 0, 0};
    case TransitionKind::Infection2a: return {0, 0, -1, 0, +1, -1};
    // the virion is repelled, so n3 is unchanged
    case TransitionKind::Dormancy2a: return {0, 0, -1, +1, 0, 0};
    case TransitionKind::Recovery2i: return {0, 0, +1, 0, -1, 0};
    case TransitionKind::Lysis2i: return {0, 0, 0, 0, -1, burst};
    case TransitionKind::Resuscitation2d: return {0, 0, +1, -1, 0, 0};
    case TransitionKind::Death2d: return {0, 0, 0, -1, 0, 0};
    case TransitionKind::VirionDecay: return {0, 0, 0, 0, 0, -1};
  }
  return {};
}

std::array<double, kTransitionCount> transition_rates(const ModelParams& p, const PopulationState& s) {
  const double n1a = static_cast<double>(s.counts[0]);
  const double n1i = static_cast<double>(s.counts[1]);
  const double n2a = static_cast<double>(s.counts[2]);
  const double n2d = static_cast<double>(s.counts[3]);
  const double n2i = static_cast<double>(s.counts[4]);
  const double n3 = static_cast<double>(s.counts[5]);
  const double hosts = n1a + n1i + n2a + n2d + n2i;

  // competition counts the focal individual itself
  const double death = p.mu1 + (p.C / p.K) * hosts;
  const double contact = p.D / p.K;

  return {
      p.lambda1 * n1a,
      death * n1a,
      contact * n1a * n3,
      p.r * n1i,
      p.v * n1i,
      p.lambda2 * n2a,
      death * n2a,
      (1.0 - p.q) * contact * n2a * n3,
      p.q * contact * n2a * n3,
      p.r * n2i,
      p.v * n2i,
      p.sigma * n2d,
      p.kappa * p.mu1 * n2d,
      p.mu3 * n3,
  };
}

std::array<Transition, kTransitionCount> enumerate_transitions(const ModelParams& p, const PopulationState& s) {
  const auto rates = transition_rates(p, s);
  const auto burst = static_cast<std::int64_t>(std::llround(p.m));
  std::array<Transition, kTransitionCount> out{};
  for (std::size_t i = 0; i < kTransitionCount; ++i) {
    const auto kind = static_cast<TransitionKind>(i);
    out[i] = Transition{kind, transition_delta(kind, burst), rates[i]};
  }
  return out;
}

double total_rate(const ModelParams& p, const PopulationState& s) {
  double sum = 0.0;
  for (double r : transition_rates(p, s)) sum += r;
  return sum;
}

}  // namespace dormancy
