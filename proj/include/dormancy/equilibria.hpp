#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

#include "dormancy/model.hpp"

namespace dormancy {

/// Absolute tolerance under which a condition counts as holding with equality.
inline constexpr double kCriticalTol = 1e-12;

struct LvEquilibria {
  double bar_n1a = 0.0;
  double bar_n2a = 0.0;
};

/// Host-virus equilibrium (n1a*, n1i*, n3*) of the three-type system.
struct HostVirusEquilibrium {
  bool exists = false;
  bool critical = false;
  std::string failure;  ///< the violated inequality when !exists
  Eigen::Vector3d value = Eigen::Vector3d::Zero();

  double n1a() const { return value[0]; }
  double n1i() const { return value[1]; }
  double n3() const { return value[2]; }
  /// Embedding into the six-type state with type 2 absent.
  Vec6 embedded() const;
};

/// Dormancy-virus equilibrium (ñ2a, ñ2d, ñ2i, ñ3) of the four-type system.
struct DormancyVirusEquilibrium {
  bool exists = false;
  bool critical = false;
  std::string failure;
  Eigen::Vector4d value = Eigen::Vector4d::Zero();

  double n2a() const { return value[0]; }
  double n2d() const { return value[1]; }
  double n2i() const { return value[2]; }
  double n3() const { return value[3]; }
  Vec6 embedded() const;
};

/// The unique coordinatewise nonzero equilibrium of the six-type system.
/// Values are kept when some coordinate is negative.
struct CoexistenceEquilibrium {
  bool defined = false;   ///< false for degenerate parameters
  bool positive = false;  ///< every coordinate > 0
  std::string failure;
  Vec6 value = Vec6::Zero();
};

struct InvasionConditions {
  double theta_star = 0.0;
  double theta_tilde = 0.0;
  bool inv2_applicable = false;
  bool inv1_applicable = false;
  bool inv2 = false;  ///< lambda1 - lambda2 < theta_star
  bool inv1 = false;  ///< lambda1 - lambda2 > theta_tilde
  bool inv2_critical = false;
  bool inv1_critical = false;
};

struct EquilibriumReport {
  LvEquilibria lv;
  HostVirusEquilibrium n_star;
  DormancyVirusEquilibrium n_tilde;
  CoexistenceEquilibrium x;
  InvasionConditions conditions;
  bool coex13 = false;
  bool coex23 = false;
  /// q = 0, r*kappa*mu1 = v*sigma, m*v = r+v or an equality boundary.
  bool degenerate = false;
};

LvEquilibria lv_equilibria(const ModelParams& p);
HostVirusEquilibrium host_virus_equilibrium(const ModelParams& p);
DormancyVirusEquilibrium dormancy_virus_equilibrium(const ModelParams& p);
CoexistenceEquilibrium coexistence_equilibrium(const ModelParams& p);

/// Theta* = qDn3*(v sigma - r kappa mu1)/((r+v)(kappa mu1 + sigma)), as a
/// function of the resident virion level.
double invasion_threshold(const ModelParams& p, double n3);

InvasionConditions invasion_conditions(const ModelParams& p, const HostVirusEquilibrium& n_star,
                                       const DormancyVirusEquilibrium& n_tilde);

EquilibriumReport equilibrium_report(const ModelParams& p);

}  // namespace dormancy
