#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dormancy/model.hpp"
#include "dormancy/stability.hpp"

namespace dormancy {

enum class Regime {
  Red,
  Purple,
  DarkGreenCoex,
  LightGreenCoex,
  Blue,
  Orange,
  FounderControlCoex23,
  FounderControlNoCoex23,
  NoEpidemic,
  Critical
};
inline constexpr int kRegimeCount = 10;

std::string_view to_string(Regime r);
/// Legend colour of the regime map.
std::string_view regime_color(Regime r);

/// Band in which a defining inequality counts as an equality.
inline constexpr double kRegimeCriticalTol = 1e-9;

struct RegimeCell {
  double lambda2 = 0.0;
  double q = 0.0;
  Regime regime = Regime::NoEpidemic;
  bool coex13 = false;
  bool coex23 = false;
  bool inv2 = false;
  bool inv1 = false;  ///< only meaningful when coex23
  std::optional<double> x3;  ///< when x is defined
  std::optional<double> n3_star;
  std::optional<double> n_tilde3;
  bool x_positive = false;
  std::optional<StabilityClass> n_star_stability;   ///< within the host-virus subsystem
  std::optional<StabilityClass> n_tilde_stability;  ///< within the dormancy-virus subsystem
  std::optional<StabilityClass> x_stability;        ///< when x is positive
  /// Smallest |margin| over the defining inequalities that apply.
  double min_margin = 0.0;
};

/// Pure function of the parameters; the decision tree runs on the diagnostics.
RegimeCell classify(const ModelParams& p);

struct GridSpec {
  double lambda2_min = 1.2;
  double lambda2_max = 4.0;
  int lambda2_count = 400;
  double q_min = 0.01;
  double q_max = 0.99;
  int q_count = 400;
};

void validate(const GridSpec& g);
/// "400x400" -> lambda2_count x q_count over the default ranges.
GridSpec parse_grid(std::string_view text);
/// Inclusive linspace; a count of 1 yields the minimum.
double grid_value(double lo, double hi, int count, int index);

struct RegimeGrid {
  ModelParams base;
  GridSpec spec;
  /// Row-major: lambda2 index outer, q index inner.
  std::vector<RegimeCell> cells;

  const RegimeCell& at(int i_lambda2, int i_q) const {
    return cells[static_cast<std::size_t>(i_lambda2) * static_cast<std::size_t>(spec.q_count) +
                 static_cast<std::size_t>(i_q)];
  }
  int count(Regime r) const;
};

RegimeGrid sweep(const ModelParams& base, const GridSpec& spec, unsigned threads = 0);

void write_regimes_csv(std::ostream& out, const RegimeGrid& grid);
nlohmann::json regime_legend();
nlohmann::json to_json(const RegimeCell& cell);

}  // namespace dormancy
