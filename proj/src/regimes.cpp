#include "dormancy/regimes.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "dormancy/equilibria.hpp"
#include "dormancy/errors.hpp"
#include "dormancy/parallel.hpp"

namespace dormancy {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Red: return "Red";
    case Regime::Purple: return "Purple";
    case Regime::DarkGreenCoex: return "DarkGreenCoex";
    case Regime::LightGreenCoex: return "LightGreenCoex";
    case Regime::Blue: return "Blue";
    case Regime::Orange: return "Orange";
    case Regime::FounderControlCoex23: return "FounderControlCoex23";
    case Regime::FounderControlNoCoex23: return "FounderControlNoCoex23";
    case Regime::NoEpidemic: return "NoEpidemic";
    case Regime::Critical: return "Critical";
  }
  return "unknown";
}

std::string_view regime_color(Regime r) {
  switch (r) {
    case Regime::Red: return "red";
    case Regime::Purple: return "purple";
    case Regime::DarkGreenCoex: return "darkgreen";
    case Regime::LightGreenCoex: return "lightgreen";
    case Regime::Blue: return "blue";
    case Regime::Orange: return "orange";
    // The founder-control map reuses the green shades for its two regimes.
    case Regime::FounderControlCoex23: return "darkgreen";
    case Regime::FounderControlNoCoex23: return "lightgreen";
    case Regime::NoEpidemic: return "lightgrey";
    case Regime::Critical: return "black";
  }
  return "white";
}

RegimeCell classify(const ModelParams& p) {
  RegimeCell cell;
  cell.lambda2 = p.lambda2;
  cell.q = p.q;
  const auto rep = equilibrium_report(p);
  const auto& c = rep.conditions;
  cell.coex13 = rep.coex13;
  cell.coex23 = rep.coex23;
  cell.inv2 = c.inv2;
  cell.inv1 = c.inv1;
  if (rep.n_star.exists) cell.n3_star = rep.n_star.n3();
  if (rep.n_tilde.exists) cell.n_tilde3 = rep.n_tilde.n3();
  if (rep.x.defined) cell.x3 = rep.x.value[5];
  cell.x_positive = rep.x.positive;

  const auto lv = rep.lv;
  double margin = std::numeric_limits<double>::infinity();
  auto consider = [&](double m) { margin = std::min(margin, std::abs(m)); };
  consider(lv.bar_n1a - rep.n_star.value[0]);
  consider(p.lambda2 - p.lambda1);
  if (rep.n_star.exists) consider(c.theta_star - (p.lambda1 - p.lambda2));
  if (p.q < 1.0) consider(lv.bar_n2a - rep.n_tilde.value[0]);
  if (rep.n_tilde.exists) consider((p.lambda1 - p.lambda2) - c.theta_tilde);
  cell.min_margin = margin;

  if (rep.n_star.exists) cell.n_star_stability = host_virus_subsystem_spectrum(p, rep.n_star).classification;
  if (rep.n_tilde.exists) cell.n_tilde_stability = dormancy_virus_subsystem_spectrum(p, rep.n_tilde).classification;
  if (rep.x.positive) cell.x_stability = classify_equilibrium(p, EquilibriumKind::X).classification;

  if (!cell.coex13 || cell.n_star_stability != StabilityClass::Stable) {
    cell.regime = Regime::NoEpidemic;
    return cell;
  }
  if (margin < kRegimeCriticalTol) {
    cell.regime = Regime::Critical;
    return cell;
  }
  const bool coex23 = cell.coex23 && cell.n_tilde_stability == StabilityClass::Stable;
  const bool above = p.lambda2 > p.lambda1;
  if (coex23) {
    if (c.inv2) cell.regime = c.inv1 ? Regime::DarkGreenCoex : Regime::Blue;
    else cell.regime = c.inv1 ? Regime::Purple : Regime::FounderControlCoex23;
  } else if (c.inv2) {
    cell.regime = above ? Regime::Orange : Regime::LightGreenCoex;
  } else {
    cell.regime = above ? Regime::FounderControlNoCoex23 : Regime::Red;
  }
  return cell;
}

void validate(const GridSpec& g) {
  if (g.lambda2_count < 1 || g.q_count < 1) throw ConfigError("grid resolution must be >= 1");
  if (!(g.lambda2_min <= g.lambda2_max) || !(g.q_min <= g.q_max)) throw ConfigError("grid range must be ordered");
  if (!std::isfinite(g.lambda2_min) || !std::isfinite(g.lambda2_max) || !std::isfinite(g.q_min) ||
      !std::isfinite(g.q_max))
    throw ConfigError("grid range must be finite");
}

GridSpec parse_grid(std::string_view text) {
  GridSpec g;
  const auto x = text.find('x');
  if (x == std::string_view::npos) throw ConfigError("grid must look like 400x400");
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("bad grid size '" + std::string(text) + "'");
    return v;
  };
  g.lambda2_count = parse_int(text.substr(0, x));
  g.q_count = parse_int(text.substr(x + 1));
  validate(g);
  return g;
}

double grid_value(double lo, double hi, int count, int index) {
  if (count <= 1) return lo;
  if (index == count - 1) return hi;
  return lo + (hi - lo) * static_cast<double>(index) / static_cast<double>(count - 1);
}

int RegimeGrid::count(Regime r) const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(), [&](const RegimeCell& c) { return c.regime == r; }));
}

RegimeGrid sweep(const ModelParams& base, const GridSpec& spec, unsigned threads) {
  validate(spec);
  RegimeGrid grid{base, spec, {}};
  const auto nq = static_cast<std::size_t>(spec.q_count);
  grid.cells.resize(static_cast<std::size_t>(spec.lambda2_count) * nq);
  parallel_for(grid.cells.size(), threads, [&](std::size_t k) {
    auto p = base;
    p.lambda2 = grid_value(spec.lambda2_min, spec.lambda2_max, spec.lambda2_count, static_cast<int>(k / nq));
    p.q = grid_value(spec.q_min, spec.q_max, spec.q_count, static_cast<int>(k % nq));
    grid.cells[k] = classify(p);
  });
  return grid;
}

void write_regimes_csv(std::ostream& out, const RegimeGrid& grid) {
  out << "lambda2,q,regime,coex13,coex23,inv2,inv1,x3,n3_star,ntilde3\n";
  out << std::setprecision(17);
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
    else out << "nan";
  };
  for (const auto& c : grid.cells) {
    out << c.lambda2 << ',' << c.q << ',' << to_string(c.regime) << ',' << int(c.coex13) << ',' << int(c.coex23)
        << ',' << int(c.inv2) << ',' << int(c.inv1) << ',';
    opt(c.x3);
    out << ',';
    opt(c.n3_star);
    out << ',';
    opt(c.n_tilde3);
    out << '\n';
  }
}

nlohmann::json regime_legend() {
  nlohmann::json legend = nlohmann::json::object();
  for (int i = 0; i < kRegimeCount; ++i) {
    const auto r = static_cast<Regime>(i);
    legend[std::string(to_string(r))] = regime_color(r);
  }
  return legend;
}

nlohmann::json to_json(const RegimeCell& c) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  auto stab = [](const std::optional<StabilityClass>& s) {
    return s ? nlohmann::json(std::string(to_string(*s))) : nlohmann::json(nullptr);
  };
  return {{"lambda2", c.lambda2},
          {"q", c.q},
          {"regime", to_string(c.regime)},
          {"coex13", c.coex13},
          {"coex23", c.coex23},
          {"inv2", c.inv2},
          {"inv1", c.inv1},
          {"x3", opt(c.x3)},
          {"n3_star", opt(c.n3_star)},
          {"ntilde3", opt(c.n_tilde3)},
          {"x_positive", c.x_positive},
          {"n_star_stability", stab(c.n_star_stability)},
          {"n_tilde_stability", stab(c.n_tilde_stability)},
          {"x_stability", stab(c.x_stability)},
          {"min_margin", c.min_margin}};
}

}  // namespace dormancy
