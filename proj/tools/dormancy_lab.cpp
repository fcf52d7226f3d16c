#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dormancy/branching.hpp"
#include "dormancy/config.hpp"
#include "dormancy/equilibria.hpp"
#include "dormancy/errors.hpp"
#include "dormancy/invasion.hpp"
#include "dormancy/ode.hpp"
#include "dormancy/parallel.hpp"
#include "dormancy/regimes.hpp"
#include "dormancy/report.hpp"
#include "dormancy/ssa.hpp"
#include "dormancy/stability.hpp"
#include "dormancy/version.hpp"

namespace fs = std::filesystem;
using namespace dormancy;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

struct Options {
  std::string subcommand;
  std::string config;
  std::vector<std::string> overrides;
  std::string output = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::string> grid;
};

struct Context {
  Options opt;
  RunConfig run;
  fs::path out;
  json experiment;  ///< resolved options, echoed into the manifest
  std::vector<std::string> files;
};

void write_text(Context& ctx, const std::string& name, const std::string& text) {
  std::ofstream f(ctx.out / name, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + (ctx.out / name).string());
  f << text;
  ctx.files.push_back(name);
}

void write_json(Context& ctx, const std::string& name, const json& j) { write_text(ctx, name, j.dump(2) + "\n"); }

/// Only `allowed` keys may appear in the experiment table of this subcommand.
void check_keys(const json& table, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : table.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown experiment key '" + key + "' for this subcommand");
  }
}

template <typename T>
T get_or(const json& table, const char* key, T fallback) {
  if (!table.contains(key)) return fallback;
  try {
    return table.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment.") + key + ": " + e.what());
  }
}

std::uint64_t seed_of(const Context& ctx) {
  if (ctx.opt.seed) return *ctx.opt.seed;
  return get_or<std::uint64_t>(ctx.run.experiment, "seed", kDefaultSeed);
}

/// Named rescaled starting points; "invade2"/"invade1" add one invader (1/K).
Vec6 named_point(const ModelParams& p, const EquilibriumReport& eq, const std::string& name) {
  auto need = [&](bool ok, const std::string& what, const std::string& why) {
    if (!ok) throw PreconditionError("initial state '" + name + "' needs " + what + ": " + why);
  };
  if (name == "x") {
    need(eq.x.positive, "a positive coexistence equilibrium", eq.x.failure);
    return eq.x.value;
  }
  if (name == "n_star" || name == "invade2") {
    need(eq.n_star.exists, "n*", eq.n_star.failure);
    Vec6 v = eq.n_star.embedded();
    if (name == "invade2") v[2] += 1.0 / p.K;
    return v;
  }
  if (name == "n_tilde" || name == "invade1") {
    need(eq.n_tilde.exists, "n~", eq.n_tilde.failure);
    Vec6 v = eq.n_tilde.embedded();
    if (name == "invade1") v[0] += 1.0 / p.K;
    return v;
  }
  throw ConfigError("unknown initial state '" + name + "' (x, n_star, n_tilde, invade2, invade1)");
}

Vec6 initial_point(const Context& ctx, const EquilibriumReport& eq) {
  const auto& t = ctx.run.experiment;
  if (t.contains("initial") && t["initial"].is_array()) {
    const auto v = get_or<std::vector<double>>(t, "initial", {});
    if (v.size() != 6) throw ConfigError("experiment.initial must have six entries");
    return Eigen::Map<const Vec6>(v.data());
  }
  return named_point(ctx.run.params, eq, get_or<std::string>(t, "initial", "invade2"));
}

int cmd_equilibria(Context& ctx) {
  const auto& p = ctx.run.params;
  const auto rep = equilibrium_report(p);
  auto j = to_json(rep);
  j["residuals"] = json::object();
  if (rep.n_star.exists) j["residuals"]["n_star"] = rhs6(p, rep.n_star.embedded()).cwiseAbs().maxCoeff();
  if (rep.n_tilde.exists) j["residuals"]["n_tilde"] = rhs6(p, rep.n_tilde.embedded()).cwiseAbs().maxCoeff();
  if (rep.x.defined) j["residuals"]["x"] = rhs6(p, rep.x.value).cwiseAbs().maxCoeff();
  write_json(ctx, "equilibria.json", j);
  print_condition_table(std::cout, p, rep);
  return 0;
}

int cmd_stability(Context& ctx) {
  const auto& p = ctx.run.params;
  const auto rep = equilibrium_report(p);
  json j = json::object();
  if (rep.n_star.exists)
    j["n_star"] = {{"full", to_json(classify_equilibrium(p, EquilibriumKind::NStar))},
                   {"host_virus_subsystem", to_json(host_virus_subsystem_spectrum(p, rep.n_star))}};
  if (rep.n_tilde.exists)
    j["n_tilde"] = {{"full", to_json(classify_equilibrium(p, EquilibriumKind::NTilde))},
                    {"dormancy_virus_subsystem", to_json(dormancy_virus_subsystem_spectrum(p, rep.n_tilde))}};
  if (rep.x.positive) j["x"] = {{"full", to_json(classify_equilibrium(p, EquilibriumKind::X))}};
  write_json(ctx, "stability.json", j);
  for (const auto& [name, entry] : j.items()) {
    const auto& full = entry["full"];
    std::cout << std::left << std::setw(8) << name << full["classification"].get<std::string>()
              << "  abscissa=" << full["spectral_abscissa"].get<double>()
              << "  negative real=" << full["real_negative"] << "  positive real=" << full["real_positive"]
              << "  complex pairs=" << full["complex_pairs"] << '\n';
  }
  return 0;
}

int cmd_ode(Context& ctx) {
  const auto& t = ctx.run.experiment;
  check_keys(t, {"initial", "t_end", "output_stride", "rel_tol", "abs_tol"});
  const auto& p = ctx.run.params;
  const Vec6 y0 = initial_point(ctx, equilibrium_report(p));
  IntegratorConfig cfg;
  cfg.t_end = get_or(t, "t_end", 500.0);
  cfg.output_stride = get_or(t, "output_stride", 0.5);
  cfg.rel_tol = get_or(t, "rel_tol", cfg.rel_tol);
  cfg.abs_tol = get_or(t, "abs_tol", cfg.abs_tol);
  ctx.experiment = t;
  const auto sol = integrate([&](const Vec6& y) { return rhs6(p, y); }, y0, cfg);
  std::ostringstream csv;
  write_ode_csv(csv, sol);
  write_text(ctx, "ode.csv", csv.str());
  write_json(ctx, "ode.json",
             {{"status", to_string(sol.status)},
              {"final_time", sol.final_time},
              {"final_state", std::vector<double>(sol.final_state.data(), sol.final_state.data() + 6)},
              {"accepted_steps", sol.accepted_steps},
              {"rejected_steps", sol.rejected_steps}});
  if (sol.status == IntegrationStatus::StepUnderflow || sol.status == IntegrationStatus::StepLimit)
    throw ConvergenceError("integration stopped early: " + std::string(to_string(sol.status)));
  std::cout << "final state at t=" << sol.final_time << ": " << sol.final_state.transpose() << '\n';
  return 0;
}

int cmd_ssa(Context& ctx) {
  const auto& t = ctx.run.experiment;
  check_keys(t, {"initial", "initial_counts", "t_max", "record_stride", "event_cap", "seed", "beta", "extinct"});
  const auto& p = ctx.run.params;
  PopulationState start;
  if (t.contains("initial_counts")) {
    const auto c = get_or<std::vector<std::int64_t>>(t, "initial_counts", {});
    if (c.size() != 6) throw ConfigError("experiment.initial_counts must have six entries");
    std::copy(c.begin(), c.end(), start.counts.begin());
  } else {
    const auto eq = equilibrium_report(p);
    const auto name = get_or<std::string>(t, "initial", "invade2");
    if (name == "invade2" || name == "invade1") {
      start = lattice_point(named_point(p, eq, name == "invade2" ? "n_star" : "n_tilde"), p.K);
      start.counts[name == "invade2" ? 2 : 0] += 1;
    } else {
      start = lattice_point(initial_point(ctx, eq), p.K);
    }
  }
  SsaConfig cfg;
  cfg.seed = seed_of(ctx);
  cfg.t_max = get_or(t, "t_max", 100.0);
  cfg.record_stride = get_or(t, "record_stride", 0.1);
  cfg.event_cap = static_cast<std::uint64_t>(get_or(t, "event_cap", 1e9));
  StoppingSpec stops;
  if (t.contains("beta")) stops.beta = BetaStop{get_or(t, "beta", 0.05), false};
  for (const auto& s : get_or<std::vector<std::string>>(t, "extinct", {}))
    stops.extinction.push_back({parse_type_set(s), false});
  ctx.experiment = t;
  ctx.experiment["seed"] = cfg.seed;
  const auto run = run_ssa(p, start, cfg, stops);
  std::ostringstream csv;
  write_trajectory_csv(csv, run);
  write_text(ctx, "trajectory.csv", csv.str());
  write_json(ctx, "hits.json", hits_json(run));
  std::cout << run.events << " events, termination " << to_string(run.reason) << " at t=" << run.final_time << '\n';
  if (run.reason == Termination::EventCap) throw ConvergenceError("event cap reached before t_max");
  return 0;
}

int cmd_branching(Context& ctx) {
  const auto& t = ctx.run.experiment;
  check_keys(t, {"direction"});
  const auto& p = ctx.run.params;
  const auto which = get_or<std::string>(t, "direction", "both");
  if (which != "both" && which != "inv2" && which != "inv1")
    throw ConfigError("experiment.direction must be both, inv2 or inv1");
  ctx.experiment = t;
  const auto eq = equilibrium_report(p);
  json j = json::object();
  auto run = [&](Direction d, bool available, const std::string& cond, bool holds) {
    const std::string key(to_string(d));
    if (which == "both" && !available) {
      j[key] = nullptr;
      std::cout << key << ": resident equilibrium missing\n";
      return;
    }
    const auto rep = analyze_branching(p, d);
    j[key] = to_json(rep);
    std::cout << key << ": s = " << rep.extinction_probs.transpose() << ", perron = " << rep.perron.value << " ("
              << to_string(rep.criticality) << "), " << cond << " " << (holds ? "holds" : "fails") << '\n';
  };
  if (which != "inv1") run(Direction::Inv2, eq.n_star.exists, "inv2", eq.conditions.inv2);
  if (which != "inv2") run(Direction::Inv1, eq.n_tilde.exists, "inv1", eq.conditions.inv1);
  write_json(ctx, "branching.json", j);
  return 0;
}

int cmd_invasion(Context& ctx, bool fate) {
  auto table = ctx.run.experiment;
  if (ctx.opt.seed) table["seed"] = *ctx.opt.seed;
  auto exp = experiment_from_json(ctx.run.params, table);
  exp.threads = ctx.opt.threads;
  const auto result = fate ? run_fate(exp) : run_invasion(exp);
  ctx.experiment = to_json(result.experiment);
  write_json(ctx, "invasion.json", to_json(result));
  std::ostringstream csv;
  write_replicas_csv(csv, result);
  write_text(ctx, "replicas.csv", csv.str());
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "theory: invasion probability " << result.theory.invasion_probability << ", 1/perron "
            << result.theory.inverse_perron << '\n';
  for (const auto& s : result.per_K) {
    std::cout << "K=" << s.K << ": " << s.successes << " successes, " << s.failures << " failures, " << s.undecided
              << " undecided; P in [" << s.success_probability.lower << ", " << s.success_probability.upper << "]";
    if (s.mean_T_beta_over_logK) std::cout << "; mean T_beta/log K " << *s.mean_T_beta_over_logK;
    std::cout << '\n';
    if (s.fate)
      std::cout << "  fate (conjecture evidence): coexistence " << s.fate->coexistence << ", invader fixation "
                << s.fate->invader_fixation << ", resident fixation " << s.fate->resident_fixation
                << ", undecided " << s.fate->undecided << '\n';
  }
  return 0;
}

int cmd_regimes(Context& ctx) {
  auto t = ctx.run.experiment;
  check_keys(t, {"grid", "lambda2_min", "lambda2_max", "q_min", "q_max"});
  if (ctx.opt.grid) t["grid"] = *ctx.opt.grid;
  GridSpec g = parse_grid(get_or<std::string>(t, "grid", "400x400"));
  g.lambda2_min = get_or(t, "lambda2_min", g.lambda2_min);
  g.lambda2_max = get_or(t, "lambda2_max", g.lambda2_max);
  g.q_min = get_or(t, "q_min", g.q_min);
  g.q_max = get_or(t, "q_max", g.q_max);
  t["grid"] = std::to_string(g.lambda2_count) + "x" + std::to_string(g.q_count);
  ctx.experiment = t;
  const auto grid = sweep(ctx.run.params, g, ctx.opt.threads);
  std::ostringstream csv;
  write_regimes_csv(csv, grid);
  write_text(ctx, "regimes.csv", csv.str());
  write_json(ctx, "legend.json", regime_legend());
  for (int i = 0; i < kRegimeCount; ++i) {
    const auto r = static_cast<Regime>(i);
    if (const int n = grid.count(r)) std::cout << std::left << std::setw(24) << to_string(r) << n << '\n';
  }
  return 0;
}

int cmd_bifurcation(Context& ctx) {
  const auto& t = ctx.run.experiment;
  check_keys(t, {"m_min", "m_max", "count", "target"});
  const auto target_name = get_or<std::string>(t, "target", "n_star");
  if (target_name != "n_star" && target_name != "n_tilde") throw ConfigError("experiment.target must be n_star or n_tilde");
  const auto target = target_name == "n_star" ? BifurcationTarget::NStar : BifurcationTarget::NTilde;
  ctx.experiment = t;
  const auto rep = bifurcation_sweep(ctx.run.params, get_or(t, "m_min", 1.0), get_or(t, "m_max", 100.0),
                                     get_or(t, "count", 200), target);
  std::ostringstream csv;
  write_bifurcation_csv(csv, rep);
  write_text(ctx, "bifurcation.csv", csv.str());
  write_json(ctx, "bifurcation.json", to_json(rep));
  std::cout << "transcritical m* = " << rep.m_star << "; Hopf "
            << (rep.m_hopf ? "at m = " + std::to_string(*rep.m_hopf) : std::string("not found")) << '\n';
  return 0;
}

int dispatch(Context& ctx) {
  const auto& s = ctx.opt.subcommand;
  if (s == "equilibria") return cmd_equilibria(ctx);
  if (s == "stability") return cmd_stability(ctx);
  if (s == "ode-sim") return cmd_ode(ctx);
  if (s == "ssa-sim") return cmd_ssa(ctx);
  if (s == "branching") return cmd_branching(ctx);
  if (s == "invasion") return cmd_invasion(ctx, false);
  if (s == "fate") return cmd_invasion(ctx, true);
  if (s == "regimes") return cmd_regimes(ctx);
  if (s == "bifurcation") return cmd_bifurcation(ctx);
  throw ConfigError("unknown subcommand " + s);
}

json manifest(const Context& ctx) {
  json m = to_json(ctx.run.params);
  if (!ctx.experiment.empty()) m["experiment"] = ctx.experiment;
  m["_manifest"] = {{"tool", kToolName},
                    {"version", kVersion},
                    {"subcommand", ctx.opt.subcommand},
                    {"config", ctx.opt.config},
                    {"overrides", ctx.opt.overrides},
                    {"threads", resolve_threads(ctx.opt.threads)},
                    {"outputs", ctx.files}};
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for the host-virus-dormancy model"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);
  Options opt;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"equilibria", "closed-form equilibria and invasion conditions"},
      {"stability", "Jacobian spectra at every existing equilibrium"},
      {"ode-sim", "integrate the six-type ODE"},
      {"ssa-sim", "one exact stochastic trajectory"},
      {"branching", "branching-process extinction probabilities"},
      {"invasion", "Monte-Carlo invasion experiment"},
      {"fate", "invasion experiment continued to the long-term outcome"},
      {"regimes", "classify a (lambda2, q) grid"},
      {"bifurcation", "sweep the burst size m"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config,-c", opt.config, "TOML or JSON config file");
    sub->add_option("--set,-s", opt.overrides, "override key=value (repeatable; experiment.key for options)");
    sub->add_option("--output,-o", opt.output, "output directory");
    sub->add_option("--seed", opt.seed, "base seed (default 20240601)");
    sub->add_option("--threads", opt.threads, "worker threads (default: DORMANCY_LAB_THREADS or all cores)");
    if (std::string_view(name) == "regimes") sub->add_option("--grid", opt.grid, "resolution as NxM (default 400x400)");
    sub->callback([&opt, n = std::string(name)] { opt.subcommand = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Context ctx;
  ctx.opt = opt;
  try {
    json doc = opt.config.empty() ? json::object() : read_config_document(opt.config);
    for (const auto& o : opt.overrides) apply_override(doc, o);
    ctx.run = resolve_config(doc);
    for (const auto& w : ctx.run.warnings) std::cerr << "warning: " << w << '\n';
    ctx.out = opt.output;
    fs::create_directories(ctx.out);
    const int rc = dispatch(ctx);
    write_json(ctx, "manifest.json", manifest(ctx));
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition: " << e.what() << '\n';
    return 3;
  } catch (const ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
