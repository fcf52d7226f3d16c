#include "dormancy/invasion.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "dormancy/equilibria.hpp"
#include "dormancy/errors.hpp"
#include "dormancy/parallel.hpp"
#include "dormancy/ssa.hpp"
#include "dormancy/stability.hpp"

namespace dormancy {

std::string_view to_string(InvasionOutcome o) {
  switch (o) {
    case InvasionOutcome::Success: return "success";
    case InvasionOutcome::Failure: return "failure";
    case InvasionOutcome::Undecided: return "undecided";
  }
  return "unknown";
}

std::string_view to_string(Fate f) {
  switch (f) {
    case Fate::NotRun: return "not_run";
    case Fate::Coexistence: return "coexistence";
    case Fate::InvaderFixation: return "invader_fixation";
    case Fate::ResidentFixation: return "resident_fixation";
    case Fate::Undecided: return "undecided";
  }
  return "unknown";
}

InvasionExperiment experiment_from_json(const ModelParams& p, const nlohmann::json& table) {
  InvasionExperiment exp;
  exp.params = p;
  exp.K_list = {p.K};
  if (table.is_null()) return exp;
  if (!table.is_object()) throw ConfigError("experiment must be a table");
  try {
    for (const auto& [key, value] : table.items()) {
      if (key == "direction") {
        const auto d = value.get<std::string>();
        if (d == "2" || d == "inv2" || d == "2-invades-13") exp.direction = Direction::Inv2;
        else if (d == "1" || d == "inv1" || d == "1-invades-23") exp.direction = Direction::Inv1;
        else throw ConfigError("experiment.direction must be inv2 or inv1, got '" + d + "'");
      } else if (key == "K_list") {
        exp.K_list = value.is_array() ? value.get<std::vector<double>>() : std::vector<double>{value.get<double>()};
      } else if (key == "replicas") {
        exp.replicas = value.get<int>();
      } else if (key == "beta") {
        exp.beta = value.get<double>();
      } else if (key == "delta") {
        exp.delta = value.get<double>();
      } else if (key == "b_factor") {
        exp.b_factor = value.get<double>();
      } else if (key == "t_max") {
        exp.t_max = value.get<double>();
      } else if (key == "event_cap") {
        exp.event_cap = static_cast<std::uint64_t>(value.get<double>());
      } else if (key == "fate_event_cap") {
        exp.fate_event_cap = static_cast<std::uint64_t>(value.get<double>());
      } else if (key == "seed") {
        exp.base_seed = value.get<std::uint64_t>();
      } else if (key == "fate") {
        exp.fate = value.get<bool>();
      } else {
        throw ConfigError("unknown experiment key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::type_error& e) {
    throw ConfigError(std::string("experiment table: ") + e.what());
  }
  if (exp.replicas < 1) throw ConfigError("experiment.replicas must be >= 1");
  if (exp.K_list.empty()) throw ConfigError("experiment.K_list must not be empty");
  for (double K : exp.K_list)
    if (!(K >= 1.0) || K != std::floor(K)) throw ConfigError("experiment.K_list entries must be integers >= 1");
  if (!(exp.beta > 0.0 && exp.delta > 0.0 && exp.t_max > 0.0 && exp.b_factor > 0.0))
    throw ConfigError("experiment beta, delta, b_factor and t_max must be positive");
  return exp;
}

nlohmann::json to_json(const InvasionExperiment& exp) {
  return {{"direction", to_string(exp.direction)}, {"K_list", exp.K_list},      {"replicas", exp.replicas},
          {"beta", exp.beta},                      {"delta", exp.delta},        {"b_factor", exp.b_factor},
          {"t_max", exp.t_max},                    {"event_cap", exp.event_cap}, {"fate_event_cap", exp.fate_event_cap},
          {"seed", exp.base_seed},                 {"fate", exp.fate}};
}

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  Interval iv;
  if (trials <= 0) {
    iv.upper = 1.0;
    iv.center = 0.5;
    iv.sigma = 0.5;
    return iv;
  }
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  iv.center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  iv.lower = std::max(0.0, iv.center - half);
  iv.upper = std::min(1.0, iv.center + half);
  iv.sigma = half / z;
  return iv;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Setup {
  EquilibriumReport eq;
  Vec6 resident = Vec6::Zero();
  TypeSet invader;
  TypeSet resident_host;
};

Setup prepare(const InvasionExperiment& exp) {
  const auto& p = exp.params;
  Setup s;
  s.eq = equilibrium_report(p);
  if (exp.direction == Direction::Inv2) {
    if (!s.eq.n_star.exists) throw PreconditionError("resident equilibrium n* does not exist: " + s.eq.n_star.failure);
    const auto spec = host_virus_subsystem_spectrum(p, s.eq.n_star);
    if (spec.classification != StabilityClass::Stable)
      throw PreconditionError("resident equilibrium n* is not stable in the host-virus system");
    s.resident = s.eq.n_star.embedded();
    s.invader = kType2Set;
    s.resident_host = kType1Set;
  } else {
    if (!s.eq.n_tilde.exists)
      throw PreconditionError("resident equilibrium n~ does not exist: " + s.eq.n_tilde.failure);
    const auto spec = dormancy_virus_subsystem_spectrum(p, s.eq.n_tilde);
    if (spec.classification != StabilityClass::Stable)
      throw PreconditionError("resident equilibrium n~ is not stable in the dormancy-virus system");
    s.resident = s.eq.n_tilde.embedded();
    s.invader = kType1Set;
    s.resident_host = kType2Set;
  }
  double smallest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kTypeCount; ++i)
    if (s.resident[i] > 0.0) smallest = std::min(smallest, s.resident[i]);
  for (double K : exp.K_list)
    if (K * smallest < 10.0)
      throw PreconditionError("K = " + std::to_string(static_cast<long long>(K)) +
                              " is too small: K times the smallest resident coordinate must be >= 10");
  return s;
}

InvasionTheory theory_for(const InvasionExperiment& exp, const Setup& s) {
  InvasionTheory th;
  const auto& p = exp.params;
  const auto bp = analyze_branching(p, exp.direction);
  th.criticality = bp.criticality;
  th.perron_value = bp.perron.value;
  th.inverse_perron = 1.0 / bp.perron.value;
  th.invasion_probability = 1.0 - bp.extinction_probs[0];
  // the displaced resident declines at the rate of the reverse invader block
  const bool reverse_exists = exp.direction == Direction::Inv2 ? s.eq.n_tilde.exists : s.eq.n_star.exists;
  if (reverse_exists && bp.criticality == Criticality::Super) {
    const Eigen::MatrixXd reverse = mean_matrix(p, s.eq, exp.direction == Direction::Inv2 ? Direction::Inv1 : Direction::Inv2);
    const double lead = perron(reverse).value;
    if (lead < 0.0) th.fixation_timescale = th.inverse_perron + 1.0 / std::abs(lead);
  }
  return th;
}

}  // namespace

InvasionResult run_invasion(const InvasionExperiment& exp) {
  require_stochastic(exp.params);
  const Setup setup = prepare(exp);
  InvasionResult result;
  result.experiment = exp;
  result.theory = theory_for(exp, setup);

  if (setup.eq.x.positive && exp.beta >= 0.5 * setup.eq.x.value.minCoeff()) {
    result.warnings.push_back("beta = " + std::to_string(exp.beta) +
                              " is not below half the smallest coordinate of x (" +
                              std::to_string(0.5 * setup.eq.x.value.minCoeff()) + ")");
  }

  for (std::size_t k_index = 0; k_index < exp.K_list.size(); ++k_index) {
    const double K = exp.K_list[k_index];
    auto p = exp.params;
    p.K = K;

    PopulationState start = lattice_point(setup.resident, K);
    if (exp.direction == Direction::Inv2) start[Type::A2] = 1;
    else start[Type::A1] = 1;

    StoppingSpec invasion_stops;
    invasion_stops.beta = BetaStop{exp.beta, true};
    invasion_stops.extinction.push_back({setup.invader, true});

    StoppingSpec fate_stops;
    const Vec6 invader_home = exp.direction == Direction::Inv2 ? setup.eq.n_tilde.embedded() : setup.eq.n_star.embedded();
    const bool invader_home_exists =
        exp.direction == Direction::Inv2 ? setup.eq.n_tilde.exists : setup.eq.n_star.exists;
    if (setup.eq.x.positive) fate_stops.neighborhood.push_back({"coexistence", setup.eq.x.value, exp.delta, {}, true});
    if (invader_home_exists)
      fate_stops.neighborhood.push_back({"invader_fixation", invader_home, exp.delta, setup.resident_host, true});
    fate_stops.neighborhood.push_back({"resident_fixation", setup.resident, exp.delta, setup.invader, true});

    std::vector<ReplicaRecord> records(static_cast<std::size_t>(exp.replicas));
    parallel_for(records.size(), exp.threads, [&](std::size_t r) {
      auto rng = replica_rng(exp.base_seed, (static_cast<std::uint64_t>(k_index) << 32) | r);
      SsaConfig cfg;
      cfg.t_max = exp.t_max;
      cfg.event_cap = exp.event_cap;
      cfg.record_trajectory = false;
      const auto run = run_ssa(p, start, cfg, invasion_stops, rng);

      ReplicaRecord rec;
      rec.K = K;
      rec.replica = static_cast<int>(r);
      rec.T_beta = run.hits[0].time;
      rec.T_0 = run.hits[1].time;
      if (rec.T_0 && (!rec.T_beta || *rec.T_0 <= *rec.T_beta)) rec.outcome = InvasionOutcome::Failure;
      else if (rec.T_beta) rec.outcome = InvasionOutcome::Success;

      if (exp.fate && rec.outcome == InvasionOutcome::Success) {
        SsaConfig fcfg = cfg;
        fcfg.t_max = exp.t_max - *rec.T_beta;
        fcfg.event_cap = exp.fate_event_cap;
        rec.fate = Fate::Undecided;
        if (fcfg.t_max > 0.0) {
          const auto cont = run_ssa(p, run.final_state, fcfg, fate_stops, rng, *rec.T_beta);
          if (cont.halted_by) {
            rec.fate_time = cont.final_time;
            if (*cont.halted_by == "coexistence") rec.fate = Fate::Coexistence;
            else if (*cont.halted_by == "invader_fixation") rec.fate = Fate::InvaderFixation;
            else rec.fate = Fate::ResidentFixation;
          }
        }
      }
      records[r] = rec;
    });

    PerKSummary sum;
    sum.K = K;
    std::vector<double> tb, t0, fix;
    FateTally tally;
    for (const auto& rec : records) {
      switch (rec.outcome) {
        case InvasionOutcome::Success:
          ++sum.successes;
          tb.push_back(*rec.T_beta / std::log(K));
          break;
        case InvasionOutcome::Failure:
          ++sum.failures;
          t0.push_back(*rec.T_0 / std::log(K));
          break;
        case InvasionOutcome::Undecided: ++sum.undecided; break;
      }
      switch (rec.fate) {
        case Fate::Coexistence: ++tally.coexistence; break;
        case Fate::InvaderFixation:
          ++tally.invader_fixation;
          fix.push_back(*rec.fate_time / std::log(K));
          break;
        case Fate::ResidentFixation: ++tally.resident_fixation; break;
        case Fate::Undecided: ++tally.undecided; break;
        case Fate::NotRun: break;
      }
    }
    sum.success_probability = wilson_interval(sum.successes, sum.successes + sum.failures);
    if (!tb.empty()) {
      double mean = 0.0;
      for (double x : tb) mean += x;
      mean /= static_cast<double>(tb.size());
      double var = 0.0;
      for (double x : tb) var += (x - mean) * (x - mean);
      sum.mean_T_beta_over_logK = mean;
      if (tb.size() > 1) sum.stderr_T_beta_over_logK = std::sqrt(var / static_cast<double>(tb.size() - 1) / static_cast<double>(tb.size()));
      sum.q10_T_beta_over_logK = quantile(tb, 0.1);
      sum.median_T_beta_over_logK = quantile(tb, 0.5);
      sum.q90_T_beta_over_logK = quantile(tb, 0.9);
    }
    if (!t0.empty()) sum.median_T0_over_logK = quantile(t0, 0.5);
    if (exp.fate) {
      if (!fix.empty()) {
        double mean = 0.0;
        for (double x : fix) mean += x;
        tally.mean_fixation_time_over_logK = mean / static_cast<double>(fix.size());
      }
      sum.fate = tally;
    }
    result.per_K.push_back(sum);
    result.replicas.insert(result.replicas.end(), records.begin(), records.end());
  }
  return result;
}

InvasionResult run_fate(InvasionExperiment exp) {
  exp.fate = true;
  return run_invasion(exp);
}

void write_replicas_csv(std::ostream& out, const InvasionResult& result) {
  out << "K,replica,outcome,T_beta,T_0,fate,fate_time\n" << std::setprecision(17);
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  for (const auto& r : result.replicas) {
    out << r.K << ',' << r.replica << ',' << to_string(r.outcome) << ',';
    opt(r.T_beta);
    out << ',';
    opt(r.T_0);
    out << ',' << to_string(r.fate) << ',';
    opt(r.fate_time);
    out << '\n';
  }
}

nlohmann::json to_json(const InvasionResult& result) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json per_k = nlohmann::json::array();
  for (const auto& s : result.per_K) {
    nlohmann::json j = {
        {"K", s.K},
        {"successes", s.successes},
        {"failures", s.failures},
        {"undecided", s.undecided},
        {"success_probability",
         {{"estimate", s.successes + s.failures > 0 ? static_cast<double>(s.successes) / (s.successes + s.failures) : 0.0},
          {"wilson95_lower", s.success_probability.lower},
          {"wilson95_upper", s.success_probability.upper},
          {"wilson_center", s.success_probability.center},
          {"wilson_sigma", s.success_probability.sigma}}},
        {"T_beta_over_logK",
         {{"mean", opt(s.mean_T_beta_over_logK)},
          {"stderr", opt(s.stderr_T_beta_over_logK)},
          {"q10", opt(s.q10_T_beta_over_logK)},
          {"median", opt(s.median_T_beta_over_logK)},
          {"q90", opt(s.q90_T_beta_over_logK)}}},
        {"median_T0_over_logK_on_failure", opt(s.median_T0_over_logK)},
    };
    if (s.fate) {
      j["fate_conjecture_evidence"] = {{"coexistence", s.fate->coexistence},
                                       {"invader_fixation", s.fate->invader_fixation},
                                       {"resident_fixation", s.fate->resident_fixation},
                                       {"undecided", s.fate->undecided},
                                       {"mean_fixation_time_over_logK", opt(s.fate->mean_fixation_time_over_logK)}};
    }
    per_k.push_back(j);
  }
  return {{"experiment", to_json(result.experiment)},
          {"theory",
           {{"invasion_probability", result.theory.invasion_probability},
            {"perron_value", result.theory.perron_value},
            {"inverse_perron", result.theory.inverse_perron},
            {"criticality", to_string(result.theory.criticality)},
            {"fixation_timescale", opt(result.theory.fixation_timescale)}}},
          {"per_K", per_k},
          {"warnings", result.warnings}};
}

}  // namespace dormancy
