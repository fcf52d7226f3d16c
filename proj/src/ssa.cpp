#include "dormancy/ssa.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "dormancy/errors.hpp"
#include "dormancy/parallel.hpp"

namespace dormancy {

void validate(const SsaConfig& cfg) {
  if (!(cfg.t_max > 0.0)) throw ConfigError("ssa t_max must be positive");
  if (cfg.event_cap < 1) throw ConfigError("ssa event_cap must be >= 1");
  if (!(cfg.record_stride > 0.0)) throw ConfigError("ssa record_stride must be positive");
}

TypeSet parse_type_set(std::string_view names) {
  TypeSet set;
  std::size_t pos = 0;
  while (pos <= names.size()) {
    const auto comma = names.find(',', pos);
    const auto token = names.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (token == "1") set |= kType1Set;
    else if (token == "2") set |= kType2Set;
    else if (token == "3") set |= kVirionSet;
    else {
      bool found = false;
      for (int i = 0; i < kTypeCount; ++i) {
        if (token == kTypeNames[static_cast<std::size_t>(i)].substr(1)) {
          set.set(static_cast<std::size_t>(i));
          found = true;
        }
      }
      if (!found) throw ConfigError("unknown type '" + std::string(token) + "' in type set");
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return set;
}

std::string format_type_set(TypeSet set) {
  std::string out;
  for (int i = 0; i < kTypeCount; ++i) {
    if (!set.test(static_cast<std::size_t>(i))) continue;
    if (!out.empty()) out += ',';
    out += kTypeNames[static_cast<std::size_t>(i)].substr(1);
  }
  return out;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::TMax: return "t_max";
    case Termination::EventCap: return "event_cap";
    case Termination::Absorbing: return "absorbing";
    case Termination::Halted: return "halted";
  }
  return "unknown";
}

std::optional<double> SsaOutcome::hit_time(std::string_view label) const {
  for (const auto& h : hits)
    if (h.label == label) return h.time;
  return std::nullopt;
}

std::vector<std::string> stop_labels(const StoppingSpec& stops) {
  std::vector<std::string> labels;
  if (stops.beta) labels.push_back("T_beta");
  for (const auto& s : stops.extinction) labels.push_back("T0[" + format_type_set(s.set) + "]");
  for (const auto& s : stops.epsilon) {
    std::ostringstream os;
    os << "Teps[" << format_type_set(s.set) << "]@" << s.epsilon;
    labels.push_back(os.str());
  }
  for (const auto& s : stops.neighborhood) labels.push_back(s.label.empty() ? "T_neighborhood" : s.label);
  if (stops.band) labels.push_back("R_band");
  return labels;
}

namespace {

std::int64_t set_sum(const Counts& c, TypeSet set) {
  std::int64_t sum = 0;
  for (int i = 0; i < kTypeCount; ++i)
    if (set.test(static_cast<std::size_t>(i))) sum += c[static_cast<std::size_t>(i)];
  return sum;
}

// Flattened predicates with precomputed integer thresholds.
struct Predicate {
  enum class Kind { Beta, Extinct, Epsilon, Neighborhood, Band } kind;
  bool halt = false;
  TypeSet set;
  std::int64_t target = 0;
  double threshold = 0.0;
  Vec6 point = Vec6::Zero();
};

bool holds(const Predicate& pr, const Counts& c, double K) {
  switch (pr.kind) {
    case Predicate::Kind::Beta:
      for (auto n : c)
        if (!(static_cast<double>(n) > pr.threshold)) return false;
      return true;
    case Predicate::Kind::Extinct: return set_sum(c, pr.set) == 0;
    case Predicate::Kind::Epsilon: return set_sum(c, pr.set) == pr.target;
    case Predicate::Kind::Neighborhood:
      if (set_sum(c, pr.set) != 0) return false;
      for (int i = 0; i < kTypeCount; ++i)
        if (std::abs(static_cast<double>(c[static_cast<std::size_t>(i)]) / K - pr.point[i]) > pr.threshold)
          return false;
      return true;
    case Predicate::Kind::Band:
      for (int i = 0; i < kTypeCount; ++i) {
        if (!pr.set.test(static_cast<std::size_t>(i))) continue;
        if (std::abs(static_cast<double>(c[static_cast<std::size_t>(i)]) / K - pr.point[i]) > pr.threshold)
          return true;
      }
      return false;
  }
  return false;
}

std::vector<Predicate> compile(const StoppingSpec& stops, double K) {
  std::vector<Predicate> out;
  if (stops.beta) {
    if (!(stops.beta->beta > 0.0)) throw ConfigError("beta must be positive");
    out.push_back({Predicate::Kind::Beta, stops.beta->halt, {}, 0, stops.beta->beta * K, {}});
  }
  for (const auto& s : stops.extinction) out.push_back({Predicate::Kind::Extinct, s.halt, s.set, 0, 0.0, {}});
  for (const auto& s : stops.epsilon) {
    const auto target = static_cast<std::int64_t>(std::floor(s.epsilon * K));
    if (target < 1) throw ConfigError("epsilon target unreachable: floor(epsilon*K) < 1");
    out.push_back({Predicate::Kind::Epsilon, s.halt, s.set, target, 0.0, {}});
  }
  for (const auto& s : stops.neighborhood) {
    if (!(s.delta > 0.0)) throw ConfigError("neighborhood delta must be positive");
    out.push_back({Predicate::Kind::Neighborhood, s.halt, s.require_extinct, 0, s.delta, s.point});
  }
  if (stops.band) {
    if (!(stops.band->half_width > 0.0)) throw ConfigError("band half-width must be positive");
    out.push_back({Predicate::Kind::Band, stops.band->halt, stops.band->coords, 0, stops.band->half_width,
                   stops.band->center});
  }
  return out;
}

}  // namespace

SsaOutcome run_ssa(const ModelParams& p, const PopulationState& initial, const SsaConfig& cfg,
                   const StoppingSpec& stops, Rng& rng, double t_start) {
  validate(cfg);
  require_stochastic(p);
  if (!initial.valid()) throw PreconditionError("initial state has negative counts");

  SsaOutcome out;
  const auto predicates = compile(stops, p.K);
  const auto labels = stop_labels(stops);
  for (const auto& l : labels) out.hits.push_back({l, std::nullopt});
  std::vector<bool> pending(predicates.size(), true);
  std::size_t open = predicates.size();

  const auto burst = static_cast<std::int64_t>(std::llround(p.m));
  std::array<Counts, kTransitionCount> deltas;
  for (std::size_t k = 0; k < kTransitionCount; ++k) deltas[k] = transition_delta(static_cast<TransitionKind>(k), burst);

  PopulationState state = initial;
  double t = t_start;
  const double t_end = t_start + cfg.t_max;
  double next_record = t_start;
  auto record_until = [&](double time) {
    if (!cfg.record_trajectory) return;
    while (next_record <= time && next_record <= t_end) {
      out.times.push_back(next_record);
      out.states.push_back(state);
      next_record = t_start + cfg.record_stride * static_cast<double>(out.times.size());
    }
  };

  while (true) {
    if (open > 0) {
      bool halt = false;
      for (std::size_t i = 0; i < predicates.size(); ++i) {
        if (!pending[i] || !holds(predicates[i], state.counts, p.K)) continue;
        pending[i] = false;
        --open;
        out.hits[i].time = t;
        if (predicates[i].halt && !halt) {
          halt = true;
          out.halted_by = labels[i];
        }
      }
      if (halt) {
        record_until(t);
        out.reason = Termination::Halted;
        break;
      }
    }
    const auto rates = transition_rates(p, state);
    double a0 = 0.0;
    for (double r : rates) a0 += r;
    if (a0 == 0.0) {
      record_until(t_end);
      out.reason = Termination::Absorbing;
      break;
    }
    if (out.events >= cfg.event_cap) {
      record_until(t);
      out.reason = Termination::EventCap;
      break;
    }
    const double dt = exponential(rng, a0);
    if (t + dt > t_end) {
      record_until(t_end);
      t = t_end;
      out.reason = Termination::TMax;
      break;
    }
    record_until(t + dt);
    t += dt;

    double target = open_uniform(rng) * a0;
    std::size_t pick = 0;
    for (; pick + 1 < kTransitionCount; ++pick) {
      if (target <= rates[pick] && rates[pick] > 0.0) break;
      target -= rates[pick];
    }
    while (rates[pick] == 0.0) --pick;
    const auto& d = deltas[pick];
    for (int i = 0; i < kTypeCount; ++i) state.counts[static_cast<std::size_t>(i)] += d[static_cast<std::size_t>(i)];
    ++out.events;
  }
  out.final_state = state;
  out.final_time = t;
  return out;
}

SsaOutcome run_ssa(const ModelParams& p, const PopulationState& initial, const SsaConfig& cfg,
                   const StoppingSpec& stops) {
  auto rng = replica_rng(cfg.seed, 0);
  return run_ssa(p, initial, cfg, stops, rng);
}

std::vector<MeanPathPoint> mean_path(const ModelParams& p, const PopulationState& initial, const SsaConfig& cfg,
                                     int replicas, unsigned threads) {
  if (replicas < 2) throw ConfigError("mean_path needs at least two replicas");
  validate(cfg);
  auto run_cfg = cfg;
  run_cfg.record_trajectory = true;
  std::vector<std::vector<Vec6>> paths(static_cast<std::size_t>(replicas));
  parallel_for(paths.size(), threads, [&](std::size_t r) {
    auto rng = replica_rng(cfg.seed, r);
    const auto run = run_ssa(p, initial, run_cfg, {}, rng);
    if (run.reason == Termination::EventCap) throw ConvergenceError("mean_path replica hit the event cap");
    auto& path = paths[r];
    for (const auto& s : run.states) path.push_back(s.rescaled(p.K));
  });
  const std::size_t points = paths.front().size();
  std::vector<MeanPathPoint> out(points);
  const double n = replicas;
  for (std::size_t k = 0; k < points; ++k) {
    Vec6 sum = Vec6::Zero(), sq = Vec6::Zero();
    for (const auto& path : paths) {
      sum += path[k];
      sq += path[k].cwiseProduct(path[k]);
    }
    const Vec6 mean = sum / n;
    const Vec6 var = ((sq - n * mean.cwiseProduct(mean)) / (n - 1.0)).cwiseMax(0.0);
    out[k].time = cfg.record_stride * static_cast<double>(k);
    out[k].mean = mean;
    out[k].stderr_ = (var / n).cwiseSqrt();
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const SsaOutcome& outcome) {
  out << "time,n1a,n1i,n2a,n2d,n2i,n3\n";
  out << std::setprecision(17);
  auto row = [&](double t, const PopulationState& s) {
    out << t;
    for (auto c : s.counts) out << ',' << c;
    out << '\n';
  };
  for (std::size_t i = 0; i < outcome.times.size(); ++i) row(outcome.times[i], outcome.states[i]);
  if (outcome.times.empty() || outcome.times.back() < outcome.final_time) row(outcome.final_time, outcome.final_state);
}

nlohmann::json hits_json(const SsaOutcome& outcome) {
  nlohmann::json hits = nlohmann::json::object();
  for (const auto& h : outcome.hits) hits[h.label] = h.time ? nlohmann::json(*h.time) : nlohmann::json(nullptr);
  return {{"hits", hits},
          {"termination", to_string(outcome.reason)},
          {"halted_by", outcome.halted_by ? nlohmann::json(*outcome.halted_by) : nlohmann::json(nullptr)},
          {"events", outcome.events},
          {"final_time", outcome.final_time},
          {"final_state", outcome.final_state.counts}};
}

}  // namespace dormancy
