#include "dormancy/report.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "dormancy/regimes.hpp"

namespace dormancy {
namespace {

template <typename V>
nlohmann::json vec(const V& v) {
  std::vector<double> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v[i];
  return out;
}

nlohmann::json mat(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(Eigen::VectorXd(m.row(i).transpose())));
  return rows;
}

nlohmann::json named(const Vec6& v, std::initializer_list<int> idx) {
  nlohmann::json j = nlohmann::json::object();
  for (int i : idx) j[std::string(kTypeNames[static_cast<std::size_t>(i)])] = v[i];
  return j;
}

}  // namespace

nlohmann::json to_json(const EquilibriumReport& rep) {
  const auto& c = rep.conditions;
  nlohmann::json j;
  j["lv"] = {{"bar_n1a", rep.lv.bar_n1a}, {"bar_n2a", rep.lv.bar_n2a}};
  j["n_star"] = {{"exists", rep.n_star.exists},
                 {"critical", rep.n_star.critical},
                 {"failure", rep.n_star.failure},
                 {"value", named(rep.n_star.embedded(), {0, 1, 5})}};
  j["n_tilde"] = {{"exists", rep.n_tilde.exists},
                  {"critical", rep.n_tilde.critical},
                  {"failure", rep.n_tilde.failure},
                  {"value", named(rep.n_tilde.embedded(), {2, 3, 4, 5})}};
  j["x"] = {{"defined", rep.x.defined},
            {"positive", rep.x.positive},
            {"failure", rep.x.failure},
            {"value", named(rep.x.value, {0, 1, 2, 3, 4, 5})}};
  j["conditions"] = {{"theta_star", c.theta_star},           {"theta_tilde", c.theta_tilde},
                     {"inv2_applicable", c.inv2_applicable}, {"inv1_applicable", c.inv1_applicable},
                     {"inv2", c.inv2},                       {"inv1", c.inv1},
                     {"inv2_critical", c.inv2_critical},     {"inv1_critical", c.inv1_critical}};
  j["coex13"] = rep.coex13;
  j["coex23"] = rep.coex23;
  j["degenerate"] = rep.degenerate;
  return j;
}

nlohmann::json to_json(const SpectrumReport& rep) {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& z : rep.eigenvalues) ev.push_back({z.real(), z.imag()});
  nlohmann::json j = {{"matrix", mat(rep.matrix)},
                      {"eigenvalues", ev},
                      {"classification", to_string(rep.classification)},
                      {"real_negative", rep.real_negative},
                      {"real_positive", rep.real_positive},
                      {"real_zero", rep.real_zero},
                      {"complex_pairs", rep.complex_pairs},
                      {"stable_complex_pairs", rep.stable_complex_pairs},
                      {"spectral_abscissa", rep.spectral_abscissa},
                      {"trace_error", rep.trace_error},
                      {"det_error", rep.det_error},
                      {"max_residual", rep.max_residual}};
  j["block_error"] = rep.block_error ? nlohmann::json(*rep.block_error) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const BranchingReport& rep) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& c : rep.process.channels)
    channels.push_back({{"name", c.name},
                        {"type", rep.process.type_names[static_cast<std::size_t>(c.type)]},
                        {"rate", c.rate},
                        {"offspring", c.offspring}});
  nlohmann::json s = nlohmann::json::object();
  for (int i = 0; i < rep.process.types(); ++i)
    s["s" + rep.process.type_names[static_cast<std::size_t>(i)]] = rep.extinction_probs[i];
  return {{"direction", to_string(rep.which)},
          {"types", rep.process.type_names},
          {"channels", channels},
          {"mean_matrix", mat(rep.mean_matrix)},
          {"extinction_probabilities", s},
          {"invasion_probability", 1.0 - rep.extinction_probs[0]},
          {"perron_value", rep.perron.value},
          {"perron_left_vector", vec(rep.perron.left_vector)},
          {"perron_residual", rep.perron.residual},
          {"criticality", to_string(rep.criticality)},
          {"fixed_point_iterations", rep.fixed_point_iterations},
          {"fixed_point_residual", rep.fixed_point_residual}};
}

nlohmann::json to_json(const BifurcationReport& rep) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : rep.points)
    pts.push_back({{"m", p.m},
                   {"exists", p.exists},
                   {"max_re", p.max_re},
                   {"leading_complex", p.leading_complex},
                   {"classification", to_string(p.classification)}});
  return {{"target", rep.target == BifurcationTarget::NStar ? "n_star" : "n_tilde"},
          {"m_star", rep.m_star},
          {"m_hopf", rep.m_hopf ? nlohmann::json(*rep.m_hopf) : nlohmann::json(nullptr)},
          {"m_convention", rep.m_convention},
          {"points", pts}};
}

void write_bifurcation_csv(std::ostream& out, const BifurcationReport& rep) {
  out << "m,exists,max_re,classification\n" << std::setprecision(17);
  for (const auto& p : rep.points) {
    out << p.m << ',' << int(p.exists) << ',';
    if (p.exists) out << p.max_re;
    else out << "nan";
    out << ',' << to_string(p.classification) << '\n';
  }
}

std::string_view to_string(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::Completed: return "completed";
    case IntegrationStatus::Converged: return "converged";
    case IntegrationStatus::StepUnderflow: return "step_underflow";
    case IntegrationStatus::StepLimit: return "step_limit";
  }
  return "unknown";
}

void write_ode_csv(std::ostream& out, const OdeSolution<double, 6>& sol) {
  out << "time,n1a,n1i,n2a,n2d,n2i,n3\n" << std::setprecision(17);
  auto row = [&](double t, const Vec6& y) {
    out << t;
    for (int i = 0; i < 6; ++i) out << ',' << y[i];
    out << '\n';
  };
  for (std::size_t i = 0; i < sol.times.size(); ++i) row(sol.times[i], sol.states[i]);
  if (sol.times.empty() || sol.times.back() < sol.final_time) row(sol.final_time, sol.final_state);
}

void print_condition_table(std::ostream& out, const ModelParams& p, const EquilibriumReport& rep) {
  const auto cell = classify(p);
  const double trade = p.r * p.kappa * p.mu1 - p.v * p.sigma;
  std::ostringstream virus;
  virus << std::setprecision(6);
  if (rep.n_tilde.exists) virus << "n3~=" << rep.n_tilde.n3() << "  ";
  if (rep.n_star.exists) virus << "n3*=" << rep.n_star.n3() << "  ";
  if (rep.x.defined) virus << "x3=" << rep.x.value[5];
  auto yn = [](bool applicable, bool v) { return applicable ? (v ? "yes" : "no") : "n/a"; };

  const std::string case_label = rep.coex23 ? "(C)" : "(D)";
  out << std::left << std::setw(6) << "case" << std::setw(16) << "rkmu1-vsigma" << std::setw(44) << "virus"
      << std::setw(12) << "positive x" << std::setw(12) << "2 invades" << std::setw(12) << "1 invades"
      << "regime\n";
  out << std::setw(6) << case_label << std::setw(16) << (trade < 0 ? "<0" : trade > 0 ? ">0" : "=0")
      << std::setw(44) << virus.str() << std::setw(12) << (rep.x.positive ? "exists" : "none") << std::setw(12)
      << yn(rep.conditions.inv2_applicable, rep.conditions.inv2) << std::setw(12)
      << yn(rep.conditions.inv1_applicable, rep.conditions.inv1) << to_string(cell.regime) << '\n';
  out << std::setprecision(6) << "theta* = " << rep.conditions.theta_star << ", theta~ = " << rep.conditions.theta_tilde
      << ", lambda1 - lambda2 = " << p.lambda1 - p.lambda2 << '\n';
}

}  // namespace dormancy
