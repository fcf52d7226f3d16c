#pragma once

#include <iosfwd>

#include <nlohmann/json.hpp>

#include "dormancy/branching.hpp"
#include "dormancy/equilibria.hpp"
#include "dormancy/ode.hpp"
#include "dormancy/stability.hpp"

namespace dormancy {

nlohmann::json to_json(const EquilibriumReport& rep);
/// Eigenvalues as [re, im] pairs.
nlohmann::json to_json(const SpectrumReport& rep);
nlohmann::json to_json(const BranchingReport& rep);
nlohmann::json to_json(const BifurcationReport& rep);

/// Columns m,exists,max_re,classification.
void write_bifurcation_csv(std::ostream& out, const BifurcationReport& rep);
/// Columns time,n1a,n1i,n2a,n2d,n2i,n3 in rescaled units.
void write_ode_csv(std::ostream& out, const OdeSolution<double, 6>& sol);
std::string_view to_string(IntegrationStatus s);

/// One-row summary in the layout of the invasion overview: sign of
/// r kappa mu1 - v sigma, ordering of the virion levels, positivity of x, both
/// invasion verdicts and the regime.
void print_condition_table(std::ostream& out, const ModelParams& p, const EquilibriumReport& rep);

}  // namespace dormancy
