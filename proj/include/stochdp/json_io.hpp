#pragma once

#include "stochdp/dp.hpp"
#include "stochdp/finance.hpp"
#include "stochdp/quad.hpp"

#include "json.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochdp {

// Instance file violates the schema (unknown fields are tolerated; wrong
// types, bad rational strings, or inconsistent trees are not).
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parsed instance file ("schema": 1). `model` selects which members are
// populated; the tree is always present.
struct Instance {
    ScenarioTree tree;
    std::string model;  // integrand | bellman | liquid_market | cone_market | hedge

    IntegrandSpec integrand;
    BellmanSpec bellman;
    LiquidMarket liquid;
    ConeMarket cone;
    HedgeProblem hedge;

    UtilitySpec util;                 // cone_market
    std::map<NodeId, Vec> endowment;  // cone_market
    std::map<NodeId, Rat> claim;      // liquid_market
    std::vector<Vec> grid;            // optional phi-probe endowment grid
};

Instance parse_instance(const nlohmann::json& doc);
Instance load_instance(const std::string& path);

// Wire helpers: rationals travel as "p" or "p/q" strings; values get a
// decimal annotation for human readers.
Rat rat_from_json(const nlohmann::json& j);
nlohmann::json json_rat(const Rat& q);
nlohmann::json json_value(const Rat& q);  // {"rat": ..., "decimal": ...}
nlohmann::json json_vec(const Vec& v);
nlohmann::json json_policy(const Policy& p);
nlohmann::json json_basis(const std::vector<Vec>& basis);

}  // namespace stochdp
