#pragma once

#include "stochdp/dp.hpp"
#include "stochdp/polyfunc.hpp"
#include "stochdp/tree.hpp"

#include <map>
#include <optional>

namespace stochdp {

// Frictionless market: adapted unit prices of d risky assets.
struct LiquidMarket {
    ScenarioTree tree;
    std::size_t d = 1;
    std::map<NodeId, Vec> prices;  // node-indexed, R^d
};

// Illiquid conical market: per-node cones of available portfolios C_t and
// admissible holdings D_t (H-representations, all rows homogeneous).
struct ConeMarket {
    ScenarioTree tree;
    std::size_t d = 1;
    std::map<NodeId, Polyhedron> C;
    std::map<NodeId, Polyhedron> D;  // leaves must pin {0}
};

// Throws on missing nodes, wrong dimensions, inhomogeneous rows, or a
// terminal holding cone other than {0}.
void validate_cone_market(const ConeMarket& mkt);

// Concave per-node utilities stored through their convex negatives.
struct UtilitySpec {
    std::map<NodeId, PolyFunc> neg_u;       // -U_t over R^d, proper polyhedral
    std::map<NodeId, Rat> upper_bound;      // certificates U_t <= m
};

struct DualProcess {
    std::map<NodeId, Vec> y;  // adapted, R^d per node
};

// Superhedge with an explicit initial-capital variable V_0: minimizing the
// returned integrand over adapted (V_0, x) yields the superhedging cost.
IntegrandSpec build_superhedge(const LiquidMarket& mkt, const std::map<NodeId, Rat>& claim);

// Pure feasibility form: 0 if the claim is financeable from zero capital,
// +inf otherwise.
IntegrandSpec build_superhedge_feasibility(const LiquidMarket& mkt,
                                           const std::map<NodeId, Rat>& claim);

struct NoArbitrageReport {
    bool holds = false;
    Policy witness;  // arbitrage strategy when the check fails
};

NoArbitrageReport no_arbitrage_check(const LiquidMarket& mkt);

// Consumption-investment primal over x_t = (z_t, c_t): maximize E sum U_t(c_t)
// subject to dz_t + c_t + u_t in C_t and z_t in D_t; returned integrand is the
// minimization form (objective -sum U_t).
IntegrandSpec build_consumption(const ConeMarket& mkt, const UtilitySpec& util,
                                const std::map<NodeId, Vec>& endowment);

struct NoScalableArbitrageReport {
    bool holds = false;
    std::map<NodeId, Vec> witness_c;  // nonzero financeable consumption if not
};

NoScalableArbitrageReport no_scalable_arbitrage_check(const ConeMarket& mkt);

struct OcpConditionsReport {
    bool z_set_linear = false;
    bool growth_ok = false;                  // recession of every -U_t is ind(R_+^d)
    std::optional<NodeId> growth_fail_node;
    bool bounds_ok = false;                  // upper-bound certificates present and valid
    std::optional<NodeId> bounds_fail_node;
    bool remark2_ok = false;                 // projected consumption cone is a subspace
    bool applicable = false;                 // hypotheses for zero duality gap
};

OcpConditionsReport check_thm_ocp_conditions(const ConeMarket& mkt, const UtilitySpec& util);

// Which increment indexing defines dual feasibility (see the two published
// variants): Derivation uses E_t y_{t+1} - y_t in D_t^* with y_{T+1} = 0,
// Displayed requires y_{t+1} - y_t in D_t^* scenario-wise (every child
// increment, not just the conditional expectation).
enum class DualIndexing { Derivation, Displayed };

// Dual bound: inf over feasible y of E sum_t [ sup_c (U_t(c) - y_t . c) ]
// minus E sum_t y_t . u_t. Every feasible y upper-bounds the attainable
// expected utility; under the applicability hypotheses the gap is zero.
struct DualSolveResult {
    bool feasible = false;            // dual feasible set nonempty
    bool unbounded = false;           // bound is -inf (primal infeasible)
    std::optional<Rat> value;         // the optimal bound when finite
    DualProcess y;
};

DualSolveResult build_consumption_dual(const ConeMarket& mkt, const UtilitySpec& util,
                                       const std::map<NodeId, Vec>& endowment,
                                       DualIndexing indexing = DualIndexing::Derivation);

// Membership in the dual feasible set, for invariant checks.
bool dual_feasible(const ConeMarket& mkt, const DualProcess& y,
                   DualIndexing indexing = DualIndexing::Derivation);

// The bound produced by one dual process; nullopt when some conjugate term is
// +inf at y_t (outside the concave domain).
std::optional<Rat> dual_objective(const ConeMarket& mkt, const UtilitySpec& util,
                                  const std::map<NodeId, Vec>& endowment,
                                  const DualProcess& y);

}  // namespace stochdp
