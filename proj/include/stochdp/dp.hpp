#pragma once

#include "stochdp/polyfunc.hpp"
#include "stochdp/tree.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stochdp {

// Per-leaf convex cost over the full decision vector x = (x_0,...,x_T).
struct IntegrandSpec {
    std::vector<std::size_t> stage_dims;     // n_0,...,n_T
    std::map<NodeId, PolyFunc> leaf_functions;
    std::map<NodeId, Rat> lower_bounds;      // optional per-leaf certificates f >= m

    std::size_t total_dim() const;
    // sum of n_s for s <= t
    std::size_t prefix_dim(std::size_t t) const;
};

struct LinearityViolated : std::runtime_error {
    NodeId node;
    std::size_t stage;
    Vec witness;  // x_t in N_t with -x_t outside
    LinearityViolated(NodeId n, std::size_t t, Vec w)
        : std::runtime_error("recession cone N_t is not linear-valued at node " +
                             std::to_string(n)),
          node(n), stage(t), witness(std::move(w)) {}
};

struct Infeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CertificateViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Output of the backward pass: cost-to-go data per node.
struct NodeFunctionTable {
    std::vector<std::size_t> stage_dims;
    // h[t][node]: conditional-expectation stage cost over x^t, stage-t nodes.
    std::vector<std::map<NodeId, PolyFunc>> h;
    // h_pre[t][node]: partial minimization of h[t] over x_t, stored at the
    // stage-t node; a function of x^{t-1}.
    std::vector<std::map<NodeId, PolyFunc>> h_pre;
    // recession function of h[t][node]
    std::vector<std::map<NodeId, PolyFunc>> h_inf;
    // last-stage-direction cone N_t per stage-t node (dimension n_t) and a
    // basis of its lineality space
    std::vector<std::map<NodeId, Polyhedron>> last_cone;
    std::vector<std::map<NodeId, std::vector<Vec>>> lineality;
};

// Backward recursion; throws LinearityViolated as soon as some N_t fails the
// linear-valuedness hypothesis, CertificateViolated if a declared lower bound
// does not hold.
NodeFunctionTable backward_pass(const ScenarioTree& tree, const IntegrandSpec& spec);

struct ForwardResult {
    std::optional<Rat> value;  // nullopt encodes +inf (infeasible instance)
    Policy policy;
};

// Policy recovery: node-wise argmin with the x_t |_ N_t selection.
ForwardResult forward_policy(const ScenarioTree& tree, const NodeFunctionTable& table);

struct OptimalityReport {
    bool ok = false;
    std::string violation;             // empty when ok
    std::optional<NodeId> node;        // first offending node
    Rat optimal_value;
    std::vector<Rat> stage_expectations;  // E h_t(x^t) per stage
};

OptimalityReport verify_optimality(const ScenarioTree& tree, const NodeFunctionTable& table,
                                   const Policy& policy);

struct LinearityReport {
    bool is_linear = false;
    bool nodewise_verdict = false;  // route (a): every N_t linear-valued
    bool direct_verdict = false;    // route (b): the adapted cone equals its negation
    std::optional<NodeId> node;     // first offending node (route a)
    std::size_t stage = 0;
    Policy witness;                 // adapted x in L with -x outside, when nonlinear
};

// Lemma-4-style equivalence check, both routes computed independently.
LinearityReport check_linearity_L(const ScenarioTree& tree, const IntegrandSpec& spec);

struct BellmanSpec {
    Vec initial_state;                    // x_{-1}
    std::vector<std::size_t> stage_dims;  // n_0,...,n_T
    // stage-t nodes carry k_t over (x_{t-1}, x_t); for t=0 the leading block
    // has the dimension of the initial state.
    std::map<NodeId, PolyFunc> stage_costs;
    std::map<NodeId, Rat> lower_bounds;   // per-node certificates k_t >= m
};

struct BellmanResult {
    std::optional<Rat> value;
    Policy policy;
    // V[t][node]: cost-to-go over x_t at stage-t nodes
    std::vector<std::map<NodeId, PolyFunc>> value_functions;
};

BellmanResult bellman_pass(const ScenarioTree& tree, const BellmanSpec& bspec);

// Equivalent history-formulation integrand (Eq-level flattening of the
// separable costs), for cross-checking against backward_pass.
IntegrandSpec bellman_to_integrand(const ScenarioTree& tree, const BellmanSpec& bspec);

struct CommutationReport {
    bool ok = false;
    std::optional<NodeId> node;  // first node where the epigraphs differ
    std::size_t checked = 0;
};

// Node-wise check that recession-of-expectation equals expectation-of-
// recession (epigraphs as point sets, plus their zero level sets).
CommutationReport recession_commutation_check(const ScenarioTree& tree,
                                              const IntegrandSpec& spec);

}  // namespace stochdp
