#pragma once

#include "stochdp/linalg.hpp"
#include "stochdp/polyfunc.hpp"
#include "stochdp/tree.hpp"

#include <map>
#include <vector>

namespace stochdp {

// x -> x'Qx + b.x + c with Q symmetric PSD; finite everywhere.
struct QuadFunc {
    std::size_t n = 0;
    Mat Q;
    Vec b;
    Rat c;

    Rat operator()(const Vec& x) const;
};

// Validates symmetry and positive semidefiniteness (exact LDL^T).
QuadFunc quad_make(Mat Q, Vec b, Rat c);

struct QuadMinResult {
    QuadFunc reduced;             // over the leading block
    std::vector<Vec> null_basis;  // null space of the trailing block = N_t lineality
};

// Closed-form partial minimization over the trailing `trailing` coordinates
// via Schur complement with exact pseudoinverse solves. Throws UnboundedBelow
// (witness over the full arguments) if the linear term leaks into the
// trailing null space.
QuadMinResult quad_partial_min(const QuadFunc& q, std::size_t trailing);

// Probability-weighted average of the children's functions, for every node of
// the given stage. Input is indexed by the stage+1 nodes.
std::map<NodeId, QuadFunc> quad_cond_exp(const ScenarioTree& tree, std::size_t stage,
                                         const std::map<NodeId, QuadFunc>& child_funcs);

// Global minimum with the minimum-norm minimizer (orthogonal to null(Q)).
struct QuadGlobalMin {
    Rat value;
    Vec minimizer;
};
QuadGlobalMin quad_minimize(const QuadFunc& q);

// Variance-optimal hedging: adapted prices S per node in R^d, claim per leaf;
// minimize E (V_0 + sum_t z_t . dS_{t+1} - u)^2.
struct HedgeProblem {
    ScenarioTree tree;
    std::size_t d = 1;
    std::map<NodeId, Vec> prices;  // node-indexed, R^d
    std::map<NodeId, Rat> claim;   // leaf-indexed
};

struct VarianceHedgeResult {
    Rat value;
    Rat v0;
    Policy z;  // z_t per node, stages 0..T-1
    // null-space bases reported per node (N_t lineality directions)
    std::map<NodeId, std::vector<Vec>> null_bases;
};

VarianceHedgeResult variance_hedge_solve(const HedgeProblem& hp);

}  // namespace stochdp
