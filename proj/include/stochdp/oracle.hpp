#pragma once

#include "stochdp/dp.hpp"
#include "stochdp/quad.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace stochdp {

// Brute-force solution of the flattened instance: probability-weighted sum of
// the leaf functions over the adapted layout, minimized by eliminating every
// variable down to the value axis; the minimizer comes from back-substitution
// through the elimination trace. Deliberately avoids all of the recursion
// machinery.
struct FlatSolution {
    std::optional<Rat> value;  // nullopt encodes +inf
    Policy minimizer;
};

FlatSolution flatten_solve(const ScenarioTree& tree, const IntegrandSpec& spec);

// Exact normal equations for the variance-hedge least squares, minimum-norm
// completion on singular systems.
struct LeastSquaresSolution {
    Rat value;
    Rat v0;
    Policy z;
};

LeastSquaresSolution least_squares_oracle(const HedgeProblem& hp);

// phi(u) sampling with convexity and Fenchel checks.
struct PhiProbeEntry {
    Vec u;
    std::optional<Rat> value;
    Policy minimizer;
};

struct DualCandidate {
    std::function<Rat(const Vec&)> pair;  // u -> <u, y>
    Rat g;                                // dual objective value at y
};

struct PhiProbeReport {
    std::vector<PhiProbeEntry> entries;
    bool midpoint_convex = true;
    bool fenchel_holds = true;         // phi(u) >= <u,y> + g for all sampled u
    bool fenchel_tight_at_zero = true; // phi(0) == g when 0 is in the grid
};

PhiProbeReport phi_probe(const ScenarioTree& tree,
                         const std::function<IntegrandSpec(const Vec&)>& builder,
                         const std::vector<Vec>& grid,
                         const std::optional<DualCandidate>& dual = std::nullopt);

}  // namespace stochdp
