#pragma once

#include "stochdp/polyhedron.hpp"
#include "stochdp/rational.hpp"

namespace stochdp {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Rat value = 0;   // optimal objective when status == Optimal
    Vec point;       // optimal point (Optimal) or a feasible point (Unbounded)
    Vec ray;         // unbounded direction when status == Unbounded
};

// min obj . w over p, exact two-phase simplex with Bland's rule.
LpResult lp_solve(const Polyhedron& p, const Vec& obj);

// min c.x subject to A x = b, x >= 0 (standard form, variables nonnegative,
// no free-variable split). Cheap when A has few rows, e.g. for dual LPs.
LpResult lp_standard(std::vector<Vec> A, Vec b, const Vec& c);

inline LpResult lp_max(const Polyhedron& p, const Vec& obj) {
    Vec neg(obj.size());
    for (std::size_t i = 0; i < obj.size(); ++i) neg[i] = -obj[i];
    LpResult r = lp_solve(p, neg);
    r.value = -r.value;
    return r;
}

// Lexicographically smallest point of the (nonempty) polyhedron, coordinate
// by coordinate. Coordinates whose minimum is unbounded below fall back to
// the admissible value nearest zero, so the output is always defined and
// deterministic.
Vec lex_min_point(Polyhedron p);

}  // namespace stochdp
