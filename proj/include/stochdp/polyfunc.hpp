#pragma once

#include "stochdp/polyhedron.hpp"
#include "stochdp/rational.hpp"

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace stochdp {

struct UnboundedBelow : std::runtime_error {
    Vec witness_ray;  // direction (in function arguments) along which value -> -inf
    explicit UnboundedBelow(Vec ray)
        : std::runtime_error("function is unbounded below"), witness_ray(std::move(ray)) {}
};

struct ImproperInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Proper convex polyhedral extended-real function, represented by its
// epigraph in R^{n+1}; the last coordinate is the value axis. Rows are
// normalized so the value-axis coefficient is 0 or -1, which makes (0,1) a
// recession direction by construction. The identically +inf function is
// representable (empty epigraph); -inf values are never representable and
// surface as UnboundedBelow.
class PolyFunc {
public:
    // default: identically +inf in dimension 0; handy as an accumulator seed
    PolyFunc() = default;

    // Accepts a raw epigraph; throws ImproperInput if (0,1) is not a
    // recession direction, UnboundedBelow if the epigraph contains a
    // downward vertical line.
    static PolyFunc from_epigraph(Polyhedron epi);

    std::size_t dim() const { return dim_; }
    const Polyhedron& epigraph() const { return epi_; }

    // true iff the function is identically +inf
    bool infeasible() const { return infeasible_; }

    // f(x); nullopt encodes +inf.
    std::optional<Rat> operator()(const Vec& x) const;

    // {x : f(x) <= 0}, as an H-polyhedron in R^n.
    Polyhedron level_zero() const;

    // Effective domain as an H-polyhedron in R^n (projection of the epigraph).
    Polyhedron domain() const;

private:
    std::size_t dim_ = 0;
    Polyhedron epi_;
    bool infeasible_ = true;
};

// Constructors ---------------------------------------------------------------

// f(x) = max_i (rows[i].a . x - rows[i].rhs); empty rows -> the zero function.
PolyFunc pf_max_affine(std::size_t dim, const std::vector<LinRow>& rows);

// 0 on the polyhedron, +inf outside.
PolyFunc pf_indicator(const Polyhedron& p);

// a . x + b
PolyFunc pf_affine(const Vec& a, const Rat& b);

// |x_i| in dimension dim
PolyFunc pf_abs_coord(std::size_t dim, std::size_t i);

// Calculus -------------------------------------------------------------------

PolyFunc pf_sum(const PolyFunc& f, const PolyFunc& g);

// c * f for c > 0
PolyFunc pf_scale(const PolyFunc& f, const Rat& c);

// f plus an indicator of the constraint set (rows over the n arguments).
PolyFunc pf_restrict(const PolyFunc& f, const Polyhedron& constraints);

// g(y) = f(y[index_map[0]], ..., y[index_map[n-1]]) in dimension new_dim.
PolyFunc pf_compose_coords(const PolyFunc& f, std::size_t new_dim,
                           const std::vector<std::size_t>& index_map);

// g(x) = f(-x)
PolyFunc pf_negate_args(const PolyFunc& f);

// Partial minimization over the listed argument coordinates. Throws
// UnboundedBelow (with a witness ray over the full arguments) if the value
// -inf is attained.
PolyFunc pf_partial_min(const PolyFunc& f, const std::vector<std::size_t>& coords);

// Substitutes fixed values for the listed coordinates; result lives on the
// remaining coordinates in their original order.
PolyFunc pf_fix_coords(const PolyFunc& f, const std::vector<std::size_t>& coords,
                       const Vec& values);

// Recession function f^inf; throws ImproperInput on the identically +inf input.
PolyFunc pf_recession(const PolyFunc& f);

// Legendre-Fenchel conjugate via double description; requires dim+1 <= 8.
PolyFunc pf_conjugate(const PolyFunc& f);

// Global minimization: value and one exact minimizer (lexicographically
// smallest within the optimal face). nullopt value encodes +inf (infeasible).
struct MinResult {
    std::optional<Rat> value;
    Vec minimizer;  // empty when value is +inf
};
MinResult pf_minimize(const PolyFunc& f);

// Minimize over the trailing coordinates with the leading ones fixed.
MinResult pf_argmin_slice(const PolyFunc& f, const Vec& leading);

// Epigraph equality as point sets.
bool pf_equal(const PolyFunc& f, const PolyFunc& g);

// Cones ----------------------------------------------------------------------

// Homogeneous H-cone {x : a_i . x <= 0}.
struct ConeRep {
    Polyhedron p;  // all rhs must be zero
    explicit ConeRep(Polyhedron q);
    std::size_t dim() const { return p.dim; }
};

struct LinealityResult {
    std::vector<Vec> basis;  // basis of the lineality space
    bool is_linear = false;  // cone equals its lineality space
    Vec witness;             // x in N with -x not in N, when not linear
};

LinealityResult cone_lineality(const ConeRep& n);

// Generator representation of an H-polyhedron (double description on the
// homogenization). Exposed for the conjugate and for tests.
struct Generators {
    std::vector<Vec> vertices;
    std::vector<Vec> rays;
    std::vector<Vec> lines;
};

Generators enumerate_generators(const Polyhedron& p);

}  // namespace stochdp
