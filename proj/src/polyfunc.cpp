#include "stochdp/polyfunc.hpp"

#include "stochdp/linalg.hpp"
#include "stochdp/linprog.hpp"

#include <algorithm>

namespace stochdp {

namespace {

constexpr std::size_t kConjugateBudget = 8;  // max n+1 for double description

// Witness ray (d, delta), delta < 0, of the recession cone of an epigraph.
Vec downward_ray(const Polyhedron& epi) {
    Polyhedron cone = epi.homogenized();
    Vec bound(cone.dim, Rat(0));
    bound[cone.dim - 1] = -1;  // -delta <= 1
    cone.add_ineq(bound, Rat(1));
    Vec obj(cone.dim, Rat(0));
    obj[cone.dim - 1] = 1;
    LpResult r = lp_solve(cone, obj);
    if (r.status == LpStatus::Optimal && r.value < 0) return r.point;
    return Vec(cone.dim, Rat(0));  // no witness found (should not happen)
}

}  // namespace

PolyFunc PolyFunc::from_epigraph(Polyhedron epi) {
    if (epi.dim == 0) throw std::invalid_argument("PolyFunc: epigraph needs a value axis");
    std::size_t n = epi.dim - 1;
    for (auto& row : epi.eqs)
        if (row.a[n] != 0)
            throw ImproperInput("PolyFunc: equality row pins the value axis");
    bool has_lower = false;
    for (auto& row : epi.ineqs) {
        Rat g = row.a[n];
        if (g > 0) throw ImproperInput("PolyFunc: (0,1) is not a recession direction");
        if (g < 0) {
            has_lower = true;
            if (g != -1) {
                Rat s = -g;
                for (auto& c : row.a) c /= s;
                row.rhs /= s;
            }
        }
    }
    PolyFunc f;
    f.dim_ = n;
    if (is_empty(epi)) {
        f.infeasible_ = true;
        f.epi_ = Polyhedron(n + 1);
        Vec zero(n + 1, Rat(0));
        f.epi_.add_ineq(zero, Rat(-1));
        return f;
    }
    if (!has_lower) throw UnboundedBelow(downward_ray(epi));
    f.infeasible_ = false;
    f.epi_ = std::move(epi);
    return f;
}

std::optional<Rat> PolyFunc::operator()(const Vec& x) const {
    if (x.size() != dim_) throw std::invalid_argument("PolyFunc: argument dimension");
    if (infeasible_) return std::nullopt;
    std::optional<Rat> val;
    for (const auto& row : epi_.eqs) {
        Rat lhs = 0;
        for (std::size_t j = 0; j < dim_; ++j) lhs += row.a[j] * x[j];
        if (lhs != row.rhs) return std::nullopt;
    }
    for (const auto& row : epi_.ineqs) {
        Rat lhs = 0;
        for (std::size_t j = 0; j < dim_; ++j) lhs += row.a[j] * x[j];
        if (row.a[dim_] == 0) {
            if (lhs > row.rhs) return std::nullopt;
        } else {
            Rat lb = lhs - row.rhs;  // alpha >= a.x - rhs
            if (!val || lb > *val) val = lb;
        }
    }
    return val;  // has_lower guarantees at least one bound
}

Polyhedron PolyFunc::level_zero() const {
    Polyhedron out(dim_);
    if (infeasible_) {
        out.add_ineq(Vec(dim_, Rat(0)), Rat(-1));
        return out;
    }
    auto chop = [&](const LinRow& r) {
        LinRow s;
        s.a.assign(r.a.begin(), r.a.begin() + static_cast<long>(dim_));
        s.rhs = r.rhs;
        return s;
    };
    for (const auto& r : epi_.ineqs) out.ineqs.push_back(chop(r));
    for (const auto& r : epi_.eqs) out.eqs.push_back(chop(r));
    return out;
}

Polyhedron PolyFunc::domain() const {
    if (infeasible_) {
        Polyhedron out(dim_);
        out.add_ineq(Vec(dim_, Rat(0)), Rat(-1));
        return out;
    }
    return fm_eliminate(epi_, {dim_});
}

PolyFunc pf_max_affine(std::size_t dim, const std::vector<LinRow>& rows) {
    Polyhedron epi(dim + 1);
    if (rows.empty()) {
        Vec a(dim + 1, Rat(0));
        a[dim] = -1;
        epi.add_ineq(std::move(a), Rat(0));  // alpha >= 0
    }
    for (const auto& r : rows) {
        Vec a(dim + 1);
        for (std::size_t j = 0; j < dim; ++j) a[j] = r.a[j];
        a[dim] = -1;
        epi.add_ineq(std::move(a), r.rhs);
    }
    return PolyFunc::from_epigraph(std::move(epi));
}

PolyFunc pf_indicator(const Polyhedron& p) {
    Polyhedron epi(p.dim + 1);
    auto lift = [&](const LinRow& r) {
        LinRow s;
        s.a.resize(p.dim + 1, Rat(0));
        for (std::size_t j = 0; j < p.dim; ++j) s.a[j] = r.a[j];
        s.rhs = r.rhs;
        return s;
    };
    for (const auto& r : p.ineqs) epi.ineqs.push_back(lift(r));
    for (const auto& r : p.eqs) epi.eqs.push_back(lift(r));
    Vec a(p.dim + 1, Rat(0));
    a[p.dim] = -1;
    epi.add_ineq(std::move(a), Rat(0));
    return PolyFunc::from_epigraph(std::move(epi));
}

PolyFunc pf_affine(const Vec& a, const Rat& b) {
    return pf_max_affine(a.size(), {LinRow{a, -b}});
}

PolyFunc pf_abs_coord(std::size_t dim, std::size_t i) {
    Vec plus(dim, Rat(0)), minus(dim, Rat(0));
    plus[i] = 1;
    minus[i] = -1;
    return pf_max_affine(dim, {LinRow{plus, Rat(0)}, LinRow{minus, Rat(0)}});
}

PolyFunc pf_sum(const PolyFunc& f, const PolyFunc& g) {
    if (f.dim() != g.dim()) throw std::invalid_argument("pf_sum: dimension mismatch");
    std::size_t n = f.dim();
    if (f.infeasible()) return f;
    if (g.infeasible()) return g;
    // coords: x (n), a1, a2, a
    Polyhedron lifted(n + 3);
    auto inject = [&](const Polyhedron& epi, std::size_t alpha_slot) {
        auto remap = [&](const LinRow& r) {
            LinRow s;
            s.a.resize(n + 3, Rat(0));
            for (std::size_t j = 0; j < n; ++j) s.a[j] = r.a[j];
            s.a[alpha_slot] = r.a[n];
            s.rhs = r.rhs;
            return s;
        };
        for (const auto& r : epi.ineqs) lifted.ineqs.push_back(remap(r));
        for (const auto& r : epi.eqs) lifted.eqs.push_back(remap(r));
    };
    inject(f.epigraph(), n);
    inject(g.epigraph(), n + 1);
    Vec link(n + 3, Rat(0));
    link[n] = 1;
    link[n + 1] = 1;
    link[n + 2] = -1;
    lifted.add_ineq(std::move(link), Rat(0));  // a1 + a2 <= a
    Polyhedron epi = fm_eliminate(lifted, {n, n + 1});
    return PolyFunc::from_epigraph(std::move(epi));
}

PolyFunc pf_scale(const PolyFunc& f, const Rat& c) {
    if (c <= 0) throw std::invalid_argument("pf_scale: factor must be positive");
    if (f.infeasible()) return f;
    Polyhedron epi = f.epigraph();
    std::size_t n = f.dim();
    for (auto& row : epi.ineqs) {
        if (row.a[n] == 0) continue;
        for (std::size_t j = 0; j < n; ++j) row.a[j] *= c;
        row.rhs *= c;
    }
    return PolyFunc::from_epigraph(std::move(epi));
}

PolyFunc pf_restrict(const PolyFunc& f, const Polyhedron& constraints) {
    if (constraints.dim != f.dim()) throw std::invalid_argument("pf_restrict: dimension mismatch");
    if (f.infeasible()) return f;
    Polyhedron epi = f.epigraph();
    std::size_t n = f.dim();
    auto lift = [&](const LinRow& r) {
        LinRow s;
        s.a.resize(n + 1, Rat(0));
        for (std::size_t j = 0; j < n; ++j) s.a[j] = r.a[j];
        s.rhs = r.rhs;
        return s;
    };
    for (const auto& r : constraints.ineqs) epi.ineqs.push_back(lift(r));
    for (const auto& r : constraints.eqs) epi.eqs.push_back(lift(r));
    return PolyFunc::from_epigraph(std::move(epi));
}

PolyFunc pf_compose_coords(const PolyFunc& f, std::size_t new_dim,
                           const std::vector<std::size_t>& index_map) {
    if (index_map.size() != f.dim()) throw std::invalid_argument("pf_compose_coords: map size");
    for (auto i : index_map)
        if (i >= new_dim) throw std::invalid_argument("pf_compose_coords: index out of range");
    Polyhedron epi(new_dim + 1);
    auto remap = [&](const LinRow& r) {
        LinRow s;
        s.a.resize(new_dim + 1, Rat(0));
        for (std::size_t j = 0; j < f.dim(); ++j) s.a[index_map[j]] += r.a[j];
        s.a[new_dim] = r.a[f.dim()];
        s.rhs = r.rhs;
        return s;
    };
    for (const auto& r : f.epigraph().ineqs) epi.ineqs.push_back(remap(r));
    for (const auto& r : f.epigraph().eqs) epi.eqs.push_back(remap(r));
    return PolyFunc::from_epigraph(std::move(epi));
}

PolyFunc pf_negate_args(const PolyFunc& f) {
    Polyhedron epi = f.epigraph();
    std::size_t n = f.dim();
    for (auto& row : epi.ineqs)
        for (std::size_t j = 0; j < n; ++j) row.a[j] = -row.a[j];
    for (auto& row : epi.eqs)
        for (std::size_t j = 0; j < n; ++j) row.a[j] = -row.a[j];
    return PolyFunc::from_epigraph(std::move(epi));
}

PolyFunc pf_partial_min(const PolyFunc& f, const std::vector<std::size_t>& coords) {
    for (auto c : coords)
        if (c >= f.dim()) throw std::invalid_argument("pf_partial_min: coordinate out of range");
    if (f.infeasible()) {
        std::size_t rem = f.dim() - coords.size();
        Polyhedron epi(rem + 1);
        epi.add_ineq(Vec(rem + 1, Rat(0)), Rat(-1));
        return PolyFunc::from_epigraph(std::move(epi));
    }
    Polyhedron epi = fm_eliminate(f.epigraph(), coords);
    try {
        return PolyFunc::from_epigraph(std::move(epi));
    } catch (const UnboundedBelow&) {
        throw UnboundedBelow(downward_ray(f.epigraph()));
    }
}

PolyFunc pf_fix_coords(const PolyFunc& f, const std::vector<std::size_t>& coords,
                       const Vec& values) {
    if (coords.size() != values.size()) throw std::invalid_argument("pf_fix_coords: sizes");
    std::vector<std::optional<Rat>> fixed(f.dim());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (coords[i] >= f.dim()) throw std::invalid_argument("pf_fix_coords: index");
        fixed[coords[i]] = values[i];
    }
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < f.dim(); ++j)
        if (!fixed[j]) keep.push_back(j);
    std::size_t rem = keep.size();
    Polyhedron epi(rem + 1);
    if (f.infeasible()) {
        epi.add_ineq(Vec(rem + 1, Rat(0)), Rat(-1));
        return PolyFunc::from_epigraph(std::move(epi));
    }
    auto remap = [&](const LinRow& r) {
        LinRow s;
        s.a.resize(rem + 1, Rat(0));
        s.rhs = r.rhs;
        for (std::size_t j = 0; j < rem; ++j) s.a[j] = r.a[keep[j]];
        s.a[rem] = r.a[f.dim()];
        for (std::size_t j = 0; j < f.dim(); ++j)
            if (fixed[j]) s.rhs -= r.a[j] * *fixed[j];
        return s;
    };
    for (const auto& r : f.epigraph().ineqs) epi.ineqs.push_back(remap(r));
    for (const auto& r : f.epigraph().eqs) epi.eqs.push_back(remap(r));
    return PolyFunc::from_epigraph(std::move(epi));
}

PolyFunc pf_recession(const PolyFunc& f) {
    if (f.infeasible()) throw ImproperInput("pf_recession: identically +inf input");
    return PolyFunc::from_epigraph(f.epigraph().homogenized());
}

PolyFunc pf_conjugate(const PolyFunc& f) {
    if (f.dim() + 1 > kConjugateBudget)
        throw DimensionBudgetExceeded("pf_conjugate: dimension " + std::to_string(f.dim()) +
                                      " exceeds double-description budget");
    if (f.infeasible()) throw ImproperInput("pf_conjugate: identically +inf input");
    Polyhedron epi = f.epigraph();
    prune_redundant(epi);
    Generators g = enumerate_generators(epi);
    std::size_t n = f.dim();
    Polyhedron conj(n + 1);  // (y, beta)
    for (const auto& v : g.vertices) {
        // v = (x, alpha): y.x - beta <= alpha
        Vec a(n + 1);
        for (std::size_t j = 0; j < n; ++j) a[j] = v[j];
        a[n] = -1;
        conj.add_ineq(std::move(a), v[n]);
    }
    for (const auto& r : g.rays) {
        Vec a(n + 1, Rat(0));
        for (std::size_t j = 0; j < n; ++j) a[j] = r[j];
        conj.add_ineq(std::move(a), r[n]);
    }
    for (const auto& l : g.lines) {
        Vec a(n + 1, Rat(0));
        for (std::size_t j = 0; j < n; ++j) a[j] = l[j];
        conj.add_eq(std::move(a), l[n]);
    }
    return PolyFunc::from_epigraph(std::move(conj));
}

MinResult pf_minimize(const PolyFunc& f) {
    MinResult out;
    if (f.infeasible()) return out;
    std::size_t n = f.dim();
    Vec obj(n + 1, Rat(0));
    obj[n] = 1;
    LpResult r = lp_solve(f.epigraph(), obj);
    if (r.status == LpStatus::Infeasible) return out;
    if (r.status == LpStatus::Unbounded) throw UnboundedBelow(r.ray);
    out.value = r.value;
    Polyhedron face = f.epigraph();
    Vec row(n + 1, Rat(0));
    row[n] = 1;
    face.add_eq(std::move(row), r.value);
    Vec pt = lex_min_point(std::move(face));
    out.minimizer.assign(pt.begin(), pt.begin() + static_cast<long>(n));
    return out;
}

MinResult pf_argmin_slice(const PolyFunc& f, const Vec& leading) {
    std::vector<std::size_t> coords(leading.size());
    for (std::size_t i = 0; i < leading.size(); ++i) coords[i] = i;
    return pf_minimize(pf_fix_coords(f, coords, leading));
}

bool pf_equal(const PolyFunc& f, const PolyFunc& g) {
    if (f.dim() != g.dim()) return false;
    if (f.infeasible() || g.infeasible()) return f.infeasible() == g.infeasible();
    return poly_equal(f.epigraph(), g.epigraph());
}

ConeRep::ConeRep(Polyhedron q) : p(std::move(q)) {
    for (const auto& r : p.ineqs)
        if (r.rhs != 0) throw std::invalid_argument("ConeRep: inhomogeneous row");
    for (const auto& r : p.eqs)
        if (r.rhs != 0) throw std::invalid_argument("ConeRep: inhomogeneous row");
}

LinealityResult cone_lineality(const ConeRep& n) {
    LinealityResult out;
    const Polyhedron& c = n.p;
    Mat rows(c.ineqs.size() + c.eqs.size(), c.dim);
    std::size_t k = 0;
    for (const auto& r : c.ineqs) {
        for (std::size_t j = 0; j < c.dim; ++j) rows(k, j) = r.a[j];
        ++k;
    }
    for (const auto& r : c.eqs) {
        for (std::size_t j = 0; j < c.dim; ++j) rows(k, j) = r.a[j];
        ++k;
    }
    out.basis = null_space(std::move(rows));
    out.is_linear = true;
    for (const auto& r : c.ineqs) {
        Polyhedron probe = c;
        Vec neg(c.dim);
        for (std::size_t j = 0; j < c.dim; ++j) neg[j] = -r.a[j];
        probe.add_ineq(std::move(neg), Rat(1));  // a.x >= -1
        LpResult lp = lp_solve(probe, r.a);
        if (lp.status == LpStatus::Optimal && lp.value < 0) {
            out.is_linear = false;
            out.witness = lp.point;
            break;
        }
    }
    return out;
}

}  // namespace stochdp
