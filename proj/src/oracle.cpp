#include "stochdp/oracle.hpp"

#include "stochdp/linalg.hpp"
#include "stochdp/linprog.hpp"

#include <stdexcept>

namespace stochdp {

namespace {

// Deterministic completion: pinned value if an equality binds, otherwise the
// admissible value nearest zero.
Rat pick_in_interval(const std::optional<Rat>& lo, const std::optional<Rat>& hi) {
    Rat x = 0;
    if (lo && x < *lo) x = *lo;
    if (hi && x > *hi) x = *hi;
    return x;
}

}  // namespace

FlatSolution flatten_solve(const ScenarioTree& tree, const IntegrandSpec& spec) {
    AdaptedLayout layout(tree, spec.stage_dims);
    const auto& leaves = tree.leaves();
    std::size_t L = leaves.size();
    std::size_t N = layout.total + L + 1;  // adapted vars, per-leaf alphas, value axis
    Polyhedron big(N);
    for (std::size_t i = 0; i < L; ++i) {
        NodeId l = leaves[i];
        auto it = spec.leaf_functions.find(l);
        if (it == spec.leaf_functions.end())
            throw TreeError("MissingValue", l, "no cost function for leaf");
        const PolyFunc& f = it->second;
        if (f.dim() != spec.total_dim())
            throw std::invalid_argument("flatten_solve: leaf function dimension mismatch");
        auto idx = layout.leaf_map(tree, l);
        idx.push_back(layout.total + i);  // this leaf's value slot
        auto remap = [&](const LinRow& r) {
            LinRow s;
            s.a.resize(N, Rat(0));
            for (std::size_t j = 0; j < idx.size(); ++j) s.a[idx[j]] += r.a[j];
            s.rhs = r.rhs;
            return s;
        };
        for (const auto& r : f.epigraph().ineqs) big.ineqs.push_back(remap(r));
        for (const auto& r : f.epigraph().eqs) big.eqs.push_back(remap(r));
    }
    {
        Vec link(N, Rat(0));
        for (std::size_t i = 0; i < L; ++i) link[layout.total + i] = tree.node(leaves[i]).abs_prob;
        link[N - 1] = -1;
        big.add_ineq(std::move(link), Rat(0));  // E alpha <= value axis
    }

    std::vector<std::size_t> elim(N - 1);
    for (std::size_t j = 0; j + 1 < N; ++j) elim[j] = j;
    FmTrace tr = fm_eliminate_traced(big, elim, 1000);
    if (!tr.uneliminated.empty()) {
        // Elimination stalled on a genuinely huge intermediate shadow; the
        // flat system itself is small, so finish with one exact LP on it.
        Vec obj(N, Rat(0));
        obj[N - 1] = 1;
        LpResult r = lp_solve(big, obj);
        if (r.status == LpStatus::Infeasible) return {};
        if (r.status == LpStatus::Unbounded) throw UnboundedBelow(Vec{});
        FlatSolution out;
        out.value = r.value;
        out.minimizer =
            layout.unpack(tree, Vec(r.point.begin(), r.point.begin() + static_cast<long>(layout.total)));
        return out;
    }

    // the final system constrains the value axis alone
    std::optional<Rat> lo, hi;
    for (const auto& r : tr.final.ineqs) {
        const Rat& c = r.a[N - 1];
        if (c == 0) {
            if (r.rhs < 0) return {};  // infeasible marker
            continue;
        }
        Rat bound = r.rhs / c;
        if (c < 0) {
            if (!lo || bound > *lo) lo = bound;
        } else {
            if (!hi || bound < *hi) hi = bound;
        }
    }
    for (const auto& r : tr.final.eqs) {
        if (r.a[N - 1] == 0) {
            if (r.rhs != 0) return {};
            continue;
        }
        Rat v = r.rhs / r.a[N - 1];
        lo = lo ? std::max(*lo, v) : v;
        hi = hi ? std::min(*hi, v) : v;
    }
    if (lo && hi && *hi < *lo) return {};
    if (!lo) throw UnboundedBelow(Vec{});

    Vec w(N, Rat(0));
    w[N - 1] = *lo;
    for (std::size_t step = tr.order.size(); step-- > 0;) {
        std::size_t k = tr.order[step];
        const Polyhedron& snap = tr.snapshots[step];
        std::optional<Rat> klo, khi;
        bool pinned = false;
        Rat pin;
        for (const auto& r : snap.eqs) {
            if (r.a[k] == 0) continue;
            Rat rest = r.rhs;
            for (std::size_t j = 0; j < N; ++j)
                if (j != k && r.a[j] != 0) rest -= r.a[j] * w[j];
            pin = rest / r.a[k];
            pinned = true;
            break;
        }
        if (!pinned) {
            for (const auto& r : snap.ineqs) {
                if (r.a[k] == 0) continue;
                Rat rest = r.rhs;
                for (std::size_t j = 0; j < N; ++j)
                    if (j != k && r.a[j] != 0) rest -= r.a[j] * w[j];
                Rat bound = rest / r.a[k];
                if (r.a[k] > 0) {
                    if (!khi || bound < *khi) khi = bound;
                } else {
                    if (!klo || bound > *klo) klo = bound;
                }
            }
        }
        w[k] = pinned ? pin : pick_in_interval(klo, khi);
    }

    FlatSolution out;
    out.value = *lo;
    out.minimizer = layout.unpack(tree, Vec(w.begin(), w.begin() + static_cast<long>(layout.total)));
    return out;
}

LeastSquaresSolution least_squares_oracle(const HedgeProblem& hp) {
    const ScenarioTree& tree = hp.tree;
    std::size_t T = tree.horizon();
    if (T == 0) throw std::invalid_argument("least_squares_oracle: need at least one period");
    std::size_t d = hp.d;
    std::vector<std::size_t> dims(T + 1, d);
    dims[0] = d + 1;
    dims[T] = 0;
    AdaptedLayout layout(tree, dims);

    Mat G(layout.total, layout.total);
    Vec r(layout.total, Rat(0));
    Rat cst = 0;
    for (NodeId l : tree.leaves()) {
        auto path = tree.path(l);
        Vec a(layout.total, Rat(0));
        a[layout.offset.at({0, tree.root()})] = 1;  // V_0
        for (std::size_t t = 0; t < T; ++t) {
            const Vec& s0 = hp.prices.at(path[t]);
            const Vec& s1 = hp.prices.at(path[t + 1]);
            std::size_t base = layout.offset.at({t, path[t]}) + (t == 0 ? 1 : 0);
            for (std::size_t j = 0; j < d; ++j) a[base + j] = s1[j] - s0[j];
        }
        const Rat& p = tree.node(l).abs_prob;
        const Rat& u = hp.claim.at(l);
        for (std::size_t i = 0; i < layout.total; ++i) {
            if (a[i] == 0) continue;
            for (std::size_t j = 0; j < layout.total; ++j) G(i, j) += p * a[i] * a[j];
            r[i] += p * u * a[i];
        }
        cst += p * u * u;
    }
    auto sol = solve_min_norm(G, r);
    if (!sol) throw std::logic_error("least_squares_oracle: inconsistent normal equations");
    const Vec& w = *sol;

    LeastSquaresSolution out;
    out.value = cst - dot(r, w);  // w'Gw - 2 r.w + c with Gw = r
    Policy full = layout.unpack(tree, w);
    out.v0 = full.at(tree.root())[0];
    for (std::size_t t = 0; t < T; ++t)
        for (NodeId v : tree.stage_nodes(t)) {
            const Vec& x = full.at(v);
            out.z.values[v] = t == 0 ? Vec(x.begin() + 1, x.end()) : x;
        }
    return out;
}

PhiProbeReport phi_probe(const ScenarioTree& tree,
                         const std::function<IntegrandSpec(const Vec&)>& builder,
                         const std::vector<Vec>& grid,
                         const std::optional<DualCandidate>& dual) {
    PhiProbeReport rep;
    auto value_at = [&](const Vec& u) { return flatten_solve(tree, builder(u)); };
    for (const auto& u : grid) {
        FlatSolution s = value_at(u);
        rep.entries.push_back({u, s.value, std::move(s.minimizer)});
    }
    for (std::size_t i = 0; i < rep.entries.size(); ++i)
        for (std::size_t j = i + 1; j < rep.entries.size(); ++j) {
            const auto& ei = rep.entries[i];
            const auto& ej = rep.entries[j];
            if (!ei.value || !ej.value) continue;  // rhs is +inf, nothing to check
            Vec mid(ei.u.size());
            for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = (ei.u[k] + ej.u[k]) / 2;
            auto fm = value_at(mid).value;
            if (!fm || *fm > (*ei.value + *ej.value) / 2) rep.midpoint_convex = false;
        }
    if (dual) {
        for (const auto& e : rep.entries) {
            if (!e.value) continue;  // +inf dominates any affine minorant
            Rat minorant = dual->pair(e.u) + dual->g;
            if (*e.value < minorant) rep.fenchel_holds = false;
            if (is_zero_vec(e.u) && *e.value != dual->g) rep.fenchel_tight_at_zero = false;
        }
    }
    return rep;
}

}  // namespace stochdp
