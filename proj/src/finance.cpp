#include "stochdp/finance.hpp"

#include "stochdp/linprog.hpp"

#include <stdexcept>
#include <string>

namespace stochdp {

namespace {

Polyhedron zero_point(std::size_t d) {
    Polyhedron p(d);
    for (std::size_t j = 0; j < d; ++j) {
        Vec a(d, Rat(0));
        a[j] = 1;
        p.add_eq(std::move(a), Rat(0));
    }
    return p;
}

void require_homogeneous(const Polyhedron& p, NodeId node, const char* what) {
    for (const auto& r : p.ineqs)
        if (r.rhs != 0)
            throw std::invalid_argument(std::string(what) + " cone at node " +
                                        std::to_string(node) + " is not homogeneous");
    for (const auto& r : p.eqs)
        if (r.rhs != 0)
            throw std::invalid_argument(std::string(what) + " cone at node " +
                                        std::to_string(node) + " is not homogeneous");
}

// dS_{t+1} along the path into `child`.
Vec price_move(const LiquidMarket& mkt, NodeId parent, NodeId child) {
    const Vec& s0 = mkt.prices.at(parent);
    const Vec& s1 = mkt.prices.at(child);
    Vec ds(mkt.d);
    for (std::size_t j = 0; j < mkt.d; ++j) ds[j] = s1[j] - s0[j];
    return ds;
}

// Gains-with-capital constraint row over (V_0, x_0..x_{T-1}) for one leaf.
LinRow superhedge_row(const LiquidMarket& mkt, NodeId leaf, const Rat& u, bool with_v0) {
    std::size_t T = mkt.tree.horizon();
    auto p = mkt.tree.path(leaf);
    std::size_t n = (with_v0 ? 1 : 0) + mkt.d * T;
    Vec a(n, Rat(0));
    if (with_v0) a[0] = -1;
    for (std::size_t t = 0; t < T; ++t) {
        Vec ds = price_move(mkt, p[t], p[t + 1]);
        std::size_t off = (with_v0 ? 1 : 0) + mkt.d * t;
        for (std::size_t j = 0; j < mkt.d; ++j) a[off + j] = -ds[j];
    }
    return {std::move(a), -u};
}

std::vector<std::size_t> trading_dims(const LiquidMarket& mkt, bool with_v0) {
    std::size_t T = mkt.tree.horizon();
    if (T == 0) throw std::invalid_argument("market needs at least one period");
    std::vector<std::size_t> dims(T + 1, mkt.d);
    if (with_v0) dims[0] += 1;
    dims[T] = 0;
    return dims;
}

// H-representation of the (negative) polar {y : y.x <= 0 for all x in cone}.
Polyhedron polar_cone(const Polyhedron& cone) {
    Generators g = enumerate_generators(cone);
    Polyhedron out(cone.dim);
    for (const auto& r : g.rays) out.add_ineq(r, Rat(0));
    for (const auto& l : g.lines) out.add_eq(l, Rat(0));
    for (const auto& v : g.vertices)
        if (!is_zero_vec(v)) out.add_ineq(v, Rat(0));  // conical input: only 0 expected
    return out;
}

const Vec& endowment_at(const std::map<NodeId, Vec>& endow, NodeId q, const Vec& zero) {
    auto it = endow.find(q);
    return it == endow.end() ? zero : it->second;
}

}  // namespace

void validate_cone_market(const ConeMarket& mkt) {
    for (NodeId q = 0; q < mkt.tree.node_count(); ++q) {
        auto ci = mkt.C.find(q), di = mkt.D.find(q);
        if (ci == mkt.C.end() || di == mkt.D.end())
            throw std::invalid_argument("cone market: missing cones at node " +
                                        std::to_string(q));
        if (ci->second.dim != mkt.d || di->second.dim != mkt.d)
            throw std::invalid_argument("cone market: cone dimension mismatch at node " +
                                        std::to_string(q));
        require_homogeneous(ci->second, q, "C");
        require_homogeneous(di->second, q, "D");
    }
    Polyhedron zp = zero_point(mkt.d);
    for (NodeId l : mkt.tree.leaves())
        if (!poly_contains(zp, mkt.D.at(l)))
            throw std::invalid_argument("cone market: terminal holdings at node " +
                                        std::to_string(l) + " are not pinned to 0");
}

IntegrandSpec build_superhedge(const LiquidMarket& mkt, const std::map<NodeId, Rat>& claim) {
    IntegrandSpec spec;
    spec.stage_dims = trading_dims(mkt, true);
    std::size_t n = spec.total_dim();
    for (NodeId l : mkt.tree.leaves()) {
        Polyhedron ok(n);
        LinRow row = superhedge_row(mkt, l, claim.at(l), true);
        ok.add_ineq(std::move(row.a), std::move(row.rhs));
        Vec v0(n, Rat(0));
        v0[0] = 1;
        spec.leaf_functions.emplace(l, pf_restrict(pf_affine(v0, Rat(0)), ok));
    }
    return spec;
}

IntegrandSpec build_superhedge_feasibility(const LiquidMarket& mkt,
                                           const std::map<NodeId, Rat>& claim) {
    IntegrandSpec spec;
    spec.stage_dims = trading_dims(mkt, false);
    std::size_t n = spec.total_dim();
    for (NodeId l : mkt.tree.leaves()) {
        Polyhedron ok(n);
        LinRow row = superhedge_row(mkt, l, claim.at(l), false);
        ok.add_ineq(std::move(row.a), std::move(row.rhs));
        spec.leaf_functions.emplace(l, pf_indicator(ok));
        spec.lower_bounds.emplace(l, Rat(0));
    }
    return spec;
}

NoArbitrageReport no_arbitrage_check(const LiquidMarket& mkt) {
    std::map<NodeId, Rat> zero;
    for (NodeId l : mkt.tree.leaves()) zero.emplace(l, Rat(0));
    LinearityReport lr = check_linearity_L(mkt.tree, build_superhedge_feasibility(mkt, zero));
    NoArbitrageReport rep;
    rep.holds = lr.is_linear;
    rep.witness = std::move(lr.witness);
    return rep;
}

IntegrandSpec build_consumption(const ConeMarket& mkt, const UtilitySpec& util,
                                const std::map<NodeId, Vec>& endowment) {
    validate_cone_market(mkt);
    const ScenarioTree& tree = mkt.tree;
    std::size_t T = tree.horizon(), d = mkt.d;
    IntegrandSpec spec;
    spec.stage_dims.assign(T + 1, 2 * d);  // x_t = (z_t, c_t)
    std::size_t n = spec.total_dim();
    Vec zero_u(d, Rat(0));

    for (NodeId l : tree.leaves()) {
        auto path = tree.path(l);
        PolyFunc f = pf_max_affine(n, {});  // zero function; utilities add below
        Polyhedron cons(n);
        bool certified = true;
        Rat cert = 0;
        for (std::size_t t = 0; t <= T; ++t) {
            NodeId q = path[t];
            std::size_t z_off = 2 * d * t, c_off = z_off + d;
            // dz_t + c_t + u_t in C_t
            const Vec& u = endowment_at(endowment, q, zero_u);
            for (const auto& r : mkt.C.at(q).ineqs) {
                Vec a(n, Rat(0));
                Rat rhs = 0;
                for (std::size_t j = 0; j < d; ++j) {
                    a[z_off + j] += r.a[j];
                    if (t > 0) a[z_off - 2 * d + j] -= r.a[j];
                    a[c_off + j] += r.a[j];
                    rhs -= r.a[j] * u[j];
                }
                cons.add_ineq(std::move(a), std::move(rhs));
            }
            for (const auto& r : mkt.C.at(q).eqs) {
                Vec a(n, Rat(0));
                Rat rhs = 0;
                for (std::size_t j = 0; j < d; ++j) {
                    a[z_off + j] += r.a[j];
                    if (t > 0) a[z_off - 2 * d + j] -= r.a[j];
                    a[c_off + j] += r.a[j];
                    rhs -= r.a[j] * u[j];
                }
                cons.add_eq(std::move(a), std::move(rhs));
            }
            // z_t in D_t
            for (const auto& r : mkt.D.at(q).ineqs) {
                Vec a(n, Rat(0));
                for (std::size_t j = 0; j < d; ++j) a[z_off + j] = r.a[j];
                cons.add_ineq(std::move(a), Rat(0));
            }
            for (const auto& r : mkt.D.at(q).eqs) {
                Vec a(n, Rat(0));
                for (std::size_t j = 0; j < d; ++j) a[z_off + j] = r.a[j];
                cons.add_eq(std::move(a), Rat(0));
            }
            // -U_t(c_t); nodes without a utility admit no consumption
            auto ui = util.neg_u.find(q);
            if (ui != util.neg_u.end()) {
                std::vector<std::size_t> idx(d);
                for (std::size_t j = 0; j < d; ++j) idx[j] = c_off + j;
                f = pf_sum(f, pf_compose_coords(ui->second, n, idx));
                auto bi = util.upper_bound.find(q);
                if (bi == util.upper_bound.end())
                    certified = false;
                else
                    cert -= bi->second;
            } else {
                for (std::size_t j = 0; j < d; ++j) {
                    Vec a(n, Rat(0));
                    a[c_off + j] = 1;
                    cons.add_eq(std::move(a), Rat(0));
                }
            }
        }
        if (certified) spec.lower_bounds.emplace(l, cert);
        spec.leaf_functions.emplace(l, pf_restrict(f, cons));
    }
    return spec;
}

namespace {

// Adapted (z, c) cone rows shared by the scalable-arbitrage check and the
// Remark-2 projection: dz_t + c_t in C_t, z_t in D_t, over the recession
// market (the cones themselves, conical case).
Polyhedron consumption_cone(const ConeMarket& mkt, const AdaptedLayout& layout) {
    const ScenarioTree& tree = mkt.tree;
    std::size_t d = mkt.d;
    Polyhedron big(layout.total);
    for (std::size_t t = 0; t <= tree.horizon(); ++t)
        for (NodeId q : tree.stage_nodes(t)) {
            std::size_t z_off = layout.offset.at({t, q});
            std::size_t c_off = z_off + d;
            std::size_t pz_off = 0;
            if (t > 0) {
                NodeId par = *tree.node(q).parent;
                pz_off = layout.offset.at({t - 1, par});
            }
            auto add = [&](const LinRow& r, bool eq, bool with_c) {
                Vec a(layout.total, Rat(0));
                for (std::size_t j = 0; j < d; ++j) {
                    a[z_off + j] += r.a[j];
                    if (t > 0) a[pz_off + j] -= r.a[j];
                    if (with_c) a[c_off + j] += r.a[j];
                }
                if (eq)
                    big.add_eq(std::move(a), Rat(0));
                else
                    big.add_ineq(std::move(a), Rat(0));
            };
            for (const auto& r : mkt.C.at(q).ineqs) add(r, false, true);
            for (const auto& r : mkt.C.at(q).eqs) add(r, true, true);
            auto addD = [&](const LinRow& r, bool eq) {
                Vec a(layout.total, Rat(0));
                for (std::size_t j = 0; j < d; ++j) a[z_off + j] = r.a[j];
                if (eq)
                    big.add_eq(std::move(a), Rat(0));
                else
                    big.add_ineq(std::move(a), Rat(0));
            };
            for (const auto& r : mkt.D.at(q).ineqs) addD(r, false);
            for (const auto& r : mkt.D.at(q).eqs) addD(r, true);
        }
    return big;
}

}  // namespace

NoScalableArbitrageReport no_scalable_arbitrage_check(const ConeMarket& mkt) {
    validate_cone_market(mkt);
    const ScenarioTree& tree = mkt.tree;
    std::size_t d = mkt.d;
    AdaptedLayout layout(tree, std::vector<std::size_t>(tree.horizon() + 1, 2 * d));
    Polyhedron big = consumption_cone(mkt, layout);
    // c >= 0 everywhere, capped by 1 so the LP is bounded
    Vec obj(layout.total, Rat(0));
    for (const auto& [key, off] : layout.offset)
        for (std::size_t j = 0; j < d; ++j) {
            std::size_t cj = off + d + j;
            Vec lo(layout.total, Rat(0)), hi(layout.total, Rat(0));
            lo[cj] = -1;
            hi[cj] = 1;
            big.add_ineq(std::move(lo), Rat(0));
            big.add_ineq(std::move(hi), Rat(1));
            obj[cj] = 1;
        }
    LpResult r = lp_max(big, obj);
    NoScalableArbitrageReport rep;
    if (r.status != LpStatus::Optimal)
        throw std::logic_error("no_scalable_arbitrage_check: capped LP must be solvable");
    rep.holds = r.value == 0;
    if (!rep.holds) {
        for (const auto& [key, off] : layout.offset) {
            Vec c(d);
            for (std::size_t j = 0; j < d; ++j) c[j] = r.point[off + d + j];
            rep.witness_c.emplace(key.second, std::move(c));
        }
    }
    return rep;
}

OcpConditionsReport check_thm_ocp_conditions(const ConeMarket& mkt, const UtilitySpec& util) {
    validate_cone_market(mkt);
    const ScenarioTree& tree = mkt.tree;
    std::size_t d = mkt.d;
    OcpConditionsReport rep;

    // (a) linearity of the admissible-holdings cone over adapted z
    {
        AdaptedLayout zl(tree, std::vector<std::size_t>(tree.horizon() + 1, d));
        Polyhedron zc(zl.total);
        for (std::size_t t = 0; t <= tree.horizon(); ++t)
            for (NodeId q : tree.stage_nodes(t)) {
                std::size_t z_off = zl.offset.at({t, q});
                std::size_t pz_off = t > 0 ? zl.offset.at({t - 1, *tree.node(q).parent}) : 0;
                auto add = [&](const LinRow& r, bool eq, bool diff) {
                    Vec a(zl.total, Rat(0));
                    for (std::size_t j = 0; j < d; ++j) {
                        a[z_off + j] += r.a[j];
                        if (diff && t > 0) a[pz_off + j] -= r.a[j];
                    }
                    if (eq)
                        zc.add_eq(std::move(a), Rat(0));
                    else
                        zc.add_ineq(std::move(a), Rat(0));
                };
                for (const auto& r : mkt.C.at(q).ineqs) add(r, false, true);
                for (const auto& r : mkt.C.at(q).eqs) add(r, true, true);
                for (const auto& r : mkt.D.at(q).ineqs) add(r, false, false);
                for (const auto& r : mkt.D.at(q).eqs) add(r, true, false);
            }
        rep.z_set_linear = cone_lineality(ConeRep(std::move(zc))).is_linear;
    }

    // (b) growth: the recession of every -U_t is the indicator of R_+^d
    {
        Polyhedron orthant(d);
        for (std::size_t j = 0; j < d; ++j) {
            Vec a(d, Rat(0));
            a[j] = -1;
            orthant.add_ineq(std::move(a), Rat(0));
        }
        PolyFunc target = pf_indicator(orthant);
        rep.growth_ok = true;
        for (const auto& [q, g] : util.neg_u)
            if (!pf_equal(pf_recession(g), target)) {
                rep.growth_ok = false;
                rep.growth_fail_node = q;
                break;
            }
    }

    // (c) upper bounds U_t <= m present and valid (g = -U >= -m)
    rep.bounds_ok = true;
    for (const auto& [q, g] : util.neg_u) {
        auto bi = util.upper_bound.find(q);
        bool ok = bi != util.upper_bound.end();
        if (ok) {
            try {
                MinResult m = pf_minimize(g);
                ok = !m.value || *m.value >= -bi->second;
            } catch (const UnboundedBelow&) {
                ok = false;
            }
        }
        if (!ok) {
            rep.bounds_ok = false;
            rep.bounds_fail_node = q;
            break;
        }
    }

    // Remark-2 alternative: the financeable consumption cone is a subspace
    {
        AdaptedLayout layout(tree, std::vector<std::size_t>(tree.horizon() + 1, 2 * d));
        Polyhedron big = consumption_cone(mkt, layout);
        std::vector<std::size_t> zcoords;
        for (const auto& [key, off] : layout.offset)
            for (std::size_t j = 0; j < d; ++j) zcoords.push_back(off + j);
        Polyhedron proj = fm_eliminate(big, zcoords);
        Polyhedron neg = proj;
        for (auto& r : neg.ineqs)
            for (auto& x : r.a) x = -x;
        for (auto& r : neg.eqs)
            for (auto& x : r.a) x = -x;
        rep.remark2_ok = poly_equal(proj, neg);
    }

    rep.applicable = rep.z_set_linear && rep.bounds_ok && (rep.growth_ok || rep.remark2_ok);
    return rep;
}

namespace {

struct DualRows {
    AdaptedLayout layout;  // y per node
    Polyhedron feas;
};

DualRows dual_feasibility_rows(const ConeMarket& mkt, DualIndexing indexing) {
    const ScenarioTree& tree = mkt.tree;
    std::size_t d = mkt.d;
    DualRows out{AdaptedLayout(tree, std::vector<std::size_t>(tree.horizon() + 1, d)),
                 Polyhedron(0)};
    out.feas = Polyhedron(out.layout.total);
    auto add_polar = [&](const Polyhedron& polar,
                         const std::vector<std::pair<std::size_t, Rat>>& combo) {
        // rows applied to sum_k coef_k * y_{node_k}
        for (const auto& r : polar.ineqs) {
            Vec a(out.layout.total, Rat(0));
            for (const auto& [off, coef] : combo)
                for (std::size_t j = 0; j < d; ++j) a[off + j] += coef * r.a[j];
            out.feas.add_ineq(std::move(a), Rat(0));
        }
        for (const auto& r : polar.eqs) {
            Vec a(out.layout.total, Rat(0));
            for (const auto& [off, coef] : combo)
                for (std::size_t j = 0; j < d; ++j) a[off + j] += coef * r.a[j];
            out.feas.add_eq(std::move(a), Rat(0));
        }
    };
    for (std::size_t t = 0; t <= tree.horizon(); ++t)
        for (NodeId q : tree.stage_nodes(t)) {
            std::size_t y_off = out.layout.offset.at({t, q});
            add_polar(polar_cone(mkt.C.at(q)), {{y_off, Rat(1)}});
            const auto& kids = tree.node(q).children;
            if (kids.empty()) continue;  // y_{T+1} = 0 and the terminal polar is everything
            if (indexing == DualIndexing::Derivation) {
                // E_t y_{t+1} - y_t in D_t^*
                std::vector<std::pair<std::size_t, Rat>> combo{{y_off, Rat(-1)}};
                for (NodeId c : kids)
                    combo.push_back({out.layout.offset.at({t + 1, c}),
                                     tree.node(c).cond_prob});
                add_polar(polar_cone(mkt.D.at(q)), combo);
            } else {
                // y_{t+1} - y_t in D_t^* along every branch
                Polyhedron polar = polar_cone(mkt.D.at(q));
                for (NodeId c : kids)
                    add_polar(polar, {{out.layout.offset.at({t + 1, c}), Rat(1)},
                                      {y_off, Rat(-1)}});
            }
        }
    return out;
}

}  // namespace

bool dual_feasible(const ConeMarket& mkt, const DualProcess& y, DualIndexing indexing) {
    DualRows rows = dual_feasibility_rows(mkt, indexing);
    Vec w(rows.layout.total, Rat(0));
    for (std::size_t t = 0; t <= mkt.tree.horizon(); ++t)
        for (NodeId q : mkt.tree.stage_nodes(t)) {
            const Vec& yq = y.y.at(q);
            std::size_t off = rows.layout.offset.at({t, q});
            for (std::size_t j = 0; j < mkt.d; ++j) w[off + j] = yq[j];
        }
    return rows.feas.contains(w);
}

std::optional<Rat> dual_objective(const ConeMarket& mkt, const UtilitySpec& util,
                                  const std::map<NodeId, Vec>& endowment,
                                  const DualProcess& y) {
    Rat total = 0;
    for (const auto& [q, g] : util.neg_u) {
        // sup_c (U(c) - y.c) = g*(-y) with g = -U
        PolyFunc h = pf_negate_args(pf_conjugate(g));
        auto v = h(y.y.at(q));
        if (!v) return std::nullopt;
        total += mkt.tree.node(q).abs_prob * *v;
    }
    for (const auto& [q, u] : endowment)
        total -= mkt.tree.node(q).abs_prob * dot(y.y.at(q), u);
    return total;
}

DualSolveResult build_consumption_dual(const ConeMarket& mkt, const UtilitySpec& util,
                                       const std::map<NodeId, Vec>& endowment,
                                       DualIndexing indexing) {
    validate_cone_market(mkt);
    const ScenarioTree& tree = mkt.tree;
    std::size_t d = mkt.d;
    DualRows rows = dual_feasibility_rows(mkt, indexing);

    // one epigraph slot per utility term
    std::vector<NodeId> terms;
    for (const auto& [q, g] : util.neg_u) terms.push_back(q);
    std::size_t N = rows.layout.total + terms.size();
    Polyhedron big(N);
    auto widen = [&](const LinRow& r) {
        LinRow s;
        s.a.resize(N, Rat(0));
        for (std::size_t j = 0; j < rows.layout.total; ++j) s.a[j] = r.a[j];
        s.rhs = r.rhs;
        return s;
    };
    for (const auto& r : rows.feas.ineqs) big.ineqs.push_back(widen(r));
    for (const auto& r : rows.feas.eqs) big.eqs.push_back(widen(r));
    Vec obj(N, Rat(0));
    for (std::size_t i = 0; i < terms.size(); ++i) {
        NodeId q = terms[i];
        PolyFunc h = pf_negate_args(pf_conjugate(util.neg_u.at(q)));  // -U^* convex in y
        std::size_t t = tree.node(q).stage;
        std::size_t y_off = rows.layout.offset.at({t, q});
        std::vector<std::size_t> idx(d + 1);
        for (std::size_t j = 0; j < d; ++j) idx[j] = y_off + j;
        idx[d] = rows.layout.total + i;  // alpha slot
        for (const auto& r : h.epigraph().ineqs) {
            Vec a(N, Rat(0));
            for (std::size_t j = 0; j <= d; ++j) a[idx[j]] += r.a[j];
            big.add_ineq(std::move(a), r.rhs);
        }
        for (const auto& r : h.epigraph().eqs) {
            Vec a(N, Rat(0));
            for (std::size_t j = 0; j <= d; ++j) a[idx[j]] += r.a[j];
            big.add_eq(std::move(a), r.rhs);
        }
        obj[rows.layout.total + i] = tree.node(q).abs_prob;
    }
    for (const auto& [q, u] : endowment) {
        std::size_t t = tree.node(q).stage;
        std::size_t y_off = rows.layout.offset.at({t, q});
        const Rat& p = tree.node(q).abs_prob;
        for (std::size_t j = 0; j < d; ++j) obj[y_off + j] -= p * u[j];
    }

    DualSolveResult out;
    LpResult r = lp_solve(big, obj);
    if (r.status == LpStatus::Infeasible) return out;  // empty dual set
    if (r.status == LpStatus::Unbounded) {
        out.feasible = true;
        out.unbounded = true;  // bound is -inf: the primal admits no plan
        return out;
    }
    out.feasible = true;
    out.value = r.value;

    // deterministic representative on the optimal face
    Polyhedron face = big;
    face.add_eq(obj, r.value);
    Vec w = lex_min_point(std::move(face));
    for (std::size_t t = 0; t <= tree.horizon(); ++t)
        for (NodeId q : tree.stage_nodes(t)) {
            std::size_t off = rows.layout.offset.at({t, q});
            out.y.y.emplace(q, Vec(w.begin() + static_cast<long>(off),
                                   w.begin() + static_cast<long>(off + d)));
        }
    return out;
}

}  // namespace stochdp
