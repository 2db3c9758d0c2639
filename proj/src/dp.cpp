#include "stochdp/dp.hpp"

#include "stochdp/linalg.hpp"
#include "stochdp/linprog.hpp"

#include <algorithm>
#include <cassert>

namespace stochdp {

std::size_t IntegrandSpec::total_dim() const {
    std::size_t n = 0;
    for (auto d : stage_dims) n += d;
    return n;
}

std::size_t IntegrandSpec::prefix_dim(std::size_t t) const {
    std::size_t n = 0;
    for (std::size_t s = 0; s <= t; ++s) n += stage_dims[s];
    return n;
}

namespace {

// Verifies a declared lower bound f >= m exactly. Absence of a certificate is
// fine: a value of -inf then surfaces through the linearity checks instead.
void check_certificate(const PolyFunc& f, const std::optional<Rat>& bound, NodeId node) {
    if (!bound) return;
    try {
        MinResult m = pf_minimize(f);
        if (m.value && *m.value < *bound)
            throw CertificateViolated("declared lower bound fails at node " +
                                      std::to_string(node));
    } catch (const UnboundedBelow&) {
        throw CertificateViolated("cost at node " + std::to_string(node) +
                                  " is unbounded below");
    }
}

struct ConeCheck {
    Polyhedron cone;
    std::vector<Vec> basis;
    bool is_linear = true;
    Vec witness;
};

// N_t of h over x^t: zero-level set of d -> h^inf(0, d) in the trailing block.
ConeCheck last_direction_cone(const PolyFunc& h_inf, std::size_t nt) {
    ConeCheck out;
    if (nt == 0) {
        out.cone = Polyhedron(0);
        return out;
    }
    std::size_t lead = h_inf.dim() - nt;
    std::vector<std::size_t> coords(lead);
    for (std::size_t j = 0; j < lead; ++j) coords[j] = j;
    PolyFunc g = pf_fix_coords(h_inf, coords, Vec(lead, Rat(0)));
    out.cone = g.level_zero();
    LinealityResult lr = cone_lineality(ConeRep(out.cone));
    out.basis = std::move(lr.basis);
    out.is_linear = lr.is_linear;
    out.witness = std::move(lr.witness);
    return out;
}

// First N_t violation seen during a tolerant backward pass.
struct Violation {
    NodeId node = 0;
    std::size_t stage = 0;
    Vec witness;
};

NodeFunctionTable backward_core(const ScenarioTree& tree, const IntegrandSpec& spec,
                                bool throw_on_nonlinear, std::optional<Violation>* first) {
    std::size_t T = tree.horizon();
    if (spec.stage_dims.size() != T + 1)
        throw std::invalid_argument("backward_pass: stage_dims must have horizon+1 entries");
    NodeFunctionTable tab;
    tab.stage_dims = spec.stage_dims;
    tab.h.resize(T + 1);
    tab.h_pre.resize(T + 1);
    tab.h_inf.resize(T + 1);
    tab.last_cone.resize(T + 1);
    tab.lineality.resize(T + 1);

    auto record = [&](std::size_t t, NodeId node, const PolyFunc& h) {
        if (h.infeasible()) {
            // +inf node: no recession data, empty cone marker
            Polyhedron empty(spec.stage_dims[t]);
            empty.add_ineq(Vec(spec.stage_dims[t], Rat(0)), Rat(-1));
            tab.last_cone[t].emplace(node, std::move(empty));
            tab.lineality[t].emplace(node, std::vector<Vec>{});
            return;
        }
        PolyFunc hi = pf_recession(h);
        ConeCheck c = last_direction_cone(hi, spec.stage_dims[t]);
        tab.h_inf[t].emplace(node, std::move(hi));
        if (!c.is_linear) {
            if (throw_on_nonlinear) throw LinearityViolated(node, t, c.witness);
            if (first && !first->has_value()) *first = Violation{node, t, c.witness};
        }
        tab.last_cone[t].emplace(node, std::move(c.cone));
        tab.lineality[t].emplace(node, std::move(c.basis));
    };

    for (NodeId l : tree.leaves()) {
        auto it = spec.leaf_functions.find(l);
        if (it == spec.leaf_functions.end())
            throw TreeError("MissingValue", l, "no cost function for leaf");
        const PolyFunc& f = it->second;
        if (f.dim() != spec.total_dim())
            throw std::invalid_argument("backward_pass: leaf function dimension mismatch");
        std::optional<Rat> bound;
        if (auto b = spec.lower_bounds.find(l); b != spec.lower_bounds.end()) bound = b->second;
        check_certificate(f, bound, l);
        tab.h[T].emplace(l, f);
        record(T, l, f);
    }

    for (std::size_t t = T; t >= 1; --t) {
        std::size_t mt = spec.prefix_dim(t);
        std::size_t nt = spec.stage_dims[t];
        std::vector<std::size_t> block(nt);
        for (std::size_t j = 0; j < nt; ++j) block[j] = mt - nt + j;
        for (NodeId v : tree.stage_nodes(t)) {
            try {
                tab.h_pre[t].emplace(v, pf_partial_min(tab.h[t].at(v), block));
            } catch (const UnboundedBelow&) {
                // a -inf partial minimum certifies a nonlinear N_t, so the
                // cone check above must already have caught it
                if (throw_on_nonlinear || !first || !first->has_value())
                    throw std::logic_error(
                        "backward_pass: partial minimization hit -inf at node " +
                        std::to_string(v));
                // tolerant mode keeps going: clamp at zero so higher stages
                // stay well defined (only the first violation is reported)
                Polyhedron epi = fm_eliminate(tab.h[t].at(v).epigraph(), block);
                Vec floor(epi.dim, Rat(0));
                floor[epi.dim - 1] = -1;
                epi.add_ineq(std::move(floor), Rat(0));
                tab.h_pre[t].emplace(v, PolyFunc::from_epigraph(std::move(epi)));
            }
        }
        for (NodeId u : tree.stage_nodes(t - 1)) {
            const Node& nd = tree.node(u);
            PolyFunc acc;
            bool have = false;
            for (NodeId c : nd.children) {
                PolyFunc s = pf_scale(tab.h_pre[t].at(c), tree.node(c).cond_prob);
                acc = have ? pf_sum(acc, s) : std::move(s);
                have = true;
            }
            record(t - 1, u, acc);
            tab.h[t - 1].emplace(u, std::move(acc));
        }
    }
    return tab;
}

// x^t of `node` under the policy, concatenated root -> node.
Vec history_vector(const ScenarioTree& tree, const Policy& pol, NodeId node) {
    Vec x;
    for (NodeId a : tree.path(node)) {
        const Vec& xa = pol.at(a);
        x.insert(x.end(), xa.begin(), xa.end());
    }
    return x;
}

}  // namespace

NodeFunctionTable backward_pass(const ScenarioTree& tree, const IntegrandSpec& spec) {
    return backward_core(tree, spec, true, nullptr);
}

ForwardResult forward_policy(const ScenarioTree& tree, const NodeFunctionTable& table) {
    ForwardResult out;
    NodeId root = tree.root();
    MinResult m0 = pf_minimize(table.h[0].at(root));
    if (!m0.value) return out;  // +inf
    out.value = m0.value;
    // N_t has trivial lineality only modulo the directions along which h is
    // flat; project them away for a canonical selection.
    out.policy.values[root] = project_orthogonal(m0.minimizer, table.lineality[0].at(root));
    for (std::size_t t = 1; t <= tree.horizon(); ++t) {
        for (NodeId v : tree.stage_nodes(t)) {
            Vec prev = history_vector(tree, out.policy, *tree.node(v).parent);
            MinResult m = pf_argmin_slice(table.h[t].at(v), prev);
            if (!m.value)
                throw std::logic_error("forward_policy: optimal slice became infeasible");
            out.policy.values[v] = project_orthogonal(m.minimizer, table.lineality[t].at(v));
        }
    }
    return out;
}

OptimalityReport verify_optimality(const ScenarioTree& tree, const NodeFunctionTable& table,
                                   const Policy& policy) {
    OptimalityReport rep;
    NodeId root = tree.root();
    MinResult m0 = pf_minimize(table.h[0].at(root));
    if (!m0.value) {
        rep.violation = "instance is infeasible";
        return rep;
    }
    rep.optimal_value = *m0.value;
    for (std::size_t t = 0; t <= tree.horizon(); ++t) {
        Rat expect = 0;
        for (NodeId v : tree.stage_nodes(t)) {
            Vec xt = history_vector(tree, policy, v);
            auto val = table.h[t].at(v)(xt);
            if (!val) {
                rep.violation = "policy leaves the effective domain";
                rep.node = v;
                return rep;
            }
            // node-wise argmin: h_t(x^t) must match the minimized-out value
            Rat target;
            if (t == 0) {
                target = rep.optimal_value;
            } else {
                Vec prev(xt.begin(), xt.end() - static_cast<long>(table.stage_dims[t]));
                auto pre = table.h_pre[t].at(v)(prev);
                if (!pre) {
                    rep.violation = "stored partial minimum is +inf on the policy path";
                    rep.node = v;
                    return rep;
                }
                target = *pre;
            }
            if (*val != target) {
                rep.violation = "node-wise argmin equality fails";
                rep.node = v;
                return rep;
            }
            expect += tree.node(v).abs_prob * *val;
        }
        rep.stage_expectations.push_back(expect);
        if (expect != rep.optimal_value) {
            rep.violation = "stage expectation differs from the optimal value";
            return rep;
        }
    }
    rep.ok = true;
    return rep;
}

LinearityReport check_linearity_L(const ScenarioTree& tree, const IntegrandSpec& spec) {
    std::size_t T = tree.horizon();
    if (spec.stage_dims.size() != T + 1)
        throw std::invalid_argument("check_linearity_L: stage_dims must have horizon+1 entries");
    AdaptedLayout layout(tree, spec.stage_dims);

    // Feasibility precondition: some adapted plan must have finite cost.
    Polyhedron feas(layout.total);
    for (NodeId l : tree.leaves()) {
        auto it = spec.leaf_functions.find(l);
        if (it == spec.leaf_functions.end())
            throw TreeError("MissingValue", l, "no cost function for leaf");
        auto idx = layout.leaf_map(tree, l);
        Polyhedron dom = it->second.domain();
        for (const auto& r : dom.ineqs) {
            Vec a(layout.total, Rat(0));
            for (std::size_t j = 0; j < idx.size(); ++j) a[idx[j]] += r.a[j];
            feas.add_ineq(std::move(a), r.rhs);
        }
        for (const auto& r : dom.eqs) {
            Vec a(layout.total, Rat(0));
            for (std::size_t j = 0; j < idx.size(); ++j) a[idx[j]] += r.a[j];
            feas.add_eq(std::move(a), r.rhs);
        }
    }
    if (is_empty(feas)) throw Infeasible("no adapted plan with finite expected cost");

    // route (a): node-wise recursion on the recession integrands; their
    // partial minima never reach -inf, so this always completes.
    IntegrandSpec rec;
    rec.stage_dims = spec.stage_dims;
    for (const auto& [l, f] : spec.leaf_functions)
        rec.leaf_functions.emplace(l, pf_recession(f));
    std::optional<Violation> first;
    backward_core(tree, rec, false, &first);

    // route (b): the cone of adapted recession directions with E h^inf <= 0,
    // checked directly for linearity in the big layout space.
    Polyhedron big(layout.total);
    for (const auto& [l, f] : rec.leaf_functions) {
        auto idx = layout.leaf_map(tree, l);
        Polyhedron z = f.level_zero();
        for (const auto& r : z.ineqs) {
            Vec a(layout.total, Rat(0));
            for (std::size_t j = 0; j < idx.size(); ++j) a[idx[j]] += r.a[j];
            big.add_ineq(std::move(a), r.rhs);
        }
        for (const auto& r : z.eqs) {
            Vec a(layout.total, Rat(0));
            for (std::size_t j = 0; j < idx.size(); ++j) a[idx[j]] += r.a[j];
            big.add_eq(std::move(a), r.rhs);
        }
    }
    LinealityResult direct = cone_lineality(ConeRep(std::move(big)));

    LinearityReport rep;
    rep.nodewise_verdict = !first.has_value();
    rep.direct_verdict = direct.is_linear;
    if (rep.nodewise_verdict != rep.direct_verdict)
        throw std::logic_error("check_linearity_L: the two routes disagree");
    rep.is_linear = rep.direct_verdict;
    if (first) {
        rep.node = first->node;
        rep.stage = first->stage;
    }
    if (!direct.is_linear) rep.witness = layout.unpack(tree, direct.witness);
    return rep;
}

BellmanResult bellman_pass(const ScenarioTree& tree, const BellmanSpec& bspec) {
    std::size_t T = tree.horizon();
    if (bspec.stage_dims.size() != T + 1)
        throw std::invalid_argument("bellman_pass: stage_dims must have horizon+1 entries");
    auto prev_dim = [&](std::size_t t) {
        return t == 0 ? bspec.initial_state.size() : bspec.stage_dims[t - 1];
    };

    // J[node](x_{t-1}, x_t) = k + E[pre of children]; pre[node](x_{t-1}) = min_{x_t} J
    std::map<NodeId, PolyFunc> J, pre;
    std::map<NodeId, std::vector<Vec>> lin;
    BellmanResult out;
    out.value_functions.resize(T + 1);
    for (std::size_t t = T + 1; t-- > 0;) {
        std::size_t np = prev_dim(t), nt = bspec.stage_dims[t];
        for (NodeId v : tree.stage_nodes(t)) {
            auto it = bspec.stage_costs.find(v);
            if (it == bspec.stage_costs.end())
                throw TreeError("MissingValue", v, "no stage cost for node");
            const PolyFunc& k = it->second;
            if (k.dim() != np + nt)
                throw std::invalid_argument("bellman_pass: stage cost dimension mismatch");
            std::optional<Rat> bound;
            if (auto b = bspec.lower_bounds.find(v); b != bspec.lower_bounds.end())
                bound = b->second;
            check_certificate(k, bound, v);

            PolyFunc vt = pf_max_affine(nt, {});  // V_T = 0
            const Node& nd = tree.node(v);
            bool have = false;
            for (NodeId c : nd.children) {
                PolyFunc s = pf_scale(pre.at(c), tree.node(c).cond_prob);
                vt = have ? pf_sum(vt, s) : std::move(s);
                have = true;
            }
            out.value_functions[t].emplace(v, vt);
            std::vector<std::size_t> tail(nt);
            for (std::size_t j = 0; j < nt; ++j) tail[j] = np + j;
            PolyFunc w = pf_sum(k, pf_compose_coords(vt, np + nt, tail));

            if (!w.infeasible()) {
                ConeCheck cc = last_direction_cone(pf_recession(w), nt);
                if (!cc.is_linear) throw LinearityViolated(v, t, cc.witness);
                lin.emplace(v, std::move(cc.basis));
            } else {
                lin.emplace(v, std::vector<Vec>{});
            }
            try {
                pre.emplace(v, pf_partial_min(w, tail));
            } catch (const UnboundedBelow&) {
                throw std::logic_error("bellman_pass: partial minimization hit -inf at node " +
                                       std::to_string(v));
            }
            J.emplace(v, std::move(w));
        }
    }

    auto root_val = pre.at(tree.root())(bspec.initial_state);
    if (!root_val) return out;  // +inf
    out.value = *root_val;

    // forward recovery down the tree
    for (std::size_t t = 0; t <= T; ++t)
        for (NodeId v : tree.stage_nodes(t)) {
            const Vec& prev = t == 0 ? bspec.initial_state
                                     : out.policy.at(*tree.node(v).parent);
            MinResult m = pf_argmin_slice(J.at(v), prev);
            if (!m.value)
                throw std::logic_error("bellman_pass: optimal slice became infeasible");
            out.policy.values[v] = project_orthogonal(m.minimizer, lin.at(v));
        }
    return out;
}

IntegrandSpec bellman_to_integrand(const ScenarioTree& tree, const BellmanSpec& bspec) {
    std::size_t T = tree.horizon();
    IntegrandSpec spec;
    spec.stage_dims = bspec.stage_dims;
    std::size_t n = spec.total_dim();
    std::size_t n0 = bspec.initial_state.size();
    for (NodeId l : tree.leaves()) {
        auto p = tree.path(l);
        PolyFunc f;
        bool have = false;
        bool certified = true;
        Rat cert = 0;
        for (std::size_t t = 0; t <= T; ++t) {
            const PolyFunc& k = bspec.stage_costs.at(p[t]);
            PolyFunc g;
            std::vector<std::size_t> idx;
            if (t == 0) {
                std::vector<std::size_t> lead(n0);
                for (std::size_t j = 0; j < n0; ++j) lead[j] = j;
                g = pf_fix_coords(k, lead, bspec.initial_state);
                for (std::size_t j = 0; j < spec.stage_dims[0]; ++j) idx.push_back(j);
            } else {
                g = k;
                std::size_t base = spec.prefix_dim(t - 1) - spec.stage_dims[t - 1];
                for (std::size_t j = 0; j < spec.stage_dims[t - 1] + spec.stage_dims[t]; ++j)
                    idx.push_back(base + j);
            }
            PolyFunc lifted = pf_compose_coords(g, n, idx);
            f = have ? pf_sum(f, lifted) : std::move(lifted);
            have = true;
            auto b = bspec.lower_bounds.find(p[t]);
            if (b == bspec.lower_bounds.end())
                certified = false;
            else
                cert += b->second;
        }
        if (certified) spec.lower_bounds.emplace(l, cert);
        spec.leaf_functions.emplace(l, std::move(f));
    }
    return spec;
}

CommutationReport recession_commutation_check(const ScenarioTree& tree,
                                              const IntegrandSpec& spec) {
    NodeFunctionTable tab = backward_pass(tree, spec);
    CommutationReport rep;
    rep.ok = true;
    std::size_t T = tree.horizon();
    for (std::size_t t = T; t >= 1; --t) {
        std::size_t nt = spec.stage_dims[t];
        std::size_t mt = spec.prefix_dim(t);
        std::vector<std::size_t> block(nt);
        for (std::size_t j = 0; j < nt; ++j) block[j] = mt - nt + j;
        // recession commutes with partial minimization at every stage-t node
        for (NodeId v : tree.stage_nodes(t)) {
            if (tab.h[t].at(v).infeasible() || tab.h_pre[t].at(v).infeasible()) continue;
            PolyFunc lhs = pf_recession(tab.h_pre[t].at(v));
            PolyFunc rhs = pf_partial_min(tab.h_inf[t].at(v), block);
            ++rep.checked;
            if (!pf_equal(lhs, rhs) || !poly_equal(lhs.level_zero(), rhs.level_zero())) {
                rep.ok = false;
                rep.node = v;
                return rep;
            }
        }
        // ... and with the conditional expectation at every stage-(t-1) node
        for (NodeId u : tree.stage_nodes(t - 1)) {
            if (tab.h[t - 1].at(u).infeasible()) continue;
            PolyFunc lhs = pf_recession(tab.h[t - 1].at(u));
            PolyFunc rhs;
            bool have = true;
            bool first = true;
            for (NodeId c : tree.node(u).children) {
                if (tab.h_pre[t].at(c).infeasible()) { have = false; break; }
                PolyFunc s = pf_scale(pf_recession(tab.h_pre[t].at(c)),
                                      tree.node(c).cond_prob);
                rhs = first ? std::move(s) : pf_sum(rhs, s);
                first = false;
            }
            if (!have) continue;
            ++rep.checked;
            if (!pf_equal(lhs, rhs) || !poly_equal(lhs.level_zero(), rhs.level_zero())) {
                rep.ok = false;
                rep.node = u;
                return rep;
            }
        }
    }
    return rep;
}

}  // namespace stochdp
