// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include "stochdp/finance.hpp"
#include "stochdp/json_io.hpp"
#include "stochdp/oracle.hpp"
#include "stochdp/quad.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace stochdp;

namespace {

int failures = 0;

void report(int idx, const char* what, bool ok, double seconds) {
    std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", idx, what, seconds);
    if (!ok) ++failures;
}

template <class F>
void criterion(int idx, const char* what, F&& body) {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = body();
    } catch (const std::exception& e) {
        std::printf("  exception: %s\n", e.what());
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(idx, what, ok, dt);
}

ScenarioTree random_tree(std::mt19937& rng, std::size_t max_T, std::size_t max_branch,
                         std::size_t max_leaves = 9) {
    for (;;) {
        std::size_t T = 1 + rng() % max_T;
        std::vector<Node> ns;
        ns.push_back({0, 0, std::nullopt, rat(1)});
        std::vector<NodeId> frontier{0};
        for (std::size_t s = 1; s <= T; ++s) {
            std::vector<NodeId> next;
            for (auto pid : frontier) {
                int k = 1 + static_cast<int>(rng() % max_branch);
                for (int c = 0; c < k; ++c) {
                    NodeId id = ns.size();
                    ns.push_back({id, s, pid, rat(1, k)});
                    next.push_back(id);
                }
            }
            frontier = std::move(next);
        }
        if (frontier.size() > max_leaves) continue;
        return ScenarioTree::build(T, std::move(ns));
    }
}

// Random box-constrained max-affine integrand; every N_t is {0}, so the
// linearity condition holds and a loose lower bound certificate is valid.
IntegrandSpec random_integrand(std::mt19937& rng, const ScenarioTree& t) {
    std::uniform_int_distribution<int> coef(-3, 3);
    IntegrandSpec spec;
    spec.stage_dims.assign(t.horizon() + 1, 1 + rng() % 2);
    std::size_t n = spec.total_dim();
    for (NodeId l : t.leaves()) {
        std::vector<LinRow> pieces;
        std::size_t np = 1 + rng() % 3;
        for (std::size_t i = 0; i < np; ++i) {
            Vec a(n);
            for (auto& c : a) c = coef(rng);
            pieces.push_back({a, rat(coef(rng))});
        }
        Polyhedron box(n);
        for (std::size_t j = 0; j < n; ++j) {
            Vec up(n, Rat(0)), dn(n, Rat(0));
            up[j] = 1;
            dn[j] = -1;
            box.add_ineq(up, rat(4));
            box.add_ineq(dn, rat(4));
        }
        spec.leaf_functions.emplace(l, pf_restrict(pf_max_affine(n, pieces), box));
        spec.lower_bounds.emplace(l, rat(-200));
    }
    return spec;
}

Rat policy_cost(const ScenarioTree& t, const IntegrandSpec& spec, const Policy& pol) {
    Rat total = 0;
    for (NodeId l : t.leaves()) {
        Vec x;
        for (NodeId a : t.path(l)) {
            const Vec& xa = pol.at(a);
            x.insert(x.end(), xa.begin(), xa.end());
        }
        auto v = spec.leaf_functions.at(l)(x);
        if (!v) throw std::logic_error("policy leaves the domain");
        total += t.node(l).abs_prob * *v;
    }
    return total;
}

LiquidMarket random_market(std::mt19937& rng, const ScenarioTree& t) {
    std::uniform_int_distribution<int> pr(1, 9);
    LiquidMarket m;
    m.tree = t;
    m.d = 1 + rng() % 2;
    for (NodeId v = 0; v < t.node_count(); ++v) {
        Vec s(m.d);
        for (auto& x : s) x = pr(rng);
        m.prices.emplace(v, std::move(s));
    }
    return m;
}

// Frictionless conical market (cash + one stock) from strictly positive
// adapted stock prices.
ConeMarket frictionless(const ScenarioTree& t, const std::map<NodeId, Rat>& stock) {
    ConeMarket m;
    m.tree = t;
    m.d = 2;
    for (NodeId v = 0; v < t.node_count(); ++v) {
        Polyhedron c(2);
        c.add_ineq({rat(1), stock.at(v)}, rat(0));
        m.C.emplace(v, std::move(c));
        Polyhedron d(2);
        if (t.node(v).stage == t.horizon()) {
            d.add_eq({rat(1), rat(0)}, rat(0));
            d.add_eq({rat(0), rat(1)}, rat(0));
        }
        m.D.emplace(v, std::move(d));
    }
    return m;
}

// -min(c_cash, cap) on {c >= 0}
PolyFunc capped_neg_utility(const Rat& cap) {
    Polyhedron orthant(2);
    orthant.add_ineq({rat(-1), rat(0)}, rat(0));
    orthant.add_ineq({rat(0), rat(-1)}, rat(0));
    PolyFunc f = pf_max_affine(2, {{{rat(-1), rat(0)}, rat(0)}, {{rat(0), rat(0)}, cap}});
    return pf_restrict(f, orthant);
}

struct ConsumptionInstance {
    ConeMarket mkt;
    UtilitySpec util;
    std::map<NodeId, Vec> endowment;
};

// Arbitrage-free by construction: every interior node has child prices on
// both sides of its own price.
ConsumptionInstance random_consumption(std::mt19937& rng) {
    std::uniform_int_distribution<int> base(3, 6), bump(1, 2), capd(1, 3);
    ScenarioTree t = random_tree(rng, 1 + rng() % 2, 2, 4);
    std::map<NodeId, Rat> stock;
    stock[t.root()] = rat(base(rng));
    for (std::size_t s = 0; s < t.horizon(); ++s)
        for (NodeId v : t.stage_nodes(s)) {
            const auto& kids = t.node(v).children;
            for (std::size_t i = 0; i < kids.size(); ++i) {
                Rat delta = rat(bump(rng));
                if (i + 1 == kids.size() && kids.size() > 1)
                    stock[kids[i]] = stock[v] - delta / 2;
                else
                    stock[kids[i]] = stock[v] + delta;
            }
        }
    ConsumptionInstance inst{frictionless(t, stock), {}, {}};
    for (NodeId l : t.leaves()) {
        Rat cap = rat(capd(rng));
        inst.util.neg_u.emplace(l, capped_neg_utility(cap));
        inst.util.upper_bound.emplace(l, cap);
    }
    inst.endowment.emplace(t.root(), Vec{-rat(1, 1 + static_cast<int>(rng() % 3)), rat(0)});
    return inst;
}

// Criteria 1, 2 and 4 share the same randomized instance sweep; the flags
// are reported as separate gate lines.
bool values_ok = true, optimality_ok = true, commutation_ok = true;

bool crit1_2_4(int n_instances) {
    std::mt19937 rng(2024);
    for (int it = 0; it < n_instances; ++it) {
        ScenarioTree t = random_tree(rng, 3, 3);
        IntegrandSpec spec = random_integrand(rng, t);
        NodeFunctionTable table = backward_pass(t, spec);
        ForwardResult dp = forward_policy(t, table);
        FlatSolution flat = flatten_solve(t, spec);
        if (!dp.value || !flat.value || *dp.value != *flat.value ||
            policy_cost(t, spec, dp.policy) != *dp.value ||
            policy_cost(t, spec, flat.minimizer) != *flat.value)
            values_ok = false;

        OptimalityReport rep = verify_optimality(t, table, dp.policy);
        if (!rep.ok) optimality_ok = false;
        for (const auto& e : rep.stage_expectations)
            if (e != rep.optimal_value) optimality_ok = false;
        // pushing any single node decision out of the box must break an equality
        NodeId victim = rng() % t.node_count();
        if (!dp.policy.at(victim).empty()) {
            Policy bad = dp.policy;
            bad.values[victim][0] += 9;
            if (verify_optimality(t, table, bad).ok) optimality_ok = false;
        }
        if (it % 4 == 0 && !recession_commutation_check(t, spec).ok) commutation_ok = false;
    }
    return values_ok;
}

bool crit3(int n_instances) {
    std::mt19937 rng(7);
    int agree = 0;
    for (int it = 0; it < n_instances; ++it) {
        ScenarioTree t = random_tree(rng, 2, 3);
        LiquidMarket m = random_market(rng, t);
        std::map<NodeId, Rat> claim;
        for (NodeId l : t.leaves()) claim.emplace(l, rat(0));
        // check_linearity_L itself cross-validates the two routes and throws
        // if they ever disagree
        LinearityReport rep = check_linearity_L(t, build_superhedge_feasibility(m, claim));
        if (rep.nodewise_verdict == rep.direct_verdict) ++agree;
    }
    std::printf("  route agreement: %d/%d\n", agree, n_instances);
    return agree == n_instances;
}

bool crit5() {
    LiquidMarket m;
    std::vector<Node> ns(3);
    ns[0] = {0, 0, std::nullopt, rat(1)};
    ns[1] = {1, 1, NodeId{0}, rat(1, 2)};
    ns[2] = {2, 1, NodeId{0}, rat(1, 2)};
    m.tree = ScenarioTree::build(1, std::move(ns));
    m.d = 1;
    m.prices = {{0, {rat(4)}}, {1, {rat(8)}}, {2, {rat(2)}}};
    IntegrandSpec spec = build_superhedge(m, {{1, rat(3)}, {2, rat(0)}});
    ForwardResult r = forward_policy(m.tree, backward_pass(m.tree, spec));
    bool ok = r.value && *r.value == 1 && r.policy.at(0) == Vec{rat(1), rat(1, 2)};

    // arbitrage market: both moves positive
    LiquidMarket bad = m;
    bad.prices = {{0, {rat(4)}}, {1, {rat(5)}}, {2, {rat(9, 2)}}};
    try {
        backward_pass(bad.tree, build_superhedge_feasibility(bad, {{1, rat(0)}, {2, rat(0)}}));
        ok = false;
    } catch (const LinearityViolated& e) {
        Rat z = e.witness.empty() ? rat(0) : e.witness[0];
        Rat g_up = z * 1, g_dn = z / 2;
        ok = ok && g_up >= 0 && g_dn >= 0 && g_up + g_dn != 0;
    }
    return ok;
}

bool crit6(int n_instances) {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> pr(1, 9), cl(-4, 4);
    for (int it = 0; it < n_instances; ++it) {
        HedgeProblem hp;
        hp.tree = random_tree(rng, 3, 2);
        hp.d = 1 + rng() % 2;
        bool dup = hp.d == 2 && it % 4 == 0;
        for (NodeId v = 0; v < hp.tree.node_count(); ++v) {
            Vec s(hp.d);
            for (auto& x : s) x = pr(rng);
            if (dup) s[1] = s[0];
            hp.prices.emplace(v, std::move(s));
        }
        for (NodeId l : hp.tree.leaves()) hp.claim.emplace(l, rat(cl(rng)));
        if (variance_hedge_solve(hp).value != least_squares_oracle(hp).value) return false;
    }
    HedgeProblem bin;
    std::vector<Node> ns(3);
    ns[0] = {0, 0, std::nullopt, rat(1)};
    ns[1] = {1, 1, NodeId{0}, rat(1, 2)};
    ns[2] = {2, 1, NodeId{0}, rat(1, 2)};
    bin.tree = ScenarioTree::build(1, std::move(ns));
    bin.d = 1;
    bin.prices = {{0, {rat(4)}}, {1, {rat(8)}}, {2, {rat(2)}}};
    bin.claim = {{1, rat(3)}, {2, rat(0)}};
    return variance_hedge_solve(bin).value == 0;
}

bool crit7(int n_instances) {
    std::mt19937 rng(13);
    int zero_gap = 0;
    bool weak_ok = true;
    for (int it = 0; it < n_instances; ++it) {
        ConsumptionInstance inst = random_consumption(rng);
        OcpConditionsReport cond = check_thm_ocp_conditions(inst.mkt, inst.util);
        IntegrandSpec spec = build_consumption(inst.mkt, inst.util, inst.endowment);
        ForwardResult primal = forward_policy(inst.mkt.tree, backward_pass(inst.mkt.tree, spec));
        DualSolveResult dual = build_consumption_dual(inst.mkt, inst.util, inst.endowment);
        if (!primal.value || !dual.feasible || !dual.value) return false;
        // weak duality: the dual bound dominates the attainable utility
        if (*dual.value < -*primal.value) weak_ok = false;
        if (cond.applicable && *dual.value + *primal.value == 0) ++zero_gap;
    }
    std::printf("  zero-gap instances: %d/%d, weak duality: %s\n", zero_gap, n_instances,
                weak_ok ? "everywhere" : "VIOLATED");
    return zero_gap == n_instances && weak_ok;
}

bool crit8(int n_instances) {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> coef(-2, 2);
    for (int it = 0; it < n_instances; ++it) {
        ScenarioTree t = random_tree(rng, 2, 2);
        BellmanSpec bs;
        bs.initial_state = {rat(0)};
        bs.stage_dims.assign(t.horizon() + 1, 1);
        for (std::size_t s = 0; s <= t.horizon(); ++s)
            for (NodeId v : t.stage_nodes(s)) {
                std::vector<LinRow> pieces;
                for (int i = 0; i < 2; ++i) {
                    Vec a{rat(coef(rng)), rat(coef(rng))};
                    pieces.push_back({a, rat(coef(rng))});
                }
                Polyhedron box(2);
                box.add_ineq({rat(0), rat(1)}, rat(3));
                box.add_ineq({rat(0), rat(-1)}, rat(3));
                bs.stage_costs.emplace(v, pf_restrict(pf_max_affine(2, pieces), box));
            }
        BellmanResult br = bellman_pass(t, bs);
        IntegrandSpec flat = bellman_to_integrand(t, bs);
        ForwardResult dp = forward_policy(t, backward_pass(t, flat));
        if (!br.value || !dp.value || *br.value != *dp.value) return false;
        if (policy_cost(t, flat, br.policy) != *br.value) return false;
    }
    return true;
}

bool crit9(int n_instances) {
    std::mt19937 rng(19);
    for (int it = 0; it < n_instances; ++it) {
        ConsumptionInstance inst = random_consumption(rng);
        const ScenarioTree& t = inst.mkt.tree;
        NodeId root = t.root();
        auto builder = [&](const Vec& u) {
            std::map<NodeId, Vec> endow = inst.endowment;
            Vec& base = endow.try_emplace(root, Vec(2, Rat(0))).first->second;
            for (std::size_t j = 0; j < u.size(); ++j) base[j] += u[j];
            return build_consumption(inst.mkt, inst.util, endow);
        };
        DualSolveResult dual = build_consumption_dual(inst.mkt, inst.util, inst.endowment);
        if (!dual.feasible || !dual.value) return false;
        Vec y0 = dual.y.y.at(root);
        DualCandidate cand{[y0](const Vec& u) { return dot(y0, u); }, -*dual.value};
        std::vector<Vec> grid{{rat(-1), rat(0)},
                              {rat(-1, 2), rat(0)},
                              {rat(0), rat(0)},
                              {rat(1, 2), rat(0)},
                              {rat(1), rat(0)}};
        PhiProbeReport rep = phi_probe(t, builder, grid, cand);
        if (rep.entries.size() != 5 || !rep.midpoint_convex || !rep.fenchel_holds ||
            !rep.fenchel_tight_at_zero)
            return false;
        for (const auto& e : rep.entries)
            if (e.value && e.minimizer.values.empty()) return false;
    }
    return true;
}

bool crit10() {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "stochdp_acceptance";
    fs::create_directories(dir);
    fs::path inst = dir / "inst.json";
    std::ofstream(inst) << R"({
      "schema": 1,
      "tree": {"horizon": 1, "nodes": [
        {"id": 0, "stage": 0, "prob": "1"},
        {"id": 1, "stage": 1, "parent": 0, "prob": "1/2"},
        {"id": 2, "stage": 1, "parent": 0, "prob": "1/2"}]},
      "model": {
        "type": "liquid_market", "assets": 1,
        "prices": [{"node": 0, "s": ["4"]}, {"node": 1, "s": ["8"]}, {"node": 2, "s": ["2"]}],
        "claim": [{"node": 1, "value": "3"}, {"node": 2, "value": "0"}]}})";
    for (const char* cmd : {"superhedge", "check-linearity", "oracle-compare"}) {
        std::string run_cmd = std::string(STOCHDP_CLI);
        nlohmann::json out[2];
        for (int i = 0; i < 2; ++i) {
            fs::path o = dir / ("out" + std::to_string(i) + ".json");
            std::string full = run_cmd + " " + cmd + " --instance " + inst.string() +
                               " --check-level full --out " + o.string();
            if (std::system(full.c_str()) < 0) return false;
            std::ifstream in(o);
            if (in.peek() == std::ifstream::traits_type::eof()) return false;
            out[i] = nlohmann::json::parse(in);
            out[i].erase("timing_ms");
        }
        if (out[0].dump() != out[1].dump()) return false;
    }
    return true;
}

}  // namespace

int main() {
    criterion(1, "oracle equivalence on 100 random instances", [] { return crit1_2_4(100); });
    criterion(2, "stage-wise optimality equalities and perturbation breaks",
              [] { return optimality_ok; });
    criterion(3, "linearity route agreement on 50 market integrands", [] { return crit3(50); });
    criterion(4, "recession commutation on full-check backward passes",
              [] { return commutation_ok; });
    criterion(5, "binomial superhedge exact values and arbitrage witness", crit5);
    criterion(6, "variance hedge equals the least-squares oracle on 50 trees",
              [] { return crit6(50); });
    criterion(7, "zero duality gap on 10 conical consumption instances",
              [] { return crit7(10); });
    criterion(8, "Bellman consistency on 25 separable instances", [] { return crit8(25); });
    criterion(9, "phi probe: attainment, convexity, Fenchel tightness", [] { return crit9(3); });
    criterion(10, "byte-identical repeated CLI runs modulo timing", crit10);
    return failures == 0 ? 0 : 1;
}
