#include "doctest.h"
#include "stochdp/dp.hpp"
#include "stochdp/oracle.hpp"

#include <random>

using namespace stochdp;

namespace {

ScenarioTree single_node() {
    std::vector<Node> ns(1);
    ns[0] = {0, 0, std::nullopt, rat(1)};
    return ScenarioTree::build(0, std::move(ns));
}

ScenarioTree binomial() {
    std::vector<Node> ns(3);
    ns[0] = {0, 0, std::nullopt, rat(1)};
    ns[1] = {1, 1, NodeId{0}, rat(1, 2)};
    ns[2] = {2, 1, NodeId{0}, rat(1, 2)};
    return ScenarioTree::build(1, std::move(ns));
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
        REQUIRE(v);
        total += t.node(l).abs_prob * *v;
    }
    return total;
}

}  // namespace

TEST_CASE("flatten: single-node absolute value") {
    ScenarioTree t = single_node();
    IntegrandSpec spec;
    spec.stage_dims = {1};
    spec.leaf_functions.emplace(0, pf_abs_coord(1, 0));
    FlatSolution s = flatten_solve(t, spec);
    REQUIRE(s.value);
    CHECK(*s.value == 0);
    CHECK(s.minimizer.at(0) == Vec{rat(0)});
}

TEST_CASE("flatten: binomial superhedge") {
    ScenarioTree t = binomial();
    IntegrandSpec spec;
    spec.stage_dims = {2, 0};
    auto leaf = [&](const Rat& ds, const Rat& c) {
        Polyhedron ok(2);
        ok.add_ineq({rat(-1), -ds}, -c);
        return pf_restrict(pf_affine({rat(1), rat(0)}, rat(0)), ok);
    };
    spec.leaf_functions.emplace(1, leaf(rat(4), rat(3)));
    spec.leaf_functions.emplace(2, leaf(rat(-2), rat(0)));
    FlatSolution s = flatten_solve(t, spec);
    REQUIRE(s.value);
    CHECK(*s.value == 1);
    CHECK(s.minimizer.at(0) == Vec{rat(1), rat(1, 2)});
    CHECK(policy_cost(t, spec, s.minimizer) == 1);
}

TEST_CASE("flatten: infeasible and unbounded") {
    ScenarioTree t = single_node();
    Polyhedron none(1);
    none.add_ineq({rat(1)}, rat(-1));
    none.add_ineq({rat(-1)}, rat(0));
    IntegrandSpec bad;
    bad.stage_dims = {1};
    bad.leaf_functions.emplace(0, pf_indicator(none));
    CHECK(!flatten_solve(t, bad).value);

    IntegrandSpec open;
    open.stage_dims = {1};
    open.leaf_functions.emplace(0, pf_affine({rat(1)}, rat(0)));
    CHECK_THROWS_AS(flatten_solve(t, open), UnboundedBelow);
}

TEST_CASE("flatten agrees with the recursion on random instances") {
    std::mt19937 rng(53);
    std::uniform_int_distribution<int> coef(-2, 2);
    for (int it = 0; it < 10; ++it) {
        std::vector<Node> ns;
        ns.push_back({0, 0, std::nullopt, rat(1)});
        std::vector<NodeId> frontier{0};
        std::size_t T = 1 + rng() % 2;
        for (std::size_t s = 1; s <= T; ++s) {
            std::vector<NodeId> next;
            for (auto pid : frontier) {
                int k = 1 + static_cast<int>(rng() % 2);
                for (int c = 0; c < k; ++c) {
                    NodeId id = ns.size();
                    ns.push_back({id, s, pid, rat(1, k)});
                    next.push_back(id);
                }
            }
            frontier = std::move(next);
        }
        ScenarioTree t = ScenarioTree::build(T, std::move(ns));
        IntegrandSpec spec;
        spec.stage_dims.assign(T + 1, 1);
        std::size_t n = T + 1;
        for (NodeId l : t.leaves()) {
            std::vector<LinRow> pieces;
            std::size_t np = 1 + rng() % 2;
            for (std::size_t i = 0; i < np; ++i) {
                Vec a(n);
                for (auto& c : a) c = coef(rng);
                pieces.push_back({a, rat(coef(rng))});
            }
            PolyFunc f = pf_max_affine(n, pieces);
            Polyhedron box(n);
            for (std::size_t j = 0; j < n; ++j) {
                Vec up(n, Rat(0)), dn(n, Rat(0));
                up[j] = 1;
                dn[j] = -1;
                box.add_ineq(up, rat(4));
                box.add_ineq(dn, rat(4));
            }
            spec.leaf_functions.emplace(l, pf_restrict(f, box));
        }
        FlatSolution flat = flatten_solve(t, spec);
        ForwardResult dp = forward_policy(t, backward_pass(t, spec));
        REQUIRE(flat.value);
        REQUIRE(dp.value);
        CHECK(*flat.value == *dp.value);
        // minimizers achieve the same objective in each other's evaluator
        CHECK(policy_cost(t, spec, flat.minimizer) == *flat.value);
        CHECK(policy_cost(t, spec, dp.policy) == *flat.value);
    }
}

TEST_CASE("phi probe: superhedgeability is a 0/+inf jump") {
    ScenarioTree t = binomial();
    // feasibility form: is the (constant) claim financeable from zero capital?
    auto builder = [&](const Vec& u) {
        IntegrandSpec spec;
        spec.stage_dims = {1, 0};
        auto leaf = [&](const Rat& ds) {
            Polyhedron ok(1);
            ok.add_ineq({-ds}, -u[0]);  // z dS >= u
            return pf_indicator(ok);
        };
        spec.leaf_functions.emplace(1, leaf(rat(4)));
        spec.leaf_functions.emplace(2, leaf(rat(-2)));
        return spec;
    };
    std::vector<Vec> grid{{rat(-2)}, {rat(-1)}, {rat(0)}, {rat(1)}, {rat(2)}};
    DualCandidate zero{[](const Vec&) { return rat(0); }, rat(0)};
    PhiProbeReport rep = phi_probe(t, builder, grid, zero);
    REQUIRE(rep.entries.size() == 5);
    for (const auto& e : rep.entries) {
        if (e.u[0] <= 0)
            CHECK(e.value == rat(0));
        else
            CHECK(!e.value);
    }
    CHECK(rep.midpoint_convex);
    CHECK(rep.fenchel_holds);
    CHECK(rep.fenchel_tight_at_zero);
}

TEST_CASE("phi probe: convex kink") {
    ScenarioTree t = single_node();
    // f_u(x) = |x| on {x >= u}: phi(u) = max(u, 0)
    auto builder = [&](const Vec& u) {
        IntegrandSpec spec;
        spec.stage_dims = {1};
        Polyhedron dom(1);
        dom.add_ineq({rat(-1)}, -u[0]);
        spec.leaf_functions.emplace(0, pf_restrict(pf_abs_coord(1, 0), dom));
        return spec;
    };
    std::vector<Vec> grid{{rat(-3)}, {rat(-1)}, {rat(0)}, {rat(2)}, {rat(5)}};
    PhiProbeReport rep = phi_probe(t, builder, grid);
    for (const auto& e : rep.entries) {
        REQUIRE(e.value);
        CHECK(*e.value == (e.u[0] > 0 ? e.u[0] : rat(0)));
    }
    CHECK(rep.midpoint_convex);
}
