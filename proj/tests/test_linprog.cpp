#include "doctest.h"
#include "stochdp/linprog.hpp"

using namespace stochdp;

TEST_CASE("basic minimization") {
    // min x + y s.t. x >= 1, y >= 2
    Polyhedron p(2);
    p.add_ineq({rat(-1), rat(0)}, rat(-1));
    p.add_ineq({rat(0), rat(-1)}, rat(-2));
    LpResult r = lp_solve(p, {rat(1), rat(1)});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == 3);
    CHECK(r.point[0] == 1);
    CHECK(r.point[1] == 2);
}

TEST_CASE("superhedge LP by hand") {
    // min V s.t. V + 4z >= 3, V - 2z >= 0
    Polyhedron p(2);
    p.add_ineq({rat(-1), rat(-4)}, rat(-3));
    p.add_ineq({rat(-1), rat(2)}, rat(0));
    LpResult r = lp_solve(p, {rat(1), rat(0)});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == 1);
    CHECK(r.point[1] == rat(1, 2));
}

TEST_CASE("infeasible") {
    Polyhedron p(1);
    p.add_ineq({rat(1)}, rat(0));
    p.add_ineq({rat(-1)}, rat(-1));
    CHECK(lp_solve(p, {rat(1)}).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded with a certifying ray") {
    Polyhedron p(2);
    p.add_ineq({rat(1), rat(-1)}, rat(0));  // x <= y
    LpResult r = lp_solve(p, {rat(1), rat(0)});
    REQUIRE(r.status == LpStatus::Unbounded);
    // objective decreases along the ray; ray stays inside
    CHECK(dot({rat(1), rat(0)}, r.ray) < 0);
    CHECK(r.ray[0] - r.ray[1] <= 0);
}

TEST_CASE("equality constraints") {
    Polyhedron p(2);
    p.add_eq({rat(1), rat(1)}, rat(4));
    p.add_ineq({rat(-1), rat(0)}, rat(0));
    LpResult r = lp_solve(p, {rat(1), rat(0)});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == 0);
    CHECK(r.point[1] == 4);
}

TEST_CASE("degenerate cycling guard (Bland)") {
    // Klee-Minty style small instance; must terminate and be exact.
    Polyhedron p(3);
    p.add_ineq({rat(1), rat(0), rat(0)}, rat(5));
    p.add_ineq({rat(4), rat(1), rat(0)}, rat(25));
    p.add_ineq({rat(8), rat(4), rat(1)}, rat(125));
    p.add_ineq({rat(-1), rat(0), rat(0)}, rat(0));
    p.add_ineq({rat(0), rat(-1), rat(0)}, rat(0));
    p.add_ineq({rat(0), rat(0), rat(-1)}, rat(0));
    LpResult r = lp_max(p, {rat(4), rat(2), rat(1)});
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == 125);
}

TEST_CASE("lex_min_point") {
    Polyhedron p(2);
    p.add_ineq({rat(-1), rat(0)}, rat(-1));       // x >= 1
    p.add_ineq({rat(1), rat(1)}, rat(10));
    p.add_ineq({rat(0), rat(-1)}, rat(-2));       // y >= 2
    Vec v = lex_min_point(p);
    CHECK(v[0] == 1);
    CHECK(v[1] == 2);

    // unbounded-below coordinate falls back to the value nearest zero
    Polyhedron q(2);
    q.add_ineq({rat(0), rat(-1)}, rat(-5));  // y >= 5
    Vec w = lex_min_point(q);
    CHECK(w[0] == 0);
    CHECK(w[1] == 5);
}
