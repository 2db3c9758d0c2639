#include "doctest.h"
#include "stochdp/linalg.hpp"

using namespace stochdp;

TEST_CASE("rank and null space") {
    Mat a(2, 3);
    a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 3;
    a(1, 0) = 2; a(1, 1) = 4; a(1, 2) = 6;
    CHECK(rank(a) == 1);
    auto ns = null_space(a);
    CHECK(ns.size() == 2);
    for (const auto& v : ns) {
        CHECK(v[0] + 2 * v[1] + 3 * v[2] == 0);
    }
}

TEST_CASE("solve") {
    Mat a(2, 2);
    a(0, 0) = 2; a(0, 1) = 1;
    a(1, 0) = 1; a(1, 1) = 3;
    auto x = solve(a, {rat(5), rat(10)});
    REQUIRE(x);
    CHECK((*x)[0] == 1);
    CHECK((*x)[1] == 3);

    Mat b(2, 1);
    b(0, 0) = 1; b(1, 0) = 1;
    CHECK(!solve(b, {rat(1), rat(2)}));
}

TEST_CASE("minimum-norm solution is orthogonal to the null space") {
    Mat a(1, 2);
    a(0, 0) = 1; a(0, 1) = 1;
    auto x = solve_min_norm(a, {rat(2)});
    REQUIRE(x);
    CHECK((*x)[0] == 1);
    CHECK((*x)[1] == 1);
}

TEST_CASE("psd check") {
    Mat q(2, 2);
    q(0, 0) = 2; q(0, 1) = 1; q(1, 0) = 1; q(1, 1) = 2;
    CHECK(is_psd(q));
    q(0, 0) = 0;  // [[0,1],[1,2]] has a negative eigenvalue
    CHECK(!is_psd(q));
    Mat z(2, 2);  // zero matrix is PSD
    CHECK(is_psd(z));
    Mat r(2, 2);
    r(0, 0) = 1; r(0, 1) = 2; r(1, 0) = 2; r(1, 1) = 1;
    CHECK(!is_psd(r));
}

TEST_CASE("orthogonal projection") {
    Vec x{rat(3), rat(4)};
    SUBCASE("empty basis leaves x unchanged") {
        auto r = project_orthogonal(x, {});
        CHECK(r == x);
    }
    SUBCASE("projecting out the first axis") {
        auto r = project_orthogonal(x, {Vec{rat(1), rat(0)}});
        CHECK(r[0] == 0);
        CHECK(r[1] == 4);
    }
    SUBCASE("result orthogonal to every basis vector") {
        std::vector<Vec> basis{Vec{rat(1), rat(1)}};
        auto r = project_orthogonal(x, basis);
        CHECK(dot(r, basis[0]) == 0);
    }
}
