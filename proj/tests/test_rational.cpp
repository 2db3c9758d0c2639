#include "doctest.h"
#include "stochdp/rational.hpp"

using namespace stochdp;

TEST_CASE("parse and canonical form") {
    CHECK(parse_rat("3/6") == rat(1, 2));
    CHECK(parse_rat("-4/2") == rat(-2));
    CHECK(parse_rat("0") == 0);
    CHECK(rat_str(parse_rat("10/4")) == "5/2");
    CHECK_THROWS(parse_rat(""));
    CHECK_THROWS(parse_rat("1/0"));
    CHECK_THROWS(parse_rat("1.5"));
    CHECK_THROWS(parse_rat("a/b"));
    CHECK_THROWS(parse_rat("1/-2"));
}

TEST_CASE("exact arithmetic survives large numerators") {
    Rat x = parse_rat("123456789123456789/2");
    CHECK(rat_str(x + x) == "123456789123456789");
    Rat third = rat(1, 3);
    CHECK(third * 3 == 1);
}

TEST_CASE("decimal rendering is an annotation") {
    CHECK(rat_decimal(rat(1, 2)) == "0.5");
    CHECK(rat_decimal(rat(-3, 2)) == "-1.5");
    CHECK(rat_decimal(rat(0)) == "0");
    CHECK(rat_decimal(rat(100)) == "100");
}

TEST_CASE("dot product") {
    Vec a{rat(1), rat(2)};
    Vec b{rat(3), rat(-1, 2)};
    CHECK(dot(a, b) == rat(2));
}
