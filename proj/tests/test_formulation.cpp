#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "acopf/formulation.hpp"

using namespace acopf;

TEST_CASE("polynomial accumulator canonicalizes terms") {
    PolyExpr e;
    e.add(2.0, {3, 1});       // 2 x1 x3, stored sorted
    e.add(1.0, {1, 3});       // merges with the line above
    e.add(4.0, {});           // constant
    e.add(5.0, {2});
    e.add(-5.0, {2});         // cancels to zero and is dropped
    const auto terms = e.terms();
    REQUIRE(terms.size() == 2);
    CHECK(terms[0].mono.empty());
    CHECK(terms[0].coef == 4.0);
    CHECK(terms[1].mono == Monomial{1, 3});
    CHECK(terms[1].coef == 3.0);
}

TEST_CASE("variable registry") {
    Formulation f;
    const int i = f.add_variable("x", 0.0, 2.0);
    const int j = f.add_variable("y", -1.0, 1.0);
    CHECK(i == 0);
    CHECK(j == 1);
    CHECK(f.var("y") == 1);
    CHECK(f.has_var("x"));
    CHECK_FALSE(f.has_var("z"));
    CHECK_THROWS_AS(f.var("z"), MissingVariable);
}

namespace {

Formulation small_model() {
    Formulation f;
    f.add_variable("x", 0.0, 10.0);
    f.add_variable("y", 0.0, 10.0);
    f.objective = {{1.0, {0}}, {2.0, {1}}};

    PolyExpr sum;
    sum.add(1.0, {0});
    sum.add(1.0, {1});
    f.polys.push_back(sum.constraint(Sense::Eq, 3.0, "total"));

    PolyExpr sq;
    sq.add(1.0, {0, 0});
    f.polys.push_back(sq.constraint(Sense::Le, 4.0, "xsq"));

    SocConstraint soc;
    soc.members.push_back({0.0, {{0, 1.0}}});  // x
    soc.t = {0.0, {{1, 1.0}}};                 // <= y^2
    soc.tag = "cone";
    f.socs.push_back(soc);

    PsdBlock psd;
    psd.dim = 2;
    psd.entries[{0, 0}] = {0.0, {{0, 1.0}}};
    psd.entries[{0, 1}] = {1.0, {}};
    psd.entries[{1, 1}] = {0.0, {{1, 1.0}}};
    psd.tag = "gram";
    f.psds.push_back(psd);
    return f;
}

}  // namespace

TEST_CASE("evaluate reports residuals by constraint") {
    const Formulation f = small_model();
    const Point p{{"x", 1.0}, {"y", 2.0}};
    const ResidualReport rep = evaluate(f, p);
    CHECK(rep.objective == doctest::Approx(5.0));
    REQUIRE(rep.poly.size() == 2);
    CHECK(rep.poly[0].tag == "total");
    CHECK(rep.poly[0].residual == doctest::Approx(0.0));
    CHECK(rep.poly[1].residual == doctest::Approx(-3.0));  // 1 - 4
    CHECK(rep.poly[1].violation == 0.0);
    REQUIRE(rep.soc.size() == 1);
    CHECK(rep.soc[0].violation == 0.0);  // 1 <= 4
    REQUIRE(rep.psd.size() == 1);
    // [[1,1],[1,2]] has min eigenvalue (3 - sqrt(5))/2 > 0
    CHECK(rep.psd[0].min_eigenvalue == doctest::Approx((3.0 - std::sqrt(5.0)) / 2.0));
    CHECK(rep.max_violation == 0.0);
    CHECK(feasibility(f, p, 1e-9).first);
}

TEST_CASE("violations are measured, not just flagged") {
    const Formulation f = small_model();
    const Point p{{"x", 3.0}, {"y", 1.0}};
    const ResidualReport rep = evaluate(f, p);
    CHECK(rep.poly[0].violation == doctest::Approx(1.0));   // 4 != 3
    CHECK(rep.poly[1].violation == doctest::Approx(5.0));   // 9 <= 4
    CHECK(rep.soc[0].violation == doctest::Approx(8.0));    // 9 <= 1
    // [[3,1],[1,1]] is positive definite, no psd violation
    CHECK(rep.psd[0].violation == 0.0);
    CHECK(rep.max_violation == doctest::Approx(8.0));
    CHECK_FALSE(feasibility(f, p, 1e-9).first);
    CHECK(feasibility(f, p, 1e-9).second == doctest::Approx(8.0));
}

TEST_CASE("cone side conditions count against feasibility") {
    Formulation f;
    f.add_variable("x", -10.0, 10.0);
    f.add_variable("t", -10.0, 10.0);
    SocConstraint soc;
    soc.members.push_back({0.0, {{0, 1.0}}});
    soc.t = {0.0, {{1, 1.0}}};
    soc.tag = "cone";
    f.socs.push_back(soc);
    // x^2 <= t^2 alone would hold at t = -5, but the cone requires t >= 0
    const ResidualReport rep = evaluate(f, {{"x", 1.0}, {"t", -5.0}});
    CHECK(rep.soc[0].violation >= 5.0);
}

TEST_CASE("rotated cone evaluation") {
    Formulation f;
    f.add_variable("c", -10.0, 10.0);
    f.add_variable("u", 0.0, 10.0);
    f.add_variable("v", 0.0, 10.0);
    SocConstraint soc;
    soc.members.push_back({0.0, {{0, 1.0}}});
    soc.t = {0.0, {{1, 1.0}}};
    soc.w = {0.0, {{2, 1.0}}};
    soc.rotated = true;
    soc.tag = "rot";
    f.socs.push_back(soc);
    CHECK(evaluate(f, {{"c", 2.0}, {"u", 2.0}, {"v", 2.0}}).max_violation == 0.0);
    CHECK(evaluate(f, {{"c", 3.0}, {"u", 2.0}, {"v", 2.0}}).soc[0].violation ==
          doctest::Approx(5.0));
}

TEST_CASE("negative psd blocks require the mirror cone") {
    Formulation f;
    f.add_variable("a", -10.0, 10.0);
    PsdBlock psd;
    psd.dim = 1;
    psd.entries[{0, 0}] = {0.0, {{0, 1.0}}};
    psd.negative = true;
    psd.tag = "nsd";
    f.psds.push_back(psd);
    CHECK(evaluate(f, {{"a", -2.0}}).max_violation == 0.0);
    CHECK(evaluate(f, {{"a", 2.0}}).psd[0].violation == doctest::Approx(2.0));
}

TEST_CASE("bound violations enter the report") {
    Formulation f;
    f.add_variable("x", 0.0, 1.0);
    const ResidualReport rep = evaluate(f, {{"x", 1.5}});
    REQUIRE(rep.bounds.size() == 1);
    CHECK(rep.bounds[0].name == "x");
    CHECK(rep.bounds[0].violation == doctest::Approx(0.5));
    CHECK(rep.max_violation == doctest::Approx(0.5));
}

TEST_CASE("evaluate rejects missing variables") {
    Formulation f;
    f.add_variable("x", 0.0, 1.0);
    CHECK_THROWS_AS(evaluate(f, Point{}), MissingVariable);
}
