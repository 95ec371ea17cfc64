#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "acopf/builders.hpp"
#include "acopf/export.hpp"
#include "acopf/transforms.hpp"
#include "test_util.hpp"

using namespace acopf;

TEST_CASE("json round trips byte-identically for every model kind") {
    const Grid g = testutil::load_case5();
    for (const std::string& kind : formulation_kinds()) {
        CAPTURE(kind);
        const Formulation f = build_formulation(g, kind);
        const std::string doc = export_json(f);
        const Formulation back = import_json(doc);
        CHECK(export_json(back) == doc);
        CHECK(back.variables.size() == f.variables.size());
        CHECK(back.polys.size() == f.polys.size());
        CHECK(back.socs.size() == f.socs.size());
        CHECK(back.psds.size() == f.psds.size());
        CHECK(back.grid_hash == f.grid_hash);
    }
}

TEST_CASE("two independent builds export the same bytes") {
    const Grid g = testutil::load_case5();
    CHECK(export_json(build_jabr_socp(g)) == export_json(build_jabr_socp(g)));
    CHECK(export_json(build_sdp_real(g)) == export_json(build_sdp_real(g)));
}

TEST_CASE("empty formulation exports cleanly") {
    Formulation f;
    const std::string doc = export_json(f);
    const Formulation back = import_json(doc);
    CHECK(back.variables.empty());
    CHECK(back.polys.empty());
    CHECK(export_json(back) == doc);
}

TEST_CASE("sdpa export of a one-variable linear program") {
    // min x subject to x >= 1, 0 <= x <= 10
    Formulation f;
    f.add_variable("x", 0.0, 10.0);
    f.objective = {{1.0, {0}}};
    PolyExpr e;
    e.add(1.0, {0});
    f.polys.push_back(e.constraint(Sense::Ge, 1.0, "floor"));

    const std::string text = export_sdpa(f);
    std::istringstream in(text);
    std::string line;
    int mdim = -1, nblock = -1;
    std::vector<std::string> body;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '*' || line[0] == '"') continue;
        if (mdim < 0) {
            mdim = std::stoi(line);
        } else if (nblock < 0) {
            nblock = std::stoi(line);
        } else {
            body.push_back(line);
        }
    }
    CHECK(mdim == 1);
    CHECK(nblock == 1);
    REQUIRE(body.size() >= 2);
    // one diagonal block: the Ge row plus both finite bounds
    CHECK(body[0] == "-3");
    CHECK(body[1] == "-1");  // maximization convention negates the costs
    // entries: F0 diag (1, 0, -10) with the zero skipped, F1 diag (1, 1, -1)
    int f0 = 0, f1 = 0;
    for (size_t i = 2; i < body.size(); ++i) {
        std::istringstream row(body[i]);
        int k, blk, a, b;
        double val;
        row >> k >> blk >> a >> b >> val;
        CHECK(blk == 1);
        CHECK(a == b);
        if (k == 0) ++f0;
        if (k == 1) ++f1;
    }
    CHECK(f0 == 2);
    CHECK(f1 == 3);
}

TEST_CASE("sdpa export of the real sdp relaxation has the expected shape") {
    const Grid g = testutil::load_case5();
    const std::string text = export_sdpa(build_sdp_real(g));
    CHECK(text.find("65 = mDIM") != std::string::npos);
    CHECK(text.find("6 = nBLOCK") != std::string::npos);
    CHECK(text.find("10 3 3 3 3 -52") != std::string::npos);
    // export is deterministic
    CHECK(export_sdpa(build_sdp_real(g)) == text);
}

TEST_CASE("sdpa export rejects nonlinear scalar constraints") {
    const Grid g = testutil::load_case5();
    CHECK_THROWS_AS(export_sdpa(build_polar(g)), UnsupportedConstraint);
    CHECK_THROWS_AS(export_sdpa(build_siv_cartesian(g)), UnsupportedConstraint);
    // but the purely conic/linear relaxations go through
    CHECK(export_sdpa(build_sdp_complex(g, SdpVariant::x_sdp)).size() > 0);
    CHECK(export_sdpa(build_socp_xspace(g)).size() > 0);
}

TEST_CASE("rotated cones embed as four-by-four psd blocks") {
    // u^2 <= t w with t, w free variables
    Formulation f;
    f.add_variable("u", -5.0, 5.0);
    f.add_variable("t", 0.0, 5.0);
    f.add_variable("w", 0.0, 5.0);
    SocConstraint soc;
    soc.members.push_back({0.0, {{0, 1.0}}});
    soc.t = {0.0, {{1, 1.0}}};
    soc.w = {0.0, {{2, 1.0}}};
    soc.rotated = true;
    soc.tag = "cone";
    f.socs.push_back(soc);

    const std::string text = export_sdpa(f);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line) && (line.empty() || line[0] == '*')) continue;
    CHECK(line == "3 = mDIM");
    std::getline(in, line);
    CHECK(line == "2 = nBLOCK");  // cone block plus the bound block
    std::getline(in, line);
    CHECK(line.rfind("4 ", 0) == 0);  // first block is the 4x4 embedding
}

TEST_CASE("point files round trip") {
    const Point p{{"VR[1]", 1.0625}, {"theta[4]", 0.0}, {"SgenR[1,2]", -0.25}};
    const Point back = read_point_json(write_point_json(p));
    CHECK(back == p);
    CHECK_THROWS(read_point_json("not json"));
}

TEST_CASE("json is the canonical interchange for residual checks") {
    // exporting, importing, and evaluating matches evaluating the original
    std::mt19937 rng(9);
    const Grid g = testutil::load_case5();
    const VoltagePoint v = testutil::random_voltage(rng, g);
    const GenerationPoint gen = spread_generation(g, recover_injections(g, v));
    const Formulation f = build_jabr_socp(g);
    const Formulation back = import_json(export_json(f));
    const Point pt = make_jabr_point(g, v, gen);
    const ResidualReport a = evaluate(f, pt);
    const ResidualReport b = evaluate(back, pt);
    CHECK(a.objective == b.objective);
    CHECK(a.max_violation == b.max_violation);
    REQUIRE(a.poly.size() == b.poly.size());
    for (size_t i = 0; i < a.poly.size(); ++i) {
        CHECK(a.poly[i].tag == b.poly[i].tag);
        CHECK(a.poly[i].residual == b.poly[i].residual);
    }
}
