#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <random>

#include "acopf/names.hpp"
#include "acopf/transforms.hpp"
#include "test_util.hpp"

using namespace acopf;

TEST_CASE("polar and cartesian representations round trip") {
    std::mt19937 rng(2);
    const Grid g = testutil::random_grid(rng, 6);
    for (int k = 0; k < 20; ++k) {
        const VoltagePoint cart = testutil::random_voltage(rng, g);
        const VoltagePoint back = polar_to_cartesian(cartesian_to_polar(cart));
        for (const Bus& b : g.buses)
            CHECK(std::abs(cart.cartesian(b.id) - back.cartesian(b.id)) < 1e-14);
    }
    VoltagePoint zero;
    zero.rep = VoltagePoint::Rep::Cartesian;
    zero.values[1] = {0.0, 0.0};
    const VoltagePoint pol = cartesian_to_polar(zero);
    CHECK(pol.values.at(1).first == 0.0);
    CHECK(pol.values.at(1).second == 0.0);
}

TEST_CASE("pair products satisfy the Lagrange identity with equality") {
    std::mt19937 rng(3);
    for (int k = 0; k < 50; ++k) {
        const Grid g = testutil::random_grid(rng, 4 + k % 4);
        const VoltagePoint v = testutil::random_voltage(rng, g);
        const JabrPoint jp = lift_to_jabr(v, g);
        for (const auto& [b, a] : adjacent_pairs(g)) {
            const double c = jp.c.at({b, a});
            const double s = jp.s.at({b, a});
            const double cb = jp.c.at({b, b});
            const double ca = jp.c.at({a, a});
            CHECK(std::fabs(c * c + s * s - cb * ca) < 1e-12);
        }
        for (const Bus& b : g.buses) CHECK(jp.s.at({b.id, b.id}) == 0.0);
    }
}

TEST_CASE("real lift is psd rank one with the right diagonal") {
    std::mt19937 rng(4);
    const Grid g = testutil::random_grid(rng, 5);
    const size_t n = g.buses.size();
    for (int k = 0; k < 20; ++k) {
        const VoltagePoint v = testutil::random_voltage(rng, g);
        const auto W = lift_to_w_real(v, g);
        REQUIRE(W.size() == 2 * n);
        Eigen::MatrixXd M(2 * n, 2 * n);
        for (size_t i = 0; i < 2 * n; ++i)
            for (size_t j = 0; j < 2 * n; ++j) M(i, j) = W[i][j];
        CHECK((M - M.transpose()).norm() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
        // rank one: only the top eigenvalue is materially nonzero
        CHECK(es.eigenvalues()(2 * n - 2) <= 1e-10 * M.norm());
        for (size_t i = 0; i < n; ++i) {
            const Complex vb = v.cartesian(g.buses[i].id);
            CHECK(W[i][i] + W[n + i][n + i] == doctest::Approx(std::norm(vb)).epsilon(1e-13));
        }
    }
}

TEST_CASE("hermitian lift matches the outer product") {
    std::mt19937 rng(5);
    const Grid g = testutil::random_grid(rng, 4);
    const VoltagePoint v = testutil::random_voltage(rng, g);
    const auto X = lift_to_x_hermitian(v, g);
    for (size_t i = 0; i < g.buses.size(); ++i)
        for (size_t j = 0; j < g.buses.size(); ++j) {
            const Complex want =
                v.cartesian(g.buses[i].id) * std::conj(v.cartesian(g.buses[j].id));
            CHECK(std::abs(X[i][j] - want) < 1e-14);
            CHECK(std::abs(X[i][j] - std::conj(X[j][i])) < 1e-14);
        }
}

TEST_CASE("recovered injections satisfy the bus power flow equation") {
    std::mt19937 rng(6);
    for (int k = 0; k < 30; ++k) {
        const Grid g = testutil::random_grid(rng, 3 + k % 6);
        const VoltagePoint v = testutil::random_voltage(rng, g);
        const InjectionState inj = recover_injections(g, v);
        const NetworkAdmittance Y = network_admittance(g);
        for (const Bus& b : g.buses) {
            // independent oracle: S_inj = V_b conj((Y V)_b), generation must
            // cover injection plus demand
            Complex yv(0.0, 0.0);
            for (const Bus& a : g.buses)
                yv += Y.at(g.bus_pos(b.id), g.bus_pos(a.id)) * v.cartesian(a.id);
            const Complex want =
                v.cartesian(b.id) * std::conj(yv) + Complex(b.demand_re, b.demand_im);
            CHECK(std::abs(inj.required_generation.at(b.id) - want) < 1e-12);
        }
        // each arc's current matches the two-port model directly
        for (const auto& af : inj.arcs) {
            const BranchAdmittance y = branch_admittance(*af.arc.branch);
            const Complex vf = v.cartesian(af.arc.branch->from_bus);
            const Complex vt = v.cartesian(af.arc.branch->to_bus);
            const Complex want = af.arc.reversed ? y.ytf * vf + y.ytt * vt
                                                 : y.yff * vf + y.yft * vt;
            CHECK(std::abs(af.current - want) < 1e-12);
            const Complex vown = af.arc.reversed ? vt : vf;
            CHECK(std::abs(af.power - vown * std::conj(af.current)) < 1e-14);
        }
    }
}

TEST_CASE("spread generation splits the requirement evenly") {
    std::mt19937 rng(7);
    const Grid g = testutil::load_case5();
    const VoltagePoint v = testutil::random_voltage(rng, g);
    const InjectionState inj = recover_injections(g, v);
    const GenerationPoint gen = spread_generation(g, inj);
    CHECK(gen.count({2, 1}) == 0);  // bus 2 has no generators
    const Complex at1 = inj.required_generation.at(1);
    CHECK(std::abs(gen.at({1, 1}) - at1 / 2.0) < 1e-14);
    CHECK(std::abs(gen.at({1, 2}) - at1 / 2.0) < 1e-14);
    CHECK(std::abs(gen.at({3, 1}) - inj.required_generation.at(3)) < 1e-14);
}

TEST_CASE("point makers emit the variable sets their models expect") {
    std::mt19937 rng(8);
    const Grid g = testutil::load_case5();
    const VoltagePoint v = testutil::random_voltage(rng, g);
    const GenerationPoint gen = spread_generation(g, recover_injections(g, v));

    const Point siv = make_siv_point(g, v, gen);
    CHECK(siv.size() == 73);  // 3*5 voltages + 4*12 arc flows + 2*5 generation
    CHECK(siv.count("V2[3]") == 1);
    CHECK(siv.at("V2[3]") == doctest::Approx(std::norm(v.cartesian(3))).epsilon(1e-14));
    CHECK(siv.count("IR[2,1,1]") == 1);

    const Point polar = make_polar_point(g, v, gen);
    CHECK(polar.count("theta[4]") == 1);
    CHECK(polar.count("cs[1,2]") == 1);
    CHECK(polar.count("cs[2,1]") == 0);  // stored in branch orientation only

    const Point jabr = make_jabr_point(g, v, gen);
    CHECK(jabr.count("c[1,1]") == 1);
    CHECK(jabr.count("s[4,5]") == 1);
    CHECK(jabr.count("VR[1]") == 0);
    const Point mixed = make_mixed_point(g, v, gen);
    CHECK(mixed.count("VR[1]") == 1);

    const Point matrix = make_matrix_point(g, v, gen);
    CHECK(matrix.count("W[0,9]") == 1);
    CHECK(matrix.count("W[9,0]") == 0);  // upper triangle only
    const Point sdp = make_sdp_real_point(g, v, gen);
    CHECK(sdp.count("VR[1]") == 0);
    CHECK(sdp.count("W[0,0]") == 1);

    const Point qc = make_qc_point(g, v, gen);
    CHECK(qc.count("Ihat[1,2,1]") == 1);
    CHECK(qc.count("WIhat[2,1,1]") == 1);
    CHECK(qc.count("XR[1,3]") == 0);  // non-adjacent pair stays out
}
