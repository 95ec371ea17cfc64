#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "acopf/case_io.hpp"
#include "acopf/grid.hpp"
#include "acopf/transforms.hpp"

#ifndef ACOPF_TEST_DATA
#define ACOPF_TEST_DATA "tests/data"
#endif

namespace testutil {

inline std::string data_path(const std::string& name) {
    return std::string(ACOPF_TEST_DATA) + "/" + name;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing test data file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline acopf::Grid load_case5() { return acopf::parse_dat(slurp(data_path("case5.dat"))); }

inline acopf::Branch random_branch(std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    acopf::Branch br;
    br.from_bus = 1;
    br.to_bus = 2;
    br.r = 0.001 + 0.05 * uni(rng);
    br.x = 0.01 + 0.3 * uni(rng);
    br.b_ch = 0.1 * uni(rng);
    br.tau = 0.9 + 0.2 * uni(rng);
    br.nu = -0.3 + 0.6 * uni(rng);
    return br;
}

// A connected random grid: a spanning chain plus a few extra lines. Every
// bus keeps a generator-or-load role so the result passes validation.
inline acopf::Grid random_grid(std::mt19937& rng, int nbus) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    acopf::Grid g;
    for (int i = 1; i <= nbus; ++i) {
        acopf::Bus b;
        b.id = i;
        b.type = i == 1 ? acopf::BusType::Reference
                        : (uni(rng) < 0.5 ? acopf::BusType::Generator : acopf::BusType::Load);
        b.v_min = 0.9;
        b.v_max = 1.1;
        b.demand_re = uni(rng);
        b.demand_im = 0.3 * uni(rng);
        if (uni(rng) < 0.3) {
            b.shunt_re = 0.1 * uni(rng);
            b.shunt_im = 0.2 * uni(rng) - 0.1;
        }
        g.buses.push_back(b);
    }
    auto add_line = [&](int a, int b) {
        acopf::Branch br = random_branch(rng);
        br.from_bus = a;
        br.to_bus = b;
        if (uni(rng) < 0.5) br.s_max = 1.0 + 3.0 * uni(rng);
        g.branches.push_back(br);
    };
    for (int i = 2; i <= nbus; ++i) add_line(i - 1, i);
    if (nbus > 2 && uni(rng) < 0.7) add_line(1, nbus);
    for (int i = 1; i <= nbus; ++i) {
        if (i != 1 && uni(rng) < 0.5) continue;
        acopf::Generator gen;
        gen.bus = i;
        gen.index = 1;
        gen.p_min = 0.0;
        gen.p_max = 3.0 + 3.0 * uni(rng);
        gen.q_min = -2.0;
        gen.q_max = 2.0;
        gen.cost = {0.0, 100.0 + 900.0 * uni(rng), 0.0};
        g.generators.push_back(gen);
    }
    return g;
}

inline acopf::VoltagePoint random_voltage(std::mt19937& rng, const acopf::Grid& g,
                                          double mag_lo = 0.9, double mag_hi = 1.1) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    acopf::VoltagePoint p;
    p.rep = acopf::VoltagePoint::Rep::Polar;
    for (const acopf::Bus& b : g.buses) {
        const double mag = mag_lo + (mag_hi - mag_lo) * uni(rng);
        const double ang = -0.5 + uni(rng);
        p.values[b.id] = {mag, ang};
    }
    return acopf::polar_to_cartesian(p);
}

}  // namespace testutil
