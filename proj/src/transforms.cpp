#include "acopf/transforms.hpp"

#include <cmath>

#include "acopf/names.hpp"

namespace acopf {

Complex VoltagePoint::cartesian(int bus) const {
    auto it = values.find(bus);
    if (it == values.end())
        throw std::out_of_range("voltage point has no bus " + std::to_string(bus));
    if (rep == Rep::Cartesian) return {it->second.first, it->second.second};
    return std::polar(it->second.first, it->second.second);
}

VoltagePoint cartesian_to_polar(const VoltagePoint& p) {
    if (p.rep == VoltagePoint::Rep::Polar) return p;
    VoltagePoint out;
    out.rep = VoltagePoint::Rep::Polar;
    for (const auto& [bus, v] : p.values) {
        const double mag = std::hypot(v.first, v.second);
        const double ang = mag == 0.0 ? 0.0 : std::atan2(v.second, v.first);
        out.values[bus] = {mag, ang};
    }
    return out;
}

VoltagePoint polar_to_cartesian(const VoltagePoint& p) {
    if (p.rep == VoltagePoint::Rep::Cartesian) return p;
    VoltagePoint out;
    out.rep = VoltagePoint::Rep::Cartesian;
    for (const auto& [bus, v] : p.values)
        out.values[bus] = {v.first * std::cos(v.second), v.first * std::sin(v.second)};
    return out;
}

JabrPoint lift_to_jabr(const VoltagePoint& p, const Grid& grid) {
    JabrPoint out;
    for (const Bus& b : grid.buses) {
        const Complex v = p.cartesian(b.id);
        out.c[{b.id, b.id}] = std::norm(v);
        out.s[{b.id, b.id}] = 0.0;
    }
    for (const auto& [b, a] : adjacent_pairs(grid)) {
        const Complex prod = p.cartesian(b) * std::conj(p.cartesian(a));
        out.c[{b, a}] = prod.real();
        out.s[{b, a}] = prod.imag();
    }
    return out;
}

std::vector<std::vector<double>> lift_to_w_real(const VoltagePoint& p, const Grid& grid) {
    const size_t n = grid.buses.size();
    std::vector<double> stacked(2 * n);
    for (size_t i = 0; i < n; ++i) {
        const Complex v = p.cartesian(grid.buses[i].id);
        stacked[i] = v.real();
        stacked[n + i] = v.imag();
    }
    std::vector<std::vector<double>> W(2 * n, std::vector<double>(2 * n));
    for (size_t i = 0; i < 2 * n; ++i)
        for (size_t j = 0; j < 2 * n; ++j) W[i][j] = stacked[i] * stacked[j];
    return W;
}

std::vector<std::vector<Complex>> lift_to_x_hermitian(const VoltagePoint& p, const Grid& grid) {
    const size_t n = grid.buses.size();
    std::vector<Complex> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = p.cartesian(grid.buses[i].id);
    std::vector<std::vector<Complex>> X(n, std::vector<Complex>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) X[i][j] = v[i] * std::conj(v[j]);
    return X;
}

InjectionState recover_injections(const Grid& grid, const VoltagePoint& p) {
    InjectionState state;
    std::map<int, Complex> flow_sum;
    for (const Bus& b : grid.buses) flow_sum[b.id] = 0.0;
    for (const Arc& arc : all_arcs(grid)) {
        const BranchAdmittance y = branch_admittance(*arc.branch);
        const Complex vb = p.cartesian(arc.from);
        const Complex va = p.cartesian(arc.to);
        Complex current;
        if (!arc.reversed)
            current = y.yff * vb + y.yft * va;
        else
            current = y.ytf * va + y.ytt * vb;  // second row; transformer bus is arc.to
        const Complex power = vb * std::conj(current);
        state.arcs.push_back({arc, current, power});
        flow_sum[arc.from] += power;
    }
    for (const Bus& b : grid.buses) {
        const Complex v = p.cartesian(b.id);
        const Complex shunt(b.shunt_re, b.shunt_im);
        const Complex demand(b.demand_re, b.demand_im);
        // Sum S + demand = -conj(shunt)|V|^2 + Sum Sgen
        state.required_generation[b.id] =
            flow_sum[b.id] + demand + std::conj(shunt) * std::norm(v);
    }
    return state;
}

GenerationPoint spread_generation(const Grid& grid, const InjectionState& inj) {
    GenerationPoint out;
    for (const Bus& b : grid.buses) {
        auto gens = grid.generators_at(b.id);
        if (gens.empty()) continue;
        const Complex share = inj.required_generation.at(b.id) / static_cast<double>(gens.size());
        for (const Generator* g : gens) out[{b.id, g->index}] = share;
    }
    return out;
}

namespace {

void put_generation(const Grid& grid, const GenerationPoint& gen, Point& pt) {
    for (const Generator& g : grid.generators) {
        auto it = gen.find({g.bus, g.index});
        const Complex s = it == gen.end() ? Complex(0.0, 0.0) : it->second;
        pt[vn("SgenR", g.bus, g.index)] = s.real();
        pt[vn("SgenC", g.bus, g.index)] = s.imag();
    }
}

void put_cartesian_voltage(const Grid& grid, const VoltagePoint& v, Point& pt) {
    for (const Bus& b : grid.buses) {
        const Complex vb = v.cartesian(b.id);
        pt[vn("VR", b.id)] = vb.real();
        pt[vn("VC", b.id)] = vb.imag();
    }
}

void put_x_entries(const Grid& grid, const VoltagePoint& v, Point& pt, bool adjacent_only) {
    for (const Bus& b : grid.buses) pt[vn("XR", b.id, b.id)] = std::norm(v.cartesian(b.id));
    if (adjacent_only) {
        for (const auto& [b, a] : adjacent_pairs(grid)) {
            const Complex prod = v.cartesian(b) * std::conj(v.cartesian(a));
            pt[vn("XR", b, a)] = prod.real();
            pt[vn("XC", b, a)] = prod.imag();
        }
    } else {
        for (size_t i = 0; i < grid.buses.size(); ++i)
            for (size_t j = i + 1; j < grid.buses.size(); ++j) {
                const int b = grid.buses[i].id;
                const int a = grid.buses[j].id;
                const Complex prod = v.cartesian(b) * std::conj(v.cartesian(a));
                pt[vn("XR", b, a)] = prod.real();
                pt[vn("XC", b, a)] = prod.imag();
            }
    }
}

void put_arc_flows(const Grid& grid, const InjectionState& inj, Point& pt, bool with_current) {
    for (const auto& av : inj.arcs) {
        pt[vn("SR", av.arc.from, av.arc.to, av.arc.parallel)] = av.power.real();
        pt[vn("SC", av.arc.from, av.arc.to, av.arc.parallel)] = av.power.imag();
        if (with_current) {
            pt[vn("IR", av.arc.from, av.arc.to, av.arc.parallel)] = av.current.real();
            pt[vn("IC", av.arc.from, av.arc.to, av.arc.parallel)] = av.current.imag();
        }
    }
}

}  // namespace

Point make_siv_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen) {
    Point pt;
    put_cartesian_voltage(grid, v, pt);
    for (const Bus& b : grid.buses) pt[vn("V2", b.id)] = std::norm(v.cartesian(b.id));
    put_arc_flows(grid, recover_injections(grid, v), pt, true);
    put_generation(grid, gen, pt);
    return pt;
}

Point make_voltage_only_point(const Grid& grid, const VoltagePoint& v,
                              const GenerationPoint& gen) {
    Point pt;
    put_cartesian_voltage(grid, v, pt);
    put_generation(grid, gen, pt);
    return pt;
}

Point make_polar_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen) {
    Point pt;
    const VoltagePoint polar = cartesian_to_polar(v);
    for (const Bus& b : grid.buses) {
        const auto& mv = polar.values.at(b.id);
        pt[vn("v", b.id)] = mv.first;
        pt[vn("theta", b.id)] = mv.second;
    }
    for (const auto& [b, a] : adjacent_pairs(grid)) {
        const double diff = polar.values.at(b).second - polar.values.at(a).second;
        pt[vn("cs", b, a)] = std::cos(diff);
        pt[vn("sn", b, a)] = std::sin(diff);
    }
    put_generation(grid, gen, pt);
    return pt;
}

Point make_jabr_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen) {
    Point pt;
    const JabrPoint jp = lift_to_jabr(v, grid);
    for (const Bus& b : grid.buses) pt[vn("c", b.id, b.id)] = jp.c.at({b.id, b.id});
    for (const auto& [b, a] : adjacent_pairs(grid)) {
        pt[vn("c", b, a)] = jp.c.at({b, a});
        pt[vn("s", b, a)] = jp.s.at({b, a});
    }
    put_generation(grid, gen, pt);
    return pt;
}

Point make_mixed_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen) {
    Point pt = make_jabr_point(grid, v, gen);
    put_cartesian_voltage(grid, v, pt);
    return pt;
}

Point make_matrix_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen) {
    Point pt;
    put_cartesian_voltage(grid, v, pt);
    const auto W = lift_to_w_real(v, grid);
    for (size_t i = 0; i < W.size(); ++i)
        for (size_t j = i; j < W.size(); ++j)
            pt[vn("W", static_cast<int>(i), static_cast<int>(j))] = W[i][j];
    put_generation(grid, gen, pt);
    return pt;
}

Point make_sdp_real_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen) {
    Point pt = make_matrix_point(grid, v, gen);
    for (const Bus& b : grid.buses) {
        pt.erase(vn("VR", b.id));
        pt.erase(vn("VC", b.id));
    }
    return pt;
}

Point make_sdp_v_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen) {
    Point pt;
    put_cartesian_voltage(grid, v, pt);
    put_x_entries(grid, v, pt, false);
    put_generation(grid, gen, pt);
    return pt;
}

Point make_sdp_x_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen) {
    Point pt;
    put_x_entries(grid, v, pt, false);
    put_arc_flows(grid, recover_injections(grid, v), pt, false);
    put_generation(grid, gen, pt);
    return pt;
}

Point make_socp_x_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint&) {
    Point pt;
    put_x_entries(grid, v, pt, true);
    return pt;
}

Point make_qc_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen) {
    Point pt;
    put_x_entries(grid, v, pt, true);
    const InjectionState inj = recover_injections(grid, v);
    put_arc_flows(grid, inj, pt, false);
    for (const auto& av : inj.arcs) {
        const double i2 = std::norm(av.current);
        const double xbb = std::norm(v.cartesian(av.arc.from));
        pt[vn("ShatR", av.arc.from, av.arc.to, av.arc.parallel)] =
            av.power.real() * av.power.real();
        pt[vn("ShatC", av.arc.from, av.arc.to, av.arc.parallel)] =
            av.power.imag() * av.power.imag();
        pt[vn("Ihat", av.arc.from, av.arc.to, av.arc.parallel)] = i2;
        pt[vn("WIhat", av.arc.from, av.arc.to, av.arc.parallel)] = xbb * i2;
    }
    put_generation(grid, gen, pt);
    return pt;
}

}  // namespace acopf
