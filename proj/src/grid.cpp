#include "acopf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace acopf {

int Grid::bus_pos(int id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    throw InvalidGrid("unknown bus id " + std::to_string(id));
}

int Grid::reference_bus() const {
    for (const Bus& b : buses)
        if (b.type == BusType::Reference) return b.id;
    throw InvalidGrid("grid has no reference bus");
}

std::vector<const Generator*> Grid::generators_at(int bus_id) const {
    std::vector<const Generator*> out;
    for (const Generator& g : generators)
        if (g.bus == bus_id) out.push_back(&g);
    return out;
}

std::vector<const Branch*> Grid::active_branches() const {
    std::vector<const Branch*> out;
    for (const Branch& b : branches)
        if (b.status) out.push_back(&b);
    return out;
}

std::uint64_t Grid::hash() const {
    // FNV-1a over a canonical textual dump of every field.
    std::ostringstream os;
    os.precision(17);
    os << base_mva << '|';
    for (const Bus& b : buses)
        os << b.id << ',' << static_cast<int>(b.type) << ',' << b.demand_re << ','
           << b.demand_im << ',' << b.v_min << ',' << b.v_max << ',' << b.shunt_re << ','
           << b.shunt_im << ';';
    for (const Branch& b : branches)
        os << b.from_bus << ',' << b.to_bus << ',' << b.parallel << ',' << b.r << ',' << b.x
           << ',' << b.b_ch << ',' << b.tau << ',' << b.nu << ',' << b.s_max << ','
           << (b.i_max ? *b.i_max : -1.0) << ',' << b.eta_min << ',' << b.eta_max << ','
           << b.status << ';';
    for (const Generator& g : generators) {
        os << g.bus << ',' << g.index << ',' << g.p_min << ',' << g.p_max << ',' << g.q_min
           << ',' << g.q_max << ':';
        for (double c : g.cost) os << c << ',';
        os << ';';
    }
    const std::string s = os.str();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<Arc> all_arcs(const Grid& grid) {
    std::vector<Arc> arcs;
    for (const Branch& b : grid.branches)
        if (b.status) arcs.push_back({b.from_bus, b.to_bus, b.parallel, false, &b});
    for (const Branch& b : grid.branches)
        if (b.status) arcs.push_back({b.to_bus, b.from_bus, b.parallel, true, &b});
    return arcs;
}

BranchAdmittance branch_admittance(const Branch& branch) {
    if (branch.r == 0.0 && branch.x == 0.0)
        throw ZeroImpedance("branch (" + std::to_string(branch.from_bus) + "," +
                            std::to_string(branch.to_bus) + "," +
                            std::to_string(branch.parallel) + ") has zero series impedance");
    const Complex z(branch.r, branch.x);
    const Complex y = 1.0 / z;
    const Complex half_charge(0.0, branch.b_ch / 2.0);
    const Complex ratio = std::polar(branch.tau, branch.nu);  // tau e^{i nu}
    BranchAdmittance a;
    a.yff = (y + half_charge) / (branch.tau * branch.tau);
    a.yft = -y / std::conj(ratio);
    a.ytf = -y / ratio;
    a.ytt = y + half_charge;
    return a;
}

Complex NetworkAdmittance::at(int row, int col) const {
    auto it = entries_.find({row, col});
    return it == entries_.end() ? Complex(0.0, 0.0) : it->second;
}

void NetworkAdmittance::add(int row, int col, Complex value) {
    entries_[{row, col}] += value;
}

NetworkAdmittance network_admittance(const Grid& grid) {
    require_valid(grid);
    const int n = static_cast<int>(grid.buses.size());
    NetworkAdmittance Y(n);
    for (int b = 0; b < n; ++b) {
        const Bus& bus = grid.buses[static_cast<size_t>(b)];
        const Complex shunt(bus.shunt_re, bus.shunt_im);
        if (shunt != Complex(0.0, 0.0)) Y.add(b, b, shunt);
    }
    for (const Branch* br : grid.active_branches()) {
        const BranchAdmittance a = branch_admittance(*br);
        const int f = grid.bus_pos(br->from_bus);
        const int t = grid.bus_pos(br->to_bus);
        Y.add(f, f, a.yff);
        Y.add(f, t, a.yft);
        Y.add(t, f, a.ytf);
        Y.add(t, t, a.ytt);
    }
    return Y;
}

ValidationReport validate_grid(const Grid& grid) {
    ValidationReport report;
    auto flag = [&report](const std::string& msg) { report.violations.push_back(msg); };

    if (grid.buses.empty()) {
        flag("grid has no buses");
        return report;
    }
    std::unordered_set<int> ids;
    int references = 0;
    for (const Bus& b : grid.buses) {
        if (!ids.insert(b.id).second) flag("duplicate bus id " + std::to_string(b.id));
        if (b.type == BusType::Reference) ++references;
        if (b.v_min < 0.0) flag("negative voltage lower bound at bus " + std::to_string(b.id));
        if (b.v_max < b.v_min) flag("empty voltage range at bus " + std::to_string(b.id));
    }
    if (references == 0) flag("missing reference bus");
    if (references > 1) flag("multiple reference buses");

    // parallel indices per (from,to) must be 1..p contiguous
    std::map<std::pair<int, int>, std::vector<int>> parallels;
    for (const Branch& br : grid.branches) {
        if (!ids.count(br.from_bus))
            flag("dangling endpoint: branch references unknown bus " + std::to_string(br.from_bus));
        if (!ids.count(br.to_bus))
            flag("dangling endpoint: branch references unknown bus " + std::to_string(br.to_bus));
        if (br.r == 0.0 && br.x == 0.0)
            flag("zero series impedance on branch (" + std::to_string(br.from_bus) + "," +
                 std::to_string(br.to_bus) + ")");
        if (br.tau <= 0.0)
            flag("non-positive transformer ratio on branch (" + std::to_string(br.from_bus) +
                 "," + std::to_string(br.to_bus) + ")");
        if (br.eta_min > br.eta_max)
            flag("empty phase-difference range on branch (" + std::to_string(br.from_bus) + "," +
                 std::to_string(br.to_bus) + ")");
        if (br.s_max < 0.0)
            flag("negative flow bound on branch (" + std::to_string(br.from_bus) + "," +
                 std::to_string(br.to_bus) + ")");
        if (br.status) parallels[{br.from_bus, br.to_bus}].push_back(br.parallel);
    }
    for (auto& [key, hs] : parallels) {
        std::sort(hs.begin(), hs.end());
        for (size_t i = 0; i < hs.size(); ++i) {
            if (hs[i] != static_cast<int>(i) + 1) {
                flag("non-contiguous parallel indices on pair (" + std::to_string(key.first) +
                     "," + std::to_string(key.second) + ")");
                break;
            }
        }
    }
    for (const Generator& g : grid.generators) {
        if (!ids.count(g.bus))
            flag("generator references unknown bus " + std::to_string(g.bus));
        if (g.p_min > g.p_max || g.q_min > g.q_max)
            flag("empty generation range at bus " + std::to_string(g.bus) + " generator " +
                 std::to_string(g.index));
        if (g.cost.empty() || g.cost.size() > 3)
            flag("cost polynomial degree out of range at bus " + std::to_string(g.bus));
    }
    return report;
}

void require_valid(const Grid& grid) {
    ValidationReport report = validate_grid(grid);
    if (!report.ok()) {
        std::string msg = "invalid grid:";
        for (const std::string& v : report.violations) msg += "\n  " + v;
        throw InvalidGrid(msg);
    }
}

}  // namespace acopf
