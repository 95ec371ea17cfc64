#pragma once

#include <map>
#include <vector>

#include "acopf/formulation.hpp"
#include "acopf/grid.hpp"

namespace acopf {

// Bus voltages in either representation; keyed by bus id.
struct VoltagePoint {
    enum class Rep { Cartesian, Polar };
    Rep rep = Rep::Cartesian;
    // cartesian: first = Re V, second = Im V; polar: first = v, second = theta
    std::map<int, std::pair<double, double>> values;

    Complex cartesian(int bus) const;  // works for either representation
};

VoltagePoint cartesian_to_polar(const VoltagePoint& p);
VoltagePoint polar_to_cartesian(const VoltagePoint& p);

// Lifted c/s variables: c_bb keyed by (b,b); c_ba, s_ba keyed by the L0
// orientation (b,a). Reversed access flips the sign of s.
struct JabrPoint {
    std::map<std::pair<int, int>, double> c;
    std::map<std::pair<int, int>, double> s;
};

JabrPoint lift_to_jabr(const VoltagePoint& p, const Grid& grid);

// W = [Re V; Im V][Re V; Im V]^T (2n x 2n) in dense row-major order,
// and the Hermitian X = V V^H as an n x n complex matrix.
std::vector<std::vector<double>> lift_to_w_real(const VoltagePoint& p, const Grid& grid);
std::vector<std::vector<Complex>> lift_to_x_hermitian(const VoltagePoint& p, const Grid& grid);

// Ohm's law currents and injected powers per arc, plus the generation
// Sum_g S_g each bus must supply for the power flow equations to balance.
struct InjectionState {
    struct ArcValues {
        Arc arc;
        Complex current;
        Complex power;
    };
    std::vector<ArcValues> arcs;
    std::map<int, Complex> required_generation;  // keyed by bus id
};

InjectionState recover_injections(const Grid& grid, const VoltagePoint& p);

// Point assembly for each formulation family. Generation values are keyed
// by (bus id, generator index).
using GenerationPoint = std::map<std::pair<int, int>, Complex>;

// Distributes the required generation of an InjectionState across the
// generators of each bus (proportionally within bounds where possible).
GenerationPoint spread_generation(const Grid& grid, const InjectionState& inj);

Point make_siv_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);
Point make_voltage_only_point(const Grid& grid, const VoltagePoint& v,
                              const GenerationPoint& gen);
Point make_polar_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);
Point make_jabr_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);
Point make_mixed_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);
Point make_matrix_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);
Point make_sdp_real_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);
Point make_sdp_v_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);
Point make_sdp_x_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);
Point make_socp_x_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);
Point make_qc_point(const Grid& grid, const VoltagePoint& v, const GenerationPoint& gen);

}  // namespace acopf
