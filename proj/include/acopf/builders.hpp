#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acopf/formulation.hpp"
#include "acopf/grid.hpp"

namespace acopf {

// How line loading limits enter the voltage-only model: with an explicit
// current bound, with one derived from the apparent-power limit as
// Ibar = Sbar / Vmin(from bus), or as the quadratic |S|^2 <= Sbar^2 form
// (only meaningful in models that carry flow variables).
enum class BoundMode { current_given, current_derived, power };

struct MissingCurrentBound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Real 2n x 2n coefficient matrices whose traces against
// W = [Re V; Im V][Re V; Im V]^T reproduce the bus injections (psi),
// the directed branch flows (phi), and the voltage pair products (theta).
struct ConstraintMatrices {
    int n = 0;
    std::vector<Eigen::MatrixXd> psi, psi_hat;  // per bus, dense bus order
    std::vector<Eigen::MatrixXd> phi, phi_hat;  // per arc, all_arcs order

    // trace(theta(b,a) W) = ReV_b ReV_a + ImV_b ImV_a,
    // trace(theta_hat(b,a) W) = ImV_b ReV_a - ReV_b ImV_a  (bus positions)
    Eigen::MatrixXd theta(int bpos, int apos) const;
    Eigen::MatrixXd theta_hat(int bpos, int apos) const;
};

ConstraintMatrices constraint_matrices(const Grid& grid);

Formulation build_siv_cartesian(const Grid& grid);
Formulation build_voltage_only(const Grid& grid,
                               BoundMode mode = BoundMode::current_derived);
Formulation build_polar(const Grid& grid);
Formulation build_jabr_socp(const Grid& grid);
Formulation build_mixed(const Grid& grid);
Formulation build_matrix_form(const Grid& grid);
Formulation build_sdp_real(const Grid& grid);

enum class SdpVariant { v_sdp, x_sdp };
Formulation build_sdp_complex(const Grid& grid, SdpVariant variant);

Formulation build_socp_xspace(const Grid& grid);
Formulation build_qc_lifted(const Grid& grid);

// CLI-facing dispatch by kind name; throws std::invalid_argument on an
// unknown kind.
Formulation build_formulation(const Grid& grid, const std::string& kind);
const std::vector<std::string>& formulation_kinds();

}  // namespace acopf
