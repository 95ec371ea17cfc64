#pragma once

#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace acopf {

using Complex = std::complex<double>;

// Sentinel used for "no bound" throughout (matches the .dat file convention).
inline constexpr double kInf = 1e30;

inline bool is_unbounded(double v) { return v >= kInf || v <= -kInf; }

enum class BusType : int { Load = 1, Generator = 2, Reference = 3 };

struct Bus {
    int id = 0;
    BusType type = BusType::Load;
    double demand_re = 0.0;   // Re S~_b
    double demand_im = 0.0;   // Im S~_b
    double v_min = 0.0;       // voltage magnitude bounds, per unit
    double v_max = kInf;
    double shunt_re = 0.0;    // Re A_b
    double shunt_im = 0.0;    // Im A_b
    double vm_hint = 1.0;     // initial-point hints (Vm/Va columns); no constraint reads them
    double va_hint = 0.0;
};

// A branch as given (L0 orientation, transformer at the `from` end).
struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    int parallel = 1;         // h, 1..p_ba
    double r = 0.0;
    double x = 0.0;
    double b_ch = 0.0;        // total line charging susceptance (split b/2 at each end)
    double tau = 1.0;         // transformer ratio magnitude
    double nu = 0.0;          // transformer ratio angle, radians
    double s_max = kInf;      // apparent power magnitude bound, symmetric in direction
    std::optional<double> i_max;  // current magnitude bound, if given
    double eta_min = -3.14159265358979323846;  // phase difference bounds, radians
    double eta_max = 3.14159265358979323846;
    bool status = true;
};

struct Generator {
    int bus = 0;
    int index = 1;            // position within G_b (1-based)
    double p_min = -kInf;
    double p_max = kInf;
    double q_min = -kInf;
    double q_max = kInf;
    std::vector<double> cost{0.0, 1.0};  // c0..cd, d <= 2
};

struct Grid {
    std::vector<Bus> buses;
    std::vector<Branch> branches;     // L0 only; L1 is the implied reversal
    std::vector<Generator> generators;
    double base_mva = 100.0;          // used only by the MATPOWER importer

    int bus_pos(int id) const;        // dense 0-based position; throws on unknown id
    const Bus& bus(int id) const { return buses[static_cast<size_t>(bus_pos(id))]; }
    int reference_bus() const;        // id of the unique reference bus
    std::vector<const Generator*> generators_at(int bus_id) const;
    std::vector<const Branch*> active_branches() const;
    std::uint64_t hash() const;
};

// The four entries of the 2x2 branch admittance matrix.
struct BranchAdmittance {
    Complex yff, yft, ytf, ytt;
};

// A directed arc of L = L0 u L1. `reversed` marks membership of L1; `branch`
// always points at the stored L0 branch.
struct Arc {
    int from = 0;
    int to = 0;
    int parallel = 1;
    bool reversed = false;
    const Branch* branch = nullptr;
};

// All arcs of an active grid, L0 first (branch order), then L1.
std::vector<Arc> all_arcs(const Grid& grid);

struct ZeroImpedance : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidGrid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

BranchAdmittance branch_admittance(const Branch& branch);

// Sparse n x n network admittance matrix, keyed by dense bus positions.
class NetworkAdmittance {
public:
    NetworkAdmittance() = default;
    explicit NetworkAdmittance(int n) : n_(n) {}

    int size() const { return n_; }
    Complex at(int row, int col) const;
    void add(int row, int col, Complex value);
    const std::map<std::pair<int, int>, Complex>& entries() const { return entries_; }

private:
    int n_ = 0;
    std::map<std::pair<int, int>, Complex> entries_;
};

NetworkAdmittance network_admittance(const Grid& grid);

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate_grid(const Grid& grid);

// Throws InvalidGrid when validate_grid reports violations.
void require_valid(const Grid& grid);

}  // namespace acopf
