#pragma once

#include <stdexcept>

#include "acopf/formulation.hpp"
#include "acopf/grid.hpp"

namespace acopf {

struct SolveOptions {
    int max_iter = 200;
    double tol_feas = 1e-6;
    double tol_opt = 1e-6;
    double barrier_reduction = 0.1;
    int multistart_count = 10;
    unsigned rng_seed = 0;
};

enum class SolveStatus {
    optimal,
    feasible,
    infeasible_detected,
    iteration_limit,
    numerical_failure
};

enum class BoundKind { lower, upper };

const char* to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::numerical_failure;
    double objective = 0.0;
    Point point;
    double max_violation = 0.0;
    BoundKind bound_kind = BoundKind::lower;
    int iterations = 0;
};

// Primal log-barrier path-following solve of the conic (Jabr) relaxation.
// The reported objective is a certified lower bound for the grid's ACOPF.
SolveResult solve_jabr_barrier(const Grid& grid, const SolveOptions& opts = {});

// Multistart penalized Gauss-Newton local solve of the polar model. When the
// returned point is feasible, its objective is an upper bound.
SolveResult solve_polar_local(const Grid& grid, const SolveOptions& opts = {});

struct InvalidBoundKinds : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (ub - lb) / max(1, |ub|); requires lb.bound_kind = lower, ub = upper.
double optimality_gap(const SolveResult& lb, const SolveResult& ub);

}  // namespace acopf
