#pragma once

// Backward-Euler time stepping of the 1-D heat equation with Dirichlet
// boundaries, with a pluggable linear solver per step, plus classical
// iterative refinement around an approximate solver.

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qhyb/hhl.hpp"

namespace qhyb::pde {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using hhl::PhaseTimings;

struct HeatProblem {
    Eigen::Index nx = 8;
    double alpha = 1.0;
    double dt = 1e-3;
    double h = 1.0 / 9.0;
    VectorXd u0;
    int steps = 1;

    /// alpha dt / h^2
    double courant() const noexcept { return alpha * dt / (h * h); }
};

/// Throws ValidationError unless nx is a power of two >= 2, alpha, dt, h > 0,
/// steps >= 0 and u0 has nx entries.
void validate(const HeatProblem& problem);

/// A = I + (alpha dt / h^2) tridiag(-1, 2, -1).
MatrixXd discretize_heat_1d(Eigen::Index nx, double alpha, double dt, double h);

/// u0_i = sin(pi x_i) on the interior points x_i = (i + 1) h.
VectorXd sine_profile(Eigen::Index nx, double h);

struct StepOutcome {
    VectorXd x;
    PhaseTimings phases;
    bool synthesized_matrix = false;
    int refinement_iterations = 0;
};

/// Solves A x = b for the loop's fixed matrix.
using StepSolver = std::function<StepOutcome(const VectorXd& rhs)>;

struct StepDiagnostics {
    PhaseTimings phases;
    double residual = 0.0; ///< ||b - A x||_2 / ||b||_2
    bool synthesized_matrix = false;
    int refinement_iterations = 0;
};

struct Trajectory {
    std::vector<VectorXd> snapshots; ///< steps + 1 entries, snapshots[0] == u0
    std::vector<StepDiagnostics> steps;
};

/// u^{k+1} = solver(u^k). Solver failures are rethrown with the step index.
Trajectory time_step_loop(const HeatProblem& problem, const StepSolver& solver);

/// ||b - A x||_2
double residual_norm(const MatrixXd& a, const VectorXd& x, const VectorXd& b);

using InnerSolver = std::function<VectorXd(const VectorXd& rhs)>;

struct RefinementResult {
    VectorXd x;
    int iterations = 0;
    std::vector<double> residuals; ///< relative residual after each iteration
};

/// x <- x + solver(b - A x) from x = 0 until ||b - A x|| / ||b|| <= tol.
/// Throws RefinementError after max_iter iterations or on divergence to non-finite values.
RefinementResult iterative_refinement(const MatrixXd& a, const VectorXd& b,
                                      const InnerSolver& solver, double tol, int max_iter);

/// Dense LDL^T factorization, done once.
StepSolver classical_solver(const MatrixXd& a);

/// Wraps an HhlSolver; the matrix block is synthesized on the first call only.
/// With `refine_tol`, each step runs iterative refinement around the HHL solve.
StepSolver hhl_step_solver(hhl::HhlSolver& solver, const MatrixXd& a,
                           std::optional<double> refine_tol = std::nullopt, int max_iter = 20);

/// One row per snapshot, columns u_0..u_{nx-1}, 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// One JSON document with per-step residuals and, unless `with_timing` is
/// false, per-step phase timings.
void write_diagnostics_json(std::ostream& out, const HeatProblem& problem,
                            const Trajectory& trajectory, bool with_timing);

/// max_k ||u_k - v_k||_2 / ||v_k||_2 over snapshots, with v the reference.
double max_relative_deviation(const Trajectory& candidate, const Trajectory& reference);

} // namespace qhyb::pde
