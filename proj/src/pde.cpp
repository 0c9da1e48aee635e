#include "qhyb/pde.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <json.hpp>

namespace qhyb::pde {

void validate(const HeatProblem& p) {
    if (p.nx < 2 || (p.nx & (p.nx - 1)) != 0)
        throw ValidationError("nx must be a power of two >= 2, got " + std::to_string(p.nx));
    if (!(p.alpha > 0.0) || !(p.dt > 0.0) || !(p.h > 0.0))
        throw ValidationError("alpha, dt and h must be positive");
    if (p.steps < 0)
        throw ValidationError("steps must be non-negative");
    if (p.u0.size() != p.nx)
        throw ValidationError("initial condition has " + std::to_string(p.u0.size()) +
                              " entries, expected " + std::to_string(p.nx));
}

MatrixXd discretize_heat_1d(Eigen::Index nx, double alpha, double dt, double h) {
    if (nx < 1)
        throw ValidationError("grid needs at least one point");
    if (!(alpha >= 0.0) || !(dt > 0.0) || !(h > 0.0))
        throw ValidationError("alpha must be non-negative; dt and h positive");
    const double c = alpha * dt / (h * h);
    MatrixXd a = MatrixXd::Identity(nx, nx) * (1.0 + 2.0 * c);
    for (Eigen::Index i = 0; i + 1 < nx; ++i) {
        a(i, i + 1) = -c;
        a(i + 1, i) = -c;
    }
    return a;
}

VectorXd sine_profile(Eigen::Index nx, double h) {
    VectorXd u(nx);
    for (Eigen::Index i = 0; i < nx; ++i)
        u(i) = std::sin(std::numbers::pi * static_cast<double>(i + 1) * h);
    return u;
}

double residual_norm(const MatrixXd& a, const VectorXd& x, const VectorXd& b) {
    return (b - a * x).norm();
}

Trajectory time_step_loop(const HeatProblem& problem, const StepSolver& solver) {
    validate(problem);
    const MatrixXd a = discretize_heat_1d(problem.nx, problem.alpha, problem.dt, problem.h);
    Trajectory traj;
    traj.snapshots.reserve(static_cast<std::size_t>(problem.steps) + 1);
    traj.snapshots.push_back(problem.u0);
    for (int k = 0; k < problem.steps; ++k) {
        const VectorXd& b = traj.snapshots.back();
        StepOutcome out;
        try {
            out = solver(b);
        } catch (const Error& e) {
            throw NumericError("time step " + std::to_string(k) + " failed: " + e.what());
        }
        if (out.x.size() != b.size() || !out.x.allFinite())
            throw NumericError("time step " + std::to_string(k) +
                               " failed: solver returned an invalid vector");
        StepDiagnostics d;
        d.phases = out.phases;
        const double bn = b.norm();
        d.residual = bn > 0.0 ? residual_norm(a, out.x, b) / bn : residual_norm(a, out.x, b);
        d.synthesized_matrix = out.synthesized_matrix;
        d.refinement_iterations = out.refinement_iterations;
        traj.steps.push_back(d);
        traj.snapshots.push_back(std::move(out.x));
    }
    return traj;
}

RefinementResult iterative_refinement(const MatrixXd& a, const VectorXd& b,
                                      const InnerSolver& solver, double tol, int max_iter) {
    RefinementResult result;
    result.x = VectorXd::Zero(b.size());
    const double bn = b.norm();
    if (bn == 0.0)
        return result;
    double rel = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        const VectorXd r = b - a * result.x;
        result.x += solver(r);
        rel = residual_norm(a, result.x, b) / bn;
        result.residuals.push_back(rel);
        result.iterations = it;
        if (!std::isfinite(rel))
            throw RefinementError("iterative refinement diverged", rel, it);
        if (rel <= tol)
            return result;
    }
    throw RefinementError("iterative refinement did not reach tolerance " + std::to_string(tol) +
                              " in " + std::to_string(max_iter) + " iterations (last residual " +
                              std::to_string(rel) + ")",
                          rel, max_iter);
}

StepSolver classical_solver(const MatrixXd& a) {
    auto ldlt = std::make_shared<const Eigen::LDLT<MatrixXd>>(a);
    if (ldlt->info() != Eigen::Success)
        throw NumericError("LDLT factorization failed");
    return [ldlt](const VectorXd& rhs) {
        StepOutcome out;
        out.x = ldlt->solve(rhs);
        return out;
    };
}

StepSolver hhl_step_solver(hhl::HhlSolver& solver, const MatrixXd& a,
                           std::optional<double> refine_tol, int max_iter) {
    return [&solver, a, refine_tol, max_iter](const VectorXd& rhs) {
        StepOutcome out;
        auto inner = [&](const VectorXd& r) -> VectorXd {
            const hhl::SolveReport rep = solver.solve(hhl::to_complex(r));
            out.phases += rep.phases;
            out.synthesized_matrix = out.synthesized_matrix || rep.synthesized_matrix;
            return rep.x.real();
        };
        if (refine_tol) {
            RefinementResult ref = iterative_refinement(a, rhs, inner, *refine_tol, max_iter);
            out.x = std::move(ref.x);
            out.refinement_iterations = ref.iterations;
        } else {
            out.x = inner(rhs);
        }
        return out;
    };
}

namespace {

std::string g17(double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

} // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    if (trajectory.snapshots.empty())
        return;
    const Eigen::Index nx = trajectory.snapshots.front().size();
    for (Eigen::Index i = 0; i < nx; ++i)
        out << (i ? "," : "") << "u_" << i;
    out << '\n';
    for (const VectorXd& u : trajectory.snapshots) {
        for (Eigen::Index i = 0; i < u.size(); ++i)
            out << (i ? "," : "") << g17(u(i));
        out << '\n';
    }
}

void write_diagnostics_json(std::ostream& out, const HeatProblem& problem,
                            const Trajectory& trajectory, bool with_timing) {
    nlohmann::ordered_json doc;
    doc["nx"] = problem.nx;
    doc["alpha"] = problem.alpha;
    doc["dt"] = problem.dt;
    doc["h"] = problem.h;
    doc["steps"] = problem.steps;
    auto& steps = doc["per_step"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < trajectory.steps.size(); ++k) {
        const StepDiagnostics& d = trajectory.steps[k];
        nlohmann::ordered_json s;
        s["step"] = k;
        s["residual"] = d.residual;
        s["synthesized_matrix"] = d.synthesized_matrix;
        s["refinement_iterations"] = d.refinement_iterations;
        if (with_timing) {
            auto& ph = s["phases"];
            for (std::size_t i = 0; i < PhaseTimings::names.size(); ++i)
                ph[std::string(PhaseTimings::names[i])] = d.phases[i];
        }
        steps.push_back(std::move(s));
    }
    out << doc.dump(2) << '\n';
}

double max_relative_deviation(const Trajectory& candidate, const Trajectory& reference) {
    if (candidate.snapshots.size() != reference.snapshots.size())
        throw ValidationError("trajectories have different lengths");
    double worst = 0.0;
    for (std::size_t k = 0; k < reference.snapshots.size(); ++k) {
        const double ref = reference.snapshots[k].norm();
        const double diff = (candidate.snapshots[k] - reference.snapshots[k]).norm();
        worst = std::max(worst, ref > 0.0 ? diff / ref : diff);
    }
    return worst;
}

} // namespace qhyb::pde
