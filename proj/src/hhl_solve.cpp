#include "qhyb/hhl.hpp"

#include <chrono>

namespace qhyb::hhl {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace

double PhaseTimings::operator[](std::size_t i) const {
    switch (i) {
    case 0: return synthesis;
    case 1: return transfer;
    case 2: return simulation;
    case 3: return extraction;
    }
    throw ValidationError("phase index out of range");
}

PhaseTimings& PhaseTimings::operator+=(const PhaseTimings& o) {
    synthesis += o.synthesis;
    transfer += o.transfer;
    simulation += o.simulation;
    extraction += o.extraction;
    return *this;
}

void validate(const HhlConfig& config) {
    if (config.m_clock < kMinClockQubits || config.m_clock > kMaxClockQubits)
        throw ValidationError("m_clock must be in " + std::to_string(kMinClockQubits) + ".." +
                              std::to_string(kMaxClockQubits) + ", got " +
                              std::to_string(config.m_clock));
    if (config.evolution_time && !(*config.evolution_time > 0.0))
        throw ValidationError("evolution time override must be positive");
}

HhlSolver::HhlSolver(MatrixXcd a, HhlConfig config, device::Executor& executor)
    : raw_(std::move(a)), config_(config), executor_(&executor) {
    validate(config_);
}

HhlSolver::HhlSolver(PreparedOperator op, HhlConfig config, device::Executor& executor)
    : op_(std::move(op)), config_(config), executor_(&executor) {
    validate(config_);
}

const HhlPlan& HhlSolver::plan() const {
    if (!plan_)
        throw ValidationError("no plan yet: the matrix block is synthesized on the first solve");
    return *plan_;
}

const PreparedOperator& HhlSolver::op() const {
    if (!op_)
        throw ValidationError("operator not prepared yet");
    return *op_;
}

void HhlSolver::ensure_plan() {
    if (plan_)
        return;
    if (!op_)
        op_ = prepare_operator(raw_);
    HhlPlan plan;
    plan.layout = {op_->n_state, config_.m_clock};
    plan.calibration = config_.evolution_time
                           ? calibrate_with_time(op_->bounds, config_.m_clock, *config_.evolution_time)
                           : calibrate(op_->bounds, config_.m_clock);
    plan.embedding = op_->embedding;
    plan.a_block =
        synth_matrix_block(*op_, config_.m_clock, plan.calibration, config_.trotter_steps);
    plan_ = std::move(plan);
}

SolveReport HhlSolver::solve(const VectorXcd& b) { return solve_impl(&b, nullptr); }

SolveReport HhlSolver::solve_prepared(const VectorXcd& rhs) { return solve_impl(nullptr, &rhs); }

SolveReport HhlSolver::solve_impl(const VectorXcd* raw, const VectorXcd* prepared) {
    SolveReport report;
    const auto t_total = Clock::now();

    // synthesis: matrix block once, rhs block every call
    auto t0 = Clock::now();
    report.synthesized_matrix = !plan_;
    ensure_plan();
    HhlPlan& plan = *plan_;
    VectorXcd rhs = raw ? embed_rhs(*op_, *raw) : *prepared;
    if (rhs.size() != op_->dimension())
        throw ValidationError("prepared right-hand side has the wrong dimension");
    RhsBlock rb = synth_rhs_block(rhs);
    plan.b_block = std::move(rb.circuit);
    report.phases.synthesis = since(t0);

    // packaging the blocks into one request counts as transfer, like serialization
    t0 = Clock::now();
    device::Request request;
    request.circuit = assemble(plan.b_block, plan.a_block, plan.layout);
    request.postselect = device::PostselectSpec{plan.layout.ancilla(), plan.layout.clock_qubits()};
    const BasisIndex offset = plan.layout.solution_offset();
    const BasisIndex count = plan.layout.solution_size();
    if (config_.readout == Readout::SolutionOnly) {
        request.readout.resize(count);
        for (BasisIndex j = 0; j < count; ++j)
            request.readout[j] = offset + j;
    }
    const double packaging = since(t0);

    t0 = Clock::now();
    const device::Result result = executor_->run(request);
    const double call = since(t0);
    report.phases.simulation = result.device_time;
    report.phases.transfer =
        packaging + std::max(0.0, call - result.device_time - result.readout_time);

    t0 = Clock::now();
    const std::size_t expected =
        config_.readout == Readout::SolutionOnly ? count : BasisIndex{1} << plan.layout.total();
    if (result.amplitudes.size() != expected)
        throw ValidationError("device returned " + std::to_string(result.amplitudes.size()) +
                              " amplitudes, expected " + std::to_string(expected));
    std::span<const cplx> slice(result.amplitudes);
    if (config_.readout == Readout::Full)
        slice = slice.subspan(offset, count);
    report.x = recover_solution(slice, result.p_success, plan.calibration, rb.norm, plan.embedding);
    report.phases.extraction = result.readout_time + since(t0);

    report.p_success = result.p_success;
    report.circuit_qubits = request.circuit.n_qubits;
    report.amplitudes_read = result.amplitudes.size();
    report.total_time = since(t_total);
    return report;
}

SolveReport hhl_solve(const LinearSystem& system, const HhlConfig& config,
                      device::Executor& executor) {
    HhlSolver solver(system.op, config, executor);
    return solver.solve_prepared(system.rhs);
}

} // namespace qhyb::hhl
