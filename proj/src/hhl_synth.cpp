#include "qhyb/hhl.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace qhyb::hhl {

using qasm::Circuit;
using qasm::Instruction;
using statevec::Control;

std::vector<Qubit> QubitLayout::state_qubits() const {
    std::vector<Qubit> qs(n_state);
    for (unsigned i = 0; i < n_state; ++i)
        qs[i] = i;
    return qs;
}

std::vector<Qubit> QubitLayout::clock_qubits() const {
    std::vector<Qubit> qs(m_clock);
    for (unsigned k = 0; k < m_clock; ++k)
        qs[k] = clock(k);
    return qs;
}

std::vector<Instruction> qft(std::span<const Qubit> qubits) {
    const auto m = qubits.size();
    std::vector<Instruction> out;
    for (std::size_t a = m; a-- > 0;) {
        out.push_back(Instruction::h(qubits[a]));
        for (std::size_t b = a; b-- > 0;) {
            const double phi = 2.0 * std::numbers::pi / std::ldexp(1.0, static_cast<int>(a - b + 1));
            out.push_back(Instruction::cunitary(statevec::gates::phase(phi), {{qubits[b], 1}},
                                                {qubits[a]}));
        }
    }
    for (std::size_t i = 0; i < m / 2; ++i)
        out.push_back(Instruction::swap(qubits[i], qubits[m - 1 - i]));
    return out;
}

std::vector<Instruction> inverse_qft(std::span<const Qubit> qubits) {
    std::vector<Instruction> forward = qft(qubits);
    std::reverse(forward.begin(), forward.end());
    for (auto& ins : forward)
        if (ins.matrix)
            ins.matrix = std::make_shared<const qasm::Matrix>(ins.matrix->adjoint());
    return forward;
}

std::size_t matrix_block_size(unsigned m) {
    const std::size_t qft_size = m + m * (m - 1) / 2 + m / 2;
    return 4 * std::size_t{m} + 2 * qft_size + ((std::size_t{1} << m) - 1);
}

Circuit synth_matrix_block(const PreparedOperator& op, unsigned m_clock, const Calibration& cal,
                           unsigned trotter_steps) {
    check_calibration(op.bounds, m_clock, cal);
    const QubitLayout layout{op.n_state, m_clock};
    const std::vector<Qubit> state = layout.state_qubits();
    const std::vector<Qubit> clock = layout.clock_qubits();

    // exp(i A t 2^k) for every clock power, and its inverse
    std::vector<qasm::Matrix> forward(m_clock), backward(m_clock);
    if (trotter_steps == 0) {
        const Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(op.matrix);
        if (eig.info() != Eigen::Success)
            throw NumericError("eigendecomposition of the system matrix did not converge");
        const MatrixXcd& v = eig.eigenvectors();
        const Eigen::VectorXd& lambda = eig.eigenvalues();
        for (unsigned k = 0; k < m_clock; ++k) {
            const double tau = cal.t * std::ldexp(1.0, static_cast<int>(k));
            VectorXcd phases(lambda.size());
            for (Eigen::Index j = 0; j < lambda.size(); ++j)
                phases(j) = std::polar(1.0, lambda(j) * tau);
            forward[k] = v * phases.asDiagonal() * v.adjoint();
            backward[k] = v * phases.conjugate().asDiagonal() * v.adjoint();
        }
    } else {
        const auto terms = pauli_decompose(op.matrix);
        for (unsigned k = 0; k < m_clock; ++k) {
            const double tau = cal.t * std::ldexp(1.0, static_cast<int>(k));
            forward[k] = trotter_evolution(terms, op.n_state, tau, trotter_steps << k);
            backward[k] = forward[k].adjoint();
        }
    }

    Circuit c;
    c.n_qubits = layout.total();
    auto& out = c.instructions;
    out.reserve(matrix_block_size(m_clock));

    for (Qubit q : clock)
        out.push_back(Instruction::h(q));
    for (unsigned k = 0; k < m_clock; ++k)
        out.push_back(Instruction::cunitary(forward[k], {{clock[k], 1}}, state));
    for (auto& ins : inverse_qft(clock))
        out.push_back(std::move(ins));

    const BasisIndex clock_states = BasisIndex{1} << m_clock;
    for (BasisIndex v = 1; v < clock_states; ++v) {
        const double ratio = std::min(1.0, cal.c / clock_eigenvalue(v, m_clock, cal.t));
        std::vector<Control> controls(m_clock);
        for (unsigned j = 0; j < m_clock; ++j)
            controls[j] = {clock[j], static_cast<unsigned>((v >> j) & 1U)};
        out.push_back(Instruction::mcry(2.0 * std::asin(ratio), std::move(controls),
                                        layout.ancilla()));
    }

    for (auto& ins : qft(clock))
        out.push_back(std::move(ins));
    for (unsigned k = m_clock; k-- > 0;)
        out.push_back(Instruction::cunitary(backward[k], {{clock[k], 1}}, state));
    for (Qubit q : clock)
        out.push_back(Instruction::h(q));
    return c;
}

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

// Rotation emitted for a uniformly controlled RY stage on `target` whose
// pattern p (over qubits above the target) needs angle thetas[p].
void emit_ry_stage(std::vector<Instruction>& out, const std::vector<double>& thetas, Qubit target,
                   unsigned n) {
    const bool uniform =
        std::all_of(thetas.begin(), thetas.end(), [&](double t) { return t == thetas.front(); });
    if (uniform) {
        const double theta = thetas.front();
        if (theta == 0.0)
            return;
        // every target is still |0> when rotated, where RY(pi/2) and H agree
        if (std::abs(theta - kHalfPi) <= 1e-15)
            out.push_back(Instruction::h(target));
        else
            out.push_back(Instruction::ry(theta, target));
        return;
    }
    for (std::size_t p = 0; p < thetas.size(); ++p) {
        if (thetas[p] == 0.0)
            continue;
        std::vector<Control> controls;
        for (unsigned q = target + 1; q < n; ++q)
            controls.push_back({q, static_cast<unsigned>((p >> (q - target - 1)) & 1U)});
        out.push_back(Instruction::mcry(thetas[p], std::move(controls), target));
    }
}

} // namespace

RhsBlock synth_rhs_block(const VectorXcd& b) {
    const Eigen::Index dim = b.size();
    if (dim < 2 || (dim & (dim - 1)) != 0)
        throw ValidationError("right-hand side length must be a power of two >= 2");
    if (!b.allFinite())
        throw ValidationError("right-hand side has non-finite entries");
    RhsBlock block;
    block.norm = b.norm();
    if (block.norm == 0.0)
        throw ValidationError("right-hand side is zero");
    unsigned n = 0;
    while ((Eigen::Index{1} << n) < dim)
        ++n;
    block.circuit.n_qubits = n;
    auto& out = block.circuit.instructions;

    const VectorXcd a = b / block.norm;
    const Eigen::VectorXd weight = a.cwiseAbs2();

    // magnitudes, most significant qubit first
    for (unsigned level = n; level-- > 0;) {
        const std::size_t patterns = std::size_t{1} << (n - 1 - level);
        const Eigen::Index block_len = Eigen::Index{1} << level;
        std::vector<double> thetas(patterns, 0.0);
        for (std::size_t p = 0; p < patterns; ++p) {
            const Eigen::Index base = static_cast<Eigen::Index>(p) << (level + 1);
            const double zero = std::sqrt(weight.segment(base, block_len).sum());
            const double one = std::sqrt(weight.segment(base + block_len, block_len).sum());
            thetas[p] = (zero == 0.0 && one == 0.0) ? 0.0 : 2.0 * std::atan2(one, zero);
        }
        emit_ry_stage(out, thetas, level, n);
    }

    // phases on qubit 0, controlled by the pattern of qubits 1..n-1
    const std::size_t pairs = static_cast<std::size_t>(dim / 2);
    std::vector<std::array<double, 2>> phases(pairs);
    bool any_phase = false;
    for (std::size_t p = 0; p < pairs; ++p)
        for (int bit = 0; bit < 2; ++bit) {
            const cplx amp = a(static_cast<Eigen::Index>(2 * p + bit));
            const double phi = std::abs(amp) == 0.0 ? 0.0 : std::arg(amp);
            phases[p][static_cast<std::size_t>(bit)] = phi;
            any_phase = any_phase || phi != 0.0;
        }
    if (!any_phase)
        return block;
    std::vector<qasm::Matrix> diagonals(pairs);
    bool uniform = true;
    for (std::size_t p = 0; p < pairs; ++p) {
        qasm::Matrix d = qasm::Matrix::Zero(2, 2);
        d(0, 0) = std::polar(1.0, phases[p][0]);
        d(1, 1) = std::polar(1.0, phases[p][1]);
        diagonals[p] = std::move(d);
        uniform = uniform && diagonals[p] == diagonals[0];
    }
    if (uniform) {
        out.push_back(Instruction::unitary(diagonals[0], {0}));
        return block;
    }
    for (std::size_t p = 0; p < pairs; ++p) {
        if (diagonals[p].isIdentity(0.0))
            continue;
        if (n == 1) {
            out.push_back(Instruction::unitary(diagonals[p], {0}));
            continue;
        }
        std::vector<Control> controls;
        for (unsigned q = 1; q < n; ++q)
            controls.push_back({q, static_cast<unsigned>((p >> (q - 1)) & 1U)});
        out.push_back(Instruction::cunitary(diagonals[p], std::move(controls), {0}));
    }
    return block;
}

Circuit assemble(const Circuit& rhs_block, const Circuit& matrix_block, const QubitLayout& layout) {
    if (rhs_block.n_qubits != layout.n_state)
        throw ValidationError("rhs block acts on " + std::to_string(rhs_block.n_qubits) +
                              " qubits but the state register has " +
                              std::to_string(layout.n_state));
    if (matrix_block.n_qubits != layout.total())
        throw ValidationError("matrix block acts on " + std::to_string(matrix_block.n_qubits) +
                              " qubits but the layout needs " + std::to_string(layout.total()));
    Circuit c;
    c.n_qubits = layout.total();
    c.instructions.reserve(rhs_block.size() + matrix_block.size());
    c.instructions.insert(c.instructions.end(), rhs_block.instructions.begin(),
                          rhs_block.instructions.end());
    c.instructions.insert(c.instructions.end(), matrix_block.instructions.begin(),
                          matrix_block.instructions.end());
    return c;
}

VectorXcd recover_solution(std::span<const cplx> solution, double p_success,
                           const Calibration& cal, double norm_b, const Embedding& embedding) {
    if (!(p_success >= statevec::kPostselectThreshold))
        throw DegeneratePostselectionError("HHL success probability too small; calibration failed",
                                           p_success);
    const double factor = std::sqrt(p_success) / cal.c * norm_b / cal.scale;
    VectorXcd x(static_cast<Eigen::Index>(solution.size()));
    for (std::size_t i = 0; i < solution.size(); ++i)
        x(static_cast<Eigen::Index>(i)) = solution[i] * factor;
    return unembed_solution(embedding, x);
}

VectorXcd recover_solution(const qasm::State& final_state, const HhlPlan& plan, double norm_b) {
    if (final_state.n_qubits() != plan.layout.total())
        throw ValidationError("final state width does not match the plan");
    qasm::State state = final_state;
    std::vector<Control> outcome{{plan.layout.ancilla(), 1}};
    for (Qubit q : plan.layout.clock_qubits())
        outcome.push_back({q, 0});
    const double p = statevec::postselect<double>(state, outcome);
    const BasisIndex offset = plan.layout.solution_offset();
    const auto* first = state.amplitudes().data() + offset;
    return recover_solution(std::span<const cplx>(first, plan.layout.solution_size()), p,
                            plan.calibration, norm_b, plan.embedding);
}

} // namespace qhyb::hhl
