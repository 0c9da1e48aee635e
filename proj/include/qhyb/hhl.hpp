#pragma once

// Local synthesis of HHL circuits, split into a reusable matrix block and a
// per-right-hand-side state-preparation block.
//
// Register layout (qubit 0 = least significant bit of the basis index):
//   qubits [0, n)        state register, holds |b> and finally ~A^-1|b>
//   qubits [n, n+m)      clock register, clock qubit k controls exp(i A t 2^k)
//   qubit  n+m           ancilla, |1> heralds a successful inversion
// The solution slice (ancilla = 1, clock = 0) is the contiguous index range
// [2^(n+m), 2^(n+m) + 2^n).

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qhyb/device.hpp"
#include "qhyb/pauli.hpp"
#include "qhyb/qasm.hpp"

namespace qhyb::hhl {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using statevec::BasisIndex;
using statevec::Qubit;

inline constexpr unsigned kMinClockQubits = 2;
inline constexpr unsigned kMaxClockQubits = 8;
inline constexpr unsigned kDefaultClockQubits = 6;
inline constexpr int kSpectralIterations = 200;

struct SpectralBounds {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

/// How the caller's system was embedded into the prepared Hermitian one.
struct Embedding {
    Eigen::Index original_dim = 0;
    bool dilated = false;
};

/// Hermitian positive-definite operator of dimension 2^n_state, ready for synthesis.
struct PreparedOperator {
    MatrixXcd matrix;
    unsigned n_state = 0;
    SpectralBounds bounds;
    double condition_number = 0.0;
    Embedding embedding;

    Eigen::Index dimension() const noexcept { return matrix.rows(); }
};

struct LinearSystem {
    PreparedOperator op;
    VectorXcd rhs;

    Eigen::Index dimension() const noexcept { return op.dimension(); }
};

/// [[0, A], [A^dagger, 0]] with right-hand side (b, 0).
std::pair<MatrixXcd, VectorXcd> hermitian_dilation(const MatrixXcd& a, const VectorXcd& b);

/// Gershgorin discs refined by power and inverse-power iteration.
/// Throws ConditioningError if the matrix is not positive definite or is
/// singular to tolerance (lambda_min < 1e-8 lambda_max).
SpectralBounds estimate_spectrum(const MatrixXcd& hermitian);

/// Dilates non-Hermitian input, pads to a power of two with unit diagonal,
/// and estimates the spectrum.
PreparedOperator prepare_operator(const MatrixXcd& a_raw);

/// Applies the operator's embedding to a caller-side right-hand side.
VectorXcd embed_rhs(const PreparedOperator& op, const VectorXcd& b_raw);

/// Undoes the embedding: strips padding and selects the dilation's solution half.
VectorXcd unembed_solution(const Embedding& embedding, const VectorXcd& x);

LinearSystem prepare_system(const MatrixXcd& a_raw, const VectorXcd& b_raw);

struct Calibration {
    double t = 0.0;     ///< evolution time, radians per unit eigenvalue
    double c = 0.0;     ///< rotation constant
    double scale = 1.0; ///< factor applied to A (always 1: A is used directly)
};

/// t = 2 pi (1 - 2^-m) / lambda_max, C = 2 pi / (t 2^m).
Calibration calibrate(const SpectralBounds& bounds, unsigned m_clock);

/// Exact-phase override: pins t and derives C = 2 pi / (t 2^m).
Calibration calibrate_with_time(const SpectralBounds& bounds, unsigned m_clock, double t);

/// Throws unless 0 < C <= lambda_min and t lambda_max < 2 pi.
void check_calibration(const SpectralBounds& bounds, unsigned m_clock, const Calibration& cal);

/// Eigenvalue estimate for clock value v: 2 pi v / (2^m t).
double clock_eigenvalue(BasisIndex v, unsigned m_clock, double t);

struct QubitLayout {
    unsigned n_state = 0;
    unsigned m_clock = 0;

    unsigned total() const noexcept { return n_state + m_clock + 1; }
    Qubit clock(unsigned k) const noexcept { return n_state + k; }
    Qubit ancilla() const noexcept { return n_state + m_clock; }
    std::vector<Qubit> state_qubits() const;
    std::vector<Qubit> clock_qubits() const;
    BasisIndex solution_offset() const noexcept { return BasisIndex{1} << (n_state + m_clock); }
    BasisIndex solution_size() const noexcept { return BasisIndex{1} << n_state; }

    friend bool operator==(const QubitLayout&, const QubitLayout&) = default;
};

/// QFT on `qubits` (qubits[0] least significant): |x> -> 2^-m/2 sum_y e^{2 pi i x y / 2^m} |y>.
std::vector<qasm::Instruction> qft(std::span<const Qubit> qubits);
std::vector<qasm::Instruction> inverse_qft(std::span<const Qubit> qubits);

/// Instruction count of synth_matrix_block for a given clock size:
/// 4m (H and controlled evolutions, twice) + 2 (m + m(m-1)/2 + floor(m/2)) (QFT pair)
/// + 2^m - 1 (eigenvalue-inversion sweep).
std::size_t matrix_block_size(unsigned m_clock);

/// QPE, eigenvalue inversion by a multi-controlled RY sweep, inverse QPE.
/// `trotter_steps` = 0 uses exact exponentials; otherwise first-order Trotter
/// over the Pauli decomposition with trotter_steps * 2^k slices for power k.
qasm::Circuit synth_matrix_block(const PreparedOperator& op, unsigned m_clock,
                                 const Calibration& cal, unsigned trotter_steps = 0);

struct RhsBlock {
    qasm::Circuit circuit; ///< acts on the state register only
    double norm = 0.0;     ///< ||b||, needed to rescale the solution
};

/// Prepares b/||b|| from |0...0> with uniformly controlled RY rotations
/// followed by a uniformly controlled phase stage on qubit 0.
RhsBlock synth_rhs_block(const VectorXcd& b);

/// rhs block followed by matrix block, on layout.total() qubits.
qasm::Circuit assemble(const qasm::Circuit& rhs_block, const qasm::Circuit& matrix_block,
                       const QubitLayout& layout);

/// x = psi sqrt(p) / C * ||b||, un-embedded. `solution` is the post-selected
/// state-register slice.
VectorXcd recover_solution(std::span<const cplx> solution, double p_success,
                           const Calibration& cal, double norm_b, const Embedding& embedding);

struct HhlPlan {
    QubitLayout layout;
    Calibration calibration;
    Embedding embedding;
    qasm::Circuit a_block;
    qasm::Circuit b_block;
};

/// From the executed assembled circuit's full output state.
VectorXcd recover_solution(const qasm::State& final_state, const HhlPlan& plan, double norm_b);

enum class Readout { Full, SolutionOnly };

struct HhlConfig {
    unsigned m_clock = kDefaultClockQubits;
    std::optional<double> evolution_time; ///< exact-phase override
    unsigned trotter_steps = 0;
    Readout readout = Readout::Full;
};

void validate(const HhlConfig& config);

struct PhaseTimings {
    double synthesis = 0.0;
    double transfer = 0.0;
    double simulation = 0.0;
    double extraction = 0.0;

    static constexpr std::array<std::string_view, 4> names = {"synthesis", "transfer",
                                                              "simulation", "extraction"};
    double operator[](std::size_t i) const;
    double sum() const noexcept { return synthesis + transfer + simulation + extraction; }
    PhaseTimings& operator+=(const PhaseTimings& other);
};

struct SolveReport {
    VectorXcd x;
    PhaseTimings phases;
    double total_time = 0.0;
    double p_success = 0.0;
    unsigned circuit_qubits = 0;
    std::size_t amplitudes_read = 0;
    bool synthesized_matrix = false; ///< true when this call synthesized the matrix block
};

/// Solves repeatedly against one matrix. The matrix block is synthesized on
/// the first solve and reused afterwards; only the rhs block changes.
class HhlSolver {
public:
    HhlSolver(MatrixXcd a, HhlConfig config, device::Executor& executor);
    HhlSolver(PreparedOperator op, HhlConfig config, device::Executor& executor);

    SolveReport solve(const VectorXcd& b);
    /// `rhs` already embedded in the prepared operator's space.
    SolveReport solve_prepared(const VectorXcd& rhs);

    bool has_plan() const noexcept { return plan_.has_value(); }
    const HhlPlan& plan() const;
    const PreparedOperator& op() const;
    const HhlConfig& config() const noexcept { return config_; }

private:
    SolveReport solve_impl(const VectorXcd* raw, const VectorXcd* prepared);
    void ensure_plan();

    MatrixXcd raw_;
    std::optional<PreparedOperator> op_;
    HhlConfig config_;
    device::Executor* executor_;
    std::optional<HhlPlan> plan_;
};

SolveReport hhl_solve(const LinearSystem& system, const HhlConfig& config,
                      device::Executor& executor);

inline MatrixXcd to_complex(const Eigen::MatrixXd& m) { return m.cast<cplx>(); }
inline VectorXcd to_complex(const Eigen::VectorXd& v) { return v.cast<cplx>(); }

} // namespace qhyb::hhl
