#pragma once

// Dense statevector simulation.
//
// Qubit ordering: qubit 0 is the least-significant bit of a basis-state
// index. A k-qubit gate acting on targets {t_0, ..., t_{k-1}} uses the same
// rule locally: t_0 is the least-significant bit of the gate's row/column
// index. The qasm and hhl modules rely on both conventions.

#include <algorithm>
#include <complex>
#include <limits>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qhyb/error.hpp"

namespace qhyb::statevec {

using Qubit = unsigned;
using BasisIndex = std::uint64_t;

inline constexpr unsigned kDefaultQubitCap = 24;
inline constexpr double kUnitarityTolerance = 1e-8;
inline constexpr double kPostselectThreshold = 1e-12;

/// 1e-8, or a few hundred ulps when the scalar is coarser than double.
template <class Real>
constexpr Real unitarity_tolerance() {
    return std::max(Real(kUnitarityTolerance), Real(256) * std::numeric_limits<Real>::epsilon());
}

struct Control {
    Qubit qubit = 0;
    unsigned value = 1;

    friend bool operator==(const Control&, const Control&) = default;
};

struct Options {
    unsigned qubit_cap = kDefaultQubitCap;
    bool check_unitary = true;
};

template <class Real>
using GateMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <class Real>
using Amplitudes = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <class Real>
class StateVector {
public:
    using Scalar = std::complex<Real>;

    StateVector() = default;

    /// Takes ownership of raw amplitudes; the length must be a power of two.
    explicit StateVector(Amplitudes<Real> amplitudes) : amplitudes_(std::move(amplitudes)) {
        const auto size = static_cast<BasisIndex>(amplitudes_.size());
        if (size < 2 || (size & (size - 1)) != 0)
            throw ValidationError("statevector length must be a power of two >= 2, got " +
                                  std::to_string(size));
        while ((BasisIndex{1} << n_qubits_) < size)
            ++n_qubits_;
    }

    unsigned n_qubits() const noexcept { return n_qubits_; }
    BasisIndex size() const noexcept { return static_cast<BasisIndex>(amplitudes_.size()); }

    const Amplitudes<Real>& amplitudes() const noexcept { return amplitudes_; }
    Amplitudes<Real>& amplitudes() noexcept { return amplitudes_; }

    Scalar operator[](BasisIndex i) const { return amplitudes_(static_cast<Eigen::Index>(i)); }

    Real norm_squared() const { return amplitudes_.squaredNorm(); }

private:
    Amplitudes<Real> amplitudes_;
    unsigned n_qubits_ = 0;
};

template <class Real = double>
StateVector<Real> new_zero_state(unsigned n_qubits, unsigned qubit_cap = kDefaultQubitCap) {
    if (n_qubits < 1)
        throw ValidationError("a register needs at least one qubit");
    if (n_qubits > qubit_cap)
        throw ResourceLimitError("register of " + std::to_string(n_qubits) +
                                 " qubits exceeds the qubit cap of " + std::to_string(qubit_cap));
    Amplitudes<Real> amps = Amplitudes<Real>::Zero(Eigen::Index{1} << n_qubits);
    amps(0) = 1;
    return StateVector<Real>(std::move(amps));
}

/// Largest entry of |G^dagger G - I|.
template <class Real>
Real unitarity_defect(const GateMatrix<Real>& gate) {
    const auto dim = gate.rows();
    return (gate.adjoint() * gate - GateMatrix<Real>::Identity(dim, dim)).cwiseAbs().maxCoeff();
}

namespace detail {

template <class Real>
void check_gate(const StateVector<Real>& state, const GateMatrix<Real>& gate,
                std::span<const Control> controls, std::span<const Qubit> targets,
                const Options& options) {
    const unsigned n = state.n_qubits();
    if (targets.empty())
        throw ValidationError("gate needs at least one target qubit");
    if (gate.rows() != gate.cols() || gate.rows() != (Eigen::Index{1} << targets.size()))
        throw ValidationError("gate dimension " + std::to_string(gate.rows()) + "x" +
                              std::to_string(gate.cols()) + " does not match " +
                              std::to_string(targets.size()) + " target qubit(s)");
    BasisIndex seen = 0;
    auto claim = [&](Qubit q, const char* role) {
        if (q >= n)
            throw ValidationError(std::string(role) + " qubit " + std::to_string(q) +
                                  " out of range for " + std::to_string(n) + " qubits");
        const BasisIndex bit = BasisIndex{1} << q;
        if (seen & bit)
            throw ValidationError("qubit " + std::to_string(q) +
                                  " used more than once (controls and targets must be disjoint)");
        seen |= bit;
    };
    for (Qubit t : targets)
        claim(t, "target");
    for (const Control& c : controls) {
        claim(c.qubit, "control");
        if (c.value > 1)
            throw ValidationError("control value must be 0 or 1");
    }
    if (options.check_unitary && unitarity_defect(gate) > unitarity_tolerance<Real>())
        throw ValidationError("gate matrix is not unitary within tolerance");
}

} // namespace detail

/// Applies `gate` on `targets` to every amplitude whose control bits match.
/// With no controls this is an ordinary gate application.
template <class Real>
void apply_controlled(StateVector<Real>& state, const GateMatrix<Real>& gate,
                      std::span<const Control> controls, std::span<const Qubit> targets,
                      const Options& options = {}) {
    detail::check_gate(state, gate, controls, targets, options);

    BasisIndex ctrl_mask = 0, ctrl_value = 0, target_mask = 0;
    for (const Control& c : controls) {
        ctrl_mask |= BasisIndex{1} << c.qubit;
        if (c.value)
            ctrl_value |= BasisIndex{1} << c.qubit;
    }
    const auto dim = static_cast<std::size_t>(gate.rows());
    std::vector<BasisIndex> offsets(dim, 0);
    for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t b = 0; b < targets.size(); ++b)
            if ((j >> b) & 1U)
                offsets[j] |= BasisIndex{1} << targets[b];
    for (Qubit t : targets)
        target_mask |= BasisIndex{1} << t;

    auto& amps = state.amplitudes();
    Amplitudes<Real> in(static_cast<Eigen::Index>(dim));
    Amplitudes<Real> out(static_cast<Eigen::Index>(dim));
    const BasisIndex size = state.size();
    for (BasisIndex base = 0; base < size; ++base) {
        if ((base & target_mask) != 0 || (base & ctrl_mask) != ctrl_value)
            continue;
        for (std::size_t j = 0; j < dim; ++j)
            in(static_cast<Eigen::Index>(j)) = amps(static_cast<Eigen::Index>(base | offsets[j]));
        out.noalias() = gate * in;
        for (std::size_t j = 0; j < dim; ++j)
            amps(static_cast<Eigen::Index>(base | offsets[j])) = out(static_cast<Eigen::Index>(j));
    }
}

template <class Real>
void apply_unitary(StateVector<Real>& state, const GateMatrix<Real>& gate,
                   std::span<const Qubit> targets, const Options& options = {}) {
    apply_controlled<Real>(state, gate, {}, targets, options);
}

/// Returns the requested amplitudes in request order; an empty request means all of them.
template <class Real>
std::vector<std::complex<Real>> extract_amplitudes(const StateVector<Real>& state,
                                                   std::span<const BasisIndex> indices) {
    std::vector<std::complex<Real>> result;
    if (indices.empty()) {
        result.assign(state.amplitudes().data(), state.amplitudes().data() + state.size());
        return result;
    }
    result.reserve(indices.size());
    for (BasisIndex i : indices) {
        if (i >= state.size())
            throw ValidationError("basis index " + std::to_string(i) + " out of range for " +
                                  std::to_string(state.n_qubits()) + " qubits");
        result.push_back(state[i]);
    }
    return result;
}

/// Conditions the state on every listed qubit holding its listed value.
/// Returns the probability of that joint outcome; the state is renormalized in place.
template <class Real>
Real postselect(StateVector<Real>& state, std::span<const Control> outcome) {
    BasisIndex mask = 0, value = 0;
    for (const Control& c : outcome) {
        if (c.qubit >= state.n_qubits())
            throw ValidationError("postselect qubit " + std::to_string(c.qubit) + " out of range");
        if (c.value > 1)
            throw ValidationError("postselect value must be 0 or 1");
        mask |= BasisIndex{1} << c.qubit;
        if (c.value)
            value |= BasisIndex{1} << c.qubit;
    }
    auto& amps = state.amplitudes();
    Real probability = 0;
    for (BasisIndex i = 0; i < state.size(); ++i)
        if ((i & mask) == value)
            probability += std::norm(amps(static_cast<Eigen::Index>(i)));
    if (!(probability > Real(kPostselectThreshold)))
        throw DegeneratePostselectionError(
            "postselection outcome has probability " + std::to_string(double(probability)) +
                " below threshold",
            double(probability));
    const Real scale = Real(1) / std::sqrt(probability);
    for (BasisIndex i = 0; i < state.size(); ++i) {
        auto& a = amps(static_cast<Eigen::Index>(i));
        a = (i & mask) == value ? a * scale : std::complex<Real>(0);
    }
    return probability;
}

template <class Real>
Real postselect(StateVector<Real>& state, Qubit qubit, unsigned value) {
    const Control c{qubit, value};
    return postselect<Real>(state, std::span<const Control>(&c, 1));
}

// Fixed single- and two-qubit gate matrices.
namespace gates {

template <class Real = double>
GateMatrix<Real> x() {
    GateMatrix<Real> g(2, 2);
    g << 0, 1, 1, 0;
    return g;
}

template <class Real = double>
GateMatrix<Real> h() {
    const Real s = Real(1) / std::sqrt(Real(2));
    GateMatrix<Real> g(2, 2);
    g << s, s, s, -s;
    return g;
}

template <class Real = double>
GateMatrix<Real> rx(Real theta) {
    const std::complex<Real> c(std::cos(theta / 2), 0), s(0, -std::sin(theta / 2));
    GateMatrix<Real> g(2, 2);
    g << c, s, s, c;
    return g;
}

template <class Real = double>
GateMatrix<Real> ry(Real theta) {
    const Real c = std::cos(theta / 2), s = std::sin(theta / 2);
    GateMatrix<Real> g(2, 2);
    g << c, -s, s, c;
    return g;
}

template <class Real = double>
GateMatrix<Real> rz(Real theta) {
    GateMatrix<Real> g = GateMatrix<Real>::Zero(2, 2);
    g(0, 0) = std::polar(Real(1), -theta / 2);
    g(1, 1) = std::polar(Real(1), theta / 2);
    return g;
}

/// diag(1, e^{i phi})
template <class Real = double>
GateMatrix<Real> phase(Real phi) {
    GateMatrix<Real> g = GateMatrix<Real>::Identity(2, 2);
    g(1, 1) = std::polar(Real(1), phi);
    return g;
}

template <class Real = double>
GateMatrix<Real> swap() {
    GateMatrix<Real> g = GateMatrix<Real>::Zero(4, 4);
    g(0, 0) = g(3, 3) = 1;
    g(1, 2) = g(2, 1) = 1;
    return g;
}

} // namespace gates

} // namespace qhyb::statevec
