#pragma once

// qasm-lite: the circuit text format shipped between application and device.
//
//   program   := "qubits" INT ";" { instr }
//   instr     := simple | rot | ctrl | mcry | unitary
//   simple    := ("h"|"x") INT ";" | "cx" INT INT ";" | "swap" INT INT ";"
//   rot       := ("rx"|"ry"|"rz") "(" FLOAT ")" INT ";"
//   ctrl      := "cry" "(" FLOAT ")" INT INT ";"
//   mcry      := "mcry" "(" FLOAT ")" "c[" ctrlspec { "," ctrlspec } "]" INT ";"
//   ctrlspec  := INT "=" ("0"|"1")
//   unitary   := ("unitary" | "cunitary" "c[" ctrlspec { "," ctrlspec } "]")
//                "t[" INT { "," INT } "]" B64BLOB ";"
//
// "#" starts a comment running to end of line. Matrix payloads are row-major
// complex entries, each written as two little-endian binary64 values (re, im),
// base64 encoded. Angles are radians. Qubit ordering follows statevec.hpp.

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qhyb/statevec.hpp"

namespace qhyb::qasm {

using statevec::Control;
using statevec::Qubit;

enum class GateKind { H, X, RX, RY, RZ, CX, CRY, SWAP, Unitary, CUnitary, MCRY };

/// Lowercase keyword for a gate kind ("h", "cunitary", ...).
std::string_view keyword(GateKind kind);

using Matrix = Eigen::MatrixXcd;

struct Instruction {
    GateKind kind = GateKind::H;
    double angle = 0.0;
    std::vector<Control> controls;
    std::vector<Qubit> targets;
    /// Present iff kind is Unitary or CUnitary. Shared so that fragments copy cheaply.
    std::shared_ptr<const Matrix> matrix;

    static Instruction h(Qubit q);
    static Instruction x(Qubit q);
    static Instruction rx(double theta, Qubit q);
    static Instruction ry(double theta, Qubit q);
    static Instruction rz(double theta, Qubit q);
    static Instruction cx(Qubit control, Qubit target);
    static Instruction cry(double theta, Qubit control, Qubit target);
    static Instruction swap(Qubit a, Qubit b);
    static Instruction mcry(double theta, std::vector<Control> controls, Qubit target);
    static Instruction unitary(Matrix m, std::vector<Qubit> targets);
    static Instruction cunitary(Matrix m, std::vector<Control> controls, std::vector<Qubit> targets);

    /// The gate matrix acting on `targets` (the payload for Unitary/CUnitary).
    Matrix gate_matrix() const;

    /// Structural equality; angles and matrix entries compare bit-exactly.
    friend bool operator==(const Instruction& a, const Instruction& b);
};

struct Circuit {
    unsigned n_qubits = 0;
    std::vector<Instruction> instructions;

    std::size_t size() const noexcept { return instructions.size(); }

    friend bool operator==(const Circuit&, const Circuit&) = default;
};

/// Hard upper bound on the declared register width accepted by the parser.
inline constexpr unsigned kMaxDeclaredQubits = 62;

/// Throws ValidationError if any instruction breaks the dialect's invariants.
void validate(const Circuit& circuit);

/// Throws ParseError (position annotated) on any lexical, grammar, range or payload defect.
Circuit parse(std::string_view text);

/// Canonical text: one instruction per line, lowercase, single spaces, 17 significant digits.
std::string serialize(const Circuit& circuit);

std::string encode_matrix(const Matrix& m);

/// Decodes a payload expected to hold a dim x dim matrix; nullopt if the length or alphabet is wrong.
std::optional<Matrix> decode_matrix(std::string_view blob, Eigen::Index dim);

using State = statevec::StateVector<double>;

/// Runs the instructions in order. Errors carry the failing instruction's index.
void execute_into(const Circuit& circuit, State& state, const statevec::Options& options = {});

State execute(const Circuit& circuit, const statevec::Options& options = {});
State execute(const Circuit& circuit, State initial, const statevec::Options& options = {});

} // namespace qhyb::qasm
