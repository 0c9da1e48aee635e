#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qhyb::hhl {

/// coefficient * P_{n-1} (x) ... (x) P_0, where word[0] acts on the most
/// significant qubit and word.back() on qubit 0.
struct PauliTerm {
    double coefficient = 0.0;
    std::string word;

    friend bool operator==(const PauliTerm&, const PauliTerm&) = default;
};

inline constexpr double kPauliDropTolerance = 1e-12;

/// c_P = tr(P A) / N over every n-qubit Pauli word; |c_P| < 1e-12 dropped.
/// Words are produced in lexicographic order over "IXYZ".
std::vector<PauliTerm> pauli_decompose(const Eigen::MatrixXcd& a);

std::vector<PauliTerm> pauli_decompose(const Eigen::MatrixXd& a);

Eigen::MatrixXcd pauli_reconstruct(const std::vector<PauliTerm>& terms, unsigned n_qubits);

/// exp(i * tau * sum_P c_P P) by first-order Trotterization over `steps` slices.
/// Each factor exp(i c tau P) = cos(c tau) I + i sin(c tau) P is applied exactly.
Eigen::MatrixXcd trotter_evolution(const std::vector<PauliTerm>& terms, unsigned n_qubits,
                                   double tau, unsigned steps);

} // namespace qhyb::hhl
