#pragma once

// Shared fixtures for the test binaries: seeded random matrices, a tokenizer
// for circuit text, and a random circuit generator.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qhyb/qasm.hpp"

namespace testing {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline MatrixXd random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    MatrixXd z(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            z(i, j) = g(rng);
    Eigen::HouseholderQR<MatrixXd> qr(z);
    return qr.householderQ();
}

inline MatrixXcd random_unitary(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    MatrixXcd z(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            z(i, j) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<MatrixXcd> qr(z);
    return qr.householderQ();
}

/// Q diag(lambda) Q^T with eigenvalues spread over [1, kappa], both ends included.
inline MatrixXd random_spd(Eigen::Index n, double kappa, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(1.0, kappa);
    VectorXd lambda(n);
    for (Eigen::Index i = 0; i < n; ++i)
        lambda(i) = u(rng);
    lambda(0) = 1.0;
    lambda(n - 1) = kappa;
    const MatrixXd q = random_orthogonal(n, rng);
    MatrixXd a = q * lambda.asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
}

inline MatrixXcd random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    MatrixXcd z(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            z(i, j) = cplx(g(rng), g(rng));
    return 0.5 * (z + z.adjoint());
}

inline VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = g(rng);
    return v;
}

struct Token {
    std::size_t begin = 0;
    std::size_t length = 0;
};

/// Splits circuit text into tokens: single punctuation characters and maximal
/// runs of anything else. Comments and whitespace are skipped.
inline std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    const std::string punct = ";()[],=";
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '#') {
            while (i < text.size() && text[i] != '\n')
                ++i;
        } else if (punct.find(c) != std::string::npos) {
            out.push_back({i, 1});
            ++i;
        } else {
            const std::size_t start = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
                   punct.find(text[i]) == std::string::npos && text[i] != '#')
                ++i;
            out.push_back({start, i - start});
        }
    }
    return out;
}

/// A random well-formed circuit over every gate kind.
inline qhyb::qasm::Circuit random_circuit(std::mt19937_64& rng) {
    using qhyb::qasm::Instruction;
    using qhyb::statevec::Control;
    using qhyb::statevec::Qubit;
    std::uniform_int_distribution<unsigned> width(1, 6);
    std::uniform_real_distribution<double> angle(-7.0, 7.0);
    qhyb::qasm::Circuit c;
    c.n_qubits = width(rng);
    const unsigned n = c.n_qubits;
    std::uniform_int_distribution<int> count(0, 12);
    const int len = count(rng);

    auto distinct = [&](unsigned k) {
        std::vector<Qubit> all(n);
        for (unsigned q = 0; q < n; ++q)
            all[q] = q;
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(k);
        return all;
    };
    auto pick = [&](unsigned lo, unsigned hi) {
        return std::uniform_int_distribution<unsigned>(lo, hi)(rng);
    };

    for (int i = 0; i < len; ++i) {
        const unsigned kind = n >= 2 ? pick(0, 10) : pick(0, 5);
        switch (kind) {
        case 0: c.instructions.push_back(Instruction::h(distinct(1)[0])); break;
        case 1: c.instructions.push_back(Instruction::x(distinct(1)[0])); break;
        case 2: c.instructions.push_back(Instruction::rx(angle(rng), distinct(1)[0])); break;
        case 3: c.instructions.push_back(Instruction::ry(angle(rng), distinct(1)[0])); break;
        case 4: c.instructions.push_back(Instruction::rz(angle(rng), distinct(1)[0])); break;
        case 5: {
            const unsigned k = pick(1, std::min(n, 3u));
            c.instructions.push_back(
                Instruction::unitary(random_unitary(Eigen::Index{1} << k, rng), distinct(k)));
            break;
        }
        case 6: {
            auto q = distinct(2);
            c.instructions.push_back(Instruction::cx(q[0], q[1]));
            break;
        }
        case 7: {
            auto q = distinct(2);
            c.instructions.push_back(Instruction::cry(angle(rng), q[0], q[1]));
            break;
        }
        case 8: {
            auto q = distinct(2);
            c.instructions.push_back(Instruction::swap(q[0], q[1]));
            break;
        }
        case 9: {
            const unsigned k = pick(1, n - 1);
            auto q = distinct(k + 1);
            std::vector<Control> ctrls;
            for (unsigned j = 0; j < k; ++j)
                ctrls.push_back({q[j], pick(0, 1)});
            c.instructions.push_back(Instruction::mcry(angle(rng), ctrls, q[k]));
            break;
        }
        default: {
            const unsigned t = pick(1, std::min(n - 1, 2u));
            const unsigned k = pick(1, n - t);
            auto q = distinct(k + t);
            std::vector<Control> ctrls;
            for (unsigned j = 0; j < k; ++j)
                ctrls.push_back({q[j], pick(0, 1)});
            std::vector<Qubit> targets(q.begin() + k, q.end());
            c.instructions.push_back(Instruction::cunitary(
                random_unitary(Eigen::Index{1} << t, rng), ctrls, targets));
            break;
        }
        }
    }
    return c;
}

} // namespace testing
