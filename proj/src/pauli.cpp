#include "qhyb/pauli.hpp"

#include <bit>
#include <complex>
#include <cstdint>

#include "qhyb/error.hpp"

namespace qhyb::hhl {

namespace {

using cplx = std::complex<double>;

// A Pauli word maps |k> to phase(k) |k ^ flip>.
struct WordAction {
    std::uint64_t flip = 0;
    std::uint64_t y_mask = 0;
    std::uint64_t z_mask = 0;

    cplx phase(std::uint64_t k) const {
        // Y|0> = i|1>, Y|1> = -i|0>, Z|1> = -|1>
        const int ys = std::popcount(y_mask);
        const int ones_y = std::popcount(k & y_mask);
        const int ones_z = std::popcount(k & z_mask);
        // i^(ys) * (-1)^(ones_y + ones_z)
        static const cplx powers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        cplx p = powers[ys % 4];
        return ((ones_y + ones_z) % 2) ? -p : p;
    }
};

WordAction action_of(const std::string& word) {
    const auto n = word.size();
    WordAction a;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << (n - 1 - i);
        switch (word[i]) {
        case 'I': break;
        case 'X': a.flip |= bit; break;
        case 'Y': a.flip |= bit; a.y_mask |= bit; break;
        case 'Z': a.z_mask |= bit; break;
        default: throw ValidationError("invalid Pauli letter '" + std::string(1, word[i]) + "'");
        }
    }
    return a;
}

unsigned qubits_for(Eigen::Index dim) {
    if (dim < 2 || (dim & (dim - 1)) != 0)
        throw ValidationError("matrix dimension " + std::to_string(dim) +
                              " is not a power of two >= 2");
    unsigned n = 0;
    while ((Eigen::Index{1} << n) < dim)
        ++n;
    return n;
}

} // namespace

std::vector<PauliTerm> pauli_decompose(const Eigen::MatrixXcd& a) {
    if (a.rows() != a.cols())
        throw ValidationError("Pauli decomposition needs a square matrix");
    const unsigned n = qubits_for(a.rows());
    if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw ValidationError("Pauli decomposition needs a Hermitian matrix");
    const auto dim = static_cast<std::uint64_t>(a.rows());

    std::vector<PauliTerm> terms;
    std::string word(n, 'I');
    const std::uint64_t n_words = std::uint64_t{1} << (2 * n);
    static constexpr char kLetters[4] = {'I', 'X', 'Y', 'Z'};
    for (std::uint64_t w = 0; w < n_words; ++w) {
        for (unsigned i = 0; i < n; ++i)
            word[i] = kLetters[(w >> (2 * (n - 1 - i))) & 3];
        const WordAction act = action_of(word);
        // tr(P A) = sum_k <k ^ flip| P |k> A(k, k ^ flip)
        cplx trace = 0;
        for (std::uint64_t k = 0; k < dim; ++k)
            trace += act.phase(k) * a(static_cast<Eigen::Index>(k),
                                      static_cast<Eigen::Index>(k ^ act.flip));
        const double c = trace.real() / static_cast<double>(dim);
        if (std::abs(c) >= kPauliDropTolerance)
            terms.push_back({c, word});
    }
    return terms;
}

std::vector<PauliTerm> pauli_decompose(const Eigen::MatrixXd& a) {
    return pauli_decompose(Eigen::MatrixXcd(a.cast<cplx>()));
}

namespace {

void check_words(const std::vector<PauliTerm>& terms, unsigned n_qubits) {
    for (const auto& t : terms)
        if (t.word.size() != n_qubits)
            throw ValidationError("Pauli word '" + t.word + "' does not have length " +
                                  std::to_string(n_qubits));
}

} // namespace

Eigen::MatrixXcd pauli_reconstruct(const std::vector<PauliTerm>& terms, unsigned n_qubits) {
    check_words(terms, n_qubits);
    const auto dim = Eigen::Index{1} << n_qubits;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& t : terms) {
        const WordAction act = action_of(t.word);
        for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(dim); ++k)
            m(static_cast<Eigen::Index>(k ^ act.flip), static_cast<Eigen::Index>(k)) +=
                t.coefficient * act.phase(k);
    }
    return m;
}

Eigen::MatrixXcd trotter_evolution(const std::vector<PauliTerm>& terms, unsigned n_qubits,
                                   double tau, unsigned steps) {
    check_words(terms, n_qubits);
    if (steps == 0)
        throw ValidationError("Trotter evolution needs at least one step");
    const auto dim = Eigen::Index{1} << n_qubits;
    const double slice = tau / steps;

    Eigen::MatrixXcd step = Eigen::MatrixXcd::Identity(dim, dim);
    for (const auto& t : terms) {
        const double theta = t.coefficient * slice;
        Eigen::MatrixXcd factor = Eigen::MatrixXcd::Identity(dim, dim) * std::cos(theta) +
                                  cplx(0, std::sin(theta)) * pauli_reconstruct({{1.0, t.word}},
                                                                               n_qubits);
        step = factor * step;
    }
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
    for (unsigned s = 0; s < steps; ++s)
        u = step * u;
    return u;
}

} // namespace qhyb::hhl
