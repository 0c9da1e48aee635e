#include <doctest.h>

#include <map>

#include "qhyb/error.hpp"
#include "qhyb/pauli.hpp"
#include "support.hpp"

using namespace qhyb;
using testing::cplx;
using testing::MatrixXcd;

namespace {

MatrixXcd pauli(char p) {
    MatrixXcd m(2, 2);
    switch (p) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
    }
    return m;
}

/// word[0] is the leftmost Kronecker factor, i.e. the most significant qubit.
MatrixXcd word_matrix(const std::string& word) {
    MatrixXcd out = MatrixXcd::Identity(1, 1);
    for (char c : word) {
        const MatrixXcd p = pauli(c);
        MatrixXcd next(out.rows() * 2, out.cols() * 2);
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j)
                next.block(2 * i, 2 * j, 2, 2) = out(i, j) * p;
        out = next;
    }
    return out;
}

std::map<std::string, double> as_map(const std::vector<hhl::PauliTerm>& terms) {
    std::map<std::string, double> m;
    for (const auto& t : terms)
        m[t.word] = t.coefficient;
    return m;
}

} // namespace

TEST_CASE("single-qubit decompositions") {
    MatrixXcd a(2, 2);
    a << 1.5, 0.5, 0.5, 1.5;
    auto m = as_map(hhl::pauli_decompose(a));
    CHECK(m.size() == 2);
    CHECK(m["I"] == doctest::Approx(1.5));
    CHECK(m["X"] == doctest::Approx(0.5));

    m = as_map(hhl::pauli_decompose(pauli('Y')));
    CHECK(m.size() == 1);
    CHECK(m["Y"] == doctest::Approx(1.0));

    m = as_map(hhl::pauli_decompose(pauli('Z')));
    CHECK(m.size() == 1);
    CHECK(m["Z"] == doctest::Approx(1.0));
}

TEST_CASE("word order follows Kronecker order") {
    const MatrixXcd xz = word_matrix("XZ");
    const auto terms = hhl::pauli_decompose(xz);
    REQUIRE(terms.size() == 1);
    CHECK(terms[0].word == "XZ");
    CHECK(terms[0].coefficient == doctest::Approx(1.0));
    // Z on qubit 0 is diag(1,-1,1,-1)
    const MatrixXcd iz = word_matrix("IZ");
    CHECK(iz(1, 1) == cplx(-1, 0));
    CHECK(iz(2, 2) == cplx(1, 0));
}

TEST_CASE("coefficients match the trace formula on random Hermitian matrices") {
    std::mt19937_64 rng(5);
    for (unsigned n = 1; n <= 3; ++n) {
        const Eigen::Index dim = Eigen::Index{1} << n;
        const MatrixXcd a = testing::random_hermitian(dim, rng);
        const auto terms = hhl::pauli_decompose(a);
        for (const auto& t : terms) {
            const cplx tr = (word_matrix(t.word) * a).trace() / static_cast<double>(dim);
            CHECK(std::abs(tr.real() - t.coefficient) < 1e-12);
            CHECK(std::abs(tr.imag()) < 1e-12);
        }
        CHECK(std::is_sorted(terms.begin(), terms.end(),
                             [](const auto& x, const auto& y) {
                                 auto rank = [](char c) { return std::string("IXYZ").find(c); };
                                 return std::lexicographical_compare(
                                     x.word.begin(), x.word.end(), y.word.begin(), y.word.end(),
                                     [&](char p, char q) { return rank(p) < rank(q); });
                             }));
        CHECK((hhl::pauli_reconstruct(terms, n) - a).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("tiny coefficients are dropped") {
    MatrixXcd a = MatrixXcd::Identity(2, 2);
    a(0, 1) = a(1, 0) = 1e-14;
    const auto terms = hhl::pauli_decompose(a);
    REQUIRE(terms.size() == 1);
    CHECK(terms[0].word == "I");
}

TEST_CASE("decomposition rejects bad input") {
    MatrixXcd a(2, 2);
    a << 1, 2, 0, 1;
    CHECK_THROWS_AS(hhl::pauli_decompose(a), ValidationError);
    CHECK_THROWS_AS(hhl::pauli_decompose(MatrixXcd(MatrixXcd::Identity(3, 3))), ValidationError);
    CHECK_THROWS_AS(hhl::pauli_decompose(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 3))), ValidationError);
}

TEST_CASE("real overload agrees with complex overload") {
    std::mt19937_64 rng(6);
    const auto a = testing::random_spd(4, 5.0, rng);
    CHECK(hhl::pauli_decompose(a) == hhl::pauli_decompose(MatrixXcd(a.cast<cplx>())));
}

TEST_CASE("trotterized evolution converges to the exact exponential") {
    std::mt19937_64 rng(7);
    const MatrixXcd a = testing::random_hermitian(4, rng);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
    const double tau = 0.7;
    const MatrixXcd exact = es.eigenvectors() *
                            (es.eigenvalues().cast<cplx>() * cplx(0, tau)).array().exp().matrix().asDiagonal() *
                            es.eigenvectors().adjoint();
    const auto terms = hhl::pauli_decompose(a);
    const double e10 = (hhl::trotter_evolution(terms, 2, tau, 10) - exact).norm();
    const double e100 = (hhl::trotter_evolution(terms, 2, tau, 100) - exact).norm();
    CHECK(e100 < e10);
    // first order: error shrinks roughly tenfold
    CHECK(e100 < 0.2 * e10);
    CHECK(e100 < 5e-2);

    // commuting terms are exact in one slice
    MatrixXcd d = MatrixXcd::Zero(4, 4);
    d.diagonal() << 1.0, 2.0, 3.0, 5.0;
    Eigen::VectorXcd phases = (d.diagonal() * cplx(0, tau)).array().exp();
    const MatrixXcd exact_d = phases.asDiagonal();
    CHECK((hhl::trotter_evolution(hhl::pauli_decompose(d), 2, tau, 1) - exact_d).norm() < 1e-12);
}
