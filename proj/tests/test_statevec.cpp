#include <doctest.h>

#include "qhyb/error.hpp"
#include "qhyb/statevec.hpp"
#include "support.hpp"

namespace sv = qhyb::statevec;
using testing::cplx;
using testing::MatrixXcd;
using testing::VectorXcd;

namespace {

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
    MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

MatrixXcd eye(Eigen::Index n) { return MatrixXcd::Identity(n, n); }

/// Single-qubit gate on qubit q of an n-qubit register, by Kronecker products.
MatrixXcd lift(const MatrixXcd& g, unsigned q, unsigned n) {
    return kron(kron(eye(Eigen::Index{1} << (n - 1 - q)), g), eye(Eigen::Index{1} << q));
}

sv::StateVector<double> random_state(unsigned n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    VectorXcd v(Eigen::Index{1} << n);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = cplx(g(rng), g(rng));
    return sv::StateVector<double>(v / v.norm());
}

} // namespace

TEST_CASE("zero state and register cap") {
    auto s = sv::new_zero_state(3);
    CHECK(s.n_qubits() == 3);
    CHECK(s.size() == 8);
    CHECK(s[0] == cplx(1, 0));
    CHECK(s.norm_squared() == doctest::Approx(1.0));
    CHECK_THROWS_AS(sv::new_zero_state(0), qhyb::ValidationError);
    try {
        sv::new_zero_state(25, 24);
        FAIL("expected a resource limit error");
    } catch (const qhyb::ResourceLimitError& e) {
        CHECK(std::string(e.what()).find("24") != std::string::npos);
    }
}

TEST_CASE("qubit 0 is the least significant bit") {
    auto s = sv::new_zero_state(2);
    const sv::Qubit one[] = {1};
    sv::apply_unitary(s, sv::gates::x(), one);
    CHECK(std::abs(s[2] - cplx(1, 0)) < 1e-15);
    const sv::Qubit zero[] = {0};
    sv::apply_unitary(s, sv::gates::x(), zero);
    CHECK(std::abs(s[3] - cplx(1, 0)) < 1e-15);
}

TEST_CASE("hadamard on one qubit") {
    auto s = sv::new_zero_state(1);
    const sv::Qubit q[] = {0};
    sv::apply_unitary(s, sv::gates::h(), q);
    CHECK(s[0].real() == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(s[1].real() == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("single-qubit gates agree with Kronecker lifting") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const unsigned n = 1 + trial % 5;
        const unsigned q = static_cast<unsigned>(rng() % n);
        auto s = random_state(n, rng);
        const VectorXcd before = s.amplitudes();
        const MatrixXcd g = testing::random_unitary(2, rng);
        const sv::Qubit t[] = {q};
        sv::apply_unitary(s, g, t);
        const VectorXcd expected = lift(g, q, n) * before;
        CHECK((s.amplitudes() - expected).norm() < 1e-12);
    }
}

TEST_CASE("two-target gate on qubits {0,1} is the plain matrix product") {
    std::mt19937_64 rng(12);
    auto s = random_state(2, rng);
    const VectorXcd before = s.amplitudes();
    const MatrixXcd g = testing::random_unitary(4, rng);
    const sv::Qubit t[] = {0, 1};
    sv::apply_unitary(s, g, t);
    CHECK((s.amplitudes() - g * before).norm() < 1e-12);
}

TEST_CASE("swapping target order conjugates by SWAP") {
    std::mt19937_64 rng(13);
    auto a = random_state(3, rng);
    auto b = a;
    const MatrixXcd g = testing::random_unitary(4, rng);
    const MatrixXcd sw = sv::gates::swap();
    const sv::Qubit t01[] = {0, 2};
    const sv::Qubit t10[] = {2, 0};
    sv::apply_unitary(a, g, t01);
    sv::apply_unitary(b, MatrixXcd(sw * g * sw), t10);
    CHECK((a.amplitudes() - b.amplitudes()).norm() < 1e-12);
}

TEST_CASE("controlled gate equals projector sum") {
    std::mt19937_64 rng(14);
    const unsigned n = 3;
    for (unsigned value = 0; value < 2; ++value) {
        auto s = random_state(n, rng);
        const VectorXcd before = s.amplitudes();
        const MatrixXcd g = testing::random_unitary(2, rng);
        // control qubit 2 == value, target qubit 0
        MatrixXcd p1 = MatrixXcd::Zero(2, 2);
        p1(value, value) = 1;
        const MatrixXcd p0 = eye(2) - p1;
        const MatrixXcd full = kron(kron(p0, eye(2)), eye(2)) + kron(kron(p1, eye(2)), g);
        const sv::Control c[] = {{2, value}};
        const sv::Qubit t[] = {0};
        sv::apply_controlled(s, g, c, t);
        CHECK((s.amplitudes() - full * before).norm() < 1e-12);
    }
}

TEST_CASE("gate validation") {
    auto s = sv::new_zero_state(2);
    const MatrixXcd h = sv::gates::h();
    const sv::Qubit out_of_range[] = {2};
    CHECK_THROWS_AS(sv::apply_unitary(s, h, out_of_range), qhyb::ValidationError);
    const sv::Qubit dup[] = {0, 0};
    CHECK_THROWS_AS(sv::apply_unitary(s, MatrixXcd(sv::gates::swap()), dup), qhyb::ValidationError);
    const sv::Qubit t[] = {0};
    const sv::Control same[] = {{0, 1}};
    CHECK_THROWS_AS(sv::apply_controlled(s, h, same, t), qhyb::ValidationError);
    const sv::Control bad_value[] = {{1, 2}};
    CHECK_THROWS_AS(sv::apply_controlled(s, h, bad_value, t), qhyb::ValidationError);
    MatrixXcd not_unitary = h;
    not_unitary(0, 0) = 2.0;
    CHECK_THROWS_AS(sv::apply_unitary(s, not_unitary, t), qhyb::ValidationError);
    const sv::Qubit two[] = {0, 1};
    CHECK_THROWS_AS(sv::apply_unitary(s, h, two), qhyb::ValidationError);
    sv::Options lax;
    lax.check_unitary = false;
    CHECK_NOTHROW(sv::apply_unitary(s, not_unitary, t, lax));
}

TEST_CASE("post-selection renormalizes and reports the probability") {
    auto s = sv::new_zero_state(2);
    const sv::Qubit t0[] = {0};
    sv::apply_unitary(s, sv::gates::ry(2 * std::asin(std::sqrt(0.3))), t0);
    const double p = sv::postselect(s, 0, 1);
    CHECK(p == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(std::abs(s[1]) == doctest::Approx(1.0));
    CHECK(std::abs(s[0]) == 0.0);
    CHECK(s.norm_squared() == doctest::Approx(1.0));

    auto z = sv::new_zero_state(2);
    try {
        sv::postselect(z, 1, 1);
        FAIL("expected degenerate post-selection");
    } catch (const qhyb::DegeneratePostselectionError& e) {
        CHECK(e.probability() == 0.0);
    }
    CHECK_THROWS_AS(sv::postselect(z, 5, 1), qhyb::ValidationError);
}

TEST_CASE("amplitude extraction keeps request order") {
    std::mt19937_64 rng(15);
    auto s = random_state(3, rng);
    const sv::BasisIndex idx[] = {5, 1, 7};
    const auto amps = sv::extract_amplitudes(s, std::span<const sv::BasisIndex>(idx));
    REQUIRE(amps.size() == 3);
    CHECK(amps[0] == s[5]);
    CHECK(amps[1] == s[1]);
    CHECK(amps[2] == s[7]);
    CHECK(sv::extract_amplitudes(s, std::span<const sv::BasisIndex>()).size() == 8);
    const sv::BasisIndex bad[] = {8};
    CHECK_THROWS_AS(sv::extract_amplitudes(s, std::span<const sv::BasisIndex>(bad)),
                    qhyb::ValidationError);
}

TEST_CASE("single precision instantiation") {
    auto s = sv::new_zero_state<float>(2);
    const sv::Qubit t[] = {1};
    sv::apply_unitary(s, sv::gates::h<float>(), t);
    CHECK(std::abs(s[2]) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("rotation gates at known angles") {
    const MatrixXcd ry = sv::gates::ry(M_PI);
    CHECK(std::abs(ry(1, 0) - cplx(1, 0)) < 1e-15);
    CHECK(std::abs(ry(0, 1) - cplx(-1, 0)) < 1e-15);
    const MatrixXcd rx = sv::gates::rx(M_PI);
    CHECK(std::abs(rx(0, 1) - cplx(0, -1)) < 1e-15);
    const MatrixXcd rz = sv::gates::rz(M_PI);
    CHECK(std::abs(rz(0, 0) - cplx(0, -1)) < 1e-15);
    const MatrixXcd ph = sv::gates::phase(M_PI / 2);
    CHECK(std::abs(ph(1, 1) - cplx(0, 1)) < 1e-15);
}
