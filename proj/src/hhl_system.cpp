#include "qhyb/hhl.hpp"

#include <cmath>
#include <numbers>

namespace qhyb::hhl {

namespace {

constexpr double kHermitianTolerance = 1e-10;
constexpr double kSingularRatio = 1e-8;
constexpr double kConvergedResidual = 1e-10;

bool is_hermitian(const MatrixXcd& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= kHermitianTolerance;
}

Eigen::Index next_power_of_two(Eigen::Index n) {
    Eigen::Index p = 2;
    while (p < n)
        p *= 2;
    return p;
}

unsigned log2_exact(Eigen::Index n) {
    unsigned k = 0;
    while ((Eigen::Index{1} << k) < n)
        ++k;
    return k;
}

VectorXcd start_vector(Eigen::Index n) {
    // deterministic, with no exact orthogonality to structured eigenvectors
    VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = 1.0 + 0.1 * std::sin(1.0 + 0.7 * static_cast<double>(i));
    return v.normalized();
}

struct RayleighEstimate {
    double value;
    double residual;
};

template <class Apply>
RayleighEstimate iterate(const MatrixXcd& a, Apply next) {
    VectorXcd v = start_vector(a.rows());
    double rho = 0.0, residual = 0.0;
    for (int it = 0; it < kSpectralIterations; ++it) {
        const VectorXcd av = a * v;
        rho = v.dot(av).real();
        residual = (av - rho * v).norm();
        if (residual <= kConvergedResidual * std::abs(rho))
            break;
        VectorXcd w = next(v, av);
        const double wn = w.norm();
        if (!(wn > 0.0) || !std::isfinite(wn))
            throw NumericError("spectral iteration broke down");
        v = w / wn;
    }
    return {rho, residual};
}

} // namespace

std::pair<MatrixXcd, VectorXcd> hermitian_dilation(const MatrixXcd& a, const VectorXcd& b) {
    if (a.rows() != a.cols())
        throw ValidationError("dilation needs a square matrix");
    if (b.size() != a.rows())
        throw ValidationError("right-hand side length does not match the matrix");
    const Eigen::Index n = a.rows();
    MatrixXcd d = MatrixXcd::Zero(2 * n, 2 * n);
    d.topRightCorner(n, n) = a;
    d.bottomLeftCorner(n, n) = a.adjoint();
    VectorXcd padded = VectorXcd::Zero(2 * n);
    padded.head(n) = b;
    return {std::move(d), std::move(padded)};
}

SpectralBounds estimate_spectrum(const MatrixXcd& a) {
    const Eigen::Index n = a.rows();
    double lower = std::numeric_limits<double>::infinity();
    double upper = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double centre = a(i, i).real();
        const double radius = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
        lower = std::min(lower, centre - radius);
        upper = std::max(upper, centre + radius);
    }

    const Eigen::LLT<MatrixXcd> llt(a);
    if (llt.info() != Eigen::Success)
        throw ConditioningError("matrix is not positive definite");

    const auto top = iterate(a, [](const VectorXcd&, const VectorXcd& av) { return av; });
    const auto bottom =
        iterate(a, [&llt](const VectorXcd& v, const VectorXcd&) { return llt.solve(v); });

    const bool top_converged = top.residual <= kConvergedResidual * std::abs(top.value);
    const bool bottom_converged = bottom.residual <= kConvergedResidual * std::abs(bottom.value);

    SpectralBounds bounds;
    bounds.lambda_max = top_converged ? std::min(upper, top.value + top.residual) : upper;
    if (bottom_converged || lower <= 0.0)
        bounds.lambda_min = std::max(lower, bottom.value - bottom.residual);
    else
        bounds.lambda_min = lower;

    if (!(bounds.lambda_max > 0.0) || !(bounds.lambda_min >= kSingularRatio * bounds.lambda_max))
        throw ConditioningError("matrix is singular to tolerance (lambda_min estimate " +
                                std::to_string(bounds.lambda_min) + ", lambda_max estimate " +
                                std::to_string(bounds.lambda_max) + ")");
    return bounds;
}

PreparedOperator prepare_operator(const MatrixXcd& a_raw) {
    if (a_raw.rows() != a_raw.cols() || a_raw.rows() == 0)
        throw ValidationError("system matrix must be square and non-empty");
    if (!a_raw.allFinite())
        throw ValidationError("system matrix has non-finite entries");

    PreparedOperator op;
    op.embedding.original_dim = a_raw.rows();
    MatrixXcd h;
    if (is_hermitian(a_raw)) {
        h = a_raw;
    } else {
        op.embedding.dilated = true;
        h = hermitian_dilation(a_raw, VectorXcd::Zero(a_raw.rows())).first;
    }
    const Eigen::Index dim = next_power_of_two(h.rows());
    op.matrix = MatrixXcd::Identity(dim, dim);
    op.matrix.topLeftCorner(h.rows(), h.cols()) = h;
    op.n_state = log2_exact(dim);
    op.bounds = estimate_spectrum(op.matrix);
    op.condition_number = op.bounds.lambda_max / op.bounds.lambda_min;
    return op;
}

VectorXcd embed_rhs(const PreparedOperator& op, const VectorXcd& b_raw) {
    if (b_raw.size() != op.embedding.original_dim)
        throw ValidationError("right-hand side has length " + std::to_string(b_raw.size()) +
                              ", expected " + std::to_string(op.embedding.original_dim));
    if (!b_raw.allFinite())
        throw ValidationError("right-hand side has non-finite entries");
    if (b_raw.norm() == 0.0)
        throw ValidationError("right-hand side is zero");
    VectorXcd rhs = VectorXcd::Zero(op.dimension());
    rhs.head(b_raw.size()) = b_raw;
    return rhs;
}

VectorXcd unembed_solution(const Embedding& embedding, const VectorXcd& x) {
    const Eigen::Index n = embedding.original_dim;
    // [[0, A], [A^dagger, 0]] (y, z) = (b, 0)  =>  A z = b
    return embedding.dilated ? VectorXcd(x.segment(n, n)) : VectorXcd(x.head(n));
}

LinearSystem prepare_system(const MatrixXcd& a_raw, const VectorXcd& b_raw) {
    if (b_raw.size() != a_raw.rows())
        throw ValidationError("right-hand side length does not match the matrix");
    if (b_raw.norm() == 0.0)
        throw ValidationError("right-hand side is zero");
    LinearSystem system;
    system.op = prepare_operator(a_raw);
    system.rhs = embed_rhs(system.op, b_raw);
    return system;
}

double clock_eigenvalue(BasisIndex v, unsigned m_clock, double t) {
    return 2.0 * std::numbers::pi * static_cast<double>(v) /
           (static_cast<double>(BasisIndex{1} << m_clock) * t);
}

void check_calibration(const SpectralBounds& bounds, unsigned m_clock, const Calibration& cal) {
    if (m_clock < kMinClockQubits || m_clock > kMaxClockQubits)
        throw ValidationError("clock register size must be in " +
                              std::to_string(kMinClockQubits) + ".." +
                              std::to_string(kMaxClockQubits));
    if (!(cal.t > 0.0) || !std::isfinite(cal.t))
        throw ValidationError("evolution time must be positive");
    if (!(cal.t * bounds.lambda_max < 2.0 * std::numbers::pi))
        throw ValidationError("evolution time puts the largest eigenvalue at or beyond a full "
                              "phase turn (t * lambda_max >= 2 pi)");
    // relative slack absorbs rounding in the lambda_min estimate
    if (!(cal.c > 0.0) || cal.c > bounds.lambda_min * (1.0 + 1e-9))
        throw ConditioningError("clock register of " + std::to_string(m_clock) +
                                " qubits cannot resolve lambda_min: rotation constant " +
                                std::to_string(cal.c) + " exceeds lambda_min estimate " +
                                std::to_string(bounds.lambda_min));
}

Calibration calibrate_with_time(const SpectralBounds& bounds, unsigned m_clock, double t) {
    Calibration cal;
    cal.t = t;
    cal.c = clock_eigenvalue(1, m_clock, t);
    check_calibration(bounds, m_clock, cal);
    return cal;
}

Calibration calibrate(const SpectralBounds& bounds, unsigned m_clock) {
    if (m_clock < kMinClockQubits || m_clock > kMaxClockQubits)
        throw ValidationError("clock register size must be in " +
                              std::to_string(kMinClockQubits) + ".." +
                              std::to_string(kMaxClockQubits));
    const double turns = 1.0 - std::ldexp(1.0, -static_cast<int>(m_clock));
    return calibrate_with_time(bounds, m_clock, 2.0 * std::numbers::pi * turns / bounds.lambda_max);
}

} // namespace qhyb::hhl
