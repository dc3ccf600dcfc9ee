#pragma once

// Dense numerical primitives used by the ADMM solver: shrinkage, symmetric
// eigendecomposition, PSD square root, SPD solve and the scalar minimizer
// behind the low-rank factor update.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "lrksc/error.hpp"

namespace lrksc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Largest absolute entry (0 for an empty matrix).
template <class Derived>
inline double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Entrywise sign(x) * max(|x| - tau, 0).
template <class Derived>
inline Matrix soft_threshold(const Eigen::MatrixBase<Derived>& x, double tau) {
    if (!(tau >= 0.0))
        throw InvalidArgument("soft_threshold: tau must be nonnegative");
    return x.unaryExpr([tau](double v) {
        const double mag = std::abs(v) - tau;
        if (mag <= 0.0) return 0.0;
        return v > 0.0 ? mag : -mag;
    });
}

/// Eigenpairs of a symmetric matrix, values sorted descending.
struct SymEig {
    Vector values;
    Matrix vectors; ///< column i pairs with values[i]
};

namespace detail {

inline void check_square(const Matrix& m, const char* who) {
    if (m.rows() != m.cols())
        throw InvalidArgument(std::string(who) + ": matrix must be square, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

// Flip each eigenvector so its first non-negligible component is positive.
inline void canonicalize_signs(Matrix& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        auto col = vectors.col(j);
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            if (std::abs(col(i)) > 1e-12) {
                if (col(i) < 0.0) col *= -1.0;
                break;
            }
        }
    }
}

} // namespace detail

/// Symmetric eigendecomposition. The input is symmetrized as (M + M^T)/2;
/// asymmetry beyond 1e-8 * (1 + max|M|) is rejected.
inline SymEig sym_eig(const Matrix& m) {
    detail::check_square(m, "sym_eig");
    const double scale = max_abs(m);
    if (max_abs(m - m.transpose()) > 1e-8 * (1.0 + scale))
        throw InvalidArgument("sym_eig: matrix is not symmetric");
    if (!m.allFinite()) throw NumericalError("sym_eig: matrix has non-finite entries");

    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success)
        throw NumericalError("sym_eig: eigensolver did not converge");

    const Eigen::Index n = m.rows();
    SymEig out{Vector(n), Matrix(n, n)};
    // Eigen returns ascending order.
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = es.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    detail::canonicalize_signs(out.vectors);
    return out;
}

/// Symmetric PSD square root B with B^T B = K. Eigenvalues in
/// [-tol * ||K||_2, 0) are clipped to zero; anything lower throws NotPsdError.
inline Matrix psd_sqrt(const Matrix& k, double tol = 1e-8) {
    const SymEig eig = sym_eig(k);
    const Eigen::Index n = eig.values.size();
    if (n == 0) return Matrix(0, 0);
    const double spectral = eig.values.cwiseAbs().maxCoeff();
    const double lowest = eig.values(n - 1);
    if (lowest < -tol * spectral)
        throw NotPsdError("psd_sqrt: matrix is not positive semi-definite (eigenvalue " +
                              std::to_string(lowest) + ")",
                          lowest);
    const Vector root = eig.values.cwiseMax(0.0).cwiseSqrt();
    Matrix b = eig.vectors * root.asDiagonal() * eig.vectors.transpose();
    return 0.5 * (b + b.transpose());
}

/// Solve M A = R for symmetric positive-definite M via Cholesky with one
/// step of iterative refinement.
inline Matrix spd_solve(const Matrix& m, const Matrix& r) {
    detail::check_square(m, "spd_solve");
    if (r.rows() != m.rows())
        throw InvalidArgument("spd_solve: right-hand side has " + std::to_string(r.rows()) +
                              " rows, expected " + std::to_string(m.rows()));
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
        throw NumericalError("spd_solve: Cholesky factorization failed (matrix singular or indefinite)");
    Matrix a = llt.solve(r);
    a += llt.solve(r - m * a);
    if (!a.allFinite())
        throw NumericalError("spd_solve: solution has non-finite entries (matrix numerically singular)");
    return a;
}

/// Minimizer over gamma >= 0 of f(gamma) = (w/2)(sigma - gamma^2)^2 + gamma.
///
/// Stationary points solve gamma^3 - sigma*gamma + 1/(2w) = 0. Nonnegative
/// roots exist only when the cubic has three real roots, which are taken
/// from the trigonometric form and polished by two Newton steps. The roots
/// and gamma = 0 are compared on f; ties go to the smaller gamma.
inline double depressed_cubic_min(double sigma, double w) {
    if (!(w > 0.0)) throw InvalidArgument("depressed_cubic_min: w must be positive");
    const double q = 0.5 / w;
    const auto f = [&](double g) {
        const double r = sigma - g * g;
        return 0.5 * w * r * r + g;
    };

    double best = 0.0;
    double best_f = f(0.0);
    if (!(sigma > 0.0) || 27.0 * q * q > 4.0 * sigma * sigma * sigma) return best;

    const double m = 2.0 * std::sqrt(sigma / 3.0);
    const double arg = std::clamp(-1.5 * q / sigma * std::sqrt(3.0 / sigma), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    std::array<double, 3> roots{};
    for (int k = 0; k < 3; ++k) {
        double t = m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0);
        for (int it = 0; it < 2; ++it) {
            const double g = t * t * t - sigma * t + q;
            const double dg = 3.0 * t * t - sigma;
            if (dg == 0.0) break;
            const double next = t - g / dg;
            const double g_next = next * next * next - sigma * next + q;
            if (std::abs(g_next) < std::abs(g)) t = next;
        }
        roots[k] = t;
    }
    std::sort(roots.begin(), roots.end());
    for (double t : roots) {
        if (t < 0.0) continue;
        const double ft = f(t);
        if (ft < best_f) {
            best = t;
            best_f = ft;
        }
    }
    return best;
}

} // namespace lrksc
