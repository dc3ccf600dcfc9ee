#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "lrksc/matcore.hpp"

namespace lrksc {

enum class KernelKind { linear, polynomial, rbf };

/// Kernel family and its parameters. `bias`/`degree` apply to polynomial,
/// `gamma` to rbf.
struct KernelSpec {
    KernelKind kind = KernelKind::polynomial;
    double bias = 0.0;
    int degree = 1;
    double gamma = 1.0;

    static KernelSpec linear() { return {KernelKind::linear, 0.0, 1, 1.0}; }
    static KernelSpec polynomial(double bias, int degree) {
        return {KernelKind::polynomial, bias, degree, 1.0};
    }
    static KernelSpec rbf(double gamma) { return {KernelKind::rbf, 0.0, 1, gamma}; }

    void validate() const {
        if (kind == KernelKind::polynomial) {
            if (!(bias >= 0.0) || !std::isfinite(bias))
                throw InvalidArgument("polynomial kernel: bias must be >= 0");
            if (degree < 1) throw InvalidArgument("polynomial kernel: degree must be >= 1");
        } else if (kind == KernelKind::rbf) {
            if (!(gamma > 0.0) || !std::isfinite(gamma))
                throw InvalidArgument("rbf kernel: gamma must be > 0");
        }
    }
};

inline KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "linear") return KernelKind::linear;
    if (name == "poly" || name == "polynomial") return KernelKind::polynomial;
    if (name == "rbf") return KernelKind::rbf;
    throw InvalidArgument("unknown kernel '" + std::string(name) + "'");
}

/// Symmetric N x N kernel matrix.
struct GramMatrix {
    Matrix K;
    Eigen::Index n() const { return K.rows(); }
};

/// K[i][j] = kappa(x_i, x_j) for the columns of `x`. The inner products
/// X^T X are formed once and mapped entrywise; only the upper triangle is
/// evaluated so K is exactly symmetric.
inline GramMatrix gram(const Matrix& x, const KernelSpec& spec) {
    spec.validate();
    if (x.cols() < 2) throw InvalidArgument("gram: need at least 2 points");
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        if (!x.col(j).allFinite())
            throw InvalidData("gram: non-finite entry in column " + std::to_string(j), j);

    const Eigen::Index n = x.cols();
    const Matrix inner = x.transpose() * x;
    Matrix k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            double v = inner(i, j);
            switch (spec.kind) {
            case KernelKind::linear:
                break;
            case KernelKind::polynomial:
                v = std::pow(v + spec.bias, spec.degree);
                break;
            case KernelKind::rbf: {
                const double d2 = std::max(0.0, inner(i, i) + inner(j, j) - 2.0 * v);
                v = std::exp(-spec.gamma * d2);
                break;
            }
            }
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return {std::move(k)};
}

struct PsdReport {
    double min_eigenvalue = 0.0;
    bool is_psd = false;
};

/// PSD diagnostic: is_psd iff the smallest eigenvalue >= -tol * ||K||_2.
inline PsdReport validate_psd(const GramMatrix& g, double tol = 1e-8) {
    const SymEig eig = sym_eig(g.K);
    if (eig.values.size() == 0) return {0.0, true};
    const double lowest = eig.values(eig.values.size() - 1);
    const double spectral = eig.values.cwiseAbs().maxCoeff();
    return {lowest, lowest >= -tol * spectral};
}

} // namespace lrksc
