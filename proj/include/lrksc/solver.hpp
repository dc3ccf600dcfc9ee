#pragma once

// ADMM solvers for adaptive low-rank kernel self-expression.
//
// Plain mode minimizes
//   ||B||_* + l1 ||C||_1 + (l2/2) tr((I - 2A + AA^T) B^T B) + (l3/2) ||K_G - B^T B||_F^2
//   s.t. A = C - diag(C), 1^T A = 1^T
// and robust mode replaces the last term by l3 ||E||_1 with K_G = B^T B + E.
// The feature map itself is never formed; everything goes through B^T B.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "lrksc/kernels.hpp"
#include "lrksc/matcore.hpp"

namespace lrksc {

struct SolverConfig {
    double lambda1 = 1.0;   ///< weight of ||C||_1
    double lambda2 = 12.6;  ///< self-expression weight
    double lambda3 = 1e5;   ///< kernel proximity (plain) or sparse-error weight (robust)
    double rho0 = 1e-8;
    double rho_max = 1e10;
    double eta = 20.0;
    double eps = 1e-6;
    int max_iter = 200;
    bool robust = false;
    bool adaptive = true;   ///< false keeps B at sqrt(K_G)

    void validate() const {
        if (!(lambda1 > 0.0) || !(lambda2 > 0.0) || !(lambda3 > 0.0))
            throw InvalidArgument("solver: lambda1, lambda2, lambda3 must be positive");
        if (!(rho0 > 0.0) || !(rho0 < rho_max))
            throw InvalidArgument("solver: need 0 < rho0 < rho_max");
        if (!(eta > 1.0)) throw InvalidArgument("solver: eta must exceed 1");
        if (!(eps > 0.0)) throw InvalidArgument("solver: eps must be positive");
        if (max_iter < 1) throw InvalidArgument("solver: max_iter must be >= 1");
    }
};

/// ADMM iterates. `BtB` caches B^T B and `b_nuclear` caches ||B||_*; use
/// set_factor() to keep them consistent with B.
struct SolverState {
    Matrix B, C, A, E, Y1, Y3;
    RowVector y2;
    Matrix BtB;
    double b_nuclear = 0.0;
    double rho = 0.0;
    int iter = 0;

    void set_factor(Matrix b, std::optional<double> nuclear = std::nullopt) {
        BtB = b.transpose() * b;
        if (nuclear) {
            b_nuclear = *nuclear;
        } else {
            b_nuclear = b.size() == 0 ? 0.0 : Eigen::BDCSVD<Matrix>(b).singularValues().sum();
        }
        B = std::move(b);
    }
};

struct TraceRecord {
    int iter = 0;
    double objective = 0.0;
    double res_ac = 0.0;      ///< max |A - C + diag(C)|
    double res_affine = 0.0;  ///< max |1^T A - 1^T|
    double res_kernel = std::numeric_limits<double>::quiet_NaN(); ///< robust mode only
    double res_min = 0.0;     ///< min of the Frobenius/2-norm residuals, diagnostic
    double rho = 0.0;         ///< penalty used during this iteration
};

struct SolveResult {
    Matrix C, B, E;
    std::vector<TraceRecord> trace;
    bool converged = false;
    int iterations = 0;
};

namespace detail {

inline Matrix zero_diagonal(Matrix m) {
    m.diagonal().setZero();
    return m;
}

inline void check_kernel(const GramMatrix& kg, const SolverState& s) {
    if (kg.K.rows() != s.C.rows() || kg.K.cols() != s.C.cols())
        throw InvalidArgument("solver: kernel size does not match state");
}

} // namespace detail

/// B = sqrt(K_G), everything else zero, rho = rho0.
inline SolverState init_state(const GramMatrix& kg, const SolverConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = kg.n();
    if (n < 2) throw InvalidArgument("solver: need at least 2 points");

    SolverState s;
    Matrix b = psd_sqrt(kg.K);
    // B is symmetric PSD, so its nuclear norm is its trace.
    const double nuclear = b.trace();
    s.set_factor(std::move(b), nuclear);
    s.C = Matrix::Zero(n, n);
    s.A = Matrix::Zero(n, n);
    s.E = Matrix::Zero(n, n);
    s.Y1 = Matrix::Zero(n, n);
    s.Y3 = Matrix::Zero(n, n);
    s.y2 = RowVector::Zero(n);
    s.rho = cfg.rho0;
    s.iter = 0;
    return s;
}

/// C = J - diag(J) with J = T_{l1/rho}(A + Y1/rho).
inline Matrix update_C(const SolverState& s, const SolverConfig& cfg) {
    if (!(s.rho > 0.0)) throw InvalidArgument("update_C: rho must be positive");
    return detail::zero_diagonal(soft_threshold(s.A + s.Y1 / s.rho, cfg.lambda1 / s.rho));
}

/// Stationary point of the A-subproblem:
/// (l2 B^T B + rho (I + 11^T)) A = l2 B^T B - Y1 - 1 y2 + rho (C - diag(C) + 11^T).
inline Matrix update_A(const SolverState& s, const SolverConfig& cfg) {
    if (!(s.rho > 0.0)) throw InvalidArgument("update_A: rho must be positive");
    const Eigen::Index n = s.C.rows();
    const Matrix ones = Matrix::Ones(n, n);
    Matrix lhs = cfg.lambda2 * s.BtB + s.rho * (Matrix::Identity(n, n) + ones);
    lhs = 0.5 * (lhs + lhs.transpose());
    Matrix rhs = cfg.lambda2 * s.BtB - s.Y1 + s.rho * (detail::zero_diagonal(s.C) + ones);
    rhs.rowwise() -= s.y2;
    return spd_solve(lhs, rhs);
}

/// Target of the B-subproblem, symmetrized.
inline Matrix build_ktilde(const SolverState& s, const SolverConfig& cfg, const GramMatrix& kg) {
    detail::check_kernel(kg, s);
    const Eigen::Index n = s.A.rows();
    const Matrix quad =
        Matrix::Identity(n, n) - 2.0 * s.A.transpose() + s.A * s.A.transpose();
    Matrix kt;
    if (cfg.robust) {
        kt = kg.K - (0.5 * cfg.lambda2 * quad - s.Y3) / s.rho - s.E;
    } else {
        kt = kg.K - (cfg.lambda2 / (2.0 * cfg.lambda3)) * quad;
    }
    return 0.5 * (kt + kt.transpose());
}

struct FactorUpdate {
    Matrix B;
    Vector gamma; ///< singular values of B, paired with descending eigenvalues of K_tilde
};

/// argmin_B ||B||_* + (w/2) ||B^T B - K_tilde||_F^2 as diag(gamma) V^T.
/// Signed eigenvalues are used: directions with d_i <= 0 get gamma_i = 0.
inline FactorUpdate factor_update(const Matrix& k_tilde, double w) {
    if (!(w > 0.0)) throw InvalidArgument("update_B: weight must be positive");
    const SymEig eig = sym_eig(k_tilde);
    Vector gamma(eig.values.size());
    for (Eigen::Index i = 0; i < gamma.size(); ++i)
        gamma(i) = depressed_cubic_min(eig.values(i), w);
    return {gamma.asDiagonal() * eig.vectors.transpose(), std::move(gamma)};
}

inline Matrix update_B(const Matrix& k_tilde, double w) { return factor_update(k_tilde, w).B; }

/// E = T_{l3/rho}(K_G - B^T B + Y3/rho).
inline Matrix update_E(const SolverState& s, const SolverConfig& cfg, const GramMatrix& kg) {
    detail::check_kernel(kg, s);
    if (!(s.rho > 0.0)) throw InvalidArgument("update_E: rho must be positive");
    return soft_threshold(kg.K - s.BtB + s.Y3 / s.rho, cfg.lambda3 / s.rho);
}

/// Dual ascent then rho := min(eta * rho, rho_max).
inline void dual_update(SolverState& s, const SolverConfig& cfg, const GramMatrix& kg) {
    detail::check_kernel(kg, s);
    const Eigen::Index n = s.A.rows();
    s.Y1 += s.rho * (s.A - detail::zero_diagonal(s.C));
    s.y2 += s.rho * (s.A.colwise().sum() - RowVector::Ones(n));
    if (cfg.robust) s.Y3 += s.rho * (kg.K - s.BtB - s.E);
    s.rho = std::min(cfg.eta * s.rho, cfg.rho_max);
}

struct Residuals {
    double ac = 0.0;
    double affine = 0.0;
    double kernel = 0.0;
    double min_form = 0.0;
};

inline Residuals residuals(const SolverState& s, const SolverConfig& cfg, const GramMatrix& kg) {
    const Eigen::Index n = s.A.rows();
    const Matrix diff = s.A - detail::zero_diagonal(s.C);
    const RowVector aff = s.A.colwise().sum() - RowVector::Ones(n);
    Residuals r;
    r.ac = max_abs(diff);
    r.affine = max_abs(aff);
    r.min_form = std::min(diff.norm(), (s.C.colwise().sum() - RowVector::Ones(n)).norm());
    if (cfg.robust) {
        const Matrix ker = kg.K - s.BtB - s.E;
        r.kernel = max_abs(ker);
        r.min_form = std::min(r.min_form, ker.norm());
    }
    return r;
}

/// Objective value at the current iterate (constraint terms evaluated on A).
inline double objective(const SolverState& s, const SolverConfig& cfg, const GramMatrix& kg) {
    const Matrix& k = s.BtB;
    // tr((I - 2A + AA^T) K) for symmetric K
    const double fit = k.trace() - 2.0 * s.A.cwiseProduct(k).sum() +
                       s.A.cwiseProduct(k * s.A).sum();
    double value = s.b_nuclear + cfg.lambda1 * s.C.cwiseAbs().sum() + 0.5 * cfg.lambda2 * fit;
    if (cfg.robust)
        value += cfg.lambda3 * s.E.cwiseAbs().sum();
    else
        value += 0.5 * cfg.lambda3 * (kg.K - k).squaredNorm();
    return value;
}

/// Run the ADMM loop until the max-norm primal residuals all fall below eps
/// or max_iter is reached. Non-convergence is reported, not thrown.
inline SolveResult solve(const GramMatrix& kg, const SolverConfig& cfg) {
    SolverState s = init_state(kg, cfg);
    SolveResult out;
    out.trace.reserve(static_cast<std::size_t>(cfg.max_iter));

    for (int it = 0; it < cfg.max_iter; ++it) {
        s.iter = it;
        const double rho_used = s.rho;

        s.C = update_C(s, cfg);
        s.A = update_A(s, cfg);
        if (cfg.adaptive) {
            const Matrix kt = build_ktilde(s, cfg, kg);
            FactorUpdate fu = factor_update(kt, cfg.robust ? s.rho : cfg.lambda3);
            s.set_factor(std::move(fu.B), fu.gamma.sum());
            if (cfg.robust) s.E = update_E(s, cfg, kg);
        }

        const Residuals r = residuals(s, cfg, kg);
        TraceRecord rec;
        rec.iter = it;
        rec.objective = objective(s, cfg, kg);
        rec.res_ac = r.ac;
        rec.res_affine = r.affine;
        if (cfg.robust) rec.res_kernel = r.kernel;
        rec.res_min = r.min_form;
        rec.rho = rho_used;
        out.trace.push_back(rec);

        dual_update(s, cfg, kg);

        const bool kernel_ok = !(cfg.robust && cfg.adaptive) || r.kernel <= cfg.eps;
        if (r.ac <= cfg.eps && r.affine <= cfg.eps && kernel_ok) {
            out.converged = true;
            break;
        }
    }

    out.iterations = static_cast<int>(out.trace.size());
    out.C = std::move(s.C);
    out.B = std::move(s.B);
    out.E = std::move(s.E);
    return out;
}

/// tr(K - 2KC + C^T K C), i.e. ||phi(X) - phi(X) C||_F^2 for the implicit map.
inline double self_expr_residual(const GramMatrix& kg, const Matrix& c) {
    const Matrix& k = kg.K;
    if (c.rows() != k.rows() || c.cols() != k.cols())
        throw InvalidArgument("self_expr_residual: dimension mismatch");
    return k.trace() - 2.0 * (k * c).trace() + (c.transpose() * k * c).trace();
}

/// CSV header: iter,objective,res_AC,res_affine,res_kernel,rho
/// res_kernel is left blank when it was not computed.
inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
    os << "iter,objective,res_AC,res_affine,res_kernel,rho\n";
    const auto old_prec = os.precision(17);
    for (const auto& r : trace) {
        os << r.iter << ',' << r.objective << ',' << r.res_ac << ',' << r.res_affine << ',';
        if (!std::isnan(r.res_kernel)) os << r.res_kernel;
        os << ',' << r.rho << '\n';
    }
    os.precision(old_prec);
}

} // namespace lrksc
