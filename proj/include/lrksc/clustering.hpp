#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <random>

#include "lrksc/eval.hpp"
#include "lrksc/kernels.hpp"
#include "lrksc/solver.hpp"

namespace lrksc {

/// Symmetric nonnegative affinity with zero diagonal.
struct AffinityMatrix {
    Matrix W;
};

/// Scale each column of C by its max-abs entry (columns below 1e-12 are
/// left alone), then W = |C| + |C|^T with the diagonal cleared.
inline AffinityMatrix build_affinity(const Matrix& c) {
    if (c.rows() != c.cols()) throw InvalidArgument("build_affinity: C must be square");
    if (!c.allFinite()) throw InvalidArgument("build_affinity: C has non-finite entries");
    Matrix scaled = c.cwiseAbs();
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        const double m = scaled.col(j).maxCoeff();
        if (m >= 1e-12) scaled.col(j) /= m;
    }
    Matrix w = scaled + scaled.transpose();
    w.diagonal().setZero();
    return {std::move(w)};
}

struct KMeansOptions {
    int restarts = 20;
    int max_iter = 300;
};

namespace detail {

struct KMeansRun {
    LabelVector labels;
    double inertia = 0.0;
};

inline Matrix kmeanspp_seed(const Matrix& pts, int k, std::mt19937_64& rng) {
    const Eigen::Index n = pts.rows();
    Matrix centers(k, pts.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = pts.row(pick(rng));
    Vector d2 = (pts.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index chosen = n - 1;
        if (total > 0.0) {
            const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc > target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centers.row(c) = pts.row(chosen);
        d2 = d2.cwiseMin((pts.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

inline KMeansRun kmeans_once(const Matrix& pts, int k, std::uint64_t seed, int max_iter) {
    std::mt19937_64 rng(seed);
    Matrix centers = kmeanspp_seed(pts, k, rng);
    const Eigen::Index n = pts.rows();
    LabelVector labels(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;

    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            const double d = (centers.rowwise() - pts.row(i)).rowwise().squaredNorm().minCoeff(&best);
            inertia += d;
            if (labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
                labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
                changed = true;
            }
        }
        if (!changed) break;
        Matrix sums = Matrix::Zero(k, pts.cols());
        Vector counts = Vector::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int l = labels[static_cast<std::size_t>(i)];
            sums.row(l) += pts.row(i);
            counts(l) += 1.0;
        }
        for (int c = 0; c < k; ++c)
            if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c); // empty: keep center
    }
    return {std::move(labels), inertia};
}

} // namespace detail

/// k-means with k-means++ seeding; restart r uses seed + r and the run with
/// the lowest within-cluster sum of squares wins (earliest on ties).
inline LabelVector kmeans(const Matrix& pts, int k, std::uint64_t seed,
                          const KMeansOptions& opt = {}) {
    if (k < 1 || k > pts.rows()) throw InvalidArgument("kmeans: need 1 <= k <= number of points");
    detail::KMeansRun best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < opt.restarts; ++r) {
        auto run = detail::kmeans_once(pts, k, seed + static_cast<std::uint64_t>(r), opt.max_iter);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return best.labels;
}

/// Normalized spectral clustering: embed with the k eigenvectors of
/// I - D^{-1/2} W D^{-1/2} for the smallest eigenvalues, normalize rows to
/// unit length, then k-means. Isolated vertices get degree 1.
inline LabelVector spectral_clustering(const AffinityMatrix& aff, int k, std::uint64_t seed,
                                       const KMeansOptions& opt = {}) {
    const Matrix& w = aff.W;
    const Eigen::Index n = w.rows();
    if (w.cols() != n) throw InvalidArgument("spectral_clustering: W must be square");
    if (k < 1) throw InvalidArgument("spectral_clustering: k must be >= 1");
    if (k > n) throw InvalidArgument("spectral_clustering: k exceeds the number of points");
    if (k == 1) return LabelVector(static_cast<std::size_t>(n), 0);

    Vector deg = w.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(deg(i) > 0.0)) deg(i) = 1.0;
    const Vector inv_sqrt = deg.cwiseSqrt().cwiseInverse();
    Matrix lap = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
    lap.diagonal().array() += 1.0;
    lap = 0.5 * (lap + lap.transpose());

    const SymEig eig = sym_eig(lap);
    Matrix emb = eig.vectors.rightCols(k); // descending order: smallest are last
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = emb.row(i).norm();
        if (norm > 0.0) emb.row(i) /= norm;
    }
    return kmeans(emb, k, seed, opt);
}

struct PipelineResult {
    LabelVector labels;
    SolveResult result;
    AffinityMatrix affinity;
};

/// gram -> solve -> affinity -> spectral clustering.
inline PipelineResult cluster_pipeline(const Matrix& x, int k, const KernelSpec& kernel,
                                       const SolverConfig& cfg, std::uint64_t seed) {
    if (k < 1 || k > x.cols()) throw InvalidArgument("cluster_pipeline: need 1 <= K <= N");
    const GramMatrix kg = gram(x, kernel);
    SolveResult res = solve(kg, cfg);
    AffinityMatrix aff = build_affinity(res.C);
    LabelVector labels = spectral_clustering(aff, k, seed);
    return {std::move(labels), std::move(res), std::move(aff)};
}

inline void write_affinity_csv(std::ostream& os, const AffinityMatrix& aff) {
    const auto old_prec = os.precision(17);
    for (Eigen::Index i = 0; i < aff.W.rows(); ++i) {
        for (Eigen::Index j = 0; j < aff.W.cols(); ++j) {
            if (j) os << ',';
            os << aff.W(i, j);
        }
        os << '\n';
    }
    os.precision(old_prec);
}

} // namespace lrksc
