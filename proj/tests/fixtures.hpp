#pragma once

// Synthetic inputs shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace fixture {

using Matrix = Eigen::MatrixXd;

struct BlockAffinity {
    Matrix W;
    std::vector<int> blocks; ///< block id of each vertex after permutation
};

/// Dense positive blocks with zero cross-block weight, rows/columns shuffled.
inline BlockAffinity permuted_blocks(const std::vector<int>& sizes, std::mt19937_64& rng) {
    std::vector<int> ids;
    for (std::size_t b = 0; b < sizes.size(); ++b) ids.insert(ids.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b));
    const auto n = static_cast<Eigen::Index>(ids.size());
    std::uniform_real_distribution<double> u(0.2, 1.0);
    Matrix w = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (ids[static_cast<std::size_t>(i)] == ids[static_cast<std::size_t>(j)]) w(i, j) = w(j, i) = u(rng);

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    BlockAffinity out{Matrix(n, n), std::vector<int>(static_cast<std::size_t>(n))};
    for (Eigen::Index i = 0; i < n; ++i) {
        out.blocks[static_cast<std::size_t>(i)] = ids[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        for (Eigen::Index j = 0; j < n; ++j) out.W(i, j) = w(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return out;
}

struct TwoViews {
    Matrix first, second; ///< 2 x N image points
    Eigen::Matrix3d F;    ///< second^T F first = 0 in homogeneous coordinates
};

/// Random scene seen by [I|0] and [R|t]; F = [t]_x R.
inline TwoViews two_view_correspondences(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> depth(4.0, 8.0);
    const Eigen::Vector3d axis = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.3, axis).toRotationMatrix();
    const Eigen::Vector3d t(1.0, 0.2 * g(rng), 0.2 * g(rng));
    Eigen::Matrix3d tx;
    tx << 0.0, -t.z(), t.y(), t.z(), 0.0, -t.x(), -t.y(), t.x(), 0.0;

    TwoViews out{Matrix(2, n), Matrix(2, n), tx * r};
    for (int p = 0; p < n; ++p) {
        const Eigen::Vector3d x(g(rng), g(rng), depth(rng));
        const Eigen::Vector3d y = r * x + t;
        out.first.col(p) = x.head<2>() / x.z();
        out.second.col(p) = y.head<2>() / y.z();
    }
    return out;
}

} // namespace fixture
