#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lrksc/matcore.hpp"

namespace lrksc {

/// Cluster index per point.
using LabelVector = std::vector<int>;

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// method, O(n^3)). Returns row_to_col.
inline std::vector<int> hungarian_assign(const Matrix& cost) {
    if (cost.rows() != cost.cols()) throw InvalidArgument("hungarian_assign: cost must be square");
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; p[j] is the row matched to column j.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

struct ErrorReport {
    double err_percent = 0.0;
    std::vector<std::pair<int, int>> matched_pairs; ///< predicted label -> truth label
    int n_wrong = 0;
};

/// Fraction of points (in percent) misclustered under the label bijection
/// that maximizes agreement. Label values are arbitrary integers; unequal
/// cluster counts are handled by zero-padding the confusion matrix.
inline ErrorReport clustering_error(const LabelVector& pred, const LabelVector& truth) {
    if (pred.size() != truth.size())
        throw InvalidArgument("clustering_error: label vectors differ in length (" +
                              std::to_string(pred.size()) + " vs " +
                              std::to_string(truth.size()) + ")");
    if (pred.empty()) throw InvalidArgument("clustering_error: empty label vectors");

    const auto index_of = [](const LabelVector& labels) {
        std::map<int, int> idx;
        for (int l : labels) idx.emplace(l, 0);
        int k = 0;
        for (auto& [label, i] : idx) i = k++;
        return idx;
    };
    const auto pidx = index_of(pred);
    const auto tidx = index_of(truth);
    const Eigen::Index n = static_cast<Eigen::Index>(std::max(pidx.size(), tidx.size()));

    Matrix confusion = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < pred.size(); ++i)
        confusion(pidx.at(pred[i]), tidx.at(truth[i])) += 1.0;

    const std::vector<int> assign = hungarian_assign(-confusion);

    std::vector<int> pred_labels, truth_labels;
    for (const auto& [l, i] : pidx) pred_labels.push_back(l);
    for (const auto& [l, i] : tidx) truth_labels.push_back(l);

    ErrorReport rep;
    double matched = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const int c = assign[static_cast<std::size_t>(r)];
        matched += confusion(r, c);
        if (r < static_cast<Eigen::Index>(pred_labels.size()) &&
            c < static_cast<int>(truth_labels.size()))
            rep.matched_pairs.emplace_back(pred_labels[static_cast<std::size_t>(r)],
                                           truth_labels[static_cast<std::size_t>(c)]);
    }
    const auto total = static_cast<int>(pred.size());
    rep.n_wrong = total - static_cast<int>(std::lround(matched));
    rep.err_percent = 100.0 * rep.n_wrong / total;
    return rep;
}

/// "Err% = 12.34"
inline std::string format_error_line(const ErrorReport& rep) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "Err%% = %.2f", rep.err_percent);
    return buf;
}

struct MassReport {
    double value = 0.0;
    bool all_zero = false; ///< C was identically zero; value reported as 0
};

/// Share of sum |C[i][j]| that falls on same-cluster pairs.
inline MassReport within_cluster_mass(const Matrix& c, const LabelVector& truth) {
    if (c.rows() != c.cols() || static_cast<std::size_t>(c.rows()) != truth.size())
        throw InvalidArgument("within_cluster_mass: dimension mismatch");
    double same = 0.0, total = 0.0;
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            const double a = std::abs(c(i, j));
            total += a;
            if (truth[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(j)]) same += a;
        }
    }
    if (total == 0.0) return {0.0, true};
    return {same / total, false};
}

} // namespace lrksc
