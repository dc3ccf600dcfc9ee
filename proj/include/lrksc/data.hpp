#pragma once

// Data ingestion and generation: delimited matrix files, label files,
// sequence directories, synthetic unions of subspaces/curves, and the
// two-frame epipolar embedding.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lrksc/eval.hpp"
#include "lrksc/matcore.hpp"

namespace lrksc {

enum class MatrixFormat { csv, tsv };

/// csv unless the extension is .tsv/.tab.
inline MatrixFormat format_for_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".tsv" || ext == ".tab") ? MatrixFormat::tsv : MatrixFormat::csv;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view tok, double& out) {
    tok = trim(tok);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return false;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

} // namespace detail

/// Row-major delimited text, no header; blank lines are skipped.
/// Row i, column j of the file becomes X(i, j).
inline Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const char delim = format == MatrixFormat::csv ? ',' : '\t';

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = detail::trim(line);
        if (body.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const auto pos = body.find(delim, start);
            const auto tok = body.substr(start, pos == std::string_view::npos ? pos : pos - start);
            double v = 0.0;
            if (!detail::parse_double(tok, v))
                throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                     ": not a number: '" + std::string(detail::trim(tok)) + "'",
                                 lineno);
            row.push_back(v);
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                 std::to_string(rows.front().size()) + " fields, found " +
                                 std::to_string(row.size()),
                             lineno);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path.string() + ": empty matrix file", lineno);

    Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return x;
}

inline void save_matrix(const std::filesystem::path& path, const Matrix& x, MatrixFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    const char delim = format == MatrixFormat::csv ? ',' : '\t';
    out.precision(17);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (j) out << delim;
            out << x(i, j);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline void save_labels(const std::filesystem::path& path, const LabelVector& labels) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out << '\n';
        out << labels[i];
    }
    if (!out) throw IoError("write failed: " + path.string());
}

/// One nonnegative base-10 integer per line; blank lines are skipped.
inline LabelVector load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    LabelVector labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view tok = detail::trim(line);
        if (tok.empty()) continue;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 0)
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                 ": expected a nonnegative integer label, got '" +
                                 std::string(tok) + "'",
                             lineno);
        labels.push_back(v);
    }
    return labels;
}

/// Divide by the largest absolute entry; an all-zero matrix is returned as is.
inline Matrix normalize_unit_range(const Matrix& x) {
    const double m = max_abs(x);
    if (m == 0.0) return x;
    return x / m;
}

/// Append a row of ones (affine constraint expressed as a linear one).
inline Matrix append_affine_row(const Matrix& x) {
    Matrix out(x.rows() + 1, x.cols());
    out.topRows(x.rows()) = x;
    out.row(x.rows()).setOnes();
    return out;
}

enum class SynthMode { linear, quad_curve };

struct SynthSpec {
    SynthMode mode = SynthMode::linear;
    int k = 3;        ///< number of clusters
    int d = 4;        ///< subspace dimension (linear mode)
    int ambient = 30; ///< D
    int n = 50;       ///< points per cluster
    double noise_sigma = 0.0;
    double corruption_frac = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 1 || n < 1) throw InvalidArgument("synth: k and n must be >= 1");
        if (k * n < 2) throw InvalidArgument("synth: need at least 2 points in total");
        if (mode == SynthMode::linear && (d < 1 || d >= ambient))
            throw InvalidArgument("synth: linear mode needs 1 <= d < ambient");
        if (mode == SynthMode::quad_curve && ambient < 2)
            throw InvalidArgument("synth: quad_curve mode needs ambient >= 2");
        if (!(noise_sigma >= 0.0)) throw InvalidArgument("synth: noise must be >= 0");
        if (!(corruption_frac >= 0.0 && corruption_frac <= 1.0))
            throw InvalidArgument("synth: corruption fraction must lie in [0, 1]");
    }
};

struct LabeledData {
    Matrix X;
    LabelVector truth;
};

namespace detail {

inline Matrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

} // namespace detail

/// Clusters are emitted in order: points [c*n, (c+1)*n) carry label c.
inline LabeledData synth(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const Eigen::Index dim = spec.ambient;
    const Eigen::Index total = static_cast<Eigen::Index>(spec.k) * spec.n;
    LabeledData out{Matrix(dim, total), LabelVector(static_cast<std::size_t>(total))};

    Eigen::Index col = 0;
    for (int c = 0; c < spec.k; ++c) {
        if (spec.mode == SynthMode::linear) {
            const Matrix basis = detail::random_orthonormal(dim, spec.d, rng);
            for (int p = 0; p < spec.n; ++p, ++col) {
                Vector z(spec.d);
                for (int i = 0; i < spec.d; ++i) z(i) = unit(rng);
                out.X.col(col) = basis * z;
                out.truth[static_cast<std::size_t>(col)] = c;
            }
        } else {
            const Matrix uv = detail::random_orthonormal(dim, 2, rng);
            for (int p = 0; p < spec.n; ++p, ++col) {
                const double t = unit(rng);
                out.X.col(col) = uv.col(0) * t + uv.col(1) * (t * t);
                out.truth[static_cast<std::size_t>(col)] = c;
            }
        }
    }

    if (spec.noise_sigma > 0.0)
        for (Eigen::Index j = 0; j < total; ++j)
            for (Eigen::Index i = 0; i < dim; ++i) out.X(i, j) += spec.noise_sigma * gauss(rng);

    const Eigen::Index entries = dim * total;
    const auto n_corrupt =
        static_cast<Eigen::Index>(std::llround(spec.corruption_frac * static_cast<double>(entries)));
    if (n_corrupt > 0) {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(entries));
        for (Eigen::Index i = 0; i < entries; ++i) idx[static_cast<std::size_t>(i)] = i;
        std::uniform_real_distribution<double> gross(-5.0, 5.0);
        for (Eigen::Index i = 0; i < n_corrupt; ++i) {
            std::uniform_int_distribution<Eigen::Index> pick(i, entries - 1);
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
            out.X(idx[static_cast<std::size_t>(i)]) = gross(rng);
        }
    }
    return out;
}

/// Stack vec(x' x^T) (column-major, x and x' homogenized) `replicate` times
/// per correspondence: output is (9 * replicate) x N.
inline Matrix epipolar_embed(const Matrix& first, const Matrix& second, int replicate = 30) {
    if (first.rows() != 2 || second.rows() != 2)
        throw InvalidArgument("epipolar_embed: point matrices must be 2 x N");
    if (first.cols() != second.cols())
        throw InvalidArgument("epipolar_embed: frames have different point counts");
    if (replicate < 1) throw InvalidArgument("epipolar_embed: replicate must be >= 1");

    const Eigen::Index n = first.cols();
    Matrix out(9 * static_cast<Eigen::Index>(replicate), n);
    for (Eigen::Index p = 0; p < n; ++p) {
        const Eigen::Vector3d x(first(0, p), first(1, p), 1.0);
        const Eigen::Vector3d xp(second(0, p), second(1, p), 1.0);
        const Eigen::Matrix3d outer = xp * x.transpose();
        const Eigen::Map<const Eigen::Matrix<double, 9, 1>> v(outer.data()); // column-major
        for (int r = 0; r < replicate; ++r) out.block<9, 1>(9 * r, p) = v;
    }
    return out;
}

/// A benchmark sequence: <dir>/data.csv and <dir>/truth.txt.
struct Sequence {
    std::string name;
    LabeledData data;
};

inline Sequence load_sequence(const std::filesystem::path& dir) {
    Sequence seq{dir.filename().string(),
                 {load_matrix(dir / "data.csv", MatrixFormat::csv), load_labels(dir / "truth.txt")}};
    if (static_cast<std::size_t>(seq.data.X.cols()) != seq.data.truth.size())
        throw InvalidArgument("sequence " + seq.name + ": data has " +
                              std::to_string(seq.data.X.cols()) + " points but truth has " +
                              std::to_string(seq.data.truth.size()) + " labels");
    return seq;
}

/// Child directories holding a data.csv, sorted by name.
inline std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& parent) {
    std::vector<std::filesystem::path> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(parent, ec))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "data.csv"))
            out.push_back(entry.path());
    if (ec) throw IoError("cannot list " + parent.string() + ": " + ec.message());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace lrksc
