#pragma once

// Command-line front end: synth, cluster, eval, bench.
// Exit codes: 0 success, 1 runtime/numerical/I-O failure, 2 usage error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lrksc/clustering.hpp"
#include "lrksc/data.hpp"
#include "lrksc/eval.hpp"
#include "lrksc/kernels.hpp"
#include "lrksc/solver.hpp"

namespace lrksc::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Thrown for bad flags or config contents; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything a cluster run needs besides the data.
struct RunConfig {
    SolverConfig solver;
    KernelSpec kernel = KernelSpec::polynomial(2.2, 3);
    int k = 0; ///< 0 = take from the truth labels (bench only)
    std::uint64_t seed = 0;
    bool affine = false;
    bool normalize = false;
    int epipolar_replicate = 0; ///< > 0: input rows are x, y, x', y'
};

/// Parameter sets used for the published benchmarks.
inline RunConfig preset(const std::string& name) {
    RunConfig rc;
    if (name == "hopkins") {
        rc.kernel = KernelSpec::polynomial(2.2, 3);
        rc.solver.lambda1 = 1.0;
        rc.solver.lambda2 = 12.6;
        rc.solver.lambda3 = 1e5;
        rc.affine = true;
    } else if (name == "two-frame") {
        rc.kernel = KernelSpec::polynomial(2.0, 2);
        rc.solver.lambda1 = 0.23;
        rc.solver.lambda2 = 5.5;
        rc.solver.lambda3 = 1e5;
        rc.epipolar_replicate = 30;
    } else if (name == "yaleb" || name == "orl" || name == "coil") {
        rc.kernel = KernelSpec::polynomial(12.0, 2);
        rc.solver.robust = true;
        rc.solver.lambda1 = name == "yaleb" ? 1.1e3 : name == "orl" ? 1e3 : 1.4e3;
        rc.solver.lambda2 = name == "yaleb" ? 2e-2 : 6e-2;
        rc.solver.lambda3 = 1e5;
        rc.normalize = true;
    } else {
        throw UsageError("unknown preset '" + name + "' (hopkins, two-frame, yaleb, orl, coil)");
    }
    return rc;
}

/// Epipolar embedding, then [-1, 1] scaling, then the all-ones row.
inline Matrix prepare_data(const Matrix& x, const RunConfig& rc) {
    Matrix out = x;
    if (rc.epipolar_replicate > 0) {
        if (out.rows() != 4)
            throw InvalidArgument("epipolar input must have 4 rows (x, y, x', y'), got " +
                                  std::to_string(out.rows()));
        out = epipolar_embed(out.topRows(2), out.bottomRows(2), rc.epipolar_replicate);
    }
    if (rc.normalize) out = normalize_unit_range(out);
    if (rc.affine) out = append_affine_row(out);
    return out;
}

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw UsageError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

inline double parse_num(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    const double d = parse_num(key, v);
    if (d != static_cast<double>(static_cast<long long>(d)))
        throw UsageError("config key '" + key + "': expected an integer, got '" + v + "'");
    return static_cast<int>(d);
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

} // namespace detail

/// Flat `key = value` text, one per line, `#` starts a comment. Without a
/// `preset` key, kernel, lambda1, lambda2 and lambda3 are required.
inline RunConfig parse_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }

    RunConfig rc;
    if (auto it = kv.find("preset"); it != kv.end()) {
        rc = preset(it->second);
        kv.erase(it);
    } else {
        for (const char* key : {"kernel", "lambda1", "lambda2", "lambda3"})
            if (!kv.count(key)) throw UsageError(std::string("config is missing required key '") + key + "'");
    }

    for (const auto& [key, v] : kv) {
        if (key == "kernel") {
            try {
                rc.kernel.kind = parse_kernel_kind(v);
            } catch (const InvalidArgument& e) {
                throw UsageError(std::string("config key 'kernel': ") + e.what());
            }
        } else if (key == "degree") rc.kernel.degree = detail::parse_int(key, v);
        else if (key == "bias") rc.kernel.bias = detail::parse_num(key, v);
        else if (key == "gamma") rc.kernel.gamma = detail::parse_num(key, v);
        else if (key == "lambda1") rc.solver.lambda1 = detail::parse_num(key, v);
        else if (key == "lambda2") rc.solver.lambda2 = detail::parse_num(key, v);
        else if (key == "lambda3") rc.solver.lambda3 = detail::parse_num(key, v);
        else if (key == "rho0") rc.solver.rho0 = detail::parse_num(key, v);
        else if (key == "rho_max") rc.solver.rho_max = detail::parse_num(key, v);
        else if (key == "eta") rc.solver.eta = detail::parse_num(key, v);
        else if (key == "eps") rc.solver.eps = detail::parse_num(key, v);
        else if (key == "max_iter") rc.solver.max_iter = detail::parse_int(key, v);
        else if (key == "robust") rc.solver.robust = detail::parse_bool(key, v);
        else if (key == "adaptive") rc.solver.adaptive = detail::parse_bool(key, v);
        else if (key == "affine") rc.affine = detail::parse_bool(key, v);
        else if (key == "normalize") rc.normalize = detail::parse_bool(key, v);
        else if (key == "epipolar_replicate") rc.epipolar_replicate = detail::parse_int(key, v);
        else if (key == "seed") rc.seed = static_cast<std::uint64_t>(detail::parse_int(key, v));
        else if (key == "k") rc.k = detail::parse_int(key, v);
        else throw UsageError("config has unknown key '" + key + "'");
    }
    if (rc.kernel.kind == KernelKind::linear) rc.kernel = KernelSpec::linear();
    return rc;
}

struct BenchRow {
    std::string sequence;
    int n_points = 0;
    int k = 0;
    double err_percent = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string error; ///< non-empty when the run failed
};

inline BenchRow run_sequence(const fs::path& dir, const RunConfig& rc) {
    BenchRow row;
    row.sequence = dir.filename().string();
    try {
        const Sequence seq = load_sequence(dir);
        const std::set<int> distinct(seq.data.truth.begin(), seq.data.truth.end());
        row.k = rc.k > 0 ? rc.k : static_cast<int>(distinct.size());
        row.n_points = static_cast<int>(seq.data.X.cols());
        const Matrix x = prepare_data(seq.data.X, rc);
        const auto out = cluster_pipeline(x, row.k, rc.kernel, rc.solver, rc.seed);
        row.err_percent = clustering_error(out.labels, seq.data.truth).err_percent;
        row.iterations = out.result.iterations;
        row.converged = out.result.converged;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// results.csv header: sequence,n_points,k,err_percent,iterations,converged
inline void write_results_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
    os << "sequence,n_points,k,err_percent,iterations,converged\n";
    const auto old_prec = os.precision(17);
    for (const auto& r : rows)
        os << r.sequence << ',' << r.n_points << ',' << r.k << ',' << r.err_percent << ','
           << r.iterations << ',' << (r.converged ? 1 : 0) << '\n';
    os.precision(old_prec);
}

namespace detail {

inline void add_solver_flags(CLI::App& cmd, RunConfig& rc, std::string& kernel_name,
                             std::string& preset_name, bool& fixed_kernel) {
    cmd.add_option("--preset", preset_name, "hopkins, two-frame, yaleb, orl or coil; explicit flags override");
    cmd.add_option("--kernel", kernel_name, "linear, poly or rbf")->capture_default_str();
    cmd.add_option("--degree", rc.kernel.degree, "polynomial degree b")->capture_default_str();
    cmd.add_option("--bias", rc.kernel.bias, "polynomial bias a")->capture_default_str();
    cmd.add_option("--gamma", rc.kernel.gamma, "rbf width")->capture_default_str();
    cmd.add_option("--lambda1", rc.solver.lambda1, "weight of ||C||_1")->capture_default_str();
    cmd.add_option("--lambda2", rc.solver.lambda2, "self-expression weight")->capture_default_str();
    cmd.add_option("--lambda3", rc.solver.lambda3, "kernel proximity / sparse error weight")->capture_default_str();
    cmd.add_option("--eta", rc.solver.eta, "penalty growth factor")->capture_default_str();
    cmd.add_option("--rho0", rc.solver.rho0, "initial penalty")->capture_default_str();
    cmd.add_option("--rho-max", rc.solver.rho_max, "penalty cap")->capture_default_str();
    cmd.add_option("--max-iter", rc.solver.max_iter, "iteration limit")->capture_default_str();
    cmd.add_option("--eps", rc.solver.eps, "residual tolerance")->capture_default_str();
    cmd.add_flag("--robust", rc.solver.robust, "model sparse gross corruptions");
    auto* fixed = cmd.add_flag("--fixed-kernel", fixed_kernel, "keep B = sqrt(K_G)");
    cmd.add_flag("--adaptive", "solve for the low-rank kernel (default)")->excludes(fixed);
    cmd.add_flag("--affine", rc.affine, "append an all-ones row to the data");
    cmd.add_flag("--normalize", rc.normalize, "scale data into [-1, 1]");
    cmd.add_option("--epipolar", rc.epipolar_replicate,
                   "treat 4-row input (x, y, x', y') as two-frame correspondences, replicated N times");
    cmd.add_option("--seed", rc.seed, "k-means seed")->capture_default_str();
}

// Overlay flags the user actually gave onto a preset.
inline RunConfig resolve_run_config(const CLI::App& cmd, const RunConfig& given,
                                    const std::string& kernel_name, const std::string& preset_name,
                                    bool fixed_kernel) {
    RunConfig rc = given;
    if (!preset_name.empty()) {
        rc = preset(preset_name);
        const auto set = [&](const char* flag) { return cmd.count(flag) > 0; };
        if (set("--degree")) rc.kernel.degree = given.kernel.degree;
        if (set("--bias")) rc.kernel.bias = given.kernel.bias;
        if (set("--gamma")) rc.kernel.gamma = given.kernel.gamma;
        if (set("--lambda1")) rc.solver.lambda1 = given.solver.lambda1;
        if (set("--lambda2")) rc.solver.lambda2 = given.solver.lambda2;
        if (set("--lambda3")) rc.solver.lambda3 = given.solver.lambda3;
        if (set("--eta")) rc.solver.eta = given.solver.eta;
        if (set("--rho0")) rc.solver.rho0 = given.solver.rho0;
        if (set("--rho-max")) rc.solver.rho_max = given.solver.rho_max;
        if (set("--max-iter")) rc.solver.max_iter = given.solver.max_iter;
        if (set("--eps")) rc.solver.eps = given.solver.eps;
        if (set("--robust")) rc.solver.robust = true;
        if (set("--affine")) rc.affine = true;
        if (set("--normalize")) rc.normalize = true;
        if (set("--epipolar")) rc.epipolar_replicate = given.epipolar_replicate;
        rc.seed = given.seed;
        if (!set("--kernel")) {
            if (fixed_kernel) rc.solver.adaptive = false;
            return rc;
        }
    }
    try {
        rc.kernel.kind = parse_kernel_kind(kernel_name);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (rc.kernel.kind == KernelKind::linear) rc.kernel = KernelSpec::linear();
    rc.solver.adaptive = !fixed_kernel;
    return rc;
}

} // namespace detail

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Adaptive low-rank kernel subspace clustering", "lrksc"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a labeled union-of-subspaces dataset");
    SynthSpec spec;
    std::string mode = "linear";
    std::string synth_out;
    synth_cmd->add_option("--mode", mode, "linear or quad_curve")->capture_default_str();
    synth_cmd->add_option("--k", spec.k, "number of clusters")->required();
    synth_cmd->add_option("--d", spec.d, "subspace dimension (linear)")->capture_default_str();
    synth_cmd->add_option("--ambient", spec.ambient, "ambient dimension")->capture_default_str();
    synth_cmd->add_option("--n", spec.n, "points per cluster")->capture_default_str();
    synth_cmd->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma")->capture_default_str();
    synth_cmd->add_option("--corrupt", spec.corruption_frac, "fraction of grossly corrupted entries")
        ->capture_default_str();
    synth_cmd->add_option("--seed", spec.seed, "random seed")->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    // cluster
    auto* cluster_cmd = app.add_subcommand("cluster", "cluster a data matrix");
    RunConfig cluster_rc;
    cluster_rc.solver = SolverConfig{};
    std::string cluster_kernel = "poly", cluster_preset, data_path, labels_out = "labels.txt";
    std::string trace_path, affinity_path, cluster_truth;
    bool cluster_fixed = false;
    cluster_cmd->add_option("--data", data_path, "D x N matrix, one point per column")->required();
    cluster_cmd->add_option("--k", cluster_rc.k, "number of clusters")->required();
    cluster_cmd->add_option("--out", labels_out, "label output file")->capture_default_str();
    cluster_cmd->add_option("--trace", trace_path, "write the per-iteration trace as CSV");
    cluster_cmd->add_option("--dump-affinity", affinity_path, "write the affinity matrix as CSV");
    cluster_cmd->add_option("--truth", cluster_truth, "ground-truth labels; prints Err%");
    detail::add_solver_flags(*cluster_cmd, cluster_rc, cluster_kernel, cluster_preset, cluster_fixed);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "clustering error between two label files");
    std::string pred_path, truth_path;
    eval_cmd->add_option("pred", pred_path, "predicted labels")->required();
    eval_cmd->add_option("truth", truth_path, "ground-truth labels")->required();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "run the pipeline over a directory of sequences");
    std::string bench_dir, config_path, results_path = "results.csv";
    int jobs = 1;
    bench_cmd->add_option("dir", bench_dir, "parent directory of sequence directories")->required();
    bench_cmd->add_option("--config", config_path, "key = value run configuration")->required();
    bench_cmd->add_option("--jobs", jobs, "parallel sequences")->capture_default_str()->check(CLI::PositiveNumber);
    bench_cmd->add_option("--out", results_path, "results CSV")->capture_default_str();

    std::vector<std::string> argv_store{"lrksc"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*synth_cmd) {
            if (mode == "linear") spec.mode = SynthMode::linear;
            else if (mode == "quad_curve") spec.mode = SynthMode::quad_curve;
            else throw UsageError("unknown --mode '" + mode + "'");
            try {
                spec.validate();
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            const LabeledData d = synth(spec);
            fs::create_directories(synth_out);
            save_matrix(fs::path(synth_out) / "data.csv", d.X, MatrixFormat::csv);
            save_labels(fs::path(synth_out) / "truth.txt", d.truth);
            out << "wrote " << d.X.rows() << "x" << d.X.cols() << " matrix to "
                << (fs::path(synth_out) / "data.csv").string() << '\n';
            return kExitOk;
        }

        if (*cluster_cmd) {
            const RunConfig rc = detail::resolve_run_config(*cluster_cmd, cluster_rc, cluster_kernel,
                                                            cluster_preset, cluster_fixed);
            try {
                rc.solver.validate();
                rc.kernel.validate();
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            if (cluster_rc.k < 1) throw UsageError("--k must be >= 1");
            const Matrix raw = load_matrix(data_path, format_for_path(data_path));
            const Matrix x = prepare_data(raw, rc);
            const auto res = cluster_pipeline(x, cluster_rc.k, rc.kernel, rc.solver, rc.seed);
            save_labels(labels_out, res.labels);
            if (!trace_path.empty()) {
                std::ofstream t(trace_path);
                if (!t) throw IoError("cannot write " + trace_path);
                write_trace_csv(t, res.result.trace);
            }
            if (!affinity_path.empty()) {
                std::ofstream a(affinity_path);
                if (!a) throw IoError("cannot write " + affinity_path);
                write_affinity_csv(a, res.affinity);
            }
            out << "converged: " << (res.result.converged ? "yes" : "no")
                << "  iterations: " << res.result.iterations << '\n';
            if (!cluster_truth.empty())
                out << format_error_line(clustering_error(res.labels, load_labels(cluster_truth))) << '\n';
            return kExitOk;
        }

        if (*eval_cmd) {
            const auto rep = clustering_error(load_labels(pred_path), load_labels(truth_path));
            out << format_error_line(rep) << '\n';
            return kExitOk;
        }

        if (*bench_cmd) {
            std::ifstream cfg_in(config_path);
            if (!cfg_in) throw IoError("cannot open config " + config_path);
            const RunConfig rc = parse_config(cfg_in);
            try {
                rc.solver.validate();
                rc.kernel.validate();
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            if (!fs::is_directory(bench_dir)) throw IoError("not a directory: " + bench_dir);
            const auto dirs = list_sequences(bench_dir);
            if (dirs.empty()) throw IoError("no sequence directories under " + bench_dir);

            std::vector<BenchRow> rows(dirs.size());
            std::atomic<std::size_t> next{0};
            const auto worker = [&] {
                for (std::size_t i = next++; i < dirs.size(); i = next++) rows[i] = run_sequence(dirs[i], rc);
            };
            const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), dirs.size());
            std::vector<std::thread> pool;
            for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
            worker();
            for (auto& th : pool) th.join();

            bool failed = false;
            std::vector<double> errs;
            char buf[160];
            std::snprintf(buf, sizeof buf, "%-24s %8s %3s %8s %6s %9s\n", "sequence", "n_points", "k",
                          "Err%", "iters", "converged");
            out << buf;
            for (const auto& r : rows) {
                if (!r.error.empty()) {
                    err << "sequence " << r.sequence << " failed: " << r.error << '\n';
                    failed = true;
                    continue;
                }
                errs.push_back(r.err_percent);
                std::snprintf(buf, sizeof buf, "%-24s %8d %3d %8.2f %6d %9s\n", r.sequence.c_str(),
                              r.n_points, r.k, r.err_percent, r.iterations, r.converged ? "yes" : "no");
                out << buf;
            }
            double mean = 0.0;
            for (double e : errs) mean += e;
            if (!errs.empty()) mean /= static_cast<double>(errs.size());
            std::snprintf(buf, sizeof buf, "%-24s %8s %3s %8.2f\n", "Mean", "", "", mean);
            out << buf;
            std::snprintf(buf, sizeof buf, "%-24s %8s %3s %8.2f\n", "Median", "", "", median(errs));
            out << buf;

            std::vector<BenchRow> ok;
            for (const auto& r : rows)
                if (r.error.empty()) ok.push_back(r);
            std::ofstream res_out(results_path);
            if (!res_out) throw IoError("cannot write " + results_path);
            write_results_csv(res_out, ok);
            return failed ? kExitFailure : kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

} // namespace lrksc::cli
