#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lrksc/data.hpp"
#include "lrksc/solver.hpp"
#include "oracles.hpp"

using lrksc::GramMatrix;
using lrksc::Matrix;
using lrksc::RowVector;
using lrksc::SolverConfig;
using lrksc::SolverState;

namespace {

SolverState random_state(Eigen::Index n, std::mt19937_64& rng, double rho) {
    const Matrix g = oracle::random_matrix(n, n, rng);
    SolverState s;
    s.set_factor(g);
    s.C = oracle::random_matrix(n, n, rng);
    s.A = oracle::random_matrix(n, n, rng);
    s.E = oracle::random_matrix(n, n, rng, 0.1);
    s.Y1 = oracle::random_matrix(n, n, rng);
    s.Y3 = oracle::random_matrix(n, n, rng);
    s.y2 = oracle::random_matrix(1, n, rng);
    s.rho = rho;
    return s;
}

Matrix positive_part_sqrt(const Matrix& k) {
    const auto e = lrksc::sym_eig(k);
    const lrksc::Vector d = e.values.cwiseMax(0.0);
    return e.vectors * d.cwiseSqrt().asDiagonal() * e.vectors.transpose();
}

} // namespace

TEST(InitState, IdentityKernel) {
    const auto s = lrksc::init_state({Matrix::Identity(3, 3)}, SolverConfig{});
    EXPECT_LE(lrksc::max_abs(s.B - Matrix::Identity(3, 3)), 1e-14);
    EXPECT_EQ(s.C, Matrix::Zero(3, 3));
    EXPECT_EQ(s.A, Matrix::Zero(3, 3));
    EXPECT_EQ(s.Y1, Matrix::Zero(3, 3));
    EXPECT_EQ(s.y2, RowVector::Zero(3));
    EXPECT_EQ(s.rho, 1e-8);
    EXPECT_EQ(s.iter, 0);
    EXPECT_NEAR(s.b_nuclear, 3.0, 1e-13);
}

TEST(InitState, DiagonalKernel) {
    Matrix k = Matrix::Zero(2, 2);
    k(0, 0) = 4.0;
    k(1, 1) = 9.0;
    const auto s = lrksc::init_state({k}, SolverConfig{});
    EXPECT_NEAR(s.B(0, 0), 2.0, 1e-14);
    EXPECT_NEAR(s.B(1, 1), 3.0, 1e-14);
}

TEST(InitState, PolynomialGramRoundTrip) {
    std::mt19937_64 rng(21);
    const Matrix x = oracle::random_matrix(5, 15, rng, 0.5);
    const auto g = lrksc::gram(x, lrksc::KernelSpec::polynomial(2.2, 3));
    const auto s = lrksc::init_state(g, SolverConfig{});
    EXPECT_LE((s.B.transpose() * s.B - g.K).norm(), 1e-8 * g.K.norm());
    EXPECT_NEAR(s.b_nuclear, oracle::singular_values(s.B).sum(), 1e-8 * s.b_nuclear);
}

TEST(InitState, RejectsIndefiniteKernel) {
    Matrix k = Matrix::Identity(2, 2);
    k(1, 1) = -1.0;
    EXPECT_THROW(lrksc::init_state({k}, SolverConfig{}), lrksc::NotPsdError);
}

TEST(Config, Validation) {
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.lambda2 = 0.0;
    EXPECT_THROW(c.validate(), lrksc::InvalidArgument);
    c = SolverConfig{};
    c.eta = 1.0;
    EXPECT_THROW(c.validate(), lrksc::InvalidArgument);
    c = SolverConfig{};
    c.rho0 = 1e11;
    EXPECT_THROW(c.validate(), lrksc::InvalidArgument);
}

TEST(UpdateC, ZeroInputs) {
    SolverState s;
    s.A = Matrix::Zero(3, 3);
    s.Y1 = Matrix::Zero(3, 3);
    s.rho = 1.0;
    EXPECT_EQ(lrksc::update_C(s, SolverConfig{}), Matrix::Zero(3, 3));
}

TEST(UpdateC, TinyThresholdZeroesDiagonalOnly) {
    std::mt19937_64 rng(22);
    SolverState s = random_state(4, rng, 1e12);
    SolverConfig cfg;
    const Matrix c = lrksc::update_C(s, cfg);
    Matrix expect = s.A + s.Y1 / s.rho;
    expect.diagonal().setZero();
    EXPECT_LE(lrksc::max_abs(c - expect), 1e-11);
}

TEST(UpdateC, SubgradientOptimality) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        SolverState s = random_state(3 + trial % 5, rng, 2.0);
        SolverConfig cfg;
        cfg.lambda1 = 0.4;
        const Matrix c = lrksc::update_C(s, cfg);
        EXPECT_EQ(c.diagonal().cwiseAbs().maxCoeff(), 0.0);
        Matrix v = s.A + s.Y1 / s.rho;
        // the diagonal is constrained to zero, so only off-diagonals are checked
        Matrix cc = c, vv = v;
        cc.diagonal().setZero();
        vv.diagonal().setZero();
        ASSERT_LE(oracle::l1_prox_violation(cc, vv, 0.2), 1e-12);
    }
}

TEST(UpdateA, TwoPointsNoKernel) {
    SolverState s;
    s.set_factor(Matrix::Identity(2, 2));
    s.C = Matrix::Zero(2, 2);
    s.Y1 = Matrix::Zero(2, 2);
    s.y2 = RowVector::Zero(2);
    s.rho = 1.0;
    SolverConfig cfg;
    cfg.lambda2 = 0.0;
    const Matrix a = lrksc::update_A(s, cfg);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(a(i), 1.0 / 3.0, 1e-14);
}

TEST(UpdateA, MatchesQrOracle) {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 10; ++trial) {
        SolverState s = random_state(8, rng, 0.7);
        SolverConfig cfg;
        const Matrix a = lrksc::update_A(s, cfg);
        const Matrix ref = oracle::a_solve_qr(s.BtB, s.C, s.Y1, s.y2, cfg.lambda2, s.rho);
        EXPECT_LE(lrksc::max_abs(a - ref), 1e-8);
    }
}

TEST(UpdateA, GradientVanishes) {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 20; ++trial) {
        SolverState s = random_state(2 + trial, rng, std::pow(10.0, (trial % 7) - 3));
        SolverConfig cfg;
        const Matrix a = lrksc::update_A(s, cfg);
        const Matrix g = oracle::a_gradient(a, s.BtB, s.C, s.Y1, s.y2, cfg.lambda2, s.rho);
        const double scale = 1.0 + lrksc::max_abs(cfg.lambda2 * s.BtB) + lrksc::max_abs(s.Y1) +
                             s.rho * (1.0 + lrksc::max_abs(s.C));
        EXPECT_LE(lrksc::max_abs(g), 1e-8 * scale) << "trial " << trial;
    }
}

TEST(UpdateA, GradientAgreesWithFiniteDifference) {
    std::mt19937_64 rng(26);
    SolverState s = random_state(4, rng, 0.5);
    SolverConfig cfg;
    cfg.lambda2 = 2.0;
    const Matrix a = oracle::random_matrix(4, 4, rng);
    const Matrix g = oracle::a_gradient(a, s.BtB, s.C, s.Y1, s.y2, cfg.lambda2, s.rho);
    const double h = 1e-6;
    for (int i = 0; i < 16; ++i) {
        Matrix ap = a, am = a;
        ap(i) += h;
        am(i) -= h;
        const double fd = (oracle::a_objective(ap, s.BtB, s.C, s.Y1, s.y2, cfg.lambda2, s.rho) -
                           oracle::a_objective(am, s.BtB, s.C, s.Y1, s.y2, cfg.lambda2, s.rho)) /
                          (2.0 * h);
        EXPECT_NEAR(fd, g(i), 1e-5 * (1.0 + std::abs(g(i))));
    }
}

TEST(BuildKtilde, ReducesAtZeroState) {
    std::mt19937_64 rng(27);
    const Matrix x = oracle::random_matrix(3, 6, rng);
    const auto kg = lrksc::gram(x, lrksc::KernelSpec::linear());
    SolverConfig cfg;
    auto s = lrksc::init_state(kg, cfg);
    const Matrix kt = lrksc::build_ktilde(s, cfg, kg);
    const Matrix expect = kg.K - cfg.lambda2 / (2.0 * cfg.lambda3) * Matrix::Identity(6, 6);
    EXPECT_LE(lrksc::max_abs(kt - expect), 1e-14);
}

TEST(BuildKtilde, MatchesLoopsBothModes) {
    std::mt19937_64 rng(28);
    for (bool robust : {false, true}) {
        for (int trial = 0; trial < 10; ++trial) {
            SolverState s = random_state(7, rng, 3.0);
            const Matrix k = oracle::random_symmetric(7, rng);
            SolverConfig cfg;
            cfg.robust = robust;
            cfg.lambda3 = 5.0;
            const Matrix kt = lrksc::build_ktilde(s, cfg, {k});
            const Matrix ref = oracle::ktilde_loops(k, s.A, s.E, s.Y3, cfg.lambda2, cfg.lambda3, s.rho, robust);
            EXPECT_LE(lrksc::max_abs(kt - ref), 1e-12 * (1.0 + lrksc::max_abs(ref)));
            EXPECT_EQ(kt, kt.transpose());
        }
    }
}

TEST(UpdateB, ZeroTarget) {
    EXPECT_EQ(lrksc::update_B(Matrix::Zero(3, 3), 1e5), Matrix::Zero(3, 3));
}

TEST(UpdateB, IdentityTarget) {
    const Matrix b = lrksc::update_B(Matrix::Identity(2, 2), 1e5);
    const auto sv = oracle::singular_values(b);
    EXPECT_NEAR(sv(0), 0.9999975, 1e-7);
    EXPECT_NEAR(sv(1), 0.9999975, 1e-7);
}

TEST(UpdateB, NegativeDirectionCollapses) {
    Matrix k = Matrix::Zero(2, 2);
    k(0, 0) = 1.0;
    k(1, 1) = -1.0;
    const auto fu = lrksc::factor_update(k, 1e5);
    EXPECT_NEAR(fu.gamma(0), 0.9999975, 1e-7);
    EXPECT_EQ(fu.gamma(1), 0.0);
    const auto sv = oracle::singular_values(fu.B);
    EXPECT_NEAR(sv(0), 0.9999975, 1e-7);
    EXPECT_NEAR(sv(1), 0.0, 1e-15);
}

TEST(UpdateB, BeatsReferencePoints) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = 2 + trial % 10;
        const Matrix kt = oracle::random_symmetric(n, rng);
        for (double w : {1.0, 1e5}) {
            const auto fu = lrksc::factor_update(kt, w);
            const double f = oracle::b_objective(fu.B, kt, w);
            const double tol = 1e-9 * (1.0 + std::abs(f));
            EXPECT_LE(f, oracle::b_objective(Matrix::Zero(n, n), kt, w) + tol);
            EXPECT_LE(f, oracle::b_objective(positive_part_sqrt(kt), kt, w) + tol);
            for (int r = 0; r < 3; ++r)
                EXPECT_LE(f, oracle::b_objective(oracle::random_matrix(n, n, rng), kt, w) + tol);
            EXPECT_NEAR(fu.gamma.sum(), oracle::singular_values(fu.B).sum(), 1e-10 * (1.0 + fu.gamma.sum()));
        }
    }
}

TEST(UpdateE, ExactFactorGivesZero) {
    std::mt19937_64 rng(30);
    SolverState s = random_state(5, rng, 1.0);
    s.Y3.setZero();
    SolverConfig cfg;
    cfg.robust = true;
    cfg.lambda3 = 1e-3;
    const Matrix e = lrksc::update_E(s, cfg, {s.BtB});
    EXPECT_EQ(e, Matrix::Zero(5, 5));
}

TEST(UpdateE, SubgradientOptimality) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        SolverState s = random_state(3 + trial % 6, rng, 4.0);
        const Matrix k = oracle::random_symmetric(s.A.rows(), rng, 2.0);
        SolverConfig cfg;
        cfg.robust = true;
        cfg.lambda3 = 2.0;
        const Matrix e = lrksc::update_E(s, cfg, {k});
        const Matrix v = k - s.BtB + s.Y3 / s.rho;
        ASSERT_LE(oracle::l1_prox_violation(e, v, cfg.lambda3 / s.rho), 1e-12);
    }
}

TEST(DualUpdate, ZeroResidualsOnlyGrowRho) {
    SolverState s;
    s.set_factor(Matrix::Identity(2, 2));
    s.A = Matrix::Zero(2, 2);
    s.A(0, 1) = s.A(1, 0) = 1.0;
    s.C = s.A;
    s.E = Matrix::Zero(2, 2);
    s.Y1 = Matrix::Constant(2, 2, 0.5);
    s.Y3 = Matrix::Constant(2, 2, -0.25);
    s.y2 = RowVector::Constant(2, 3.0);
    s.rho = 1e-3;
    SolverConfig cfg;
    cfg.robust = true;
    const SolverState before = s;
    lrksc::dual_update(s, cfg, {Matrix::Identity(2, 2)});
    EXPECT_EQ(s.Y1, before.Y1);
    EXPECT_EQ(s.Y3, before.Y3);
    EXPECT_EQ(s.y2, before.y2);
    EXPECT_EQ(s.rho, 2e-2);
}

TEST(DualUpdate, RhoIsCapped) {
    SolverState s;
    s.set_factor(Matrix::Identity(2, 2));
    s.A = s.C = s.E = s.Y1 = s.Y3 = Matrix::Zero(2, 2);
    s.y2 = RowVector::Zero(2);
    s.rho = 1e10;
    lrksc::dual_update(s, SolverConfig{}, {Matrix::Identity(2, 2)});
    EXPECT_EQ(s.rho, 1e10);
}

TEST(DualUpdate, ScheduleReplay) {
    SolverState s;
    s.set_factor(Matrix::Identity(2, 2));
    s.A = s.C = s.E = s.Y1 = s.Y3 = Matrix::Zero(2, 2);
    s.y2 = RowVector::Zero(2);
    SolverConfig cfg;
    s.rho = cfg.rho0;
    double expect = 1e-8;
    for (int t = 1; t <= 20; ++t) {
        lrksc::dual_update(s, cfg, {Matrix::Identity(2, 2)});
        expect = std::min(20.0 * expect, 1e10);
        EXPECT_EQ(s.rho, expect) << "t=" << t;
        EXPECT_NEAR(s.rho, std::min(std::pow(20.0, t) * 1e-8, 1e10), 1e-12 * s.rho);
    }
}

TEST(Solve, TwoPointsExpressEachOther) {
    Matrix x(2, 2);
    x << 1.0, 0.5, 0.0, 1.0;
    const auto kg = lrksc::gram(x, lrksc::KernelSpec::linear());
    const auto r = lrksc::solve(kg, SolverConfig{});
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(r.C(0, 0), 0.0);
    EXPECT_EQ(r.C(1, 1), 0.0);
    EXPECT_NEAR(r.C(0, 1), 1.0, 1e-5);
    EXPECT_NEAR(r.C(1, 0), 1.0, 1e-5);
}

TEST(Solve, LinearSubspacesConvergeQuickly) {
    lrksc::SynthSpec sp;
    sp.k = 3;
    sp.d = 4;
    sp.ambient = 30;
    sp.n = 20;
    sp.noise_sigma = 0.01;
    sp.seed = 3;
    const auto data = lrksc::synth(sp);
    const auto kg = lrksc::gram(data.X, lrksc::KernelSpec::linear());
    const auto r = lrksc::solve(kg, SolverConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 20);
    const auto& last = r.trace.back();
    EXPECT_LE(last.res_ac, 1e-6);
    EXPECT_LE(last.res_affine, 1e-6);
    EXPECT_TRUE(std::isnan(last.res_kernel));
    for (std::size_t t = 0; t < r.trace.size(); ++t) {
        EXPECT_EQ(r.trace[t].iter, static_cast<int>(t));
        EXPECT_NEAR(r.trace[t].rho, std::min(std::pow(20.0, static_cast<double>(t)) * 1e-8, 1e10),
                    1e-12 * r.trace[t].rho);
    }
}

TEST(Solve, DeterministicAndFixedKernelMode) {
    std::mt19937_64 rng(32);
    const Matrix x = oracle::random_matrix(4, 12, rng);
    const auto kg = lrksc::gram(x, lrksc::KernelSpec::polynomial(1.0, 2));
    SolverConfig cfg;
    const auto a = lrksc::solve(kg, cfg);
    const auto b = lrksc::solve(kg, cfg);
    EXPECT_EQ(a.C, b.C);
    EXPECT_EQ(a.B, b.B);
    cfg.adaptive = false;
    const auto f = lrksc::solve(kg, cfg);
    EXPECT_LE(lrksc::max_abs(f.B - lrksc::psd_sqrt(kg.K)), 1e-14);
}

TEST(Solve, RobustModeRecordsKernelResidual) {
    std::mt19937_64 rng(33);
    const Matrix x = oracle::random_matrix(4, 10, rng);
    const auto kg = lrksc::gram(x, lrksc::KernelSpec::linear());
    SolverConfig cfg;
    cfg.robust = true;
    cfg.max_iter = 5;
    const auto r = lrksc::solve(kg, cfg);
    EXPECT_EQ(r.iterations, 5);
    for (const auto& t : r.trace) EXPECT_FALSE(std::isnan(t.res_kernel));
}

TEST(SelfExpr, MatchesExplicitFeatures) {
    std::mt19937_64 rng(34);
    const Matrix x = oracle::random_matrix(6, 9, rng);
    const Matrix c = oracle::random_matrix(9, 9, rng);
    const auto kg = lrksc::gram(x, lrksc::KernelSpec::linear());
    EXPECT_NEAR(lrksc::self_expr_residual(kg, c), (x - x * c).squaredNorm(), 1e-9 * (x * c).squaredNorm());
    EXPECT_NEAR(lrksc::self_expr_residual(kg, Matrix::Identity(9, 9)), 0.0, 1e-10);
    EXPECT_NEAR(lrksc::self_expr_residual(kg, Matrix::Zero(9, 9)), x.squaredNorm(), 1e-10);
}

TEST(TraceCsv, HeaderAndBlankKernelColumn) {
    lrksc::TraceRecord r;
    r.iter = 0;
    r.objective = 1.5;
    r.rho = 1e-8;
    std::ostringstream os;
    lrksc::write_trace_csv(os, {r});
    EXPECT_EQ(os.str(), "iter,objective,res_AC,res_affine,res_kernel,rho\n0,1.5,0,0,,1e-08\n");
}
