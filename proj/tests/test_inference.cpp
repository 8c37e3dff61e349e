#include "fixtures.hpp"

#include "ubmaud/error.hpp"
#include "ubmaud/inference.hpp"
#include "ubmaud/reference.hpp"
#include "ubmaud/simgen.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace ubmaud;

namespace {

ScenarioConfig null_scenario(long n, int reps, std::uint64_t seed) {
    ScenarioConfig c;
    c.n = n;
    c.part = PartitionVector({4, 5, 3});
    c.true_gamma = GammaVector::zero(c.part);
    c.true_beta = Eigen::MatrixXd::Zero(12, 2);
    c.replicates = reps;
    c.seed = seed;
    return c;
}

} // namespace

TEST(Bh, Examples) {
    const BhResult all = bh_adjust(Eigen::Vector4d(0.01, 0.02, 0.03, 0.04), 0.05);
    for (bool r : all.rejected) EXPECT_TRUE(r);
    EXPECT_NEAR(all.adjusted(0), 0.04, 1e-15);
    EXPECT_NEAR(all.adjusted(3), 0.04, 1e-15);

    const BhResult none = bh_adjust(Eigen::VectorXd::Ones(5), 0.05);
    EXPECT_EQ(none.adjusted, Eigen::VectorXd::Ones(5));
    for (bool r : none.rejected) EXPECT_FALSE(r);

    const BhResult single = bh_adjust(Eigen::VectorXd::Constant(1, 0.3), 0.05);
    EXPECT_EQ(single.adjusted(0), 0.3);

    EXPECT_THROW(bh_adjust(Eigen::Vector2d(0.1, 1.5), 0.05), InvalidPValue);
    EXPECT_THROW(bh_adjust(Eigen::Vector2d(0.1, std::nan("")), 0.05), InvalidPValue);
}

TEST(Bh, MonotonePrefixAndPermutationInvariant) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd p(60);
    for (int i = 0; i < 60; ++i) p(i) = i < 20 ? 0.002 * u(rng) : u(rng);
    p(5) = p(6); // a tie
    const BhResult r = bh_adjust(p, 0.05);
    std::vector<int> order(60);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p(a) < p(b); });
    bool seen_accept = false;
    for (int k = 0; k < 60; ++k) {
        const int i = order[static_cast<std::size_t>(k)];
        EXPECT_GE(r.adjusted(i), p(i));
        if (k > 0) EXPECT_GE(r.adjusted(i), r.adjusted(order[static_cast<std::size_t>(k - 1)]));
        if (!r.rejected[static_cast<std::size_t>(i)]) seen_accept = true;
        else EXPECT_FALSE(seen_accept);
    }

    std::vector<int> perm(60);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::VectorXd q(60);
    for (int i = 0; i < 60; ++i) q(i) = p(perm[static_cast<std::size_t>(i)]);
    const BhResult s = bh_adjust(q, 0.05);
    for (int i = 0; i < 60; ++i) EXPECT_EQ(s.adjusted(i), r.adjusted(perm[static_cast<std::size_t>(i)]));
}

TEST(BetaTests, ZeroEstimateAndDenseSe) {
    FitResult f = fit(sample_dataset(null_scenario(60, 1, 2), 0));
    const std::vector<TestResult> t = beta_tests(f);
    ASSERT_EQ(t.size(), 24u);
    EXPECT_EQ(t[3].label, "beta[2,2]");
    const Eigen::MatrixXd dense = f.beta_cov.dense();
    for (std::size_t k = 0; k < t.size(); ++k) {
        EXPECT_GT(t[k].standard_error, 0.0);
        EXPECT_NEAR(t[k].standard_error, std::sqrt(dense(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))),
                    1e-14);
        EXPECT_GE(t[k].p_value, 0.0);
        EXPECT_LE(t[k].p_value, 1.0);
    }
    f.beta.setZero();
    for (const TestResult& r : beta_tests(f)) {
        EXPECT_EQ(r.statistic, 0.0);
        EXPECT_EQ(r.p_value, 1.0);
        EXPECT_FALSE(r.rejected);
    }
}

TEST(BetaTests, ReferenceDistributions) {
    const FitResult f = fit(sample_dataset(null_scenario(15, 1, 3), 0));
    const std::vector<TestResult> t = beta_tests(f, DfMode::TNMinus1);
    const std::vector<TestResult> z = beta_tests(f, DfMode::Normal);
    for (std::size_t k = 0; k < t.size(); ++k) {
        EXPECT_EQ(t[k].statistic, z[k].statistic);
        if (std::abs(t[k].statistic) > 0.5) EXPECT_GT(t[k].p_value, z[k].p_value);
    }
}

TEST(BhApply, FillsAdjusted) {
    const FitResult f = fit(sample_dataset(fixtures::design_scenario(100, 1, 4), 0));
    std::vector<TestResult> t = beta_tests(f);
    apply_bh(t, 0.05);
    for (const TestResult& r : t) {
        ASSERT_TRUE(r.adjusted_p_value.has_value());
        EXPECT_GE(*r.adjusted_p_value, r.p_value);
        EXPECT_EQ(r.rejected, *r.adjusted_p_value <= 0.05);
    }
}

TEST(GammaTests, PositiveSeAndLabels) {
    const FitResult f = fit(sample_dataset(fixtures::design_scenario(300, 1, 5), 0));
    const std::vector<TestResult> t = gamma_tests(f);
    ASSERT_EQ(t.size(), 6u);
    EXPECT_EQ(t[1].label, "gamma[1,2]");
    EXPECT_EQ(t[5].label, "gamma[3,3]");
    for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_GT(t[j].standard_error, 0.0);
        EXPECT_NEAR(t[j].standard_error, std::sqrt(f.gamma_cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j))),
                    1e-15);
    }
    // gamma_12 = 0.01 sits well inside its sampling noise, the others do not
    EXPECT_TRUE(t[0].rejected);
    EXPECT_TRUE(t[4].rejected);
}

TEST(Contrast, OneDfAndZeroStatistic) {
    const FitResult f = fit(sample_dataset(fixtures::design_scenario(80, 1, 6), 0));
    const std::vector<TestResult> bt = beta_tests(f);
    const int rp = f.R() * f.p();
    for (int k : {0, 7, 101, rp - 1}) {
        ContrastSpec c{Eigen::MatrixXd::Zero(1, rp), Eigen::VectorXd::Zero(1)};
        c.C(0, k) = 1.0;
        const WaldResult w = contrast_test(f, c);
        EXPECT_EQ(w.df, 1);
        const double t2 = bt[static_cast<std::size_t>(k)].statistic * bt[static_cast<std::size_t>(k)].statistic;
        EXPECT_NEAR(w.statistic, t2, 1e-10 * std::max(1.0, t2));
    }
    std::mt19937_64 rng(7);
    ContrastSpec c{fixtures::normal_matrix(rng, 3, rp), Eigen::VectorXd::Zero(3)};
    c.rho0 = c.C * f.beta_vector();
    EXPECT_NEAR(contrast_test(f, c).statistic, 0.0, 1e-16);
    EXPECT_NEAR(contrast_test(f, c).p_value, 1.0, 1e-12);

    const Eigen::MatrixXd dense = f.beta_cov.dense();
    EXPECT_LT((contrast_covariance(f.beta_cov, c.C) - c.C * dense * c.C.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Contrast, Errors) {
    const FitResult f = fit(sample_dataset(null_scenario(40, 1, 8), 0));
    const int rp = f.R() * f.p();
    ContrastSpec dup{Eigen::MatrixXd::Zero(2, rp), Eigen::VectorXd::Zero(2)};
    dup.C(0, 3) = dup.C(1, 3) = 1.0;
    EXPECT_THROW(contrast_test(f, dup), RankDeficientContrast);
    EXPECT_THROW(contrast_test(f, ContrastSpec{Eigen::MatrixXd::Zero(1, rp + 1), Eigen::VectorXd::Zero(1)}),
                 DimensionMismatch);
    ContrastSpec huge{Eigen::MatrixXd::Zero(1, rp), Eigen::VectorXd::Zero(2)};
    huge.C(0, 0) = 1;
    EXPECT_THROW(contrast_test(f, huge), DimensionMismatch);
}

TEST(Contrast, ChiSquareCalibration) {
    const ScenarioConfig c = null_scenario(100, 300, 9);
    const Eigen::MatrixXd beta = scenario_beta(c);
    double sum = 0.0;
    for (int r = 0; r < c.replicates; ++r) {
        const FitResult f = fit(sample_dataset(c, beta, r));
        ContrastSpec s{Eigen::MatrixXd::Zero(2, f.R() * f.p()), Eigen::VectorXd::Zero(2)};
        s.C(0, 1) = 1.0;
        s.C(1, 9) = 1.0;
        sum += contrast_test(f, s).statistic;
    }
    EXPECT_NEAR(sum / c.replicates, 2.0, 0.3);
}

TEST(RelativeLoss, Examples) {
    std::mt19937_64 rng(10);
    const PartitionVector p({4, 3, 5});
    const UniformBlockMatrix u = reference::random_pd_ub(rng, p);
    const Eigen::MatrixXd a = fixtures::normal_matrix(rng, 3, 3);
    const Eigen::MatrixXd v = a * a.transpose() + Eigen::MatrixXd::Identity(3, 3);
    const KroneckerCovariance truth{u, v};
    for (LossNorm nm : {LossNorm::Frobenius, LossNorm::Spectral}) {
        EXPECT_NEAR(relative_loss(truth, truth, nm), 0.0, 1e-15);
        EXPECT_NEAR(relative_loss(KroneckerCovariance{u.scaled(2.0), v}, truth, nm), 1.0, 1e-12);
        EXPECT_NEAR(relative_loss(KroneckerCovariance{u, 2.0 * v}, truth, nm), 1.0, 1e-12);
    }

    const UniformBlockMatrix u2 = reference::random_pd_ub(rng, p);
    const Eigen::MatrixXd b = fixtures::normal_matrix(rng, 3, 3);
    const Eigen::MatrixXd v2 = b * b.transpose() + Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd dg(12);
    for (int r = 0; r < 12; ++r) dg(r) = 0.5 + r * 0.1;
    const Eigen::MatrixXd m = fixtures::normal_matrix(rng, 12, 12);
    const Eigen::MatrixXd dense_factor = m * m.transpose();
    const std::vector<KroneckerCovariance> ests{
        {u2, v2}, {DiagonalFactor{dg}, v2}, {dense_factor, v}, {DiagonalFactor{dg}, v}};
    for (const KroneckerCovariance& e : ests) {
        for (LossNorm nm : {LossNorm::Frobenius, LossNorm::Spectral}) {
            const double fast = relative_loss(e, truth, nm);
            const double slow = relative_loss_dense(e, truth, nm);
            EXPECT_NEAR(fast, slow, 1e-10 * slow);
            const KroneckerCovariance es{e.outcome, 3.0 * e.covariate};
            const KroneckerCovariance ts{truth.outcome, 3.0 * truth.covariate};
            EXPECT_NEAR(relative_loss(es, ts, nm), fast, 1e-10 * fast);
        }
    }
    // dense truth as well
    const KroneckerCovariance dense_truth{dense_factor, v2};
    EXPECT_NEAR(relative_loss(ests[0], dense_truth, LossNorm::Spectral),
                relative_loss_dense(ests[0], dense_truth, LossNorm::Spectral), 1e-10);
    EXPECT_THROW(relative_loss(KroneckerCovariance{u, Eigen::MatrixXd::Identity(2, 2)}, truth, LossNorm::Frobenius),
                 DimensionMismatch);
}
