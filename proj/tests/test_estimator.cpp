#include "fixtures.hpp"

#include "ubmaud/error.hpp"
#include "ubmaud/estimator.hpp"
#include "ubmaud/reference.hpp"
#include "ubmaud/simgen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ubmaud;

namespace {

Dataset small_dataset(std::uint64_t seed, const PartitionVector& part, long n, int p) {
    std::mt19937_64 rng(seed);
    const GammaVector g = reference::random_gamma(rng, part, 1.0);
    ScenarioConfig c;
    c.n = n;
    c.part = part;
    c.p = p;
    c.true_gamma = g;
    c.seed = seed;
    c.replicates = 1;
    return sample_dataset(c, 0);
}

} // namespace

TEST(Dataset, Validation) {
    const PartitionVector p({3, 3});
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(10, 1);
    EXPECT_THROW(Dataset(x, Eigen::MatrixXd::Zero(9, 6), p), DimensionMismatch);
    try {
        Dataset(x, Eigen::MatrixXd::Zero(10, 7), p);
        FAIL();
    } catch (const DimensionMismatch& e) {
        const std::string m = e.what();
        EXPECT_NE(m.find("6"), std::string::npos);
        EXPECT_NE(m.find("7"), std::string::npos);
    }
    EXPECT_THROW(Dataset(Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd::Zero(3, 6), p), InvalidDataset);
    Eigen::MatrixXd coll(10, 2);
    coll.col(0).setOnes();
    coll.col(1).setConstant(2.0);
    EXPECT_THROW(Dataset(coll, Eigen::MatrixXd::Zero(10, 6), p), RankDeficient);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(10, 6);
    y(2, 2) = std::nan("");
    EXPECT_THROW(Dataset(x, y, p), InvalidDataset);
}

TEST(Ols, ExactRecoveryAndInterceptOnly) {
    std::mt19937_64 rng(1);
    const PartitionVector p({3, 4});
    Eigen::MatrixXd x = fixtures::normal_matrix(rng, 30, 2);
    x.col(0).setOnes();
    const Eigen::MatrixXd b0 = fixtures::normal_matrix(rng, 7, 2);
    const OlsResult ols = ols_fit(Dataset(x, x * b0.transpose(), p));
    EXPECT_LT((ols.beta - b0).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(ols.residuals.cwiseAbs().maxCoeff(), 1e-12);

    const Eigen::MatrixXd y = fixtures::normal_matrix(rng, 30, 7);
    const OlsResult mean = ols_fit(Dataset(Eigen::MatrixXd::Ones(30, 1), y, p));
    EXPECT_LT((mean.beta.col(0) - y.colwise().mean().transpose()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Ols, MatchesStackedNormalEquations) {
    const Dataset d = small_dataset(2, PartitionVector({3, 4}), 25, 3);
    const Eigen::MatrixXd stacked = reference::dense_weighted_beta(d.X, d.Y, Eigen::MatrixXd::Identity(7, 7));
    EXPECT_LT((ols_fit(d).beta - stacked).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FisherScoring, StationaryAndLocallyOptimal) {
    const ScenarioConfig c = fixtures::design_scenario(300, 1, 11);
    const Dataset d = sample_dataset(c, 0);
    const FitResult f = fit(d);
    const Eigen::VectorXd sc = score(f.gamma, f.summaries);
    EXPECT_LT(sc.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT(f.diagnostics.score_norm, 1e-8);

    const double ll = log_likelihood(f.gamma, f.summaries);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    for (int t = 0; t < 100; ++t) {
        Eigen::VectorXd dir(6);
        for (int j = 0; j < 6; ++j) dir(j) = z(rng);
        const GammaVector g(f.gamma.values + 0.01 * dir.normalized(), f.part());
        if (!is_admissible(g)) continue;
        EXPECT_GE(ll, log_likelihood(g, f.summaries));
    }
    for (int j = 0; j < 6; ++j)
        EXPECT_LT(std::abs(f.gamma.values(j) - c.true_gamma.values(j)), 4.0 * std::sqrt(f.gamma_cov(j, j)));
}

TEST(FisherScoring, NullModelNearZero) {
    ScenarioConfig c;
    c.n = 2000;
    c.part = PartitionVector({4, 5, 6});
    c.true_gamma = GammaVector::zero(c.part);
    c.true_beta = Eigen::MatrixXd::Zero(15, 2);
    c.replicates = 1;
    c.seed = 3;
    const FitResult f = fit(sample_dataset(c, 0));
    for (int j = 0; j < 6; ++j) EXPECT_LT(std::abs(f.gamma.values(j)), 3.0 * std::sqrt(f.gamma_cov(j, j)));
}

TEST(FisherScoring, InadmissibleStartAndIterationCap) {
    const Dataset d = small_dataset(4, PartitionVector({3, 4}), 40, 2);
    const BlockSummaries s = block_summaries(ols_fit(d).residuals, d.part);
    EXPECT_THROW(fisher_scoring(s, GammaVector(Eigen::Vector3d(-1, 0, 0), d.part)), InadmissibleStart);
    ScoringOptions o;
    o.max_iter = 1;
    o.max_newton = 0;
    o.tol = 1e-300;
    try {
        fisher_scoring(s, GammaVector::zero(d.part), o);
        FAIL();
    } catch (const NotConverged& e) {
        const std::string m = e.what();
        EXPECT_NE(m.find("best iterate"), std::string::npos);
        EXPECT_NE(m.find("score norm"), std::string::npos);
    }
}

TEST(FisherScoring, MomentStartIsAdmissible) {
    const Dataset d = sample_dataset(fixtures::design_scenario(300, 1, 5), 0);
    const BlockSummaries s = block_summaries(ols_fit(d).residuals, d.part);
    const std::optional<GammaVector> m = moment_start(s);
    ASSERT_TRUE(m.has_value());
    EXPECT_TRUE(is_admissible(*m));
}

TEST(Fit, OlsEqualsDenseFgls) {
    for (int t = 0; t < 5; ++t) {
        const Dataset d = small_dataset(100 + t, PartitionVector({4, 6}), 40, 2);
        const FitResult f = fit(d);
        const Eigen::MatrixXd w = expand_dense(gamma_to_omega(f.gamma));
        const Eigen::MatrixXd fgls = reference::dense_weighted_beta(d.X, d.Y, w);
        EXPECT_LT((fgls - f.beta).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((fgls_beta(d, gamma_to_omega(f.gamma)) - f.beta).cwiseAbs().maxCoeff(), 1e-8);
        // joint stationarity: the beta block of the score vanishes too
        const Eigen::MatrixXd bs = reference::dense_beta_score(d.X, d.Y, f.beta, w);
        EXPECT_LT(bs.cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(Fit, FglsCheckReportsDifference) {
    const Dataset d = small_dataset(7, PartitionVector({3, 3, 4}), 50, 2);
    FitOptions o;
    o.fgls_check = true;
    const FitResult f = fit(d, o);
    ASSERT_TRUE(f.diagnostics.fgls_max_diff.has_value());
    EXPECT_LT(*f.diagnostics.fgls_max_diff, 1e-8);
}

TEST(Fit, StandardErrorsMatchDenseKronecker) {
    const Dataset d = small_dataset(8, PartitionVector({3, 4}), 40, 2);
    const FitResult f = fit(d);
    const Eigen::MatrixXd dense = f.beta_cov.dense();
    for (int r = 0; r < f.R(); ++r)
        for (int q = 0; q < f.p(); ++q) {
            EXPECT_NEAR(f.beta_se(r, q), std::sqrt(dense(r * 2 + q, r * 2 + q)), 1e-14);
            EXPECT_NEAR(f.beta_se(r, q), std::sqrt(f.sigma()(r, r) * f.beta_cov.covariate(q, q)), 1e-14);
        }
    EXPECT_TRUE(is_ub_positive_definite(f.sigma()));
    EXPECT_EQ(f.beta_vector()(1 * 2 + 1), f.beta(1, 1));
    EXPECT_LT((f.rho.values - gamma_to_rho(f.gamma).values).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_GT(f.diagnostics.fisher_eigenvalues_per_n.minCoeff(), 0.0);
}

TEST(Fit, ZeroNoiseCompletes) {
    std::mt19937_64 rng(9);
    const PartitionVector p({3, 4});
    Eigen::MatrixXd x = fixtures::normal_matrix(rng, 20, 2);
    x.col(0).setOnes();
    const Eigen::MatrixXd b0 = fixtures::normal_matrix(rng, 7, 2);
    const FitResult f = fit(Dataset(x, x * b0.transpose(), p));
    EXPECT_LT((f.beta - b0).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_FALSE(f.diagnostics.warnings.empty());
    EXPECT_TRUE(is_ub_positive_definite(f.sigma()));
}

TEST(Fit, Deterministic) {
    const Dataset d = sample_dataset(fixtures::design_scenario(200, 1, 10), 0);
    const FitResult a = fit(d);
    const FitResult b = fit(d);
    EXPECT_EQ(a.beta, b.beta);
    EXPECT_EQ(a.gamma.values, b.gamma.values);
    EXPECT_EQ(a.gamma_cov, b.gamma_cov);
    EXPECT_EQ(a.sigma().B(), b.sigma().B());
    set_num_threads(3);
    const FitResult c = fit(d);
    set_num_threads(0);
    EXPECT_EQ(a.gamma.values, c.gamma.values);
    EXPECT_EQ(a.beta, c.beta);
}

TEST(Fit, ConsistencyTrend) {
    double prev = 1e300;
    for (long n : {100, 200, 300}) {
        const ScenarioConfig c = fixtures::design_scenario(n, 40, 21);
        double err = 0.0;
        for (int r = 0; r < c.replicates; ++r) {
            const FitResult f = fit(sample_dataset(c, r));
            err += (f.gamma.values - c.true_gamma.values).norm();
        }
        err /= c.replicates;
        EXPECT_LT(err, prev) << "n = " << n;
        prev = err;
    }
}
