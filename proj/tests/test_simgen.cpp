#include "fixtures.hpp"

#include "ubmaud/error.hpp"
#include "ubmaud/reference.hpp"
#include "ubmaud/simgen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>

using namespace ubmaud;

namespace {

Eigen::MatrixXd empirical_cov(const Eigen::MatrixXd& e) {
    const Eigen::MatrixXd c = e.rowwise() - e.colwise().mean();
    return c.transpose() * c / (e.rows() - 1.0);
}

} // namespace

TEST(Scenario, Validation) {
    ScenarioConfig c = fixtures::design_scenario(50, 1, 1);
    EXPECT_NO_THROW(c.validate());
    c.noise_level = -1;
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = fixtures::design_scenario(50, 0, 1);
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = fixtures::design_scenario(50, 1, 1);
    c.true_gamma = GammaVector(Eigen::VectorXd::Constant(6, -1.0), c.part);
    EXPECT_THROW(c.validate(), InadmissibleGamma);
    EXPECT_THROW(sample_dataset(c, 0), InadmissibleGamma);
    c = fixtures::design_scenario(50, 1, 1);
    c.true_beta = Eigen::MatrixXd::Zero(3, 2);
    EXPECT_THROW(c.validate(), InvalidConfig);
}

TEST(Scenario, BetaRule) {
    const ScenarioConfig c = fixtures::design_scenario(50, 1, 3);
    const Eigen::MatrixXd b = scenario_beta(c);
    EXPECT_EQ(b, scenario_beta(c));
    int nonzero_rows = 0;
    for (int r = 0; r < b.rows(); ++r) {
        if (b.row(r).isZero()) continue;
        ++nonzero_rows;
        EXPECT_NE(b(r, 0), b(r, 1));
        for (int q = 0; q < 2; ++q) {
            EXPECT_GE(std::abs(b(r, q)), 0.5);
            EXPECT_LE(std::abs(b(r, q)), 1.5);
        }
    }
    EXPECT_EQ(nonzero_rows, 9 + 12 + 18);
}

TEST(Sampling, NullIsStandardNormal) {
    ScenarioConfig c;
    c.n = 5000;
    c.part = PartitionVector({3, 3});
    c.true_gamma = GammaVector::zero(c.part);
    c.true_beta = Eigen::MatrixXd::Zero(6, 2);
    const Dataset d = sample_dataset(c, 0);
    const Eigen::MatrixXd s = empirical_cov(d.Y);
    const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(6, 6);
    EXPECT_LT((s - i).norm() / i.norm(), 0.05);
    EXPECT_EQ(d.X.col(0), Eigen::VectorXd::Ones(5000));
}

namespace {

// E||S - Sigma||_F^2 = (tr(Sigma)^2 + ||Sigma||_F^2) / n for Gaussian rows
double sampling_floor(const Eigen::MatrixXd& sigma, long n) {
    const double f2 = sigma.squaredNorm();
    return std::sqrt((sigma.trace() * sigma.trace() + f2) / (static_cast<double>(n) * f2));
}

void check_samplers(const ScenarioConfig& c, double tol) {
    const Eigen::MatrixXd truth = expand_dense(gamma_to_sigma(c.true_gamma));
    const Eigen::MatrixXd ub = empirical_cov(sample_dataset(c, 0).Y);
    std::mt19937_64 rng(99);
    const Eigen::LLT<Eigen::MatrixXd> llt(truth);
    const Eigen::MatrixXd dense = fixtures::normal_matrix(rng, c.n, c.part.R()) * llt.matrixU();
    const Eigen::MatrixXd dc = empirical_cov(dense);
    EXPECT_LT((ub - truth).norm() / truth.norm(), tol);
    EXPECT_LT((dc - truth).norm() / truth.norm(), tol);
    EXPECT_LT((dc - ub).norm() / truth.norm(), std::sqrt(2.0) * tol);
}

} // namespace

TEST(Sampling, UbAndCholeskySamplersAgree) {
    ScenarioConfig c;
    c.n = 5000;
    c.part = PartitionVector({3, 3, 4});
    std::mt19937_64 rng(4);
    c.true_gamma = reference::random_gamma(rng, c.part, 1.0);
    c.true_beta = Eigen::MatrixXd::Zero(10, 2);
    check_samplers(c, 0.05);
}

TEST(Sampling, DesignCovarianceWithinSamplingError) {
    // at R = 130 the sampling error of S alone is about 0.12 in relative
    // Frobenius norm, so the bound is set from the Wishart moments
    ScenarioConfig c = fixtures::design_scenario(5000, 1, 4);
    c.true_beta = Eigen::MatrixXd::Zero(130, 2);
    const double floor = sampling_floor(expand_dense(gamma_to_sigma(c.true_gamma)), c.n);
    EXPECT_GT(floor, 0.05);
    check_samplers(c, 1.25 * floor);
}

TEST(Sampling, DeterministicAcrossRunsAndThreads) {
    const ScenarioConfig c = fixtures::design_scenario(300, 3, 5);
    const Dataset a = sample_dataset(c, 2);
    set_num_threads(3);
    const Dataset b = sample_dataset(c, 2);
    set_num_threads(0);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.Y, b.Y);
    EXPECT_NE(a.Y, sample_dataset(c, 1).Y);
}

TEST(Perturbation, LimitsAndMean) {
    const PartitionVector p({50, 50});
    const UniformBlockMatrix s = gamma_to_sigma(GammaVector(Eigen::Vector3d(0.2, 0.05, -0.1), p));
    std::mt19937_64 rng(6);
    const Eigen::MatrixXd tiny = perturb_covariance(s, 1e-14, rng);
    EXPECT_LT((tiny - expand_dense(s)).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_THROW(perturb_covariance(s, 0.0, rng), InvalidConfig);

    const Eigen::MatrixXd base = expand_dense(s);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(100, 100);
    const int draws = 500;
    for (int t = 0; t < draws; ++t) {
        const Eigen::MatrixXd e = perturb_covariance(s, 0.03, rng) - base;
        EXPECT_EQ(e, e.transpose());
        if (t == 0) {
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e, Eigen::EigenvaluesOnly);
            EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
        }
        mean += e;
    }
    mean /= draws;
    const double target = 0.03 * 100;
    EXPECT_LT(std::abs(mean.diagonal().mean() - target), 0.1 * target);
    EXPECT_LT((mean.diagonal().array() - target).abs().maxCoeff(), 0.1 * target);
}

TEST(Study, ReportShapeAndReproducibility) {
    ScenarioConfig c = fixtures::design_scenario(120, 12, 7);
    const McReport a = run_study(c, 1);
    const McReport b = run_study(c, 3);
    const McReport s = run_study_serial(c);
    ASSERT_EQ(a.replicates.size(), 12u);
    EXPECT_EQ(a.failures, 0);
    ASSERT_EQ(a.parameters.size(), 6u);
    EXPECT_EQ(a.workers, 1);
    EXPECT_EQ(b.workers, 3);
    for (std::size_t i = 0; i < a.replicates.size(); ++i) {
        EXPECT_EQ(a.replicates[i].gamma_hat, b.replicates[i].gamma_hat);
        EXPECT_EQ(a.replicates[i].gamma_hat, s.replicates[i].gamma_hat);
        EXPECT_EQ(a.replicates[i].loss_maud_frobenius, b.replicates[i].loss_maud_frobenius);
    }
    for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_EQ(a.parameters[j].bias, b.parameters[j].bias);
        EXPECT_GE(a.parameters[j].coverage, 0.0);
        EXPECT_LE(a.parameters[j].coverage, 1.0);
        EXPECT_GE(a.parameters[j].mcsd, 0.0);
    }
    EXPECT_EQ(a.median_loss_maud_frobenius, s.median_loss_maud_frobenius);
    EXPECT_EQ(a.type1_rate, b.type1_rate);
}

TEST(Study, FailuresAreRecordedNotThrown) {
    ScenarioConfig c = fixtures::design_scenario(5, 3, 8); // n too small for 6 parameters
    const McReport r = run_study(c);
    EXPECT_EQ(r.failures, 3);
    for (const ReplicateRecord& rec : r.replicates) {
        EXPECT_FALSE(rec.ok);
        EXPECT_NE(rec.error.find("InvalidDataset"), std::string::npos);
    }
}

TEST(Study, NoisySweepRuns) {
    ScenarioConfig c = fixtures::design_scenario(50, 6, 9);
    c.part = PartitionVector({30, 30, 40});
    c.true_gamma = fixtures::design_gamma(c.part);
    c.noise_level = 0.03;
    const McReport r = run_study(c);
    EXPECT_EQ(r.failures, 0);
    EXPECT_GT(r.median_loss_maud_frobenius, 0.0);
}

TEST(Median, Basic) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
    EXPECT_EQ(median({}), 0.0);
}
