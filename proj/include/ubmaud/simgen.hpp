#pragma once

#include "ubmaud/estimator.hpp"
#include "ubmaud/param_maps.hpp"
#include "ubmaud/partition.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ubmaud {

/// Rule for drawing the true coefficients: in every community the given
/// fraction of features get nonzero coefficients, each entry uniform on
/// +-[min_abs, max_abs], with distinct entries within a feature.
struct BetaRule {
    double nonzero_fraction = 0.3;
    double min_abs = 0.5;
    double max_abs = 1.5;
};

struct ScenarioConfig {
    std::string name = "scenario";
    long n = 100;
    PartitionVector part{std::vector<int>{2}};
    int p = 2; ///< intercept plus p - 1 standard normal covariates
    GammaVector true_gamma{Eigen::VectorXd::Zero(1), PartitionVector{std::vector<int>{2}}};
    std::optional<Eigen::MatrixXd> true_beta; ///< R x p; drawn from beta_rule when empty
    BetaRule beta_rule;
    double noise_level = 0.0; ///< Wishart perturbation scale sigma
    int replicates = 200;
    std::uint64_t seed = 1;
    double alpha = 0.05; ///< BH level for the coefficient tests

    /// InvalidConfig on inconsistent fields, InadmissibleGamma when the true
    /// gamma gives an indefinite Omega or a singular I - Upsilon.
    void validate() const;
};

/// Independent stream for (seed, replicate, purpose).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t purpose);

/// Scenario coefficients (the fixed matrix or a draw from the rule).
Eigen::MatrixXd scenario_beta(const ScenarioConfig& cfg);

Dataset sample_dataset(const ScenarioConfig& cfg, int replicate);
Dataset sample_dataset(const ScenarioConfig& cfg, const Eigen::MatrixXd& beta, int replicate);

/// Covariance used for replicate `replicate`: expand_dense(Sigma(gamma)) plus,
/// when noise_level > 0, a Wishart(R, sigma I) draw.
Eigen::MatrixXd replicate_covariance(const ScenarioConfig& cfg, int replicate);

/// expand_dense(sigma) + s M^T M with M an R x R standard normal matrix,
/// redrawn up to 5 times until the sum is numerically positive definite.
Eigen::MatrixXd perturb_covariance(const UniformBlockMatrix& sigma, double s, std::mt19937_64& rng);

struct ReplicateRecord {
    int index = 0;
    bool ok = false;
    std::string error;
    Eigen::VectorXd gamma_hat;
    Eigen::VectorXd gamma_se;
    int iterations = 0;
    double loss_maud_frobenius = 0.0;
    double loss_maud_spectral = 0.0;
    double loss_diagonal_frobenius = 0.0;
    double loss_diagonal_spectral = 0.0;
    int nulls = 0;           ///< truly zero coefficients
    int null_rejections = 0; ///< per-test rejections at alpha among them
    int bh_rejections = 0;
    int bh_false_rejections = 0;
    std::vector<std::string> warnings;
};

struct ParameterSummary {
    std::string label;
    double truth = 0.0;
    double bias = 0.0;
    double bias_mcse = 0.0; ///< Monte Carlo standard error of the bias
    double mcsd = 0.0;
    double ase = 0.0;
    double coverage = 0.0;  ///< 95% Wald interval
};

struct McReport {
    ScenarioConfig config;
    Eigen::MatrixXd true_beta;
    std::vector<ReplicateRecord> replicates;
    std::vector<ParameterSummary> parameters;
    int failures = 0;
    double median_loss_maud_frobenius = 0.0;
    double median_loss_diagonal_frobenius = 0.0;
    double median_loss_maud_spectral = 0.0;
    double median_loss_diagonal_spectral = 0.0;
    double type1_rate = 0.0;     ///< per-test rejections among null coefficients
    double empirical_fdr = 0.0;  ///< mean false discovery proportion under BH
    double runtime_seconds = 0.0;
    int workers = 1;
};

/// Monte Carlo study. Replicates run in parallel on `workers` threads (0 for
/// the configured default); the report does not depend on the worker count.
McReport run_study(const ScenarioConfig& cfg, int workers = 0);

/// Replicate loop run serially, kept as the reference for run_study.
McReport run_study_serial(const ScenarioConfig& cfg);

double median(std::vector<double> v);

} // namespace ubmaud
