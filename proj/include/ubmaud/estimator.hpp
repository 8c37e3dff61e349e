#pragma once

#include "ubmaud/covariance.hpp"
#include "ubmaud/likelihood.hpp"
#include "ubmaud/param_maps.hpp"
#include "ubmaud/partition.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace ubmaud {

/// Covariates X (n x p, first column usually the intercept) and outcomes
/// Y (n x R) whose columns are grouped contiguously by community.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;
    PartitionVector part;

    /// DimensionMismatch / PartitionMismatch on inconsistent shapes,
    /// InvalidDataset unless n > max(p, G(G+1)/2), RankDeficient when X^T X
    /// has condition number above 1e12.
    Dataset(Eigen::MatrixXd x, Eigen::MatrixXd y, PartitionVector p);

    long n() const { return static_cast<long>(X.rows()); }
    int p() const { return static_cast<int>(X.cols()); }
    int R() const { return part.R(); }
};

struct OlsResult {
    Eigen::MatrixXd beta;      ///< R x p
    Eigen::MatrixXd residuals; ///< n x R
    Eigen::MatrixXd xtx_inv;   ///< (X^T X)^{-1}
};

/// Feature-wise least squares.
OlsResult ols_fit(const Dataset& d);

struct ScoringOptions {
    double tol = 1e-8;   ///< on the sup-norm of the score
    int max_iter = 100;
    int max_halvings = 30;
    /// Newton steps on the analytic score allowed after scoring stalls.
    int max_newton = 20;
};

struct ScoringTrace {
    int iterations = 0;
    int halvings = 0;
    int newton_steps = 0;
    double score_norm = 0.0;
    double loglik = 0.0;
};

struct ScoringResult {
    GammaVector gamma;
    ScoringTrace trace;
};

/// Fisher scoring from `init` with step halving on inadmissible or
/// likelihood-decreasing candidates. If scoring stalls before the tolerance
/// is met, Newton steps on the analytic score finish the job.
/// InadmissibleStart if Omega(init) is not positive definite, NotConverged (with the best
/// iterate and its score norm in the message) when the tolerance is not met.
ScoringResult fisher_scoring(const BlockSummaries& s, const GammaVector& init, const ScoringOptions& opts = {});

/// Moment-based start: block means of S give a provisional UB covariance,
/// which is mapped back with the diagonal reconciled by averaging. Empty
/// when that provisional matrix or its image is not admissible.
std::optional<GammaVector> moment_start(const BlockSummaries& s);

struct FitOptions {
    ScoringOptions scoring;
    /// Also run scoring from gamma = 0 and keep the better optimum.
    bool dual_start = true;
    double start_agreement_tol = 1e-6;
    /// Run the explicit FGLS iteration and report max |beta_OLS - beta_FGLS|.
    bool fgls_check = false;
};

struct FitDiagnostics {
    int iterations = 0;
    double score_norm = 0.0;
    double loglik = 0.0;
    std::string start; ///< "moment" or "zero"
    Eigen::VectorXd fisher_eigenvalues_per_n;
    std::optional<double> fgls_max_diff;
    std::vector<std::string> warnings;
};

struct FitResult {
    Eigen::MatrixXd beta; ///< R x p
    KroneckerCovariance beta_cov;
    GammaVector gamma;
    RhoVector rho;
    Eigen::MatrixXd gamma_cov; ///< inverse Fisher information at gamma
    Eigen::MatrixXd fisher;
    BlockSummaries summaries;
    long n = 0;
    FitDiagnostics diagnostics;

    int R() const { return static_cast<int>(beta.rows()); }
    int p() const { return static_cast<int>(beta.cols()); }
    const PartitionVector& part() const { return gamma.part; }
    /// vec(beta) with index r * p + q.
    Eigen::VectorXd beta_vector() const;
    double beta_se(int r, int q) const;
    const UniformBlockMatrix& sigma() const { return std::get<UniformBlockMatrix>(beta_cov.outcome); }
};

FitResult fit(const Dataset& d, const FitOptions& opts = {});

/// Weighted estimator with weight I_n kron Omega, evaluated through the UB
/// structure: solves (X^T X kron Omega) vec = (X^T kron Omega) vec(Y).
Eigen::MatrixXd fgls_beta(const Dataset& d, const UniformBlockMatrix& omega);

/// Explicit FGLS iteration from the OLS fit: refit gamma to the current
/// residuals, reweight, repeat until beta stops moving. Returns the final beta.
Eigen::MatrixXd fgls_iterate(const Dataset& d, const FitResult& f, int max_iter = 10);

} // namespace ubmaud
