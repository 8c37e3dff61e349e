#pragma once

// Dense R x R counterparts of the compressed computations, plus random
// instance generators. Used by the tests, the validate command and the
// benchmark; never on the estimation path.

#include "ubmaud/likelihood.hpp"
#include "ubmaud/param_maps.hpp"
#include "ubmaud/ub_matrix.hpp"

#include <Eigen/Core>

#include <random>

namespace ubmaud::reference {

/// Partition with G and every L_g drawn uniformly from the given ranges.
PartitionVector random_partition(std::mt19937_64& rng, int g_min, int g_max, int l_min, int l_max);

/// Symmetric UB matrix with A, B entries uniform on [-1, 1].
UniformBlockMatrix random_ub(std::mt19937_64& rng, const PartitionVector& part);

/// Positive-definite UB matrix: A in [0.5, 2], B = c M M^T / max(L) with
/// 0 < c < 1 and M standard normal, minus a small diagonal shift that still
/// keeps Delta positive.
UniformBlockMatrix random_pd_ub(std::mt19937_64& rng, const PartitionVector& part);

/// Random gamma in the admissible region, with I - Upsilon invertible and
/// 1 + gamma_gg > 0. `spread` in (0, 1] scales the dependence strength.
GammaVector random_gamma(std::mt19937_64& rng, const PartitionVector& part, double spread);

Eigen::MatrixXd dense_upsilon(const GammaVector& g);
/// (I - Upsilon)^2 formed densely.
Eigen::MatrixXd dense_omega(const GammaVector& g);
/// ((I - Upsilon)^{-1})^2 formed densely.
Eigen::MatrixXd dense_sigma(const GammaVector& g);

/// S = n^{-1} E^T E.
Eigen::MatrixXd dense_residual_gram(const Eigen::MatrixXd& residuals);

/// Log-likelihood of N(0, Sigma) rows: -(n/2)[R log 2 pi + log det Sigma + tr(Sigma^{-1} S)].
double dense_log_likelihood(const GammaVector& g, const Eigen::MatrixXd& residuals);

/// dOmega / dgamma_j = -(dU K + K dU) with K = I - Upsilon, formed densely.
Eigen::MatrixXd dense_omega_partial(const GammaVector& g, int j);

/// (n/2) tr(dOmega_j Sigma dOmega_k Sigma) with dense matrices.
Eigen::MatrixXd dense_fisher(const GammaVector& g, long n);

/// Central differences with step 1e-6 max(1, |gamma_j|).
Eigen::VectorXd fd_score(const GammaVector& g, const BlockSummaries& s);
/// Central differences of (A_Omega, B_Omega).
OmegaPartial fd_omega_partial(const GammaVector& g, int j);

/// Stacked (nR) x (Rp) weighted least squares {x^T (I kron W) x}^{-1} x^T (I kron W) y,
/// with x_i = I_R kron x_i^T. Returns R x p.
Eigen::MatrixXd dense_weighted_beta(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W);

/// The beta block of the joint score: sum_i x_i^T (Omega) (y_i - B x_i), as R x p.
Eigen::MatrixXd dense_beta_score(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& beta,
                                 const Eigen::MatrixXd& omega);

} // namespace ubmaud::reference
