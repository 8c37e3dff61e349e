#pragma once

#include "ubmaud/param_maps.hpp"
#include "ubmaud/partition.hpp"
#include "ubmaud/ub_matrix.hpp"

#include <Eigen/Core>

namespace ubmaud {

/// Sufficient reductions of the residual matrix S = n^{-1} E^T E:
/// traces(g) = tr(S_gg) and sums(g, h) = sum(S_gh). S itself is never formed.
struct BlockSummaries {
    Eigen::VectorXd traces;
    Eigen::MatrixXd sums;
    long n = 0;
    PartitionVector part;
};

/// From an n x R residual matrix. DimensionMismatch if the column count
/// differs from R or n < 1.
BlockSummaries block_summaries(const Eigen::MatrixXd& residuals, const PartitionVector& part);

/// Profile log-likelihood in gamma evaluated from block summaries.
double log_likelihood(const GammaVector& gamma, const BlockSummaries& s);

/// Partial derivatives of (A_Omega, B_Omega) with respect to gamma_j.
struct OmegaPartial {
    Eigen::VectorXd dA;
    Eigen::MatrixXd dB;

    UbProduct as_ub(const PartitionVector& part) const { return {dA, dB, part}; }
};

OmegaPartial omega_partials(const GammaVector& gamma, int j);

/// d log-likelihood / d gamma, length G(G+1)/2.
Eigen::VectorXd score(const GammaVector& gamma, const BlockSummaries& s);

/// Expected information psi_jj' = (n/2) tr{dOmega_j Sigma dOmega_j' Sigma}.
Eigen::MatrixXd fisher_information(const GammaVector& gamma, long n);

/// Score and information sharing one Sigma evaluation.
struct ScoreAndInformation {
    double loglik;
    Eigen::VectorXd score;
    Eigen::MatrixXd fisher;
};
ScoreAndInformation evaluate_likelihood(const GammaVector& gamma, const BlockSummaries& s);

} // namespace ubmaud
