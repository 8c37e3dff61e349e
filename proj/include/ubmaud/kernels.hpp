#pragma once

// Data-parallel kernels. Each has an OpenMP version used by the library and a
// plain serial reference kept for tests and the benchmark. The parallel
// versions assign every output element to a single thread with a fixed
// accumulation order, so results do not depend on the worker count.

#include "ubmaud/likelihood.hpp"
#include "ubmaud/ub_matrix.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <vector>

namespace ubmaud {

/// Caps the OpenMP worker count used by every kernel (<= 0 restores the
/// runtime default).
void set_num_threads(int n);
int num_threads();

/// Reads UBMAUD_THREADS from the environment, if set.
void configure_threads_from_env();

namespace kernels {

BlockSummaries block_summaries_serial(const Eigen::MatrixXd& residuals, const PartitionVector& part);
BlockSummaries block_summaries_parallel(const Eigen::MatrixXd& residuals, const PartitionVector& part);

/// scale * tr(P_j P_k) over all pairs, where P_j = dOmega_j Sigma.
Eigen::MatrixXd fisher_matrix_serial(const std::vector<UbProduct>& weighted_partials, double scale);
Eigen::MatrixXd fisher_matrix_parallel(const std::vector<UbProduct>& weighted_partials, double scale);

/// Rows of `noise` (n x R) mapped through the UB matrix: out_i = N noise_i.
Eigen::MatrixXd ub_apply_rows_serial(const UniformBlockMatrix& m, const Eigen::MatrixXd& noise);
Eigen::MatrixXd ub_apply_rows_parallel(const UniformBlockMatrix& m, const Eigen::MatrixXd& noise);

/// Per-feature OLS: coefficients (p x R) solving (X^T X) coef = X^T Y, and
/// residuals Y - X coef. The parallel version works on fixed 64-column panels.
struct OlsPieces {
    Eigen::MatrixXd coef;
    Eigen::MatrixXd residuals;
};
using XtxFactor = Eigen::LLT<Eigen::MatrixXd>;
OlsPieces ols_serial(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const XtxFactor& xtx);
OlsPieces ols_parallel(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const XtxFactor& xtx);

} // namespace kernels
} // namespace ubmaud
