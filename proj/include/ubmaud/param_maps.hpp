#pragma once

#include "ubmaud/partition.hpp"
#include "ubmaud/ub_matrix.hpp"

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace ubmaud {

/// Index map j <-> (g, g') over the upper triangle including the diagonal,
/// row-major: (1,1), (1,2), ..., (1,G), (2,2), ..., (G,G). Indices here are
/// 0-based.
int pair_index(int g, int h, int G);
std::pair<int, int> index_pair(int j, int G);

/// Scaled dependence parameters gamma in row-major-upper order.
struct GammaVector {
    Eigen::VectorXd values;
    PartitionVector part;

    /// DimensionMismatch unless values has length G(G+1)/2.
    GammaVector(Eigen::VectorXd v, PartitionVector p);
    static GammaVector zero(const PartitionVector& p);

    double operator()(int g, int h) const { return values(pair_index(g, h, part.G())); }
    /// Symmetric G x G matrix (gamma_gh).
    Eigen::MatrixXd matrix() const;
    static GammaVector from_matrix(const Eigen::MatrixXd& m, const PartitionVector& p);
};

/// Unscaled dependence parameters rho, same order as GammaVector.
struct RhoVector {
    Eigen::VectorXd values;
    PartitionVector part;

    RhoVector(Eigen::VectorXd v, PartitionVector p);
};

RhoVector gamma_to_rho(const GammaVector& g);
GammaVector rho_to_gamma(const RhoVector& r);

/// A_Upsilon = diag(-gamma_gg), B_Upsilon = (gamma_gh).
UniformBlockMatrix gamma_to_upsilon(const GammaVector& g);

/// Omega = (I - Upsilon)^2 with unit error variances.
UniformBlockMatrix gamma_to_omega(const GammaVector& g);

/// Sigma = Omega^{-1}; NotPositiveDefinite unless Omega is positive definite.
UniformBlockMatrix omega_to_sigma(const UniformBlockMatrix& omega);

/// Sigma(gamma), with the admissibility check on Omega.
UniformBlockMatrix gamma_to_sigma(const GammaVector& g);

/// Throws NotPositiveDefinite (naming the offending quantity) unless
/// Omega(gamma) is positive definite.
void require_admissible(const GammaVector& g);
bool is_admissible(const GammaVector& g);

enum class DiagonalReconciliation {
    Strict,  ///< NotMaudRepresentable when -A_Upsilon and diag(B_Upsilon) disagree
    Average, ///< average the two readings of gamma_gg
};

struct SigmaToGammaResult {
    GammaVector gamma;
    unsigned branch = 0;         ///< Riccati branch used for I - Upsilon
    double diagonal_mismatch = 0; ///< max_g |-(A_Upsilon)_gg - (B_Upsilon)_gg|
};

/// Inverse square-inverse transform: Omega = Sigma^{-1}, I - Upsilon is the
/// square root of Omega with A = A_Omega^{1/2} whose Riccati branch gives
/// I - Upsilon a unit diagonal, and gamma is read off Upsilon.
SigmaToGammaResult sigma_to_gamma_detailed(const UniformBlockMatrix& sigma,
                                          DiagonalReconciliation mode = DiagonalReconciliation::Strict,
                                          double tol = 1e-8);
GammaVector sigma_to_gamma(const UniformBlockMatrix& sigma);

/// Plug-in estimators of Upsilon, Omega and Sigma at a gamma estimate.
struct PlugInEstimators {
    UniformBlockMatrix upsilon;
    UniformBlockMatrix omega;
    UniformBlockMatrix sigma;
};
PlugInEstimators plug_in_estimators(const GammaVector& gamma_hat);

} // namespace ubmaud
