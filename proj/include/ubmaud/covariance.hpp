#pragma once

#include "ubmaud/ub_matrix.hpp"

#include <Eigen/Core>

#include <functional>
#include <variant>

namespace ubmaud {

/// Diagonal R x R factor, e.g. per-feature residual variances.
struct DiagonalFactor {
    Eigen::VectorXd d;
};

/// R x R outcome-side factor of a Kronecker covariance.
using OutcomeFactor = std::variant<UniformBlockMatrix, DiagonalFactor, Eigen::MatrixXd>;

int factor_dim(const OutcomeFactor& f);
double factor_entry(const OutcomeFactor& f, int r, int c);
Eigen::MatrixXd factor_dense(const OutcomeFactor& f);
/// Each column of x (R x k) multiplied by the factor.
Eigen::MatrixXd factor_apply(const OutcomeFactor& f, const Eigen::MatrixXd& x);
/// <F1, F2> = tr(F1 F2) for symmetric factors, without densifying UB or diagonal inputs.
double factor_inner(const OutcomeFactor& x, const OutcomeFactor& y);
double factor_frobenius_norm(const OutcomeFactor& f);
double factor_spectral_norm(const OutcomeFactor& f);
/// ||x - y||_F and ||x - y||_2.
double factor_frobenius_distance(const OutcomeFactor& x, const OutcomeFactor& y);
double factor_spectral_distance(const OutcomeFactor& x, const OutcomeFactor& y);

/// Largest |eigenvalue| of a symmetric linear operator on R^dim, by Lanczos
/// with full reorthogonalisation.
double symmetric_operator_norm(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply, int dim);

/// Covariance of vec(beta) = outcome (R x R) kron covariate (p x p), kept
/// factored. beta is indexed r * p + q for feature r and covariate q.
struct KroneckerCovariance {
    OutcomeFactor outcome;
    Eigen::MatrixXd covariate;

    int R() const { return factor_dim(outcome); }
    int p() const { return static_cast<int>(covariate.rows()); }

    /// Cov(beta_r^(q), beta_r'^(q')).
    double entry(int r, int q, int r2, int q2) const {
        return factor_entry(outcome, r, r2) * covariate(q, q2);
    }
    double variance(int r, int q) const { return entry(r, q, r, q); }

    /// Rp x Rp dense form, for small instances only.
    Eigen::MatrixXd dense() const;
};

} // namespace ubmaud
