#pragma once

#include "ubmaud/partition.hpp"

#include <Eigen/Core>

#include <vector>

namespace ubmaud {

class UniformBlockMatrix;

/// Generalized uniform-block triple (A, B, l) where B need not be symmetric.
///
/// Products of two symmetric UB matrices keep the block pattern but lose
/// symmetry; every closed form that only depends on the block pattern
/// (dense expansion, Delta, products, traces) is defined on this type.
struct UbProduct {
    Eigen::VectorXd A; ///< diagonal of the G x G matrix A
    Eigen::MatrixXd B; ///< general G x G
    PartitionVector part;

    /// Delta = A + B L.
    Eigen::MatrixXd delta() const;
};

/// Symmetric uniform-block matrix N(A, B, l), stored compressed.
///
/// Diagonal block g is a_gg I + b_gg J, off-diagonal block (g, g') is
/// b_gg' 1. Only G + G(G+1)/2 reals are kept; the R x R form is produced by
/// expand_dense() on request.
class UniformBlockMatrix {
public:
    /// Throws DimensionMismatch on wrong sizes and StructureViolation when B
    /// is not symmetric to within 1e-8 relative; B is then mirrored so that
    /// b_gg' == b_g'g holds bit-exactly.
    UniformBlockMatrix(Eigen::VectorXd A, Eigen::MatrixXd B, PartitionVector part);

    static UniformBlockMatrix identity(const PartitionVector& part);
    static UniformBlockMatrix zero(const PartitionVector& part);

    const Eigen::VectorXd& A() const noexcept { return a_; }
    const Eigen::MatrixXd& B() const noexcept { return b_; }
    const PartitionVector& part() const noexcept { return part_; }
    int G() const noexcept { return part_.G(); }
    int R() const noexcept { return part_.R(); }

    /// Delta = A + B L (generally not symmetric).
    Eigen::MatrixXd delta() const;

    /// A + L^{1/2} B L^{1/2}; similar to Delta and symmetric, so the
    /// eigenvalues of Delta are real and obtained from this matrix.
    Eigen::MatrixXd symmetric_delta() const;

    /// Entry (r, c) of the dense expansion.
    double operator()(int r, int c) const;

    UbProduct general() const { return UbProduct{a_, b_, part_}; }

    UniformBlockMatrix operator-() const;
    UniformBlockMatrix scaled(double c) const;

private:
    Eigen::VectorXd a_;
    Eigen::MatrixXd b_;
    PartitionVector part_;
};

/// A o I(l) + B o J(l).
Eigen::MatrixXd expand_dense(const UniformBlockMatrix& m);
Eigen::MatrixXd expand_dense(const UbProduct& m);

/// Fits (A, B) by block means and checks that every entry lies within tol of
/// the fitted pattern; StructureViolation otherwise.
UniformBlockMatrix extract_ub(const Eigen::MatrixXd& dense, const PartitionVector& part, double tol);

UniformBlockMatrix ub_add(const UniformBlockMatrix& x, const UniformBlockMatrix& y);
UniformBlockMatrix ub_sub(const UniformBlockMatrix& x, const UniformBlockMatrix& y);

/// A* = A1 A2, B* = A1 B2 + B1 A2 + B1 L B2.
UbProduct ub_mul(const UbProduct& x, const UbProduct& y);
inline UbProduct ub_mul(const UniformBlockMatrix& x, const UniformBlockMatrix& y) {
    return ub_mul(x.general(), y.general());
}

/// Symmetric view of a generalized triple; StructureViolation if B is not
/// symmetric within tol (relative to max|B|).
UniformBlockMatrix to_symmetric(const UbProduct& m, double tol = 1e-10);

/// a_gg with multiplicity L_g - 1, followed by the G eigenvalues of Delta.
/// Returned sorted ascending.
Eigen::VectorXd ub_eigenvalues(const UniformBlockMatrix& m);

double ub_det(const UniformBlockMatrix& m);

/// sum_g (L_g - 1) log a_gg + log det Delta. NotPositiveDefinite unless the
/// matrix is positive definite (a_gg > 0, eigenvalues of Delta > 0).
double ub_log_det(const UniformBlockMatrix& m);

/// A* = A^{-1}, B* = -Delta^{-1} B A^{-1}, symmetrized. Singular when
/// min|a| < 1e-12 max|a| or cond(Delta) > 1e12.
UniformBlockMatrix ub_inverse(const UniformBlockMatrix& m);

/// Principal (positive-definite) square root.
UniformBlockMatrix ub_sqrt(const UniformBlockMatrix& m);

/// Square root on an arbitrary Riccati branch: A* = A^{1/2} and
/// Delta* = L^{-1/2} Q diag(s_k sqrt(mu_k)) Q^T L^{1/2}, where Q diag(mu) Q^T
/// is the eigendecomposition of symmetric_delta() (ascending mu) and
/// s_k = -1 when bit k of branch is set. branch == 0 is ub_sqrt().
UniformBlockMatrix ub_sqrt_branch(const UniformBlockMatrix& m, unsigned branch);

/// tr[M N] using only per-block traces and sums of the R x R matrix M.
double ub_trace_product(const Eigen::MatrixXd& m, const UniformBlockMatrix& n);

/// tr[M N] for two uniform-block matrices in closed form.
double ub_trace_ub_product(const UniformBlockMatrix& m, const UniformBlockMatrix& n);

/// tr[M N] for generalized triples.
double ub_trace_ub_product(const UbProduct& m, const UbProduct& n);

/// NotPositiveDefinite naming `what` and the offending quantity unless
/// a_gg > 0 and all eigenvalues of Delta > 0. Tolerances follow
/// the singularity thresholds of ub_inverse.
void require_ub_positive_definite(const UniformBlockMatrix& m, const char* what);
bool is_ub_positive_definite(const UniformBlockMatrix& m);

/// y = N x without forming N.
Eigen::VectorXd ub_apply(const UniformBlockMatrix& m, const Eigen::Ref<const Eigen::VectorXd>& x);

double ub_frobenius_norm(const UniformBlockMatrix& m);
double ub_spectral_norm(const UniformBlockMatrix& m);

/// Condition number of Delta (ratio of extreme singular values).
double delta_condition(const Eigen::MatrixXd& delta);

} // namespace ubmaud
