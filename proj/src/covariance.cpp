#include "ubmaud/covariance.hpp"

#include "ubmaud/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

namespace ubmaud {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// tr(D N) for diagonal D and UB N.
double diag_ub_inner(const DiagonalFactor& x, const UniformBlockMatrix& y) {
    const PartitionVector& part = y.part();
    double s = 0.0;
    for (int g = 0; g < part.G(); ++g)
        s += (y.A()(g) + y.B()(g, g)) * x.d.segment(part.offset(g), part.size(g)).sum();
    return s;
}

double symmetric_spectral_norm(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace

int factor_dim(const OutcomeFactor& f) {
    return std::visit(overloaded{[](const UniformBlockMatrix& m) { return m.R(); },
                                 [](const DiagonalFactor& m) { return static_cast<int>(m.d.size()); },
                                 [](const Eigen::MatrixXd& m) { return static_cast<int>(m.rows()); }},
                      f);
}

double factor_entry(const OutcomeFactor& f, int r, int c) {
    return std::visit(overloaded{[&](const UniformBlockMatrix& m) { return m(r, c); },
                                 [&](const DiagonalFactor& m) { return r == c ? m.d(r) : 0.0; },
                                 [&](const Eigen::MatrixXd& m) { return m(r, c); }},
                      f);
}

Eigen::MatrixXd factor_dense(const OutcomeFactor& f) {
    return std::visit(overloaded{[](const UniformBlockMatrix& m) { return expand_dense(m); },
                                 [](const DiagonalFactor& m) { return Eigen::MatrixXd(m.d.asDiagonal()); },
                                 [](const Eigen::MatrixXd& m) { return m; }},
                      f);
}

Eigen::MatrixXd factor_apply(const OutcomeFactor& f, const Eigen::MatrixXd& x) {
    if (x.rows() != factor_dim(f)) throw DimensionMismatch("factor_apply: row count differs from R");
    return std::visit(overloaded{[&](const UniformBlockMatrix& m) {
                                     Eigen::MatrixXd out(x.rows(), x.cols());
                                     for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = ub_apply(m, x.col(c));
                                     return out;
                                 },
                                 [&](const DiagonalFactor& m) { return Eigen::MatrixXd(m.d.asDiagonal() * x); },
                                 [&](const Eigen::MatrixXd& m) { return Eigen::MatrixXd(m * x); }},
                      f);
}

double factor_inner(const OutcomeFactor& x, const OutcomeFactor& y) {
    if (factor_dim(x) != factor_dim(y)) throw DimensionMismatch("factor_inner: dimensions differ");
    if (const auto* a = std::get_if<UniformBlockMatrix>(&x)) {
        if (const auto* b = std::get_if<UniformBlockMatrix>(&y)) return ub_trace_ub_product(*a, *b);
        if (const auto* b = std::get_if<DiagonalFactor>(&y)) return diag_ub_inner(*b, *a);
    }
    if (const auto* a = std::get_if<DiagonalFactor>(&x)) {
        if (const auto* b = std::get_if<DiagonalFactor>(&y)) return a->d.dot(b->d);
        if (const auto* b = std::get_if<UniformBlockMatrix>(&y)) return diag_ub_inner(*a, *b);
    }
    return factor_dense(x).cwiseProduct(factor_dense(y)).sum();
}

double factor_frobenius_norm(const OutcomeFactor& f) {
    return std::visit(overloaded{[](const UniformBlockMatrix& m) { return ub_frobenius_norm(m); },
                                 [](const DiagonalFactor& m) { return m.d.norm(); },
                                 [](const Eigen::MatrixXd& m) { return m.norm(); }},
                      f);
}

double factor_spectral_norm(const OutcomeFactor& f) {
    return std::visit(overloaded{[](const UniformBlockMatrix& m) { return ub_spectral_norm(m); },
                                 [](const DiagonalFactor& m) { return m.d.cwiseAbs().maxCoeff(); },
                                 [](const Eigen::MatrixXd& m) { return symmetric_spectral_norm(m); }},
                      f);
}

double factor_frobenius_distance(const OutcomeFactor& x, const OutcomeFactor& y) {
    if (factor_dim(x) != factor_dim(y)) throw DimensionMismatch("factor_frobenius_distance: dimensions differ");
    const auto* ux = std::get_if<UniformBlockMatrix>(&x);
    const auto* uy = std::get_if<UniformBlockMatrix>(&y);
    if (ux && uy) return ub_frobenius_norm(ub_sub(*ux, *uy));
    const auto* dx = std::get_if<DiagonalFactor>(&x);
    const auto* dy = std::get_if<DiagonalFactor>(&y);
    if (dx && dy) return (dx->d - dy->d).norm();
    if ((ux && dy) || (dx && uy)) {
        // off-diagonal part of N plus the diagonal differences
        const UniformBlockMatrix& n = ux ? *ux : *uy;
        const Eigen::VectorXd& d = dx ? dx->d : dy->d;
        const PartitionVector& part = n.part();
        double nf = ub_frobenius_norm(n);
        double ss = nf * nf;
        for (int g = 0; g < part.G(); ++g) {
            const double diag = n.A()(g) + n.B()(g, g);
            ss -= part.size(g) * diag * diag;
            ss += (d.segment(part.offset(g), part.size(g)).array() - diag).square().sum();
        }
        return std::sqrt(std::max(ss, 0.0));
    }
    return (factor_dense(x) - factor_dense(y)).norm();
}

double factor_spectral_distance(const OutcomeFactor& x, const OutcomeFactor& y) {
    if (factor_dim(x) != factor_dim(y)) throw DimensionMismatch("factor_spectral_distance: dimensions differ");
    const auto* ux = std::get_if<UniformBlockMatrix>(&x);
    const auto* uy = std::get_if<UniformBlockMatrix>(&y);
    if (ux && uy) return ub_spectral_norm(ub_sub(*ux, *uy));
    const auto* dx = std::get_if<DiagonalFactor>(&x);
    const auto* dy = std::get_if<DiagonalFactor>(&y);
    if (dx && dy) return (dx->d - dy->d).cwiseAbs().maxCoeff();
    if ((ux && dy) || (dx && uy)) {
        const UniformBlockMatrix& n = ux ? *ux : *uy;
        const Eigen::VectorXd& d = dx ? dx->d : dy->d;
        return symmetric_operator_norm([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return ub_apply(n, v) - d.cwiseProduct(v); },
                                       n.R());
    }
    return symmetric_spectral_norm(factor_dense(x) - factor_dense(y));
}

double symmetric_operator_norm(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply, int dim) {
    const int m = std::min(dim, 300);
    Eigen::MatrixXd q(dim, m);
    Eigen::VectorXd alpha(m), beta(m);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = 1.0 + 0.5 * std::sin(1.0 + 0.7 * i);
    v.normalize();
    int k = 0;
    while (k < m) {
        q.col(k) = v;
        Eigen::VectorXd w = apply(v);
        alpha(k) = v.dot(w);
        const auto basis = q.leftCols(k + 1);
        w -= basis * (basis.transpose() * w);
        w -= basis * (basis.transpose() * w);
        beta(k) = w.norm();
        ++k;
        if (beta(k - 1) <= 1e-13 * std::max(1.0, std::abs(alpha(k - 1)))) break;
        v = w / beta(k - 1);
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        t(i, i) = alpha(i);
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta(i);
    }
    return symmetric_spectral_norm(t);
}

Eigen::MatrixXd KroneckerCovariance::dense() const {
    const int r = R();
    const int pp = p();
    const Eigen::MatrixXd u = factor_dense(outcome);
    Eigen::MatrixXd out(r * pp, r * pp);
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) out.block(a * pp, b * pp, pp, pp) = u(a, b) * covariate;
    return out;
}

} // namespace ubmaud
