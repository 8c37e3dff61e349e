#include "ubmaud/reference.hpp"

#include "ubmaud/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace ubmaud::reference {

PartitionVector random_partition(std::mt19937_64& rng, int g_min, int g_max, int l_min, int l_max) {
    std::uniform_int_distribution<int> gd(g_min, g_max);
    std::uniform_int_distribution<int> ld(l_min, l_max);
    std::vector<int> sizes(static_cast<std::size_t>(gd(rng)));
    for (int& l : sizes) l = ld(rng);
    return PartitionVector(sizes);
}

UniformBlockMatrix random_ub(std::mt19937_64& rng, const PartitionVector& part) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int G = part.G();
    Eigen::VectorXd a(G);
    Eigen::MatrixXd b(G, G);
    for (int g = 0; g < G; ++g) {
        a(g) = u(rng);
        for (int h = g; h < G; ++h) b(g, h) = b(h, g) = u(rng);
    }
    return {a, b, part};
}

UniformBlockMatrix random_pd_ub(std::mt19937_64& rng, const PartitionVector& part) {
    std::uniform_real_distribution<double> ua(0.5, 2.0);
    std::uniform_real_distribution<double> uc(0.05, 1.0);
    std::normal_distribution<double> z;
    const int G = part.G();
    Eigen::VectorXd a(G);
    for (int g = 0; g < G; ++g) a(g) = ua(rng);
    Eigen::MatrixXd m(G, G);
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) m(i, j) = z(rng);
    const double lmax = *std::max_element(part.sizes().begin(), part.sizes().end());
    Eigen::MatrixXd b = uc(rng) * (m * m.transpose()) / lmax;
    // a small negative diagonal part keeps b_gg of either sign
    for (int g = 0; g < G; ++g) b(g, g) -= 0.2 * a(g) / part.size(g);
    return {a, b, part};
}

GammaVector random_gamma(std::mt19937_64& rng, const PartitionVector& part, double spread) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int G = part.G();
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::MatrixXd gm(G, G);
        for (int g = 0; g < G; ++g) {
            gm(g, g) = spread * 0.6 * u(rng);
            for (int h = g + 1; h < G; ++h)
                gm(g, h) = gm(h, g) = spread * 0.6 * u(rng) / std::sqrt(part.size(g) * static_cast<double>(part.size(h)));
        }
        GammaVector g = GammaVector::from_matrix(gm, part);
        if (!is_admissible(g)) continue;
        // I - Upsilon must be well away from singular
        const UniformBlockMatrix ups = gamma_to_upsilon(g);
        const UniformBlockMatrix k(Eigen::VectorXd::Ones(G) - ups.A(), -ups.B(), part);
        if ((k.A().array() < 0.2).any()) continue;
        if (delta_condition(k.delta()) > 1e4) continue;
        const Eigen::EigenSolver<Eigen::MatrixXd> es(k.delta(), false);
        if (es.eigenvalues().cwiseAbs().minCoeff() < 0.05) continue;
        if (delta_condition(gamma_to_omega(g).delta()) > 1e6) continue;
        return g;
    }
    throw InvalidConfig("random_gamma: no admissible draw in 1000 attempts");
}

Eigen::MatrixXd dense_upsilon(const GammaVector& g) { return expand_dense(gamma_to_upsilon(g)); }

Eigen::MatrixXd dense_omega(const GammaVector& g) {
    const int R = g.part.R();
    const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(R, R) - dense_upsilon(g);
    return k * k;
}

Eigen::MatrixXd dense_sigma(const GammaVector& g) {
    const int R = g.part.R();
    const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(R, R) - dense_upsilon(g);
    const Eigen::MatrixXd kinv = k.partialPivLu().inverse();
    return kinv * kinv;
}

Eigen::MatrixXd dense_residual_gram(const Eigen::MatrixXd& residuals) {
    return residuals.transpose() * residuals / static_cast<double>(residuals.rows());
}

double dense_log_likelihood(const GammaVector& g, const Eigen::MatrixXd& residuals) {
    const int R = g.part.R();
    const double n = static_cast<double>(residuals.rows());
    const Eigen::MatrixXd sigma = dense_sigma(g);
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("dense Sigma is not positive definite");
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const Eigen::MatrixXd s = dense_residual_gram(residuals);
    const double tr = llt.solve(s).trace();
    return -0.5 * n * (R * std::log(2.0 * std::numbers::pi) + logdet + tr);
}

Eigen::MatrixXd dense_omega_partial(const GammaVector& g, int j) {
    const int R = g.part.R();
    const int G = g.part.G();
    const auto [a, b] = index_pair(j, G);
    Eigen::VectorXd da = Eigen::VectorXd::Zero(G);
    Eigen::MatrixXd db = Eigen::MatrixXd::Zero(G, G);
    if (a == b) {
        da(a) = -1.0;
        db(a, a) = 1.0;
    } else {
        db(a, b) = db(b, a) = 1.0;
    }
    const Eigen::MatrixXd du = expand_dense(UniformBlockMatrix(da, db, g.part));
    const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(R, R) - dense_upsilon(g);
    return -(du * k + k * du);
}

Eigen::MatrixXd dense_fisher(const GammaVector& g, long n) {
    const int m = g.part.n_params();
    const Eigen::MatrixXd sigma = dense_sigma(g);
    std::vector<Eigen::MatrixXd> p;
    for (int j = 0; j < m; ++j) p.push_back(dense_omega_partial(g, j) * sigma);
    Eigen::MatrixXd f(m, m);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) f(j, k) = 0.5 * static_cast<double>(n) * (p[j] * p[k]).trace();
    return 0.5 * (f + f.transpose());
}

Eigen::VectorXd fd_score(const GammaVector& g, const BlockSummaries& s) {
    Eigen::VectorXd out(g.values.size());
    for (Eigen::Index j = 0; j < g.values.size(); ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(g.values(j)));
        GammaVector up = g, dn = g;
        up.values(j) += h;
        dn.values(j) -= h;
        out(j) = (log_likelihood(up, s) - log_likelihood(dn, s)) / (2.0 * h);
    }
    return out;
}

OmegaPartial fd_omega_partial(const GammaVector& g, int j) {
    const double h = 1e-6 * std::max(1.0, std::abs(g.values(j)));
    GammaVector up = g, dn = g;
    up.values(j) += h;
    dn.values(j) -= h;
    const UniformBlockMatrix ou = gamma_to_omega(up);
    const UniformBlockMatrix od = gamma_to_omega(dn);
    return {(ou.A() - od.A()) / (2.0 * h), (ou.B() - od.B()) / (2.0 * h)};
}

Eigen::MatrixXd dense_weighted_beta(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const Eigen::Index R = Y.cols();
    // x_i = I_R kron x_i^T, so row r of x_i has x_i in columns r p .. r p + p - 1
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(R * p, R * p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(R * p);
    Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(R, R * p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index r = 0; r < R; ++r) xi.block(r, r * p, 1, p) = X.row(i);
        const Eigen::MatrixXd wx = W * xi;
        lhs.noalias() += xi.transpose() * wx;
        rhs.noalias() += wx.transpose() * Y.row(i).transpose();
    }
    const Eigen::VectorXd b = lhs.ldlt().solve(rhs);
    Eigen::MatrixXd out(R, p);
    for (Eigen::Index r = 0; r < R; ++r)
        for (Eigen::Index q = 0; q < p; ++q) out(r, q) = b(r * p + q);
    return out;
}

Eigen::MatrixXd dense_beta_score(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& beta,
                                 const Eigen::MatrixXd& omega) {
    const Eigen::MatrixXd res = Y - X * beta.transpose(); // n x R
    return omega * res.transpose() * X;                  // R x p
}

} // namespace ubmaud::reference
