#include "ubmaud/likelihood.hpp"

#include "ubmaud/error.hpp"
#include "ubmaud/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace ubmaud {

BlockSummaries block_summaries(const Eigen::MatrixXd& residuals, const PartitionVector& part) {
    return kernels::block_summaries_parallel(residuals, part);
}

namespace {

void check_summaries(const GammaVector& gamma, const BlockSummaries& s) {
    if (!(gamma.part == s.part)) throw PartitionMismatch("gamma and block summaries use different partitions");
    if (s.n < 1) throw DimensionMismatch("block summaries with n < 1");
}

// tr(A_Omega diag(traces)) + sum(B_Omega o sums)
double data_term(const Eigen::VectorXd& a, const Eigen::MatrixXd& b, const BlockSummaries& s) {
    return a.dot(s.traces) + b.cwiseProduct(s.sums).sum();
}

double loglik_from_omega(const UniformBlockMatrix& omega, const BlockSummaries& s) {
    require_ub_positive_definite(omega, "Omega(gamma)");
    const double R = s.part.R();
    const double ld = ub_log_det(omega);
    return 0.5 * static_cast<double>(s.n) *
           (-R * std::log(2.0 * std::numbers::pi) + ld - data_term(omega.A(), omega.B(), s));
}

std::vector<UbProduct> weighted_partials(const GammaVector& gamma, const UniformBlockMatrix& sigma) {
    const int m = gamma.part.n_params();
    std::vector<UbProduct> out;
    out.reserve(m);
    for (int j = 0; j < m; ++j) out.push_back(ub_mul(omega_partials(gamma, j).as_ub(gamma.part), sigma.general()));
    return out;
}

Eigen::VectorXd score_from_sigma(const GammaVector& gamma, const UniformBlockMatrix& sigma, const BlockSummaries& s) {
    const int m = gamma.part.n_params();
    Eigen::VectorXd sc(m);
    const UbProduct sg = sigma.general();
    for (int j = 0; j < m; ++j) {
        const OmegaPartial d = omega_partials(gamma, j);
        const double model = ub_trace_ub_product(d.as_ub(gamma.part), sg);
        sc(j) = 0.5 * static_cast<double>(s.n) * (model - data_term(d.dA, d.dB, s));
    }
    return sc;
}

} // namespace

double log_likelihood(const GammaVector& gamma, const BlockSummaries& s) {
    check_summaries(gamma, s);
    return loglik_from_omega(gamma_to_omega(gamma), s);
}

OmegaPartial omega_partials(const GammaVector& gamma, int j) {
    const int G = gamma.part.G();
    const auto [g, h] = index_pair(j, G);
    const UniformBlockMatrix ups = gamma_to_upsilon(gamma);
    const Eigen::VectorXd& au = ups.A();
    const Eigen::MatrixXd& bu = ups.B();
    const Eigen::VectorXd l = gamma.part.L();

    OmegaPartial d{Eigen::VectorXd::Zero(G), Eigen::MatrixXd::Zero(G, G)};
    if (g == h) {
        const double c = 1.0 + gamma.values(j);
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(G, G);
        e(g, g) = 1.0;
        d.dA(g) = 2.0 * c;
        d.dB = -2.0 * c * e - (e * bu + bu * e) + e * l.asDiagonal() * bu + bu * l.asDiagonal() * e;
    } else {
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(G, G);
        f(g, h) = f(h, g) = 1.0;
        const Eigen::MatrixXd left = au.asDiagonal().toDenseMatrix() + l.asDiagonal() * bu;
        const Eigen::MatrixXd right = au.asDiagonal().toDenseMatrix() + bu * l.asDiagonal();
        d.dB = -2.0 * f + f * left + right * f;
    }
    d.dB = 0.5 * (d.dB + d.dB.transpose()).eval();
    return d;
}

Eigen::VectorXd score(const GammaVector& gamma, const BlockSummaries& s) {
    check_summaries(gamma, s);
    return score_from_sigma(gamma, gamma_to_sigma(gamma), s);
}

Eigen::MatrixXd fisher_information(const GammaVector& gamma, long n) {
    if (n < 1) throw DimensionMismatch("fisher_information needs n >= 1, got " + std::to_string(n));
    const UniformBlockMatrix sigma = gamma_to_sigma(gamma);
    return kernels::fisher_matrix_parallel(weighted_partials(gamma, sigma), 0.5 * static_cast<double>(n));
}

ScoreAndInformation evaluate_likelihood(const GammaVector& gamma, const BlockSummaries& s) {
    check_summaries(gamma, s);
    const UniformBlockMatrix omega = gamma_to_omega(gamma);
    const double ll = loglik_from_omega(omega, s);
    const UniformBlockMatrix sigma = ub_inverse(omega);
    return {ll, score_from_sigma(gamma, sigma, s),
            kernels::fisher_matrix_parallel(weighted_partials(gamma, sigma), 0.5 * static_cast<double>(s.n))};
}

} // namespace ubmaud
