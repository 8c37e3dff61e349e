#include "ubmaud/validation.hpp"

#include "ubmaud/likelihood.hpp"
#include "ubmaud/param_maps.hpp"
#include "ubmaud/reference.hpp"
#include "ubmaud/ub_matrix.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace ubmaud {

namespace {

double rel_max(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    return (got - want).cwiseAbs().maxCoeff() / std::max(want.cwiseAbs().maxCoeff(), 1e-300);
}

double rel(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

struct Tally {
    ValidationCheck c;
    void add(double err) {
        ++c.cases;
        if (!(err <= c.max_error)) c.max_error = std::isnan(err) ? INFINITY : std::max(c.max_error, err);
    }
    ValidationCheck done() {
        c.passed = c.cases > 0 && c.max_error <= c.tolerance;
        return c;
    }
};

Tally tally(const char* name, double tol) { return Tally{ValidationCheck{name, 0, 0.0, tol, false}}; }

} // namespace

std::vector<ValidationCheck> run_validation(ValidationScale scale, std::uint64_t seed) {
    const bool large = scale == ValidationScale::Large;
    const int n_ub = large ? 500 : 60;
    const int l_max = large ? 60 : 20;
    const int n_lik = large ? 100 : 15;
    std::mt19937_64 rng(seed);

    Tally add = tally("ub_add", 1e-10), mul = tally("ub_mul", 1e-10), eig = tally("ub_eigenvalues", 1e-10),
          det = tally("ub_det", 1e-10), logdet = tally("ub_log_det", 1e-10), inv = tally("ub_inverse", 1e-8),
          sqr = tally("ub_sqrt", 1e-10), trd = tally("ub_trace_product", 1e-10),
          tru = tally("ub_trace_ub_product", 1e-10), hom = tally("delta_homomorphism", 1e-10);
    for (int t = 0; t < n_ub; ++t) {
        const PartitionVector part = reference::random_partition(rng, 1, 5, 2, l_max);
        const UniformBlockMatrix x = reference::random_ub(rng, part);
        const UniformBlockMatrix y = reference::random_ub(rng, part);
        const UniformBlockMatrix p = reference::random_pd_ub(rng, part);
        const UniformBlockMatrix q = reference::random_pd_ub(rng, part);
        const Eigen::MatrixXd dx = expand_dense(x), dy = expand_dense(y), dp = expand_dense(p), dq = expand_dense(q);

        add.add(rel_max(expand_dense(ub_add(x, y)), dx + dy));
        mul.add(rel_max(expand_dense(ub_mul(x, y)), dx * dy));
        hom.add(rel_max(ub_mul(x, y).delta(), x.delta() * y.delta()));

        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dx, Eigen::EigenvaluesOnly);
        const Eigen::VectorXd ev = ub_eigenvalues(x);
        eig.add((ev - es.eigenvalues()).cwiseAbs().maxCoeff() / es.eigenvalues().cwiseAbs().maxCoeff());

        det.add(rel(ub_det(p), dp.partialPivLu().determinant()));
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ps(dp, Eigen::EigenvaluesOnly);
        logdet.add(rel(ub_log_det(p), ps.eigenvalues().array().log().sum()));
        if (ps.eigenvalues().maxCoeff() / ps.eigenvalues().minCoeff() <= 1e6)
            inv.add(rel_max(expand_dense(ub_inverse(p)), dp.inverse()));
        const UniformBlockMatrix s = ub_sqrt(p);
        sqr.add(rel_max(expand_dense(ub_mul(s, s)), dp));

        trd.add(rel(ub_trace_product(dq, p), (dq * dp).trace()));
        tru.add(rel(ub_trace_ub_product(p, q), (dp * dq).trace()));
    }

    Tally lik = tally("loglik_vs_dense (abs)", 1e-8), scr = tally("score_vs_fd", 1e-5),
          fis = tally("fisher_vs_dense", 1e-10), dom = tally("omega_partials_vs_fd (abs)", 1e-6);
    for (int t = 0; t < n_lik; ++t) {
        const PartitionVector part = reference::random_partition(rng, 1, 4, 2, large ? 12 : 6);
        const GammaVector g = reference::random_gamma(rng, part, 0.8);
        std::uniform_int_distribution<int> nd(part.n_params() + 5, 60);
        const int n = nd(rng);
        std::normal_distribution<double> z;
        Eigen::MatrixXd e(n, part.R());
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < part.R(); ++c) e(i, c) = z(rng);
        const BlockSummaries bs = block_summaries(e, part);
        lik.add(std::abs(log_likelihood(g, bs) - reference::dense_log_likelihood(g, e)));

        const Eigen::VectorXd sc = score(g, bs);
        const Eigen::VectorXd fd = reference::fd_score(g, bs);
        scr.add((sc - fd).lpNorm<Eigen::Infinity>() / (1.0 + sc.lpNorm<Eigen::Infinity>()));

        fis.add(rel_max(fisher_information(g, n), reference::dense_fisher(g, n)));
        for (int j = 0; j < part.n_params(); ++j) {
            const OmegaPartial a = omega_partials(g, j);
            const OmegaPartial b = reference::fd_omega_partial(g, j);
            dom.add(std::max((a.dA - b.dA).cwiseAbs().maxCoeff(), (a.dB - b.dB).cwiseAbs().maxCoeff()));
        }
    }

    Tally rt = tally("gamma_sigma_round_trip", 1e-10);
    for (int t = 0; t < (large ? 200 : 30); ++t) {
        const PartitionVector part = reference::random_partition(rng, 1, 4, 2, 40);
        const GammaVector g = reference::random_gamma(rng, part, 1.0);
        rt.add((sigma_to_gamma(gamma_to_sigma(g)).values - g.values).cwiseAbs().maxCoeff());
    }

    return {add.done(), mul.done(), eig.done(), det.done(), logdet.done(), inv.done(), sqr.done(), trd.done(),
            tru.done(), hom.done(), lik.done(), scr.done(), fis.done(), dom.done(), rt.done()};
}

} // namespace ubmaud
