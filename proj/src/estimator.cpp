#include "ubmaud/estimator.hpp"

#include "ubmaud/error.hpp"
#include "ubmaud/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>

namespace ubmaud {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::MatrixXd y, PartitionVector p)
    : X(std::move(x)), Y(std::move(y)), part(std::move(p)) {
    if (X.rows() != Y.rows()) {
        throw DimensionMismatch("X has " + std::to_string(X.rows()) + " rows but Y has " +
                                std::to_string(Y.rows()));
    }
    if (Y.cols() != part.R()) {
        throw DimensionMismatch("partition sums to R = " + std::to_string(part.R()) + " but Y has " +
                                std::to_string(Y.cols()) + " columns");
    }
    if (X.cols() < 1) throw InvalidDataset("X has no columns");
    if (!X.allFinite() || !Y.allFinite()) throw InvalidDataset("X or Y contains non-finite values");
    const long need = std::max<long>(X.cols(), part.n_params());
    if (X.rows() <= need) {
        throw InvalidDataset("n = " + std::to_string(X.rows()) + " must exceed max(p, G(G+1)/2) = " +
                             std::to_string(need));
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const Eigen::VectorXd sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? (sv(0) / smin) * (sv(0) / smin) : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e12)) {
        std::ostringstream os;
        os << "X^T X has condition number " << cond << " (limit 1e12); X is not of full column rank";
        throw RankDeficient(os.str());
    }
}

OlsResult ols_fit(const Dataset& d) {
    const kernels::XtxFactor llt(d.X.transpose() * d.X);
    if (llt.info() != Eigen::Success) throw RankDeficient("X^T X is not positive definite");
    kernels::OlsPieces pieces = kernels::ols_parallel(d.X, d.Y, llt);
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(d.p(), d.p()));
    return {pieces.coef.transpose(), std::move(pieces.residuals), 0.5 * (inv + inv.transpose())};
}

namespace {

std::optional<ScoreAndInformation> try_evaluate(const GammaVector& g, const BlockSummaries& s) {
    if (!is_admissible(g)) return std::nullopt;
    try {
        return evaluate_likelihood(g, s);
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::string describe(const GammaVector& g) {
    std::ostringstream os;
    os.precision(6);
    os << "(";
    for (Eigen::Index j = 0; j < g.values.size(); ++j) os << (j ? ", " : "") << g.values(j);
    os << ")";
    return os.str();
}

// d score / d gamma by central differences of the analytic score.
std::optional<Eigen::MatrixXd> score_jacobian(const GammaVector& g, const BlockSummaries& s) {
    const Eigen::Index m = g.values.size();
    Eigen::MatrixXd h(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double step = 1e-6 * std::max(1.0, std::abs(g.values(j)));
        GammaVector up = g;
        GammaVector dn = g;
        up.values(j) += step;
        dn.values(j) -= step;
        if (!is_admissible(up) || !is_admissible(dn)) return std::nullopt;
        try {
            h.col(j) = (score(up, s) - score(dn, s)) / (2.0 * step);
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    return 0.5 * (h + h.transpose());
}

} // namespace

ScoringResult fisher_scoring(const BlockSummaries& s, const GammaVector& init, const ScoringOptions& opts) {
    if (!(init.part == s.part)) throw PartitionMismatch("start and block summaries use different partitions");
    std::optional<ScoreAndInformation> ev = try_evaluate(init, s);
    if (!ev) throw InadmissibleStart("start " + describe(init) + " gives an Omega that is not positive definite");

    GammaVector gamma = init;
    ScoringTrace trace;
    auto record = [&] {
        trace.score_norm = ev->score.lpNorm<Eigen::Infinity>();
        trace.loglik = ev->loglik;
    };
    record();

    // Scoring with a monotone likelihood. It stops early once the likelihood
    // no longer resolves the gain, which happens when the information matrix
    // is a poor stand-in for the Hessian (misspecified data).
    std::string stop = "iteration limit";
    while (trace.score_norm >= opts.tol && trace.iterations < opts.max_iter) {
        const Eigen::VectorXd dir = ev->fisher.ldlt().solve(ev->score);
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ev->loglik));
        double step = 1.0;
        bool accepted = false;
        double gain = 0.0;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            GammaVector cand(gamma.values + step * dir, gamma.part);
            std::optional<ScoreAndInformation> cev = try_evaluate(cand, s);
            if (cev && cev->loglik >= ev->loglik - slack) {
                gain = cev->loglik - ev->loglik;
                gamma = std::move(cand);
                ev = std::move(cev);
                accepted = true;
                break;
            }
            step *= 0.5;
            ++trace.halvings;
        }
        if (!accepted) {
            stop = "no admissible ascent step after " + std::to_string(opts.max_halvings) + " halvings";
            break;
        }
        ++trace.iterations;
        record();
        if (trace.score_norm >= opts.tol && gain <= 1024.0 * slack) {
            stop = "likelihood gain below round-off";
            break;
        }
    }

    // Newton polish on the analytic score, accepting steps that shrink it.
    for (int it = 0; it < opts.max_newton && trace.score_norm >= opts.tol; ++it) {
        const std::optional<Eigen::MatrixXd> hess = score_jacobian(gamma, s);
        if (!hess) break;
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*hess, Eigen::EigenvaluesOnly);
        if (!(es.eigenvalues().maxCoeff() < 0.0)) {
            stop += "; Hessian not negative definite";
            break;
        }
        const Eigen::VectorXd dir = -hess->ldlt().solve(ev->score);
        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            GammaVector cand(gamma.values + step * dir, gamma.part);
            std::optional<ScoreAndInformation> cev = try_evaluate(cand, s);
            if (cev && cev->score.lpNorm<Eigen::Infinity>() < trace.score_norm) {
                gamma = std::move(cand);
                ev = std::move(cev);
                accepted = true;
                break;
            }
            step *= 0.5;
            ++trace.halvings;
        }
        if (!accepted) break;
        ++trace.iterations;
        ++trace.newton_steps;
        record();
    }

    if (trace.score_norm < opts.tol) return {gamma, trace};
    std::ostringstream os;
    os << "score norm " << trace.score_norm << " above " << opts.tol << " after " << trace.iterations
       << " iterations (" << stop << "); best iterate " << describe(gamma);
    throw NotConverged(os.str());
}

std::optional<GammaVector> moment_start(const BlockSummaries& s) {
    const PartitionVector& part = s.part;
    const int G = part.G();
    Eigen::VectorXd a(G);
    Eigen::MatrixXd b(G, G);
    for (int g = 0; g < G; ++g) {
        const double lg = part.size(g);
        const double v = s.traces(g) / lg;
        const double c = (s.sums(g, g) - s.traces(g)) / (lg * (lg - 1.0));
        a(g) = v - c;
        b(g, g) = c;
        for (int h = g + 1; h < G; ++h) b(g, h) = b(h, g) = s.sums(g, h) / (lg * part.size(h));
    }
    try {
        const UniformBlockMatrix sigma(a, b, part);
        if (!is_ub_positive_definite(sigma)) return std::nullopt;
        GammaVector g = sigma_to_gamma_detailed(sigma, DiagonalReconciliation::Average).gamma;
        if (!is_admissible(g)) return std::nullopt;
        return g;
    } catch (const Error&) {
        return std::nullopt;
    }
}

Eigen::VectorXd FitResult::beta_vector() const {
    Eigen::VectorXd v(beta.size());
    for (int r = 0; r < R(); ++r)
        for (int q = 0; q < p(); ++q) v(r * p() + q) = beta(r, q);
    return v;
}

double FitResult::beta_se(int r, int q) const { return std::sqrt(beta_cov.variance(r, q)); }

FitResult fit(const Dataset& d, const FitOptions& opts) {
    OlsResult ols = ols_fit(d);
    BlockSummaries s = block_summaries(ols.residuals, d.part);
    FitDiagnostics diag;

    std::optional<ScoringResult> best;
    const double y_scale = std::max(1.0, d.Y.squaredNorm() / static_cast<double>(d.Y.size()));
    if (s.traces.maxCoeff() <= 1e-20 * y_scale) {
        // S = 0: the likelihood is unbounded and gamma is not identified.
        best = ScoringResult{GammaVector::zero(d.part), {}};
        best->trace.loglik = log_likelihood(best->gamma, s);
        diag.start = "zero";
        diag.warnings.push_back("residuals vanish; gamma is not identified and was left at the zero start");
    } else {
        std::optional<ScoringResult> from_moment;
        std::optional<ScoringResult> from_zero;
        std::string moment_error;
        std::string zero_error;
        if (std::optional<GammaVector> m = moment_start(s)) {
            try {
                from_moment = fisher_scoring(s, *m, opts.scoring);
            } catch (const Error& e) {
                moment_error = e.what();
            }
        } else {
            moment_error = "moment start not admissible";
        }
        if (opts.dual_start || !from_moment) {
            try {
                from_zero = fisher_scoring(s, GammaVector::zero(d.part), opts.scoring);
            } catch (const Error& e) {
                zero_error = e.what();
            }
        }
        if (from_moment && from_zero) {
            const double gap = (from_moment->gamma.values - from_zero->gamma.values).lpNorm<Eigen::Infinity>();
            if (gap > opts.start_agreement_tol) {
                std::ostringstream os;
                os << "moment and zero starts converged to different points (max gap " << gap
                   << ", log-likelihoods " << from_moment->trace.loglik << " vs " << from_zero->trace.loglik
                   << "); kept the higher";
                diag.warnings.push_back(os.str());
            }
            const bool zero_wins = from_zero->trace.loglik > from_moment->trace.loglik;
            best = zero_wins ? from_zero : from_moment;
            diag.start = zero_wins ? "zero" : "moment";
        } else if (from_moment) {
            best = from_moment;
            diag.start = "moment";
            if (opts.dual_start) diag.warnings.push_back("zero start failed: " + zero_error);
        } else if (from_zero) {
            best = from_zero;
            diag.start = "zero";
            diag.warnings.push_back("moment start failed: " + moment_error);
        } else {
            throw NotConverged("both starts failed; moment: " + moment_error + "; zero: " + zero_error);
        }
    }

    const GammaVector& g = best->gamma;
    UniformBlockMatrix sigma = gamma_to_sigma(g);
    Eigen::MatrixXd fisher = fisher_information(g, d.n());
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(fisher);
    Eigen::MatrixXd gcov = ldlt.solve(Eigen::MatrixXd::Identity(fisher.rows(), fisher.cols()));
    gcov = 0.5 * (gcov + gcov.transpose()).eval();

    diag.iterations = best->trace.iterations;
    diag.score_norm = best->trace.score_norm;
    diag.loglik = best->trace.loglik;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fisher / static_cast<double>(d.n()),
                                                            Eigen::EigenvaluesOnly);
    diag.fisher_eigenvalues_per_n = es.eigenvalues();
    if (diag.fisher_eigenvalues_per_n.minCoeff() <= 0.0)
        diag.warnings.push_back("Fisher information is not positive definite at the estimate");

    FitResult out{std::move(ols.beta),
                  KroneckerCovariance{std::move(sigma), ols.xtx_inv},
                  g,
                  gamma_to_rho(g),
                  std::move(gcov),
                  std::move(fisher),
                  std::move(s),
                  d.n(),
                  std::move(diag)};
    if (opts.fgls_check) {
        const Eigen::MatrixXd bf = fgls_iterate(d, out);
        out.diagnostics.fgls_max_diff = (bf - out.beta).cwiseAbs().maxCoeff();
    }
    return out;
}

Eigen::MatrixXd fgls_beta(const Dataset& d, const UniformBlockMatrix& omega) {
    if (!(omega.part() == d.part)) throw PartitionMismatch("weight matrix and dataset use different partitions");
    const kernels::XtxFactor llt(d.X.transpose() * d.X);
    const Eigen::MatrixXd weighted = factor_apply(OutcomeFactor{omega}, d.Y.transpose() * d.X); // R x p
    const UniformBlockMatrix sigma = ub_inverse(omega);
    const Eigen::MatrixXd unweighted = factor_apply(OutcomeFactor{sigma}, weighted);
    return llt.solve(unweighted.transpose()).transpose();
}

Eigen::MatrixXd fgls_iterate(const Dataset& d, const FitResult& f, int max_iter) {
    Eigen::MatrixXd beta = f.beta;
    GammaVector gamma = f.gamma;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::MatrixXd next = fgls_beta(d, gamma_to_omega(gamma));
        const double move = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        const Eigen::MatrixXd res = d.Y - d.X * beta.transpose();
        const BlockSummaries s = block_summaries(res, d.part);
        try {
            gamma = fisher_scoring(s, gamma).gamma;
        } catch (const Error&) {
            break;
        }
        if (move <= 1e-14 * (1.0 + beta.cwiseAbs().maxCoeff())) break;
    }
    return beta;
}

} // namespace ubmaud
