#include "ubmaud/inference.hpp"

#include "ubmaud/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ubmaud {

namespace {

template <class Dist>
double two_sided(const Dist& dist, double stat) {
    if (!std::isfinite(stat)) return 0.0;
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(stat))));
}

std::string pair_label(const char* name, int a, int b) {
    return std::string(name) + "[" + std::to_string(a + 1) + "," + std::to_string(b + 1) + "]";
}

void check_same_shape(const KroneckerCovariance& x, const KroneckerCovariance& y) {
    if (x.R() != y.R() || x.p() != y.p()) throw DimensionMismatch("relative_loss: covariance shapes differ");
}

} // namespace

std::vector<TestResult> beta_tests(const FitResult& f, DfMode df, double alpha) {
    const int R = f.R();
    const int p = f.p();
    const boost::math::students_t tdist(static_cast<double>(std::max<long>(f.n - 1, 1)));
    const boost::math::normal ndist;
    std::vector<TestResult> out;
    out.reserve(static_cast<std::size_t>(R) * p);
    for (int r = 0; r < R; ++r) {
        for (int q = 0; q < p; ++q) {
            TestResult t;
            t.label = pair_label("beta", r, q);
            t.estimate = f.beta(r, q);
            t.standard_error = f.beta_se(r, q);
            t.statistic = t.estimate == 0.0 ? 0.0 : t.estimate / t.standard_error;
            t.p_value = df == DfMode::TNMinus1 ? two_sided(tdist, t.statistic) : two_sided(ndist, t.statistic);
            t.rejected = t.p_value <= alpha;
            out.push_back(std::move(t));
        }
    }
    return out;
}

std::vector<TestResult> gamma_tests(const FitResult& f, double alpha) {
    const int G = f.part().G();
    const boost::math::normal ndist;
    std::vector<TestResult> out;
    for (int j = 0; j < f.gamma.values.size(); ++j) {
        const auto [g, h] = index_pair(j, G);
        TestResult t;
        t.label = pair_label("gamma", g, h);
        t.estimate = f.gamma.values(j);
        t.standard_error = std::sqrt(f.gamma_cov(j, j));
        t.statistic = t.estimate == 0.0 ? 0.0 : t.estimate / t.standard_error;
        t.p_value = two_sided(ndist, t.statistic);
        t.rejected = t.p_value <= alpha;
        out.push_back(std::move(t));
    }
    return out;
}

BhResult bh_adjust(const Eigen::VectorXd& p, double alpha) {
    const Eigen::Index m = p.size();
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(p(i) >= 0.0 && p(i) <= 1.0)) {
            std::ostringstream os;
            os << "p-value " << p(i) << " at position " << i << " is outside [0, 1]";
            throw InvalidPValue(os.str());
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return p(a) < p(b); });

    BhResult res{Eigen::VectorXd(m), std::vector<bool>(static_cast<std::size_t>(m), false)};
    double running = 1.0;
    for (Eigen::Index k = m; k >= 1; --k) {
        const Eigen::Index i = order[static_cast<std::size_t>(k - 1)];
        running = std::min(running, std::min(1.0, static_cast<double>(m) * p(i) / static_cast<double>(k)));
        // m p / m can round just below p
        res.adjusted(i) = std::max(running, p(i));
    }
    for (Eigen::Index i = 0; i < m; ++i) res.rejected[static_cast<std::size_t>(i)] = res.adjusted(i) <= alpha;
    return res;
}

void apply_bh(std::vector<TestResult>& tests, double alpha) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(tests.size()));
    for (std::size_t i = 0; i < tests.size(); ++i) p(static_cast<Eigen::Index>(i)) = tests[i].p_value;
    const BhResult bh = bh_adjust(p, alpha);
    for (std::size_t i = 0; i < tests.size(); ++i) {
        tests[i].adjusted_p_value = bh.adjusted(static_cast<Eigen::Index>(i));
        tests[i].rejected = bh.rejected[i];
    }
}

Eigen::MatrixXd contrast_covariance(const KroneckerCovariance& cov, const Eigen::MatrixXd& c) {
    const int R = cov.R();
    const int p = cov.p();
    if (c.cols() != static_cast<Eigen::Index>(R) * p)
        throw DimensionMismatch("contrast has " + std::to_string(c.cols()) + " columns, expected Rp = " +
                                std::to_string(R * p));
    const Eigen::Index s = c.rows();
    const Eigen::MatrixXd& v = cov.covariate;
    auto block = [&](int r) { return c.middleCols(static_cast<Eigen::Index>(r) * p, p); };

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(s, s);
    if (const auto* u = std::get_if<UniformBlockMatrix>(&cov.outcome)) {
        const PartitionVector& part = u->part();
        std::vector<Eigen::MatrixXd> sums(static_cast<std::size_t>(part.G()), Eigen::MatrixXd::Zero(s, p));
        for (int g = 0; g < part.G(); ++g) {
            for (int r = part.offset(g); r < part.offset(g) + part.size(g); ++r) {
                const auto cr = block(r);
                out += u->A()(g) * (cr * v * cr.transpose());
                sums[static_cast<std::size_t>(g)] += cr;
            }
        }
        for (int g = 0; g < part.G(); ++g) {
            const Eigen::MatrixXd sv = sums[static_cast<std::size_t>(g)] * v;
            for (int h = 0; h < part.G(); ++h) out += u->B()(g, h) * (sv * sums[static_cast<std::size_t>(h)].transpose());
        }
    } else if (const auto* d = std::get_if<DiagonalFactor>(&cov.outcome)) {
        for (int r = 0; r < R; ++r) out += d->d(r) * (block(r) * v * block(r).transpose());
    } else {
        const Eigen::MatrixXd& u = std::get<Eigen::MatrixXd>(cov.outcome);
        for (int r = 0; r < R; ++r) {
            Eigen::MatrixXd mixed = Eigen::MatrixXd::Zero(s, p);
            for (int r2 = 0; r2 < R; ++r2)
                if (u(r, r2) != 0.0) mixed += u(r, r2) * block(r2);
            out += block(r) * v * mixed.transpose();
        }
    }
    return 0.5 * (out + out.transpose());
}

WaldResult contrast_test(const FitResult& f, const ContrastSpec& spec) {
    const Eigen::Index s = spec.C.rows();
    if (s < 1) throw RankDeficientContrast("contrast has no rows");
    if (spec.rho0.size() != s) throw DimensionMismatch("null value length differs from the contrast row count");
    if (spec.C.cols() != static_cast<Eigen::Index>(f.R()) * f.p())
        throw DimensionMismatch("contrast has " + std::to_string(spec.C.cols()) + " columns, expected Rp = " +
                                std::to_string(f.R() * f.p()));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(spec.C);
    qr.setThreshold(1e-10);
    if (qr.rank() < s)
        throw RankDeficientContrast("rank(C) = " + std::to_string(qr.rank()) + " < " + std::to_string(s) + " rows");

    const Eigen::MatrixXd m = contrast_covariance(f.beta_cov, spec.C);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
        std::ostringstream os;
        os << "C Sigma_beta C^T has eigenvalue range [" << lo << ", " << hi << "]";
        throw SingularContrastCovariance(os.str());
    }
    const Eigen::VectorXd diff = spec.C * f.beta_vector() - spec.rho0;
    const double w = diff.dot(m.ldlt().solve(diff));
    const boost::math::chi_squared chi(static_cast<double>(s));
    const double pv = w <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(chi, w));
    return {w, pv, static_cast<int>(s)};
}

double relative_loss(const KroneckerCovariance& est, const KroneckerCovariance& truth, LossNorm norm) {
    check_same_shape(est, truth);
    const bool same_v = est.covariate == truth.covariate;
    if (norm == LossNorm::Frobenius) {
        const double vt = truth.covariate.norm();
        const double den = factor_frobenius_norm(truth.outcome) * vt;
        double num = 0.0;
        if (same_v) {
            num = factor_frobenius_distance(est.outcome, truth.outcome) * vt;
        } else {
            const double ue = factor_frobenius_norm(est.outcome);
            const double ve = est.covariate.norm();
            const double ut = factor_frobenius_norm(truth.outcome);
            const double cross = factor_inner(est.outcome, truth.outcome) *
                                 est.covariate.cwiseProduct(truth.covariate).sum();
            num = std::sqrt(std::max(0.0, ue * ue * ve * ve - 2.0 * cross + ut * ut * vt * vt));
        }
        return num / den;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> vt_es(truth.covariate, Eigen::EigenvaluesOnly);
    const double vt = vt_es.eigenvalues().cwiseAbs().maxCoeff();
    const double den = factor_spectral_norm(truth.outcome) * vt;
    double num = 0.0;
    if (same_v) {
        num = factor_spectral_distance(est.outcome, truth.outcome) * vt;
    } else {
        const int R = est.R();
        const int p = est.p();
        // vec(X) -> vec(U_e X V_e - U_t X V_t) with X of size R x p
        num = symmetric_operator_norm(
            [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                const Eigen::Map<const Eigen::MatrixXd> xm(x.data(), R, p);
                const Eigen::MatrixXd y = factor_apply(est.outcome, xm * est.covariate) -
                                          factor_apply(truth.outcome, xm * truth.covariate);
                return Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
            },
            R * p);
    }
    return num / den;
}

double relative_loss_dense(const KroneckerCovariance& est, const KroneckerCovariance& truth, LossNorm norm) {
    check_same_shape(est, truth);
    if (est.R() * est.p() > 2000) throw DimensionMismatch("dense relative loss limited to Rp <= 2000");
    const Eigen::MatrixXd e = est.dense();
    const Eigen::MatrixXd t = truth.dense();
    if (norm == LossNorm::Frobenius) return (e - t).norm() / t.norm();
    auto spec = [](const Eigen::MatrixXd& m) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    };
    return spec(e - t) / spec(t);
}

} // namespace ubmaud
