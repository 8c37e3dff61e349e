#include "ubmaud/simgen.hpp"

#include "ubmaud/error.hpp"
#include "ubmaud/inference.hpp"
#include "ubmaud/kernels.hpp"

#include <Eigen/Cholesky>

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace ubmaud {

namespace {

constexpr std::uint64_t kBetaStream = 0;
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kPerturbStream = 2;
constexpr double kZ975 = 1.959963984540054;

UniformBlockMatrix noise_map(const GammaVector& g) {
    // (I - Upsilon)^{-1}
    const UniformBlockMatrix ups = gamma_to_upsilon(g);
    const UniformBlockMatrix k(Eigen::VectorXd::Ones(ups.G()) - ups.A(), -ups.B(), g.part);
    return ub_inverse(k);
}

Eigen::MatrixXd draw_x(const ScenarioConfig& cfg, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd x(cfg.n, cfg.p);
    for (long i = 0; i < cfg.n; ++i) {
        x(i, 0) = 1.0;
        for (int q = 1; q < cfg.p; ++q) x(i, q) = z(rng);
    }
    return x;
}

Eigen::MatrixXd draw_noise(long n, int R, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd e(n, R);
    for (long i = 0; i < n; ++i)
        for (int c = 0; c < R; ++c) e(i, c) = z(rng);
    return e;
}

// dense_cov, when given, replaces the UB sampler by a Cholesky factor.
Dataset sample_impl(const ScenarioConfig& cfg, const Eigen::MatrixXd& beta, int replicate,
                    const Eigen::MatrixXd* dense_cov) {
    std::mt19937_64 rng = make_rng(cfg.seed, static_cast<std::uint64_t>(replicate), kDataStream);
    Eigen::MatrixXd x = draw_x(cfg, rng);
    const Eigen::MatrixXd e = draw_noise(cfg.n, cfg.part.R(), rng);
    Eigen::MatrixXd y = x * beta.transpose();
    if (dense_cov == nullptr) {
        y += kernels::ub_apply_rows_parallel(noise_map(cfg.true_gamma), e);
    } else {
        const Eigen::LLT<Eigen::MatrixXd> llt(*dense_cov);
        if (llt.info() != Eigen::Success) throw PerturbationNotPD("covariance has no Cholesky factor");
        y += e * llt.matrixU();
    }
    return Dataset(std::move(x), std::move(y), cfg.part);
}

ReplicateRecord run_replicate(const ScenarioConfig& cfg, const Eigen::MatrixXd& beta, const UniformBlockMatrix& sigma0,
                              int rep) {
    ReplicateRecord rec;
    rec.index = rep;
    try {
        std::optional<Eigen::MatrixXd> pert;
        if (cfg.noise_level > 0.0) pert = replicate_covariance(cfg, rep);
        const Dataset d = sample_impl(cfg, beta, rep, pert ? &*pert : nullptr);
        const FitResult f = fit(d);
        rec.gamma_hat = f.gamma.values;
        rec.gamma_se = f.gamma_cov.diagonal().cwiseSqrt();
        rec.iterations = f.diagnostics.iterations;
        rec.warnings = f.diagnostics.warnings;

        const Eigen::MatrixXd& v = f.beta_cov.covariate;
        const KroneckerCovariance truth = pert ? KroneckerCovariance{*pert, v} : KroneckerCovariance{sigma0, v};
        const Eigen::MatrixXd res = d.Y - d.X * f.beta.transpose();
        const Eigen::VectorXd rss = res.colwise().squaredNorm().transpose();
        const KroneckerCovariance diag{DiagonalFactor{rss / static_cast<double>(d.n() - d.p())}, v};
        rec.loss_maud_frobenius = relative_loss(f.beta_cov, truth, LossNorm::Frobenius);
        rec.loss_maud_spectral = relative_loss(f.beta_cov, truth, LossNorm::Spectral);
        rec.loss_diagonal_frobenius = relative_loss(diag, truth, LossNorm::Frobenius);
        rec.loss_diagonal_spectral = relative_loss(diag, truth, LossNorm::Spectral);

        std::vector<TestResult> tests = beta_tests(f, DfMode::TNMinus1, cfg.alpha);
        for (std::size_t i = 0; i < tests.size(); ++i) {
            const int r = static_cast<int>(i) / cfg.p;
            const int q = static_cast<int>(i) % cfg.p;
            if (beta(r, q) == 0.0) {
                ++rec.nulls;
                rec.null_rejections += tests[i].rejected ? 1 : 0;
            }
        }
        apply_bh(tests, cfg.alpha);
        for (std::size_t i = 0; i < tests.size(); ++i) {
            if (!tests[i].rejected) continue;
            ++rec.bh_rejections;
            const int r = static_cast<int>(i) / cfg.p;
            const int q = static_cast<int>(i) % cfg.p;
            rec.bh_false_rejections += beta(r, q) == 0.0 ? 1 : 0;
        }
        rec.ok = true;
    } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

McReport summarise(const ScenarioConfig& cfg, Eigen::MatrixXd beta, std::vector<ReplicateRecord> recs) {
    McReport rep;
    rep.config = cfg;
    rep.true_beta = std::move(beta);
    rep.replicates = std::move(recs);

    const int m = cfg.true_gamma.values.size();
    const int G = cfg.part.G();
    std::vector<const ReplicateRecord*> ok;
    for (const ReplicateRecord& r : rep.replicates) {
        if (r.ok) ok.push_back(&r);
        else ++rep.failures;
    }
    const double k = static_cast<double>(ok.size());
    for (int j = 0; j < m; ++j) {
        const auto [g, h] = index_pair(j, G);
        ParameterSummary ps;
        ps.label = "gamma[" + std::to_string(g + 1) + "," + std::to_string(h + 1) + "]";
        ps.truth = cfg.true_gamma.values(j);
        if (!ok.empty()) {
            double mean = 0.0, ase = 0.0, cover = 0.0;
            for (const ReplicateRecord* r : ok) {
                mean += r->gamma_hat(j);
                ase += r->gamma_se(j);
                cover += std::abs(r->gamma_hat(j) - ps.truth) <= kZ975 * r->gamma_se(j) ? 1.0 : 0.0;
            }
            mean /= k;
            double ss = 0.0;
            for (const ReplicateRecord* r : ok) ss += (r->gamma_hat(j) - mean) * (r->gamma_hat(j) - mean);
            ps.bias = mean - ps.truth;
            ps.mcsd = ok.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
            ps.bias_mcse = ps.mcsd / std::sqrt(k);
            ps.ase = ase / k;
            ps.coverage = cover / k;
        }
        rep.parameters.push_back(ps);
    }

    std::vector<double> mf, df, ms, ds;
    long nulls = 0, null_rej = 0;
    double fdp = 0.0;
    for (const ReplicateRecord* r : ok) {
        mf.push_back(r->loss_maud_frobenius);
        df.push_back(r->loss_diagonal_frobenius);
        ms.push_back(r->loss_maud_spectral);
        ds.push_back(r->loss_diagonal_spectral);
        nulls += r->nulls;
        null_rej += r->null_rejections;
        fdp += r->bh_rejections > 0 ? static_cast<double>(r->bh_false_rejections) / r->bh_rejections : 0.0;
    }
    if (!ok.empty()) {
        rep.median_loss_maud_frobenius = median(mf);
        rep.median_loss_diagonal_frobenius = median(df);
        rep.median_loss_maud_spectral = median(ms);
        rep.median_loss_diagonal_spectral = median(ds);
        rep.empirical_fdr = fdp / k;
    }
    rep.type1_rate = nulls > 0 ? static_cast<double>(null_rej) / static_cast<double>(nulls) : 0.0;
    return rep;
}

} // namespace

void ScenarioConfig::validate() const {
    if (n < 2) throw InvalidConfig("n must be at least 2");
    if (p < 1) throw InvalidConfig("p must be at least 1");
    if (replicates < 1) throw InvalidConfig("replicates must be >= 1");
    if (!(noise_level >= 0.0)) throw InvalidConfig("noise level must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConfig("alpha must lie in (0, 1)");
    if (!(true_gamma.part == part)) throw InvalidConfig("true gamma uses a different partition");
    if (true_beta && (true_beta->rows() != part.R() || true_beta->cols() != p))
        throw InvalidConfig("true beta must be R x p");
    const BetaRule& b = beta_rule;
    if (!(b.nonzero_fraction >= 0.0 && b.nonzero_fraction <= 1.0) || !(b.min_abs >= 0.0 && b.min_abs <= b.max_abs))
        throw InvalidConfig("beta rule needs 0 <= fraction <= 1 and 0 <= min_abs <= max_abs");
    if (!is_admissible(true_gamma)) throw InadmissibleGamma("true gamma gives an Omega that is not positive definite");
    try {
        noise_map(true_gamma);
    } catch (const Error& e) {
        throw InadmissibleGamma(std::string("I - Upsilon is not invertible: ") + e.what());
    }
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

Eigen::MatrixXd scenario_beta(const ScenarioConfig& cfg) {
    if (cfg.true_beta) return *cfg.true_beta;
    std::mt19937_64 rng = make_rng(cfg.seed, 0, kBetaStream);
    std::uniform_real_distribution<double> mag(cfg.beta_rule.min_abs, cfg.beta_rule.max_abs);
    std::bernoulli_distribution sign(0.5);
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(cfg.part.R(), cfg.p);
    for (int g = 0; g < cfg.part.G(); ++g) {
        std::vector<int> idx(static_cast<std::size_t>(cfg.part.size(g)));
        std::iota(idx.begin(), idx.end(), cfg.part.offset(g));
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto k = static_cast<std::size_t>(std::lround(cfg.beta_rule.nonzero_fraction * cfg.part.size(g)));
        for (std::size_t i = 0; i < k; ++i) {
            const int r = idx[i];
            for (int q = 0; q < cfg.p; ++q) {
                double v;
                do {
                    v = (sign(rng) ? 1.0 : -1.0) * mag(rng);
                } while ((beta.row(r).head(q).array() == v).any());
                beta(r, q) = v;
            }
        }
    }
    return beta;
}

Dataset sample_dataset(const ScenarioConfig& cfg, int replicate) {
    return sample_dataset(cfg, scenario_beta(cfg), replicate);
}

Dataset sample_dataset(const ScenarioConfig& cfg, const Eigen::MatrixXd& beta, int replicate) {
    if (!is_admissible(cfg.true_gamma)) throw InadmissibleGamma("true gamma gives an Omega that is not positive definite");
    if (cfg.noise_level > 0.0) {
        const Eigen::MatrixXd cov = replicate_covariance(cfg, replicate);
        return sample_impl(cfg, beta, replicate, &cov);
    }
    return sample_impl(cfg, beta, replicate, nullptr);
}

Eigen::MatrixXd replicate_covariance(const ScenarioConfig& cfg, int replicate) {
    const UniformBlockMatrix sigma = gamma_to_sigma(cfg.true_gamma);
    if (!(cfg.noise_level > 0.0)) return expand_dense(sigma);
    std::mt19937_64 rng = make_rng(cfg.seed, static_cast<std::uint64_t>(replicate), kPerturbStream);
    return perturb_covariance(sigma, cfg.noise_level, rng);
}

Eigen::MatrixXd perturb_covariance(const UniformBlockMatrix& sigma, double s, std::mt19937_64& rng) {
    if (!(s > 0.0)) throw InvalidConfig("perturbation scale must be > 0");
    const int R = sigma.R();
    const Eigen::MatrixXd base = expand_dense(sigma);
    std::normal_distribution<double> z;
    for (int attempt = 0; attempt < 5; ++attempt) {
        Eigen::MatrixXd m(R, R);
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < R; ++j) m(i, j) = z(rng);
        Eigen::MatrixXd out = base;
        out.noalias() += s * (m.transpose() * m);
        out = 0.5 * (out + out.transpose()).eval();
        const Eigen::LLT<Eigen::MatrixXd> llt(out);
        if (llt.info() == Eigen::Success) return out;
    }
    throw PerturbationNotPD("perturbed covariance not positive definite after 5 draws");
}

McReport run_study(const ScenarioConfig& cfg, int workers) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd beta = scenario_beta(cfg);
    const UniformBlockMatrix sigma0 = gamma_to_sigma(cfg.true_gamma);
    const int w = workers > 0 ? workers : num_threads();
    std::vector<ReplicateRecord> recs(static_cast<std::size_t>(cfg.replicates));
#pragma omp parallel for schedule(dynamic) num_threads(w)
    for (int r = 0; r < cfg.replicates; ++r) recs[static_cast<std::size_t>(r)] = run_replicate(cfg, beta, sigma0, r);
    McReport rep = summarise(cfg, beta, std::move(recs));
    rep.workers = w;
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

McReport run_study_serial(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd beta = scenario_beta(cfg);
    const UniformBlockMatrix sigma0 = gamma_to_sigma(cfg.true_gamma);
    std::vector<ReplicateRecord> recs;
    recs.reserve(static_cast<std::size_t>(cfg.replicates));
    for (int r = 0; r < cfg.replicates; ++r) recs.push_back(run_replicate(cfg, beta, sigma0, r));
    McReport rep = summarise(cfg, beta, std::move(recs));
    rep.workers = 1;
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

} // namespace ubmaud
