#include "ubmaud/param_maps.hpp"

#include "ubmaud/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace ubmaud {

int pair_index(int g, int h, int G) {
    if (g > h) std::swap(g, h);
    if (g < 0 || h >= G) throw IndexOutOfRange("pair (" + std::to_string(g) + "," + std::to_string(h) + ")");
    // rows 0..g-1 contribute G, G-1, ..., G-g+1 entries
    return g * G - g * (g - 1) / 2 + (h - g);
}

std::pair<int, int> index_pair(int j, int G) {
    if (j < 0 || j >= G * (G + 1) / 2)
        throw IndexOutOfRange("parameter index " + std::to_string(j) + " outside [0, " +
                              std::to_string(G * (G + 1) / 2) + ")");
    int g = 0;
    int row_len = G;
    while (j >= row_len) {
        j -= row_len;
        ++g;
        --row_len;
    }
    return {g, g + j};
}

GammaVector::GammaVector(Eigen::VectorXd v, PartitionVector p) : values(std::move(v)), part(std::move(p)) {
    if (values.size() != part.n_params()) {
        throw DimensionMismatch("gamma has length " + std::to_string(values.size()) + ", expected " +
                                std::to_string(part.n_params()));
    }
}

GammaVector GammaVector::zero(const PartitionVector& p) { return {Eigen::VectorXd::Zero(p.n_params()), p}; }

Eigen::MatrixXd GammaVector::matrix() const {
    const int G = part.G();
    Eigen::MatrixXd m(G, G);
    for (int j = 0; j < values.size(); ++j) {
        const auto [g, h] = index_pair(j, G);
        m(g, h) = m(h, g) = values(j);
    }
    return m;
}

GammaVector GammaVector::from_matrix(const Eigen::MatrixXd& m, const PartitionVector& p) {
    const int G = p.G();
    if (m.rows() != G || m.cols() != G) throw DimensionMismatch("gamma matrix must be G x G");
    Eigen::VectorXd v(p.n_params());
    for (int j = 0; j < v.size(); ++j) {
        const auto [g, h] = index_pair(j, G);
        v(j) = m(g, h);
    }
    return {v, p};
}

RhoVector::RhoVector(Eigen::VectorXd v, PartitionVector p) : values(std::move(v)), part(std::move(p)) {
    if (values.size() != part.n_params()) {
        throw DimensionMismatch("rho has length " + std::to_string(values.size()) + ", expected " +
                                std::to_string(part.n_params()));
    }
}

namespace {

double scale_factor(const PartitionVector& p, int g, int h) {
    if (g == h) return p.size(g) - 1.0;
    return std::sqrt((p.size(g) - 1.0) * (p.size(h) - 1.0));
}

} // namespace

RhoVector gamma_to_rho(const GammaVector& gm) {
    Eigen::VectorXd v(gm.values.size());
    for (int j = 0; j < v.size(); ++j) {
        const auto [g, h] = index_pair(j, gm.part.G());
        v(j) = scale_factor(gm.part, g, h) * gm.values(j);
    }
    return {v, gm.part};
}

GammaVector rho_to_gamma(const RhoVector& r) {
    Eigen::VectorXd v(r.values.size());
    for (int j = 0; j < v.size(); ++j) {
        const auto [g, h] = index_pair(j, r.part.G());
        v(j) = r.values(j) / scale_factor(r.part, g, h);
    }
    return {v, r.part};
}

UniformBlockMatrix gamma_to_upsilon(const GammaVector& g) {
    const Eigen::MatrixXd b = g.matrix();
    return {-b.diagonal(), b, g.part};
}

UniformBlockMatrix gamma_to_omega(const GammaVector& g) {
    const UniformBlockMatrix ups = gamma_to_upsilon(g);
    const Eigen::VectorXd& au = ups.A();
    const Eigen::MatrixXd& bu = ups.B();
    const Eigen::VectorXd l = g.part.L();
    const Eigen::VectorXd one_minus = Eigen::VectorXd::Ones(au.size()) - au;
    Eigen::MatrixXd b = -2.0 * bu;
    b += au.asDiagonal() * bu;
    b += bu * au.asDiagonal();
    b += bu * l.asDiagonal() * bu;
    return {one_minus.cwiseProduct(one_minus), b, g.part};
}

UniformBlockMatrix omega_to_sigma(const UniformBlockMatrix& omega) {
    require_ub_positive_definite(omega, "Omega");
    return ub_inverse(omega);
}

UniformBlockMatrix gamma_to_sigma(const GammaVector& g) { return omega_to_sigma(gamma_to_omega(g)); }

void require_admissible(const GammaVector& g) { require_ub_positive_definite(gamma_to_omega(g), "Omega(gamma)"); }

bool is_admissible(const GammaVector& g) {
    if (!g.values.allFinite()) return false;
    return is_ub_positive_definite(gamma_to_omega(g));
}

SigmaToGammaResult sigma_to_gamma_detailed(const UniformBlockMatrix& sigma, DiagonalReconciliation mode,
                                          double tol) {
    require_ub_positive_definite(sigma, "Sigma");
    const UniformBlockMatrix omega = ub_inverse(sigma);
    const int G = sigma.G();
    if (G > 20) throw DimensionMismatch("sigma_to_gamma: Riccati branch search supports G <= 20");

    // I - Upsilon must have a unit diagonal; search the 2^G sign branches of
    // the Delta square root for the one that satisfies it.
    double best = std::numeric_limits<double>::infinity();
    unsigned best_branch = 0;
    Eigen::VectorXd best_a;
    Eigen::MatrixXd best_b;
    const unsigned n_branches = 1u << G;
    for (unsigned br = 0; br < n_branches; ++br) {
        const UniformBlockMatrix k = ub_sqrt_branch(omega, br);
        const double mismatch = (k.A() + k.B().diagonal() - Eigen::VectorXd::Ones(G)).cwiseAbs().maxCoeff();
        if (mismatch < best) {
            best = mismatch;
            best_branch = br;
            best_a = k.A();
            best_b = k.B();
        }
    }

    // Upsilon = I - K
    const Eigen::VectorXd a_ups = Eigen::VectorXd::Ones(G) - best_a;
    const Eigen::MatrixXd b_ups = -best_b;
    if (mode == DiagonalReconciliation::Strict && !(best <= tol)) {
        std::ostringstream os;
        os << "no Riccati branch gives I - Upsilon a unit diagonal: max |-(A_Upsilon)_gg - (B_Upsilon)_gg| = "
           << best << " (tol " << tol << ")";
        throw NotMaudRepresentable(os.str());
    }
    Eigen::MatrixXd gm = b_ups;
    for (int g = 0; g < G; ++g) {
        gm(g, g) = mode == DiagonalReconciliation::Strict ? -a_ups(g) : 0.5 * (-a_ups(g) + b_ups(g, g));
    }
    return {GammaVector::from_matrix(gm, sigma.part()), best_branch, best};
}

GammaVector sigma_to_gamma(const UniformBlockMatrix& sigma) { return sigma_to_gamma_detailed(sigma).gamma; }

PlugInEstimators plug_in_estimators(const GammaVector& gamma_hat) {
    UniformBlockMatrix ups = gamma_to_upsilon(gamma_hat);
    UniformBlockMatrix omega = gamma_to_omega(gamma_hat);
    UniformBlockMatrix sigma = omega_to_sigma(omega);
    return {std::move(ups), std::move(omega), std::move(sigma)};
}

} // namespace ubmaud
