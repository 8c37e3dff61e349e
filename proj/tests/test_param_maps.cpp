#include "fixtures.hpp"

#include "ubmaud/error.hpp"
#include "ubmaud/param_maps.hpp"
#include "ubmaud/reference.hpp"

#include <Eigen/LU>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ubmaud;

TEST(IndexMap, RowMajorUpper) {
    EXPECT_EQ(pair_index(0, 0, 3), 0);
    EXPECT_EQ(pair_index(0, 2, 3), 2);
    EXPECT_EQ(pair_index(1, 1, 3), 3);
    EXPECT_EQ(pair_index(2, 1, 3), 4);
    EXPECT_EQ(pair_index(2, 2, 3), 5);
    for (int G = 1; G <= 6; ++G) {
        for (int j = 0; j < G * (G + 1) / 2; ++j) {
            const auto [g, h] = index_pair(j, G);
            EXPECT_LE(g, h);
            EXPECT_EQ(pair_index(g, h, G), j);
        }
    }
    EXPECT_THROW(index_pair(6, 3), IndexOutOfRange);
    EXPECT_THROW(pair_index(0, 3, 3), IndexOutOfRange);
}

TEST(GammaVector, LengthChecked) {
    EXPECT_THROW(GammaVector(Eigen::VectorXd::Zero(2), PartitionVector({3, 3})), DimensionMismatch);
}

TEST(GammaRho, Examples) {
    const PartitionVector p({3, 3});
    const RhoVector z = gamma_to_rho(GammaVector::zero(p));
    EXPECT_EQ(z.values, Eigen::VectorXd::Zero(3));

    Eigen::VectorXd v(3);
    v << 0.0, 0.5, 0.0;
    EXPECT_DOUBLE_EQ(gamma_to_rho(GammaVector(v, p)).values(1), 1.0);
    EXPECT_DOUBLE_EQ(rho_to_gamma(RhoVector(Eigen::Vector3d(0.0, 1.0, 0.0), p)).values(1), 0.5);

    const PartitionVector q({3, 4, 7});
    Eigen::VectorXd g(6);
    g << 0.25, -0.125, 0.5, 0.75, -0.25, 0.0625;
    const RhoVector r = gamma_to_rho(GammaVector(g, q));
    EXPECT_DOUBLE_EQ(r.values(0), 2 * 0.25);
    EXPECT_DOUBLE_EQ(r.values(3), 3 * 0.75);
    EXPECT_DOUBLE_EQ(r.values(2), std::sqrt(2.0 * 6.0) * 0.5);
    EXPECT_EQ(rho_to_gamma(r).values, g);
    EXPECT_EQ(gamma_to_rho(rho_to_gamma(r)).values, r.values);
}

TEST(Upsilon, ZeroAndDesignValues) {
    const PartitionVector p = fixtures::design_partition();
    const UniformBlockMatrix z = gamma_to_upsilon(GammaVector::zero(p));
    EXPECT_EQ(z.A(), Eigen::VectorXd::Zero(3));
    EXPECT_EQ(z.B(), Eigen::MatrixXd::Zero(3, 3));

    const UniformBlockMatrix u = gamma_to_upsilon(fixtures::design_gamma(p));
    EXPECT_EQ(u.A(), Eigen::Vector3d(-0.40, -0.19, 0.64));
    Eigen::Matrix3d b;
    b << 0.40, 0.01, -0.51, 0.01, 0.19, -0.91, -0.51, -0.91, -0.64;
    EXPECT_EQ(u.B(), Eigen::MatrixXd(b));
    EXPECT_EQ(expand_dense(u).diagonal(), Eigen::VectorXd::Zero(p.R()));
}

TEST(Omega, ZeroIsIdentityAndMatchesSquare) {
    const PartitionVector p({3, 5});
    const UniformBlockMatrix i = gamma_to_omega(GammaVector::zero(p));
    EXPECT_EQ(i.A(), Eigen::VectorXd::Ones(2));
    EXPECT_EQ(i.B(), Eigen::MatrixXd::Zero(2, 2));

    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const PartitionVector q = reference::random_partition(rng, 1, 4, 2, 10);
        const GammaVector g = reference::random_gamma(rng, q, 1.0);
        const UniformBlockMatrix ups = gamma_to_upsilon(g);
        const UniformBlockMatrix k = ub_sub(UniformBlockMatrix::identity(q), ups);
        const UbProduct sq = ub_mul(k, k);
        const UniformBlockMatrix om = gamma_to_omega(g);
        EXPECT_LT((sq.A - om.A()).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((sq.B - om.B()).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(Omega, DesignMatchesDense) {
    const GammaVector g = fixtures::design_gamma(fixtures::design_partition());
    EXPECT_LT((reference::dense_omega(g) - expand_dense(gamma_to_omega(g))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sigma, IdentityRandomAndDesign) {
    const PartitionVector p({4, 2});
    const UniformBlockMatrix s = omega_to_sigma(UniformBlockMatrix::identity(p));
    EXPECT_EQ(s.A(), Eigen::VectorXd::Ones(2));
    EXPECT_LT(s.B().cwiseAbs().maxCoeff(), 1e-300);

    std::mt19937_64 rng(5);
    const UniformBlockMatrix om = reference::random_pd_ub(rng, PartitionVector({3, 4, 5}));
    const UbProduct prod = ub_mul(omega_to_sigma(om), om);
    EXPECT_LT((prod.A - Eigen::VectorXd::Ones(3)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(prod.B.cwiseAbs().maxCoeff(), 1e-10);

    const GammaVector g = fixtures::design_gamma(fixtures::design_partition());
    const Eigen::MatrixXd dense = reference::dense_omega(g).inverse();
    EXPECT_LT((expand_dense(gamma_to_sigma(g)) - dense).cwiseAbs().maxCoeff(), 1e-10 * dense.cwiseAbs().maxCoeff());
    EXPECT_LT((expand_dense(gamma_to_sigma(g)) - reference::dense_sigma(g)).cwiseAbs().maxCoeff(), 1e-10);

    EXPECT_THROW(omega_to_sigma(UniformBlockMatrix(Eigen::Vector2d(1, -1), Eigen::Matrix2d::Zero(), p)),
                 NotPositiveDefinite);
}

TEST(Sigma, BlockConstancy) {
    const PartitionVector p({3, 4});
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd s = expand_dense(gamma_to_sigma(reference::random_gamma(rng, p, 1.0)));
    for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 7; ++c) {
            if (r == c) continue;
            const int g = p.community_of(r);
            const int h = p.community_of(c);
            const int r0 = p.offset(g);
            const int c0 = p.offset(h) + (g == h ? 1 : 0);
            EXPECT_EQ(s(r, c), s(r0, c0));
        }
    }
}

TEST(SigmaToGamma, IdentityAndRoundTrip) {
    const PartitionVector p({3, 4});
    EXPECT_LT(sigma_to_gamma(UniformBlockMatrix::identity(p)).values.cwiseAbs().maxCoeff(), 1e-15);

    const GammaVector g = fixtures::design_gamma(fixtures::design_partition());
    const GammaVector back = sigma_to_gamma(omega_to_sigma(gamma_to_omega(g)));
    EXPECT_LT((back.values - g.values).cwiseAbs().maxCoeff(), 1e-10);

    std::mt19937_64 rng(9);
    for (int t = 0; t < 50; ++t) {
        const PartitionVector q = reference::random_partition(rng, 1, 5, 2, 40);
        const GammaVector h = reference::random_gamma(rng, q, 1.0);
        const SigmaToGammaResult res = sigma_to_gamma_detailed(gamma_to_sigma(h));
        EXPECT_LT((res.gamma.values - h.values).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT(res.diagonal_mismatch, 1e-10);
    }
}

TEST(SigmaToGamma, NotRepresentable) {
    const PartitionVector p({3});
    const UniformBlockMatrix s(Eigen::VectorXd::Constant(1, 4.0), Eigen::MatrixXd::Zero(1, 1), p);
    EXPECT_THROW(sigma_to_gamma(s), NotMaudRepresentable);
    const SigmaToGammaResult avg = sigma_to_gamma_detailed(s, DiagonalReconciliation::Average);
    EXPECT_NEAR(avg.gamma.values(0), -0.25, 1e-15);
    EXPECT_THROW(sigma_to_gamma(UniformBlockMatrix(Eigen::VectorXd::Constant(1, -1.0), Eigen::MatrixXd::Zero(1, 1), p)),
                 NotPositiveDefinite);
}

TEST(Admissibility, PositiveDefiniteOmega) {
    const PartitionVector p({3, 3});
    EXPECT_TRUE(is_admissible(GammaVector::zero(p)));
    // 1 + gamma_gg = 0 makes a_Omega vanish
    const GammaVector bad(Eigen::Vector3d(-1.0, 0.0, 0.0), p);
    EXPECT_FALSE(is_admissible(bad));
    EXPECT_THROW(require_admissible(bad), NotPositiveDefinite);
    try {
        require_admissible(bad);
    } catch (const NotPositiveDefinite& e) {
        EXPECT_NE(std::string(e.what()).find("Omega"), std::string::npos);
    }
}

TEST(PlugIn, MatchesComponentMaps) {
    const GammaVector g = fixtures::design_gamma(fixtures::design_partition());
    const PlugInEstimators est = plug_in_estimators(g);
    const UniformBlockMatrix ups = gamma_to_upsilon(g);
    const UniformBlockMatrix om = gamma_to_omega(g);
    const UniformBlockMatrix sg = omega_to_sigma(om);
    EXPECT_EQ(est.upsilon.A(), ups.A());
    EXPECT_EQ(est.upsilon.B(), ups.B());
    EXPECT_EQ(est.omega.A(), om.A());
    EXPECT_EQ(est.omega.B(), om.B());
    EXPECT_EQ(est.sigma.A(), sg.A());
    EXPECT_EQ(est.sigma.B(), sg.B());
    // Sigma A and B by the explicit closed forms
    const Eigen::VectorXd a_sigma = om.A().cwiseInverse();
    const Eigen::MatrixXd b_sigma = -om.delta().inverse() * om.B() * a_sigma.asDiagonal();
    EXPECT_LT((est.sigma.A() - a_sigma).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((est.sigma.B() - b_sigma).cwiseAbs().maxCoeff(), 1e-12);
}
