#pragma once

#include "ubmaud/estimator.hpp"
#include "ubmaud/kernels.hpp"
#include "ubmaud/param_maps.hpp"
#include "ubmaud/simgen.hpp"

#include <Eigen/Core>

#include <random>
#include <vector>

namespace fixtures {

/// Dependence parameters of the three-community simulation design.
inline ubmaud::GammaVector design_gamma(const ubmaud::PartitionVector& part) {
    Eigen::VectorXd v(6);
    v << 0.40, 0.01, -0.51, 0.19, -0.91, -0.64;
    return {v, part};
}

inline ubmaud::PartitionVector design_partition() { return ubmaud::PartitionVector({30, 40, 60}); }

inline ubmaud::ScenarioConfig design_scenario(long n, int replicates, std::uint64_t seed) {
    ubmaud::ScenarioConfig c;
    c.name = "design";
    c.n = n;
    c.part = design_partition();
    c.true_gamma = design_gamma(c.part);
    c.replicates = replicates;
    c.seed = seed;
    return c;
}

inline Eigen::MatrixXd normal_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = z(rng);
    return m;
}

} // namespace fixtures
