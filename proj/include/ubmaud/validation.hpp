#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ubmaud {

struct ValidationCheck {
    std::string name;
    int cases = 0;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

enum class ValidationScale { Small, Large };

/// Randomised dense-oracle and finite-difference checks of the UB algebra
/// and the likelihood. Small runs in about a second; Large uses the sizes of
/// the acceptance suite.
std::vector<ValidationCheck> run_validation(ValidationScale scale, std::uint64_t seed);

} // namespace ubmaud
