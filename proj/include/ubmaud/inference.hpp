#pragma once

#include "ubmaud/covariance.hpp"
#include "ubmaud/estimator.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace ubmaud {

struct TestResult {
    std::string label;
    double estimate = 0.0;
    double standard_error = 0.0;
    double statistic = 0.0;
    double p_value = 1.0; ///< two-sided
    std::optional<double> adjusted_p_value;
    bool rejected = false;
};

/// Reference distribution for coefficient tests.
enum class DfMode {
    TNMinus1, ///< Student t with n - 1 degrees of freedom
    Normal,
};

/// One test per coefficient, ordered r * p + q and labelled "beta[r,q]"
/// (1-based). rejected marks p <= alpha before any multiplicity correction.
std::vector<TestResult> beta_tests(const FitResult& f, DfMode df = DfMode::TNMinus1, double alpha = 0.05);

/// Wald tests of gamma_gg' = 0 against a normal reference, labelled
/// "gamma[g,h]" (1-based) in parameter order.
std::vector<TestResult> gamma_tests(const FitResult& f, double alpha = 0.05);

struct BhResult {
    Eigen::VectorXd adjusted;
    std::vector<bool> rejected;
};

/// Benjamini-Hochberg step-up. InvalidPValue on values outside [0, 1].
BhResult bh_adjust(const Eigen::VectorXd& p, double alpha);

/// Fills adjusted_p_value and replaces rejected with the BH decision.
void apply_bh(std::vector<TestResult>& tests, double alpha);

/// H0: C beta = rho0 with C of size s x Rp (columns indexed r * p + q).
struct ContrastSpec {
    Eigen::MatrixXd C;
    Eigen::VectorXd rho0;
};

struct WaldResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int df = 0;
};

/// RankDeficientContrast when rank(C) < s, SingularContrastCovariance when
/// C Sigma_beta C^T cannot be inverted reliably.
WaldResult contrast_test(const FitResult& f, const ContrastSpec& c);

/// C (U kron V) C^T using row blocks of C against the factors.
Eigen::MatrixXd contrast_covariance(const KroneckerCovariance& cov, const Eigen::MatrixXd& c);

enum class LossNorm { Frobenius, Spectral };

/// ||estimated - truth|| / ||truth|| without forming either Kronecker product.
double relative_loss(const KroneckerCovariance& estimated, const KroneckerCovariance& truth, LossNorm norm);

/// Same quantity through dense Rp x Rp matrices; DimensionMismatch above Rp = 2000.
double relative_loss_dense(const KroneckerCovariance& estimated, const KroneckerCovariance& truth, LossNorm norm);

} // namespace ubmaud
