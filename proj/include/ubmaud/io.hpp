#pragma once

#include "ubmaud/estimator.hpp"
#include "ubmaud/inference.hpp"
#include "ubmaud/param_maps.hpp"
#include "ubmaud/simgen.hpp"
#include "ubmaud/ub_matrix.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ubmaud::io {

using Json = nlohmann::ordered_json;

/// Format tag written into every JSON document.
inline constexpr const char* kSpecVersion = "1.0";

/// Comma-separated numbers, one observation per row. ParseError names the
/// offending line and field.
Eigen::MatrixXd read_csv(const std::string& path, bool header);
void write_csv(const std::string& path, const Eigen::MatrixXd& m, const std::vector<std::string>& header = {});

/// "30,40,60" -> PartitionVector.
PartitionVector parse_partition(const std::string& spec);

/// {"sizes": [...], "A": [...], "B": [upper triangle, row-major]}
Json ub_to_json(const UniformBlockMatrix& m);
UniformBlockMatrix ub_from_json(const Json& j);

/// {"kind": "gamma"|"rho", "order": "row-major-upper", "sizes": [...], "values": [...]}
Json gamma_to_json(const GammaVector& g);
Json rho_to_json(const RhoVector& r);
/// Reads either kind; `part` is used when the document carries no sizes.
GammaVector gamma_from_json(const Json& j, const PartitionVector* part = nullptr);

Json tests_to_json(const std::vector<TestResult>& tests);
void write_tests_csv(const std::string& path, const std::vector<TestResult>& tests);

Json fit_to_json(const FitResult& f, const std::vector<TestResult>& beta_tests,
                 const std::vector<TestResult>& gamma_tests);

ScenarioConfig scenario_from_json(const Json& j);
Json scenario_to_json(const ScenarioConfig& c);

Json report_to_json(const McReport& r);
void write_replicates_csv(const std::string& path, const McReport& r);
void write_parameters_csv(const std::string& path, const McReport& r);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

} // namespace ubmaud::io
