#include "ubmaud/io.hpp"

#include "ubmaud/error.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ubmaud::io {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    if (s.empty()) throw ParseError(where + ": empty field");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) throw ParseError(where + ": '" + s + "' is not a number");
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot write " + path);
    os << std::setprecision(17);
    return os;
}

Json vec_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json mat_json(const Eigen::MatrixXd& m) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
    return a;
}

Eigen::VectorXd json_vec(const Json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(std::string(what) + "[" + std::to_string(i) + "] is not a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd json_mat(const Json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ParseError(std::string(what) + " must be a non-empty array of rows");
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Eigen::VectorXd row = json_vec(j[i], what);
        if (static_cast<std::size_t>(row.size()) != cols) throw ParseError(std::string(what) + " rows differ in length");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

PartitionVector sizes_from_json(const Json& j) {
    if (!j.is_array()) throw ParseError("sizes must be an array of integers");
    std::vector<int> s;
    for (const Json& v : j) {
        if (!v.is_number_integer()) throw ParseError("sizes must be integers");
        s.push_back(v.get<int>());
    }
    return PartitionVector(s);
}

Json sizes_json(const PartitionVector& p) { return Json(p.sizes()); }

Json upper_json(const Eigen::MatrixXd& b) {
    Json a = Json::array();
    for (Eigen::Index g = 0; g < b.rows(); ++g)
        for (Eigen::Index h = g; h < b.cols(); ++h) a.push_back(b(g, h));
    return a;
}

Json test_json(const TestResult& t) {
    Json j;
    j["label"] = t.label;
    j["estimate"] = t.estimate;
    j["se"] = t.standard_error;
    j["stat"] = t.statistic;
    j["p"] = t.p_value;
    j["p_adj"] = t.adjusted_p_value ? Json(*t.adjusted_p_value) : Json(nullptr);
    j["rejected"] = t.rejected;
    return j;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace

Eigen::MatrixXd read_csv(const std::string& path, bool header) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (header && lineno == 1) continue;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split(line, ',');
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            row.push_back(parse_double(fields[c], path + ":" + std::to_string(lineno) + " field " + std::to_string(c + 1)));
        if (rows.empty()) width = row.size();
        if (row.size() != width)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) + " fields, got " +
                             std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < width; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    return m;
}

void write_csv(const std::string& path, const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
    std::ofstream os = open_out(path);
    if (!header.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
        os << "\n";
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << m(i, c);
        os << "\n";
    }
}

PartitionVector parse_partition(const std::string& spec) {
    std::vector<int> sizes;
    for (const std::string& f : split(spec, ',')) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (f.empty() || ec != std::errc() || ptr != f.data() + f.size())
            throw ParseError("partition entry '" + f + "' is not an integer");
        sizes.push_back(v);
    }
    return PartitionVector(sizes);
}

Json ub_to_json(const UniformBlockMatrix& m) {
    Json j;
    j["spec_version"] = kSpecVersion;
    j["sizes"] = sizes_json(m.part());
    j["A"] = vec_json(m.A());
    j["B"] = upper_json(m.B());
    return j;
}

UniformBlockMatrix ub_from_json(const Json& j) {
    try {
        const PartitionVector part = sizes_from_json(j.at("sizes"));
        const int G = part.G();
        const Eigen::VectorXd a = json_vec(j.at("A"), "A");
        const Eigen::VectorXd up = json_vec(j.at("B"), "B");
        if (a.size() != G || up.size() != part.n_params())
            throw DimensionMismatch("UB document needs " + std::to_string(G) + " A entries and " +
                                    std::to_string(part.n_params()) + " upper-triangle B entries");
        Eigen::MatrixXd b(G, G);
        for (int k = 0; k < up.size(); ++k) {
            const auto [g, h] = index_pair(k, G);
            b(g, h) = b(h, g) = up(k);
        }
        return {a, b, part};
    } catch (const Json::exception& e) {
        throw ParseError(std::string("UB document: ") + e.what());
    }
}

Json gamma_to_json(const GammaVector& g) {
    Json j;
    j["spec_version"] = kSpecVersion;
    j["kind"] = "gamma";
    j["order"] = "row-major-upper";
    j["sizes"] = sizes_json(g.part);
    j["values"] = vec_json(g.values);
    return j;
}

Json rho_to_json(const RhoVector& r) {
    Json j;
    j["spec_version"] = kSpecVersion;
    j["kind"] = "rho";
    j["order"] = "row-major-upper";
    j["sizes"] = sizes_json(r.part);
    j["values"] = vec_json(r.values);
    return j;
}

GammaVector gamma_from_json(const Json& j, const PartitionVector* part) {
    try {
        if (j.is_array()) {
            if (part == nullptr) throw ParseError("bare gamma array needs a partition");
            return {json_vec(j, "gamma"), *part};
        }
        if (j.contains("order") && j.at("order").get<std::string>() != "row-major-upper")
            throw ParseError("unsupported parameter order '" + j.at("order").get<std::string>() + "'");
        const PartitionVector p = j.contains("sizes") ? sizes_from_json(j.at("sizes"))
                                  : part              ? *part
                                                      : throw ParseError("gamma document has no sizes");
        if (part != nullptr && !(p == *part)) throw PartitionMismatch("gamma document sizes differ from --partition");
        const Eigen::VectorXd v = json_vec(j.at("values"), "values");
        const std::string kind = get_or<std::string>(j, "kind", "gamma");
        if (kind == "rho") return rho_to_gamma(RhoVector(v, p));
        if (kind != "gamma") throw ParseError("unknown parameter kind '" + kind + "'");
        return {v, p};
    } catch (const Json::exception& e) {
        throw ParseError(std::string("gamma document: ") + e.what());
    }
}

Json tests_to_json(const std::vector<TestResult>& tests) {
    Json a = Json::array();
    for (const TestResult& t : tests) a.push_back(test_json(t));
    return a;
}

void write_tests_csv(const std::string& path, const std::vector<TestResult>& tests) {
    std::ofstream os = open_out(path);
    os << "label,estimate,SE,stat,p,p_adj,rejected\n";
    for (const TestResult& t : tests) {
        os << '"' << t.label << '"' << "," << t.estimate << "," << t.standard_error << "," << t.statistic << ","
           << t.p_value << ",";
        if (t.adjusted_p_value) os << *t.adjusted_p_value;
        os << "," << (t.rejected ? 1 : 0) << "\n";
    }
}

Json fit_to_json(const FitResult& f, const std::vector<TestResult>& bt, const std::vector<TestResult>& gt) {
    Json j;
    j["spec_version"] = kSpecVersion;
    j["kind"] = "fit";
    j["n"] = f.n;
    j["p"] = f.p();
    j["sizes"] = sizes_json(f.part());
    j["beta"] = mat_json(f.beta);
    Eigen::MatrixXd se(f.R(), f.p());
    for (int r = 0; r < f.R(); ++r)
        for (int q = 0; q < f.p(); ++q) se(r, q) = f.beta_se(r, q);
    j["beta_se"] = mat_json(se);
    j["beta_cov"] = {{"outcome", ub_to_json(f.sigma())}, {"covariate", mat_json(f.beta_cov.covariate)}};
    j["gamma"] = gamma_to_json(f.gamma);
    j["rho"] = rho_to_json(f.rho);
    j["gamma_se"] = vec_json(f.gamma_cov.diagonal().cwiseSqrt());
    j["gamma_cov"] = mat_json(f.gamma_cov);
    Json d;
    d["iterations"] = f.diagnostics.iterations;
    d["score_norm"] = f.diagnostics.score_norm;
    d["loglik"] = f.diagnostics.loglik;
    d["start"] = f.diagnostics.start;
    d["fisher_eigenvalues_per_n"] = vec_json(f.diagnostics.fisher_eigenvalues_per_n);
    d["fgls_max_diff"] = f.diagnostics.fgls_max_diff ? Json(*f.diagnostics.fgls_max_diff) : Json(nullptr);
    d["warnings"] = f.diagnostics.warnings;
    j["diagnostics"] = d;
    j["beta_tests"] = tests_to_json(bt);
    j["gamma_tests"] = tests_to_json(gt);
    return j;
}

ScenarioConfig scenario_from_json(const Json& j) {
    try {
        ScenarioConfig c;
        c.name = get_or<std::string>(j, "name", "scenario");
        c.n = j.at("n").get<long>();
        c.part = sizes_from_json(j.at("sizes"));
        c.p = get_or<int>(j, "p", 2);
        if (j.contains("gamma")) {
            c.true_gamma = gamma_from_json(j.at("gamma"), &c.part);
        } else if (j.contains("rho")) {
            c.true_gamma = rho_to_gamma(RhoVector(json_vec(j.at("rho"), "rho"), c.part));
        } else {
            throw InvalidConfig("scenario needs \"gamma\" or \"rho\"");
        }
        if (j.contains("beta")) c.true_beta = json_mat(j.at("beta"), "beta");
        if (j.contains("beta_rule")) {
            const Json& b = j.at("beta_rule");
            c.beta_rule.nonzero_fraction = get_or<double>(b, "nonzero_fraction", c.beta_rule.nonzero_fraction);
            c.beta_rule.min_abs = get_or<double>(b, "min_abs", c.beta_rule.min_abs);
            c.beta_rule.max_abs = get_or<double>(b, "max_abs", c.beta_rule.max_abs);
        }
        c.noise_level = get_or<double>(j, "noise_level", 0.0);
        c.replicates = get_or<int>(j, "replicates", 200);
        c.seed = get_or<std::uint64_t>(j, "seed", 1);
        c.alpha = get_or<double>(j, "alpha", 0.05);
        return c;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
}

Json scenario_to_json(const ScenarioConfig& c) {
    Json j;
    j["name"] = c.name;
    j["n"] = c.n;
    j["sizes"] = sizes_json(c.part);
    j["p"] = c.p;
    j["gamma"] = gamma_to_json(c.true_gamma);
    if (c.true_beta) j["beta"] = mat_json(*c.true_beta);
    j["beta_rule"] = {{"nonzero_fraction", c.beta_rule.nonzero_fraction},
                      {"min_abs", c.beta_rule.min_abs},
                      {"max_abs", c.beta_rule.max_abs}};
    j["noise_level"] = c.noise_level;
    j["replicates"] = c.replicates;
    j["seed"] = c.seed;
    j["alpha"] = c.alpha;
    return j;
}

Json report_to_json(const McReport& r) {
    Json j;
    j["spec_version"] = kSpecVersion;
    j["kind"] = "mc_report";
    j["scenario"] = scenario_to_json(r.config);
    j["true_beta"] = mat_json(r.true_beta);
    Json params = Json::array();
    for (const ParameterSummary& p : r.parameters) {
        params.push_back({{"label", p.label},
                          {"truth", p.truth},
                          {"bias", p.bias},
                          {"bias_mcse", p.bias_mcse},
                          {"mcsd", p.mcsd},
                          {"ase", p.ase},
                          {"coverage", p.coverage}});
    }
    j["parameters"] = params;
    j["relative_loss"] = {{"median_maud_frobenius", r.median_loss_maud_frobenius},
                          {"median_diagonal_frobenius", r.median_loss_diagonal_frobenius},
                          {"median_maud_spectral", r.median_loss_maud_spectral},
                          {"median_diagonal_spectral", r.median_loss_diagonal_spectral}};
    j["testing"] = {{"type1_rate", r.type1_rate}, {"empirical_fdr", r.empirical_fdr}};
    j["replicates"] = static_cast<int>(r.replicates.size());
    j["failures"] = r.failures;
    Json errs = Json::array();
    for (const ReplicateRecord& rec : r.replicates)
        if (!rec.ok) errs.push_back({{"replicate", rec.index}, {"error", rec.error}});
    j["failed_replicates"] = errs;
    j["runtime"] = {{"seconds", r.runtime_seconds}, {"workers", r.workers}};
    return j;
}

void write_replicates_csv(const std::string& path, const McReport& r) {
    std::ofstream os = open_out(path);
    const int m = r.config.true_gamma.values.size();
    os << "replicate,ok,iterations,loss_maud_frobenius,loss_diagonal_frobenius,loss_maud_spectral,"
          "loss_diagonal_spectral,null_rejections,nulls,bh_rejections,bh_false_rejections";
    for (const ParameterSummary& p : r.parameters) os << ",\"" << p.label << "\"";
    for (const ParameterSummary& p : r.parameters) os << ",\"se " << p.label << "\"";
    os << "\n";
    for (const ReplicateRecord& rec : r.replicates) {
        os << rec.index << "," << (rec.ok ? 1 : 0) << "," << rec.iterations << "," << rec.loss_maud_frobenius << ","
           << rec.loss_diagonal_frobenius << "," << rec.loss_maud_spectral << "," << rec.loss_diagonal_spectral << ","
           << rec.null_rejections << "," << rec.nulls << "," << rec.bh_rejections << "," << rec.bh_false_rejections;
        for (int k = 0; k < m; ++k) os << "," << (rec.ok ? std::to_string(rec.gamma_hat(k)) : "");
        for (int k = 0; k < m; ++k) os << "," << (rec.ok ? std::to_string(rec.gamma_se(k)) : "");
        os << "\n";
    }
}

void write_parameters_csv(const std::string& path, const McReport& r) {
    std::ofstream os = open_out(path);
    os << "parameter,truth,bias,bias_mcse,mcsd,ase,coverage\n";
    for (const ParameterSummary& p : r.parameters)
        os << '"' << p.label << "\"," << p.truth << "," << p.bias << "," << p.bias_mcse << "," << p.mcsd << ","
           << p.ase << "," << p.coverage << "\n";
}

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const Json& j) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot write " + path);
    os << j.dump(2) << "\n";
}

} // namespace ubmaud::io
