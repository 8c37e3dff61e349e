// ubmaud command-line front end: fit, simulate, validate, transform.

#include "ubmaud/error.hpp"
#include "ubmaud/estimator.hpp"
#include "ubmaud/inference.hpp"
#include "ubmaud/io.hpp"
#include "ubmaud/kernels.hpp"
#include "ubmaud/simgen.hpp"
#include "ubmaud/validation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace ubmaud;

namespace {

enum Exit { kOk = 0, kFailure = 1, kParse = 2, kShape = 3, kNumeric = 4 };

int exit_code_for(const Error& e) {
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const InvalidConfig*>(&e) ||
        dynamic_cast<const InvalidPartition*>(&e))
        return kParse;
    if (dynamic_cast<const DimensionMismatch*>(&e) || dynamic_cast<const PartitionMismatch*>(&e) ||
        dynamic_cast<const InvalidDataset*>(&e))
        return kShape;
    if (dynamic_cast<const NotPositiveDefinite*>(&e) || dynamic_cast<const NotConverged*>(&e) ||
        dynamic_cast<const InadmissibleStart*>(&e) || dynamic_cast<const InadmissibleGamma*>(&e) ||
        dynamic_cast<const Singular*>(&e) || dynamic_cast<const RankDeficient*>(&e) ||
        dynamic_cast<const NotMaudRepresentable*>(&e))
        return kNumeric;
    return kFailure;
}

std::string stem_of(const std::string& out) {
    fs::path p(out);
    return (p.parent_path() / p.stem()).string();
}

struct FitArgs {
    std::string x, y, partition, out = "fit.json";
    bool header = false;
    double fdr = -1.0;
    bool fgls_check = false;
    double tol = 1e-8;
    int max_iter = 100;
};

int cmd_fit(const FitArgs& a) {
    const PartitionVector part = io::parse_partition(a.partition);
    Eigen::MatrixXd x = io::read_csv(a.x, a.header);
    Eigen::MatrixXd y = io::read_csv(a.y, a.header);
    if (y.cols() != part.R()) {
        throw DimensionMismatch("--partition sums to " + std::to_string(part.R()) + " outcome columns but " + a.y +
                                " has " + std::to_string(y.cols()));
    }
    const Dataset d(std::move(x), std::move(y), part);
    FitOptions opts;
    opts.scoring.tol = a.tol;
    opts.scoring.max_iter = a.max_iter;
    opts.fgls_check = a.fgls_check;
    const FitResult f = fit(d, opts);

    std::vector<TestResult> bt = beta_tests(f);
    std::vector<TestResult> gt = gamma_tests(f);
    if (a.fdr > 0.0) {
        apply_bh(bt, a.fdr);
        apply_bh(gt, a.fdr);
    }
    io::write_json(a.out, io::fit_to_json(f, bt, gt));
    const std::string stem = stem_of(a.out);
    io::write_tests_csv(stem + "_beta_tests.csv", bt);
    io::write_tests_csv(stem + "_gamma_tests.csv", gt);

    std::cout << "fit: n=" << d.n() << " p=" << d.p() << " R=" << d.R() << " G=" << part.G() << "\n";
    std::cout << "  iterations " << f.diagnostics.iterations << ", score norm " << f.diagnostics.score_norm
              << ", log-likelihood " << f.diagnostics.loglik << " (start: " << f.diagnostics.start << ")\n";
    for (const TestResult& t : gt)
        std::cout << "  " << t.label << " = " << t.estimate << " (SE " << t.standard_error << ")\n";
    if (f.diagnostics.fgls_max_diff)
        std::cout << "  max |beta_OLS - beta_FGLS| = " << *f.diagnostics.fgls_max_diff << "\n";
    int rej = 0;
    for (const TestResult& t : bt) rej += t.rejected ? 1 : 0;
    std::cout << "  coefficient tests rejected: " << rej << " of " << bt.size()
              << (a.fdr > 0.0 ? " (BH)" : " (per test, alpha 0.05)") << "\n";
    for (const std::string& w : f.diagnostics.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "  wrote " << a.out << ", " << stem << "_beta_tests.csv, " << stem << "_gamma_tests.csv\n";
    return kOk;
}

struct SimArgs {
    std::string scenario, out = "sim_out";
    int replicates = 0;
    int workers = 0;
};

int cmd_simulate(const SimArgs& a) {
    const io::Json doc = io::read_json(a.scenario);
    ScenarioConfig cfg = io::scenario_from_json(doc);
    if (a.replicates > 0) cfg.replicates = a.replicates;
    std::vector<double> levels{cfg.noise_level};
    if (doc.contains("noise_levels")) levels = doc.at("noise_levels").get<std::vector<double>>();
    fs::create_directories(a.out);
    for (double s : levels) {
        ScenarioConfig c = cfg;
        c.noise_level = s;
        if (levels.size() > 1) {
            std::ostringstream os;
            os << cfg.name << "_sigma" << s;
            c.name = os.str();
        }
        const McReport r = run_study(c, a.workers);
        const std::string base = (fs::path(a.out) / c.name).string();
        io::write_json(base + "_report.json", io::report_to_json(r));
        io::write_replicates_csv(base + "_replicates.csv", r);
        io::write_parameters_csv(base + "_parameters.csv", r);
        std::printf("%s: %d replicates, %d failed, %.2fs on %d workers\n", c.name.c_str(), c.replicates, r.failures,
                    r.runtime_seconds, r.workers);
        std::printf("  %-12s %10s %10s %10s %10s %8s\n", "parameter", "truth", "bias", "MCSD", "ASE", "CP");
        for (const ParameterSummary& p : r.parameters)
            std::printf("  %-12s %10.4f %10.4f %10.4f %10.4f %8.3f\n", p.label.c_str(), p.truth, p.bias, p.mcsd, p.ase,
                        p.coverage);
        std::printf("  median relative loss (Frobenius): MAUD %.4f, diagonal %.4f\n", r.median_loss_maud_frobenius,
                    r.median_loss_diagonal_frobenius);
        std::printf("  type-1 rate %.4f, BH empirical FDR %.4f\n", r.type1_rate, r.empirical_fdr);
    }
    return kOk;
}

int cmd_validate(const std::string& scale, std::uint64_t seed) {
    const ValidationScale s = scale == "large" ? ValidationScale::Large : ValidationScale::Small;
    const std::vector<ValidationCheck> checks = run_validation(s, seed);
    bool ok = true;
    std::printf("%-30s %6s %12s %10s  %s\n", "check", "cases", "max error", "tolerance", "result");
    for (const ValidationCheck& c : checks) {
        std::printf("%-30s %6d %12.3e %10.1e  %s\n", c.name.c_str(), c.cases, c.max_error, c.tolerance,
                    c.passed ? "PASS" : "FAIL");
        ok = ok && c.passed;
    }
    return ok ? kOk : kFailure;
}

struct TransformArgs {
    std::string gamma, sigma, partition, to, out;
};

int cmd_transform(const TransformArgs& a) {
    if (a.gamma.empty() == a.sigma.empty()) throw ParseError("give exactly one of --gamma or --sigma");
    std::optional<PartitionVector> part;
    if (!a.partition.empty()) part = io::parse_partition(a.partition);
    io::Json result;
    if (!a.gamma.empty()) {
        const GammaVector g = io::gamma_from_json(io::read_json(a.gamma), part ? &*part : nullptr);
        if (a.to == "rho") result = io::rho_to_json(gamma_to_rho(g));
        else if (a.to == "gamma") result = io::gamma_to_json(g);
        else if (a.to == "upsilon") result = io::ub_to_json(gamma_to_upsilon(g));
        else if (a.to == "omega") result = io::ub_to_json(gamma_to_omega(g));
        else if (a.to == "sigma") result = io::ub_to_json(gamma_to_sigma(g));
        else throw ParseError("--to must be rho, gamma, upsilon, omega or sigma");
    } else {
        const UniformBlockMatrix s = io::ub_from_json(io::read_json(a.sigma));
        if (part && !(s.part() == *part)) throw PartitionMismatch("--partition differs from the sizes in " + a.sigma);
        if (a.to == "gamma") result = io::gamma_to_json(sigma_to_gamma(s));
        else if (a.to == "rho") result = io::rho_to_json(gamma_to_rho(sigma_to_gamma(s)));
        else if (a.to == "omega") result = io::ub_to_json(ub_inverse(s));
        else throw ParseError("from --sigma, --to must be gamma, rho or omega");
    }
    if (a.out.empty()) std::cout << result.dump(2) << "\n";
    else io::write_json(a.out, result);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    configure_threads_from_env();
    CLI::App app{"Structured-covariance multivariate regression with uniform-block dependence"};
    app.require_subcommand(1);

    FitArgs fa;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit the model to CSV data and write estimates and tests");
    fit_cmd->add_option("x", fa.x, "covariate CSV (n x p)")->required();
    fit_cmd->add_option("y", fa.y, "outcome CSV (n x R), columns grouped by community")->required();
    fit_cmd->add_option("--partition", fa.partition, "community sizes, e.g. 30,40,60")->required();
    fit_cmd->add_option("--out", fa.out, "output JSON path");
    fit_cmd->add_flag("--header", fa.header, "CSV files start with a header row");
    fit_cmd->add_option("--fdr", fa.fdr, "apply Benjamini-Hochberg at this level");
    fit_cmd->add_flag("--fgls-check", fa.fgls_check, "run the explicit FGLS iteration and report the difference");
    fit_cmd->add_option("--tol", fa.tol, "score tolerance");
    fit_cmd->add_option("--max-iter", fa.max_iter, "Fisher scoring iteration limit");

    SimArgs sa;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "run a Monte Carlo study from a scenario JSON file");
    sim_cmd->add_option("scenario", sa.scenario, "scenario JSON")->required();
    sim_cmd->add_option("--out", sa.out, "output directory");
    sim_cmd->add_option("--replicates", sa.replicates, "override the replicate count");
    sim_cmd->add_option("--workers", sa.workers, "worker threads (default: UBMAUD_THREADS or all cores)");

    std::string scale = "small";
    std::uint64_t seed = 20240601;
    CLI::App* val_cmd = app.add_subcommand("validate", "check closed forms against dense and finite-difference oracles");
    val_cmd->add_option("--scale", scale, "small or large")->check(CLI::IsMember({"small", "large"}));
    val_cmd->add_option("--seed", seed, "random seed");

    TransformArgs ta;
    CLI::App* tr_cmd = app.add_subcommand("transform", "convert between gamma, rho, Upsilon, Omega and Sigma");
    tr_cmd->add_option("--gamma", ta.gamma, "gamma (or rho) JSON input");
    tr_cmd->add_option("--sigma", ta.sigma, "Sigma UB JSON input");
    tr_cmd->add_option("--partition", ta.partition, "community sizes, needed for bare arrays");
    tr_cmd->add_option("--to", ta.to, "rho | sigma | omega | upsilon | gamma")->required();
    tr_cmd->add_option("--out", ta.out, "output JSON (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kParse;
    }

    try {
        if (*fit_cmd) return cmd_fit(fa);
        if (*sim_cmd) return cmd_simulate(sa);
        if (*val_cmd) return cmd_validate(scale, seed);
        if (*tr_cmd) return cmd_transform(ta);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
