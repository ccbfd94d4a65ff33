#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fppihrg/experiment.hpp"
#include "fppihrg/kernel.hpp"

namespace {

void print_check(const fppihrg::CheckResult& check) {
    std::printf("  [%s] %-32s value=%-12.6g %s %-12.6g %s\n", check.pass ? "PASS" : "FAIL",
                check.name.c_str(), check.value, check.relation.c_str(), check.threshold,
                check.detail.c_str());
}

void print_result(const fppihrg::ExperimentResult& result) {
    std::printf("%s: seed=%llu replications=%lld accepted=%lld rejected=%lld (%.1fs)\n",
                result.experiment.c_str(), static_cast<unsigned long long>(result.seed),
                static_cast<long long>(result.replications),
                static_cast<long long>(result.accepted),
                static_cast<long long>(result.rejected), result.wall_seconds);
    for (const auto& check : result.checks) print_check(check);
    std::printf("  => %s\n", result.all_pass() ? "ALL PASS" : "FAILED");
}

void apply_overrides(fppihrg::ExperimentConfig& config, bool has_seed, std::uint64_t seed,
                     int workers, const std::string& out_dir) {
    if (has_seed) config.seed = seed;
    if (workers > 0) config.workers = workers;
    if (!out_dir.empty()) config.out_dir = out_dir;
}

int run_one(const std::string& config_path, bool has_seed, std::uint64_t seed, int workers,
            const std::string& out_dir) {
    fppihrg::ExperimentConfig config = fppihrg::load_experiment_config(config_path);
    apply_overrides(config, has_seed, seed, workers, out_dir);
    const fppihrg::ExperimentResult result = fppihrg::run_experiment(config);
    print_result(result);
    return result.all_pass() ? 0 : 1;
}

int run_suite_cmd(const std::string& config_path, bool has_seed, std::uint64_t seed, int workers,
                  const std::string& out_dir) {
    std::vector<fppihrg::ExperimentConfig> configs = fppihrg::load_config_list(config_path);
    for (auto& config : configs) apply_overrides(config, has_seed, seed, workers, out_dir);
    const fppihrg::SuiteResult suite = fppihrg::run_suite(configs);
    for (const auto& result : suite.results) print_result(result);
    for (const auto& error : suite.errors) std::printf("[ERROR] %s\n", error.c_str());
    if (!out_dir.empty()) {
        const std::string report = fppihrg::suite_report_json(suite);
        const std::string path = out_dir + "/suite_report.json";
        if (FILE* f = std::fopen(path.c_str(), "w")) {
            std::fwrite(report.data(), 1, report.size(), f);
            std::fclose(f);
        }
    }
    std::printf("suite: %s\n", suite.all_pass ? "ALL PASS" : "FAILED");
    return suite.all_pass ? 0 : 1;
}

int kernel_check(const std::string& kernel_path) {
    const fppihrg::KernelModel model = fppihrg::load_kernel_spec(kernel_path);
    const auto hom = fppihrg::check_homogeneity(model.offspring);
    const auto pi = fppihrg::stationary_type_vector(model.offspring);
    const bool irreducible =
        fppihrg::check_irreducibility(model.offspring, model.kernel.type_count());
    std::printf("types:        %d\n", model.kernel.type_count());
    std::printf("lambda_tilde: %.12g\n", model.offspring.lambda_tilde);
    std::printf("homogeneous:  %s (max row deviation %.3g)\n", hom.pass ? "yes" : "no",
                hom.max_row_deviation);
    std::printf("irreducible:  %s\n", irreducible ? "yes" : "no");
    std::printf("pi residual:  %.3g\n", pi.residual);
    for (std::size_t t = 0; t < pi.pi.size(); ++t)
        std::printf("  pi[%zu] = %.12g (mu %.12g)\n", t, pi.pi[t], model.kernel.mu[t]);
    if (model.offspring.lambda_tilde > 0.0)
        std::printf("survival rho: %.12g\n",
                    fppihrg::survival_probability(model.offspring.lambda_tilde));
    else
        std::printf("survival rho: 0 (not supercritical)\n");
    const bool ok = hom.pass && irreducible && model.offspring.lambda_tilde > 0.0;
    std::printf("verdict:      %s\n", ok ? "OK" : "NOT USABLE");
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"First-passage percolation on inhomogeneous random graphs"};
    app.require_subcommand(1);

    std::string config_path, out_dir, kernel_path;
    std::uint64_t seed = 0;
    int workers = 0;

    CLI::App* run = app.add_subcommand("run", "Run one experiment from a config file");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    CLI::Option* run_seed = run->add_option("--seed", seed, "master seed override");
    run->add_option("--workers", workers, "worker thread override");
    run->add_option("--out", out_dir, "output directory override");

    CLI::App* suite = app.add_subcommand("suite", "Run every experiment listed in a config file");
    suite->add_option("--config", config_path, "suite config (JSON)")->required();
    CLI::Option* suite_seed = suite->add_option("--seed", seed, "master seed override");
    suite->add_option("--workers", workers, "worker thread override");
    suite->add_option("--out", out_dir, "output directory override");

    CLI::App* kc = app.add_subcommand("kernel-check", "Validate a kernel description");
    kc->add_option("--kernel", kernel_path, "kernel spec (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("run"))
            return run_one(config_path, run_seed->count() > 0, seed, workers, out_dir);
        if (app.got_subcommand("suite"))
            return run_suite_cmd(config_path, suite_seed->count() > 0, seed, workers, out_dir);
        if (app.got_subcommand("kernel-check")) return kernel_check(kernel_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
