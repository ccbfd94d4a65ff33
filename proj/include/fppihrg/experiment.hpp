#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fppihrg/kernel.hpp"

namespace fppihrg {

// Closed list of runnable experiments.
const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
    std::string experiment;
    KernelModel model;   // meaningful only when has_kernel
    bool has_kernel = false;
    std::int64_t n = 0;  // 0 = experiment default
    std::vector<std::int64_t> n_values;
    std::int64_t replications = 0; // 0 = experiment default
    std::string a_n_rule = "sqrt"; // "sqrt" | "power"
    double a_n_power = 0.5;
    std::uint64_t seed = 1;
    int workers = 0;     // 0 = FPP_IHRG_WORKERS or hardware
    std::string out_dir; // empty = no files written by run helpers
    std::map<std::string, double> knobs;
    std::map<std::string, std::string> text_knobs;

    double knob(const std::string& name, double fallback) const;
    std::string text_knob(const std::string& name, const std::string& fallback) const;
};

// base_dir resolves a relative kernel_file reference.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& base_dir = "");
ExperimentConfig load_experiment_config(const std::string& path);
// Accepts one config object, a JSON array, or {"experiments": [...]}.
std::vector<ExperimentConfig> load_config_list(const std::string& path);

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string relation; // how value relates to threshold when passing
    std::string detail;
};

struct ExperimentResult {
    std::string experiment;
    std::uint64_t seed = 0;
    std::int64_t replications = 0;
    std::int64_t accepted = 0;
    std::int64_t rejected = 0;
    std::string csv_header;
    std::vector<std::string> csv_rows; // replication order, independent of workers
    std::vector<CheckResult> checks;
    std::map<std::string, double> summary;
    std::map<std::string, std::vector<double>> ecdf_samples;
    double wall_seconds = 0.0;

    bool all_pass() const;
};

std::int64_t a_n_from_rule(std::int64_t n, const std::string& rule, double power);
int resolve_workers(int requested);

// fn(i) for i in [0, count) on a worker pool; results keyed by index so the
// outcome does not depend on scheduling.
template <typename T>
std::vector<T> parallel_map(std::int64_t count, int workers,
                            const std::function<T(std::int64_t)>& fn) {
    std::vector<T> out(static_cast<std::size_t>(count));
    if (count <= 0) return out;
    const int pool_size = static_cast<int>(
        std::min<std::int64_t>(std::max(1, workers), count));
    if (pool_size == 1) {
        for (std::int64_t i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return out;
    }
    std::atomic<std::int64_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(pool_size));
    for (int w = 0; w < pool_size; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    out[static_cast<std::size_t>(i)] = fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config);

struct SuiteResult {
    std::vector<ExperimentResult> results;
    std::vector<std::string> errors; // invalid/failed entries, reported and skipped
    bool all_pass = false;
};

SuiteResult run_suite(const std::vector<ExperimentConfig>& configs);

std::string experiment_summary_json(const ExperimentResult& result);
std::string suite_report_json(const SuiteResult& suite);
// Writes <experiment>.csv, <experiment>_summary.json and per-statistic ECDF
// files into out_dir (created if absent).
void write_experiment_outputs(const ExperimentResult& result, const std::string& out_dir);

} // namespace fppihrg
