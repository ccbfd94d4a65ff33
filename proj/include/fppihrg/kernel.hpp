#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fppihrg {

// Symmetric nonnegative kernel on a finite type space with type measure mu.
struct FiniteKernel {
    std::vector<double> mu;                // strictly positive, sums to 1
    std::vector<std::vector<double>> kappa; // symmetric, nonnegative

    int type_count() const { return static_cast<int>(mu.size()); }
};

// Throws std::invalid_argument on any constraint violation.
void validate_kernel(const FiniteKernel& kernel, double mu_sum_tol = 1e-12);

// Mean offspring matrix lambda[s][t] = kappa[s][t] * mu[t] and the common
// centered row sum lambda_tilde = sum_t lambda[s][t] - 1.
struct MeanOffspringMatrix {
    std::vector<std::vector<double>> lambda;
    double lambda_tilde = 0.0;
};

MeanOffspringMatrix mean_offspring_matrix(const FiniteKernel& kernel);

struct HomogeneityReport {
    bool pass = false;
    double lambda_tilde = 0.0;
    double max_row_deviation = 0.0; // max_s |rowsum_s(lambda) - 1 - lambda_tilde|
};

// Pass iff every centered row sum matches lambda_tilde within tol and
// lambda_tilde > 0.
HomogeneityReport check_homogeneity(const MeanOffspringMatrix& m, double tol = 1e-10);

// Pass iff the directed support graph of lambda is strongly connected with
// diameter at most k_max (cumulative positivity of sum of powers).
bool check_irreducibility(const MeanOffspringMatrix& m, int k_max);

struct StationaryVector {
    std::vector<double> pi;  // entrywise positive, sums to 1
    double residual = 0.0;   // max_t |(pi^T lambda)_t - (lambda_tilde+1) pi_t|
    int iterations = 0;
};

// Left Perron vector of lambda, by power iteration on I + lambda^T (the shift
// suppresses period-2 cycling on bipartite supports).
StationaryVector stationary_type_vector(const MeanOffspringMatrix& m,
                                        double tol = 1e-14, int max_iterations = 100000);

struct OperatorNormReport {
    double norm = 0.0;                 // lambda_tilde + 1
    double singular_value_check = 0.0; // largest singular value of diag(sqrt mu) kappa diag(sqrt mu)
};

OperatorNormReport operator_norm(const FiniteKernel& kernel, const MeanOffspringMatrix& m);

// Maximal root of rho = 1 - exp(-(lambda_tilde+1) rho), by monotone fixed
// point iteration started at 1. Requires lambda_tilde > 0.
double survival_probability(double lambda_tilde, double tol = 1e-12);

// Even period-1 profile given on the fundamental domain [0, 1/2].
struct TorusProfile {
    enum class Kind { Indicator, Quadratic, Table };
    Kind kind = Kind::Indicator;
    std::vector<double> table; // piecewise constant on equal cells of [0,1/2]

    double value(double d) const;               // d in [0, 1/2]
    std::vector<double> breakpoints() const;    // discontinuity/kink points in (0, 1/2)
};

TorusProfile torus_profile_from_name(const std::string& name, const std::vector<double>& table = {});

// scale * h(torus distance of x and y), x and y on [0,1).
double torus_kernel_value(const TorusProfile& profile, double scale, double x, double y);

struct TorusStepKernel {
    int m_parts = 0;
    double scale = 0.0;
    TorusProfile profile;
    FiniteKernel cells; // mu uniform 1/m, kappa = averaged kernel over cell pairs
};

// Cell-averaged kernel with exact per-cell-pair averages. The double average
// over cell_i x cell_j reduces to a 1-D integral of (1-|w|) h((c+w)/m_parts)
// with c = (i-j) mod m_parts, integrated piecewise between breakpoints so the
// result is quadrature-exact for the supported profiles. Averages depend on
// the cell offset only, which preserves equal weighted row sums exactly.
TorusStepKernel build_torus_step_kernel(const TorusProfile& profile, double scale, int m_parts);

// Generic midpoint tensor rule for an arbitrary even period-1 profile
// callable; quad_points midpoints per axis per cell.
TorusStepKernel build_torus_step_kernel_midpoint(const std::function<double(double)>& h,
                                                 double scale, int m_parts, int quad_points = 32);

// Largest |cell average - pointwise kernel| over all cell pairs, scanned on a
// refined grid with extra evaluations next to profile breakpoints.
double torus_max_abs_deviation(const TorusStepKernel& kernel);

struct KernelModel {
    FiniteKernel kernel;
    MeanOffspringMatrix offspring;
    std::optional<TorusStepKernel> torus;
};

KernelModel make_kernel_model(FiniteKernel kernel);
KernelModel make_kernel_model(TorusStepKernel torus);

// JSON spec: {"type":"finite","mu":[...],"kappa":[[...]]} or
// {"type":"torus_step","profile":"indicator|quadratic|table","scale":s,
//  "m_parts":m,"table":[...]}.
KernelModel load_kernel_spec(const std::string& path);
KernelModel parse_kernel_spec(const std::string& json_text);

} // namespace fppihrg
