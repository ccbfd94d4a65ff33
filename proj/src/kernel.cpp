#include "fppihrg/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fppihrg/stats.hpp"

namespace fppihrg {

void validate_kernel(const FiniteKernel& kernel, double mu_sum_tol) {
    const int r = kernel.type_count();
    if (r < 1) throw std::invalid_argument("kernel: at least one type required");
    double mu_sum = 0.0;
    for (double m : kernel.mu) {
        if (!(m > 0.0)) throw std::invalid_argument("kernel: mu entries must be strictly positive");
        mu_sum += m;
    }
    if (std::abs(mu_sum - 1.0) > mu_sum_tol)
        throw std::invalid_argument("kernel: mu must sum to 1");
    if (static_cast<int>(kernel.kappa.size()) != r)
        throw std::invalid_argument("kernel: kappa must be r x r");
    for (const auto& row : kernel.kappa)
        if (static_cast<int>(row.size()) != r)
            throw std::invalid_argument("kernel: kappa must be r x r");
    for (int s = 0; s < r; ++s) {
        for (int t = 0; t < r; ++t) {
            if (!(kernel.kappa[s][t] >= 0.0))
                throw std::invalid_argument("kernel: kappa entries must be nonnegative");
            if (kernel.kappa[s][t] != kernel.kappa[t][s])
                throw std::invalid_argument("kernel: kappa must be symmetric");
        }
    }
}

MeanOffspringMatrix mean_offspring_matrix(const FiniteKernel& kernel) {
    validate_kernel(kernel);
    const int r = kernel.type_count();
    MeanOffspringMatrix m;
    m.lambda.assign(r, std::vector<double>(r, 0.0));
    for (int s = 0; s < r; ++s)
        for (int t = 0; t < r; ++t)
            m.lambda[s][t] = kernel.kappa[s][t] * kernel.mu[t];
    double row0 = 0.0;
    for (int t = 0; t < r; ++t) row0 += m.lambda[0][t];
    m.lambda_tilde = row0 - 1.0;
    return m;
}

HomogeneityReport check_homogeneity(const MeanOffspringMatrix& m, double tol) {
    HomogeneityReport report;
    report.lambda_tilde = m.lambda_tilde;
    double max_dev = 0.0;
    for (const auto& row : m.lambda) {
        double sum = 0.0;
        for (double v : row) sum += v;
        max_dev = std::max(max_dev, std::abs(sum - 1.0 - m.lambda_tilde));
    }
    report.max_row_deviation = max_dev;
    report.pass = max_dev <= tol && m.lambda_tilde > 0.0;
    return report;
}

bool check_irreducibility(const MeanOffspringMatrix& m, int k_max) {
    if (k_max < 1) throw std::invalid_argument("check_irreducibility: k_max must be positive");
    const int r = static_cast<int>(m.lambda.size());
    const int words = (r + 63) / 64;
    auto all_set = [&](const std::vector<std::uint64_t>& row) {
        for (int w = 0; w < words; ++w) {
            std::uint64_t expect = ~0ull;
            if (w == words - 1 && r % 64 != 0) expect = (1ull << (r % 64)) - 1;
            if (row[static_cast<std::size_t>(w)] != expect) return false;
        }
        return true;
    };
    std::vector<std::vector<std::uint64_t>> base(static_cast<std::size_t>(r),
                                                 std::vector<std::uint64_t>(static_cast<std::size_t>(words), 0));
    for (int s = 0; s < r; ++s)
        for (int t = 0; t < r; ++t)
            if (m.lambda[s][t] > 0.0)
                base[static_cast<std::size_t>(s)][static_cast<std::size_t>(t / 64)] |= 1ull << (t % 64);
    auto reach = base;
    for (int step = 1; step <= k_max; ++step) {
        bool complete = true;
        for (int s = 0; s < r; ++s) complete = complete && all_set(reach[static_cast<std::size_t>(s)]);
        if (complete) return true;
        if (step == k_max) break;
        auto next = reach;
        bool changed = false;
        for (int s = 0; s < r; ++s) {
            auto& out = next[static_cast<std::size_t>(s)];
            const auto& in = reach[static_cast<std::size_t>(s)];
            for (int w = 0; w < words; ++w) {
                std::uint64_t bits = in[static_cast<std::size_t>(w)];
                while (bits) {
                    const int j = w * 64 + __builtin_ctzll(bits);
                    bits &= bits - 1;
                    const auto& brow = base[static_cast<std::size_t>(j)];
                    for (int w2 = 0; w2 < words; ++w2) {
                        const std::uint64_t before = out[static_cast<std::size_t>(w2)];
                        out[static_cast<std::size_t>(w2)] |= brow[static_cast<std::size_t>(w2)];
                        changed = changed || out[static_cast<std::size_t>(w2)] != before;
                    }
                }
            }
        }
        if (!changed) return false; // reachability saturated short of full support
        reach = std::move(next);
    }
    for (int s = 0; s < r; ++s)
        if (!all_set(reach[static_cast<std::size_t>(s)])) return false;
    return true;
}

StationaryVector stationary_type_vector(const MeanOffspringMatrix& m, double tol, int max_iterations) {
    const int r = static_cast<int>(m.lambda.size());
    std::vector<double> v(static_cast<std::size_t>(r), 1.0 / static_cast<double>(r));
    std::vector<double> next(static_cast<std::size_t>(r), 0.0);
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        // next = v^T (I + lambda), renormalized
        for (int t = 0; t < r; ++t) next[static_cast<std::size_t>(t)] = v[static_cast<std::size_t>(t)];
        for (int s = 0; s < r; ++s) {
            const double vs = v[static_cast<std::size_t>(s)];
            const auto& row = m.lambda[static_cast<std::size_t>(s)];
            for (int t = 0; t < r; ++t) next[static_cast<std::size_t>(t)] += vs * row[static_cast<std::size_t>(t)];
        }
        double sum = 0.0;
        for (double x : next) sum += x;
        double delta = 0.0;
        for (int t = 0; t < r; ++t) {
            next[static_cast<std::size_t>(t)] /= sum;
            delta = std::max(delta, std::abs(next[static_cast<std::size_t>(t)] - v[static_cast<std::size_t>(t)]));
        }
        v.swap(next);
        if (delta <= tol) break;
    }
    if (iter >= max_iterations)
        throw std::runtime_error("stationary_type_vector: power iteration did not converge");
    StationaryVector out;
    out.pi = v;
    out.iterations = iter + 1;
    const double target = m.lambda_tilde + 1.0;
    for (int t = 0; t < r; ++t) {
        double acc = 0.0;
        for (int s = 0; s < r; ++s) acc += v[static_cast<std::size_t>(s)] * m.lambda[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
        out.residual = std::max(out.residual, std::abs(acc - target * v[static_cast<std::size_t>(t)]));
    }
    return out;
}

OperatorNormReport operator_norm(const FiniteKernel& kernel, const MeanOffspringMatrix& m) {
    const int r = kernel.type_count();
    // M = diag(sqrt mu) kappa diag(sqrt mu) is symmetric and similar to lambda,
    // so its largest singular value equals the Perron eigenvalue of lambda.
    std::vector<std::vector<double>> sym(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(r), 0.0));
    for (int s = 0; s < r; ++s)
        for (int t = 0; t < r; ++t)
            sym[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] =
                std::sqrt(kernel.mu[static_cast<std::size_t>(s)]) * kernel.kappa[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] *
                std::sqrt(kernel.mu[static_cast<std::size_t>(t)]);
    auto matvec = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (int s = 0; s < r; ++s) {
            double acc = 0.0;
            const auto& row = sym[static_cast<std::size_t>(s)];
            for (int t = 0; t < r; ++t) acc += row[static_cast<std::size_t>(t)] * x[static_cast<std::size_t>(t)];
            y[static_cast<std::size_t>(s)] = acc;
        }
    };
    std::vector<double> x(static_cast<std::size_t>(r));
    for (int t = 0; t < r; ++t) x[static_cast<std::size_t>(t)] = 1.0 + 0.5 * static_cast<double>(t + 1) / static_cast<double>(r);
    std::vector<double> y(static_cast<std::size_t>(r)), z(static_cast<std::size_t>(r));
    double sigma_sq = 0.0;
    for (int iter = 0; iter < 50000; ++iter) {
        matvec(x, y);
        matvec(y, z); // z = M^2 x
        double num = 0.0, den = 0.0, norm = 0.0;
        for (int t = 0; t < r; ++t) {
            num += z[static_cast<std::size_t>(t)] * x[static_cast<std::size_t>(t)];
            den += x[static_cast<std::size_t>(t)] * x[static_cast<std::size_t>(t)];
            norm += z[static_cast<std::size_t>(t)] * z[static_cast<std::size_t>(t)];
        }
        const double estimate = num / den;
        norm = std::sqrt(norm);
        if (norm == 0.0) { sigma_sq = 0.0; break; }
        for (int t = 0; t < r; ++t) x[static_cast<std::size_t>(t)] = z[static_cast<std::size_t>(t)] / norm;
        if (iter > 2 && std::abs(estimate - sigma_sq) <= 1e-14 * std::max(1.0, std::abs(estimate))) {
            sigma_sq = estimate;
            break;
        }
        sigma_sq = estimate;
    }
    return OperatorNormReport{m.lambda_tilde + 1.0, std::sqrt(std::max(0.0, sigma_sq))};
}

double survival_probability(double lambda_tilde, double tol) {
    if (!(lambda_tilde > 0.0))
        throw std::invalid_argument("survival_probability: lambda_tilde must be positive");
    const double c = lambda_tilde + 1.0;
    double rho = 1.0;
    for (int iter = 0; iter < 1000000; ++iter) {
        const double next = -std::expm1(-c * rho);
        const double delta = std::abs(next - rho);
        rho = next;
        if (delta <= tol) return rho;
    }
    throw std::runtime_error("survival_probability: fixed point iteration did not converge");
}

/* ---- torus step kernels ---- */

double TorusProfile::value(double d) const {
    switch (kind) {
    case Kind::Indicator:
        return d < 0.25 ? 1.0 : 0.0;
    case Kind::Quadratic:
        return d * d;
    case Kind::Table: {
        const auto cells = static_cast<double>(table.size());
        auto idx = static_cast<std::size_t>(std::min(cells - 1.0, std::floor(2.0 * cells * d)));
        return table[idx];
    }
    }
    return 0.0;
}

std::vector<double> TorusProfile::breakpoints() const {
    switch (kind) {
    case Kind::Indicator:
        return {0.25};
    case Kind::Quadratic:
        return {};
    case Kind::Table: {
        std::vector<double> out;
        const auto cells = static_cast<double>(table.size());
        for (std::size_t k = 1; k < table.size(); ++k)
            out.push_back(static_cast<double>(k) / (2.0 * cells));
        return out;
    }
    }
    return {};
}

TorusProfile torus_profile_from_name(const std::string& name, const std::vector<double>& table) {
    TorusProfile p;
    if (name == "indicator") {
        p.kind = TorusProfile::Kind::Indicator;
    } else if (name == "quadratic") {
        p.kind = TorusProfile::Kind::Quadratic;
    } else if (name == "table") {
        if (table.empty()) throw std::invalid_argument("torus profile: table profile requires samples");
        for (double v : table)
            if (!(v >= 0.0)) throw std::invalid_argument("torus profile: table values must be nonnegative");
        p.kind = TorusProfile::Kind::Table;
        p.table = table;
    } else {
        throw std::invalid_argument("torus profile: unknown profile '" + name + "'");
    }
    return p;
}

namespace {

double torus_distance(double z) {
    double u = z - std::floor(z);
    return std::min(u, 1.0 - u);
}

// Triangle-weighted average over one cell offset c:
//   g(c) = int_{-1}^{1} (1-|w|) h(dist((c+w)/m)) dw / 1,
// split at every point where the integrand loses smoothness.
double cell_pair_average(const TorusProfile& profile, int m_parts, int c) {
    const double m = static_cast<double>(m_parts);
    std::vector<double> cuts = {-1.0, 0.0, 1.0};
    std::vector<double> zs = {0.0, 0.5}; // folds of the torus distance
    for (double b : profile.breakpoints()) {
        zs.push_back(b);
        zs.push_back(1.0 - b);
    }
    for (double z : zs) {
        const double base = m * z - static_cast<double>(c);
        const int k_lo = static_cast<int>(std::floor((-1.0 - base) / m)) - 1;
        const int k_hi = static_cast<int>(std::ceil((1.0 - base) / m)) + 1;
        for (int k = k_lo; k <= k_hi; ++k) {
            const double w = base + m * static_cast<double>(k);
            if (w > -1.0 && w < 1.0) cuts.push_back(w);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               cuts.end());
    auto integrand = [&](double w) {
        return (1.0 - std::abs(w)) * profile.value(torus_distance((static_cast<double>(c) + w) / m));
    };
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        acc += integrate_smooth(integrand, cuts[k], cuts[k + 1]);
    return acc;
}

FiniteKernel cells_from_offsets(const std::vector<double>& by_offset, double scale, int m_parts) {
    FiniteKernel cells;
    cells.mu.assign(static_cast<std::size_t>(m_parts), 1.0 / static_cast<double>(m_parts));
    cells.kappa.assign(static_cast<std::size_t>(m_parts), std::vector<double>(static_cast<std::size_t>(m_parts), 0.0));
    for (int i = 0; i < m_parts; ++i) {
        for (int j = 0; j < m_parts; ++j) {
            const int c = std::min((i - j + m_parts) % m_parts, (j - i + m_parts) % m_parts);
            cells.kappa[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                scale * by_offset[static_cast<std::size_t>(c)];
        }
    }
    return cells;
}

} // namespace

double torus_kernel_value(const TorusProfile& profile, double scale, double x, double y) {
    return scale * profile.value(torus_distance(x - y));
}

TorusStepKernel build_torus_step_kernel(const TorusProfile& profile, double scale, int m_parts) {
    if (m_parts < 1) throw std::invalid_argument("torus step kernel: m_parts must be positive");
    if (!(scale > 0.0)) throw std::invalid_argument("torus step kernel: scale must be positive");
    std::vector<double> by_offset(static_cast<std::size_t>(m_parts), 0.0);
    for (int c = 0; c <= m_parts / 2; ++c) {
        const double g = cell_pair_average(profile, m_parts, c);
        by_offset[static_cast<std::size_t>(c)] = g;
        if (c > 0 && m_parts - c < m_parts) by_offset[static_cast<std::size_t>(m_parts - c)] = g;
    }
    TorusStepKernel out;
    out.m_parts = m_parts;
    out.scale = scale;
    out.profile = profile;
    out.cells = cells_from_offsets(by_offset, scale, m_parts);
    validate_kernel(out.cells);
    return out;
}

TorusStepKernel build_torus_step_kernel_midpoint(const std::function<double(double)>& h,
                                                 double scale, int m_parts, int quad_points) {
    if (m_parts < 1) throw std::invalid_argument("torus step kernel: m_parts must be positive");
    if (quad_points < 1) throw std::invalid_argument("torus step kernel: quad_points must be positive");
    if (!(scale > 0.0)) throw std::invalid_argument("torus step kernel: scale must be positive");
    const double m = static_cast<double>(m_parts);
    const double q = static_cast<double>(quad_points);
    std::vector<double> by_offset(static_cast<std::size_t>(m_parts), 0.0);
    for (int c = 0; c <= m_parts / 2; ++c) {
        double acc = 0.0;
        for (int a = 0; a < quad_points; ++a)
            for (int b = 0; b < quad_points; ++b)
                acc += h(torus_distance((static_cast<double>(c) + (static_cast<double>(a) - static_cast<double>(b)) / q) / m));
        const double avg = acc / (q * q);
        by_offset[static_cast<std::size_t>(c)] = avg;
        if (c > 0 && m_parts - c < m_parts) by_offset[static_cast<std::size_t>(m_parts - c)] = avg;
    }
    TorusStepKernel out;
    out.m_parts = m_parts;
    out.scale = scale;
    out.profile.kind = TorusProfile::Kind::Table; // placeholder; callable kernels carry no breakpoints
    out.profile.table = {1.0};
    out.cells = cells_from_offsets(by_offset, scale, m_parts);
    validate_kernel(out.cells);
    return out;
}

double torus_max_abs_deviation(const TorusStepKernel& kernel) {
    const int m_parts = kernel.m_parts;
    const double m = static_cast<double>(m_parts);
    std::vector<double> probes;
    const int grid = 2048;
    for (int i = 0; i <= grid; ++i) probes.push_back(-1.0 + 2.0 * static_cast<double>(i) / grid);
    double worst = 0.0;
    for (int c = 0; c <= m_parts / 2; ++c) {
        const double avg = kernel.cells.kappa[0][static_cast<std::size_t>(c)];
        std::vector<double> extra;
        for (double b : kernel.profile.breakpoints()) {
            for (int k = -2; k <= 2; ++k) {
                for (double z : {b, 1.0 - b}) {
                    const double w = m * (z + static_cast<double>(k)) - static_cast<double>(c);
                    if (w > -1.0 && w < 1.0) {
                        extra.push_back(w - 1e-9);
                        extra.push_back(w + 1e-9);
                    }
                }
            }
        }
        auto scan = [&](double w) {
            const double point = torus_kernel_value(kernel.profile, kernel.scale,
                                                    (static_cast<double>(c) + w) / m, 0.0);
            worst = std::max(worst, std::abs(avg - point));
        };
        for (double w : probes) scan(w);
        for (double w : extra)
            if (w > -1.0 && w < 1.0) scan(w);
    }
    return worst;
}

KernelModel make_kernel_model(FiniteKernel kernel) {
    KernelModel model;
    model.kernel = std::move(kernel);
    model.offspring = mean_offspring_matrix(model.kernel);
    return model;
}

KernelModel make_kernel_model(TorusStepKernel torus) {
    KernelModel model;
    model.kernel = torus.cells;
    model.offspring = mean_offspring_matrix(model.kernel);
    model.torus = std::move(torus);
    return model;
}

KernelModel parse_kernel_spec(const std::string& json_text) {
    nlohmann::json spec;
    try {
        spec = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("kernel spec: invalid JSON: ") + e.what());
    }
    if (!spec.contains("type")) throw std::invalid_argument("kernel spec: missing 'type'");
    const std::string type = spec["type"].get<std::string>();
    if (type == "finite") {
        FiniteKernel kernel;
        kernel.mu = spec.at("mu").get<std::vector<double>>();
        kernel.kappa = spec.at("kappa").get<std::vector<std::vector<double>>>();
        return make_kernel_model(std::move(kernel));
    }
    if (type == "torus_step") {
        const std::string profile_name = spec.at("profile").get<std::string>();
        std::vector<double> table;
        if (spec.contains("table")) table = spec["table"].get<std::vector<double>>();
        const auto profile = torus_profile_from_name(profile_name, table);
        const double scale = spec.at("scale").get<double>();
        const int m_parts = spec.at("m_parts").get<int>();
        return make_kernel_model(build_torus_step_kernel(profile, scale, m_parts));
    }
    throw std::invalid_argument("kernel spec: unknown type '" + type + "'");
}

KernelModel load_kernel_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("kernel spec: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kernel_spec(buf.str());
}

} // namespace fppihrg
