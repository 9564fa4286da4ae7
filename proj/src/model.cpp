#include "gaussvol/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "gaussvol/errors.hpp"

namespace gaussvol {

namespace {

// Linear interpolation with clamped ends on a strictly increasing grid.
double interp1(const std::vector<double>& grid, const std::vector<double>& values, double t) {
    if (t <= grid.front()) return values.front();
    if (t >= grid.back()) return values.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - grid.begin());
    const double w = (t - grid[i - 1]) / (grid[i] - grid[i - 1]);
    return values[i - 1] + w * (values[i] - values[i - 1]);
}

void check_tabulated_grid(const std::vector<double>& grid, double T, const char* what) {
    if (grid.size() < 2) throw ValidationError(std::string(what) + ": grid needs >= 2 nodes");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw ValidationError(std::string(what) + ": grid must be strictly increasing");
    const double span_tol = 1e-12 * std::max(1.0, T);
    if (grid.front() > span_tol || grid.back() < T - span_tol)
        throw ValidationError(std::string(what) + ": grid must cover [0, T]");
}

}  // namespace

// ============================================================
// Mean function
// ============================================================

double MeanFunction::operator()(double t) const {
    return std::visit(
        [t](const auto& m) -> double {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, ConstantMean>) {
                return m.level;
            } else if constexpr (std::is_same_v<M, OuRelaxationMean>) {
                return m.m + (m.m0 - m.m) * std::exp(-m.q * t);
            } else {
                return interp1(m.grid, m.values, t);
            }
        },
        value);
}

// ============================================================
// Covariance kernels
// ============================================================

bool CovarianceKernel::is_stationary() const {
    return std::holds_alternative<OuStationaryKernel>(value) ||
           std::holds_alternative<FouStationaryKernel>(value);
}

std::string CovarianceKernel::variant_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, BrownianMotionKernel>) return "brownian_motion";
            else if constexpr (std::is_same_v<K, BrownianBridgeKernel>) return "brownian_bridge";
            else if constexpr (std::is_same_v<K, OuDeterministicStartKernel>) return "ou_deterministic_start";
            else if constexpr (std::is_same_v<K, OuRandomStartKernel>) return "ou_random_start";
            else if constexpr (std::is_same_v<K, OuStationaryKernel>) return "ou_stationary";
            else if constexpr (std::is_same_v<K, FouStationaryKernel>) return "fou_stationary";
            else return "tabulated";
        },
        value);
}

double fou_stationary_covariance(double q, double sigma, double H, double tau) {
    if (!(H > 0.5 && H < 1.0)) throw ValidationError("fou covariance: H must lie in (0.5, 1)");
    if (!(q > 0.0) || sigma < 0.0)
        throw ValidationError("fou covariance: need q > 0 and sigma >= 0");
    tau = std::abs(tau);
    const double a = 2.0 * H - 1.0;
    const double x = q * tau;

    // Power series S = sum_k (q tau)^k a / (k! (a+k)); first term is 1.
    double series = 0.0;
    double term = 1.0;
    for (int k = 0; k < 400; ++k) {
        series += term;
        term *= x / double(k + 1) * (a + double(k)) / (a + double(k + 1));
        if (std::abs(term) < 1e-18 * std::abs(series)) break;
    }

    const double gamma_pair =
        a * std::exp(x) * boost::math::tgamma(a, x) + std::exp(-x) * boost::math::tgamma(1.0 + a);
    const double bracket =
        std::pow(q, -a) * gamma_pair + std::exp(-x) * std::pow(tau, a) * series;
    return sigma * sigma * H / (2.0 * q) * bracket;
}

double evaluate_kernel(const ModelSpec& spec, double t, double s) {
    const double tol = 1e-12 * std::max(1.0, spec.T);
    if (t < -tol || s < -tol || t > spec.T + tol || s > spec.T + tol)
        throw ValidationError("evaluate_kernel: time outside [0, T]");
    t = std::clamp(t, 0.0, spec.T);
    s = std::clamp(s, 0.0, spec.T);

    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, BrownianMotionKernel>) {
                return k.scale * k.scale * std::min(t, s);
            } else if constexpr (std::is_same_v<K, BrownianBridgeKernel>) {
                return k.scale * k.scale * (std::min(t, s) - t * s / spec.T);
            } else if constexpr (std::is_same_v<K, OuDeterministicStartKernel>) {
                const double v = k.sigma * k.sigma / (2.0 * k.q);
                return v * (std::exp(-k.q * std::abs(t - s)) - std::exp(-k.q * (t + s)));
            } else if constexpr (std::is_same_v<K, OuRandomStartKernel>) {
                const double v = k.sigma * k.sigma / (2.0 * k.q);
                return k.sigma0 * k.sigma0 * std::exp(-k.q * (t + s)) +
                       v * (std::exp(-k.q * std::abs(t - s)) - std::exp(-k.q * (t + s)));
            } else if constexpr (std::is_same_v<K, OuStationaryKernel>) {
                return k.sigma * k.sigma / (2.0 * k.q) * std::exp(-k.q * std::abs(t - s));
            } else if constexpr (std::is_same_v<K, FouStationaryKernel>) {
                return fou_stationary_covariance(k.q, k.sigma, k.H, t - s);
            } else {
                // Bilinear interpolation: interpolate rows in s, then across t.
                const auto& g = k.grid;
                auto row_value = [&](std::size_t i) { return interp1(g, k.matrix[i], s); };
                if (t <= g.front()) return row_value(0);
                if (t >= g.back()) return row_value(g.size() - 1);
                const auto it = std::upper_bound(g.begin(), g.end(), t);
                const std::size_t i = static_cast<std::size_t>(it - g.begin());
                const double w = (t - g[i - 1]) / (g[i] - g[i - 1]);
                return row_value(i - 1) + w * (row_value(i) - row_value(i - 1));
            }
        },
        spec.kernel.value);
}

// ============================================================
// Validation
// ============================================================

void validate(const ModelSpec& spec) {
    if (!(spec.T > 0.0)) throw ValidationError("model: T must be > 0");
    if (!(spec.s0 > 0.0)) throw ValidationError("model: s0 must be > 0");
    if (!std::isfinite(spec.r)) throw ValidationError("model: r must be finite");

    if (const auto* m = std::get_if<TabulatedMean>(&spec.mean.value)) {
        check_tabulated_grid(m->grid, spec.T, "tabulated mean");
        if (m->values.size() != m->grid.size())
            throw ValidationError("tabulated mean: values/grid size mismatch");
    }
    if (const auto* m = std::get_if<OuRelaxationMean>(&spec.mean.value)) {
        if (!(m->q > 0.0)) throw ValidationError("mean: q must be > 0");
    }

    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, BrownianMotionKernel> ||
                          std::is_same_v<K, BrownianBridgeKernel>) {
                if (!(k.scale > 0.0)) throw ValidationError("kernel: scale must be > 0");
            } else if constexpr (std::is_same_v<K, OuDeterministicStartKernel> ||
                                 std::is_same_v<K, OuStationaryKernel>) {
                if (!(k.q > 0.0) || k.sigma < 0.0)
                    throw ValidationError("kernel: need q > 0 and sigma >= 0");
            } else if constexpr (std::is_same_v<K, OuRandomStartKernel>) {
                if (!(k.q > 0.0) || k.sigma < 0.0)
                    throw ValidationError("kernel: need q > 0 and sigma >= 0");
                if (k.sigma0 < 0.0) throw ValidationError("kernel: sigma0 must be >= 0");
            } else if constexpr (std::is_same_v<K, FouStationaryKernel>) {
                if (!(k.q > 0.0) || k.sigma < 0.0)
                    throw ValidationError("kernel: need q > 0 and sigma >= 0");
                if (!(k.H > 0.5 && k.H < 1.0))
                    throw ValidationError("kernel: H must lie in (0.5, 1)");
            } else if constexpr (std::is_same_v<K, TabulatedKernel>) {
                check_tabulated_grid(k.grid, spec.T, "tabulated kernel");
                const std::size_t n = k.grid.size();
                if (k.matrix.size() != n)
                    throw ValidationError("tabulated kernel: matrix/grid size mismatch");
                Eigen::MatrixXd Q(n, n);
                for (std::size_t i = 0; i < n; ++i) {
                    if (k.matrix[i].size() != n)
                        throw ValidationError("tabulated kernel: matrix must be square");
                    for (std::size_t j = 0; j < n; ++j) Q(i, j) = k.matrix[i][j];
                }
                const double scale = Q.cwiseAbs().maxCoeff();
                if (!std::isfinite(scale))
                    throw ValidationError("tabulated kernel: non-finite entries");
                if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale))
                    throw ValidationError("tabulated kernel: matrix must be symmetric");
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
                const double lo = es.eigenvalues().minCoeff();
                const double hi = es.eigenvalues().maxCoeff();
                if (lo < -1e-10 * std::max(1.0, hi))
                    throw ValidationError("tabulated kernel: matrix is not positive semidefinite");
            }
        },
        spec.kernel.value);
}

double martingale_delta_bound(const ModelSpec& spec) {
    validate(spec);
    constexpr int n = 1001;
    double max_var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = spec.T * double(i) / double(n - 1);
        const double v = evaluate_kernel(spec, t, t);
        if (!std::isfinite(v)) throw ValidationError("martingale bound: non-finite kernel value");
        max_var = std::max(max_var, v);
    }
    if (!(max_var > 0.0))
        throw ValidationError("martingale bound: kernel diagonal must be positive somewhere");
    return 1.0 / (2.0 * max_var);
}

}  // namespace gaussvol
