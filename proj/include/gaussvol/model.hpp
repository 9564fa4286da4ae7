#pragma once

// Gaussian volatility model specifications: the volatility process is
// |X_t| for a Gaussian process X with mean function m(t) and covariance
// kernel Q(t,s) on [0,T], independent of the driving Brownian motion of
// the asset. Named kernels are closed-form; arbitrary ones are tabulated.

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace gaussvol {

// ============================================================
// Mean function variants
// ============================================================

struct ConstantMean {
    double level = 0.0;
};

// m(t) = m + (m0 - m) e^{-q t}: relaxation from initial level m0 toward m.
struct OuRelaxationMean {
    double m0 = 0.0;
    double m = 0.0;
    double q = 1.0;
};

struct TabulatedMean {
    std::vector<double> grid;    // strictly increasing, covering [0, T]
    std::vector<double> values;  // linear interpolation between nodes
};

struct MeanFunction {
    std::variant<ConstantMean, OuRelaxationMean, TabulatedMean> value;

    double operator()(double t) const;
};

// ============================================================
// Covariance kernel variants
// ============================================================

struct BrownianMotionKernel {
    double scale = 1.0;  // Q(t,s) = scale^2 * min(t,s)
};

struct BrownianBridgeKernel {
    double scale = 1.0;  // Q(t,s) = scale^2 * (min(t,s) - ts/T), pinned at T
};

// OU started from the deterministic point X_0 = m0 (no randomness at t=0).
struct OuDeterministicStartKernel {
    double q = 1.0;
    double sigma = 1.0;
};

// OU started from an independent N(mean, sigma0^2) initial value.
struct OuRandomStartKernel {
    double q = 1.0;
    double sigma = 1.0;
    double sigma0 = 0.0;
};

// OU in its stationary regime: Q(t,s) = sigma^2/(2q) e^{-q|t-s|}.
struct OuStationaryKernel {
    double q = 1.0;
    double sigma = 1.0;
};

// Fractional OU (fBm-driven, Hurst H in (0.5, 1)) in its stationary regime.
struct FouStationaryKernel {
    double q = 1.0;
    double sigma = 1.0;
    double H = 0.7;
};

struct TabulatedKernel {
    std::vector<double> grid;            // strictly increasing, covering [0, T]
    std::vector<std::vector<double>> matrix;  // symmetric PSD samples Q(grid_i, grid_j)
};

struct CovarianceKernel {
    std::variant<BrownianMotionKernel, BrownianBridgeKernel, OuDeterministicStartKernel,
                 OuRandomStartKernel, OuStationaryKernel, FouStationaryKernel,
                 TabulatedKernel>
        value;

    // Stationary kernels depend on (t,s) only through |t-s|.
    bool is_stationary() const;
    std::string variant_name() const;
};

// ============================================================
// Model specification
// ============================================================

struct ModelSpec {
    MeanFunction mean;
    CovarianceKernel kernel;
    double T = 1.0;   // maturity in years
    double r = 0.0;   // continuously compounded rate
    double s0 = 1.0;  // spot
};

// Throws ValidationError on firm invariant violations (T, s0, H range,
// tabulated grid shape, non-PSD tabulated kernel, zero diagonal).
void validate(const ModelSpec& spec);

// Q(t,s) for 0 <= t,s <= T. Throws ValidationError outside the domain.
double evaluate_kernel(const ModelSpec& spec, double t, double s);

// Stationary fOU covariance c(tau) = Cov(X_t, X_{t+tau}); H in (0.5, 1).
// Semi-analytic: incomplete-gamma pair plus a fast-converging power series.
double fou_stationary_covariance(double q, double sigma, double H, double tau);

// Martingale condition bound 1/(2 max_t Q(t,t)); the discounted price is a
// martingale for models whose tail parameter stays below this value.
// Grid search over 1001 uniform points.
double martingale_delta_bound(const ModelSpec& spec);

}  // namespace gaussvol
