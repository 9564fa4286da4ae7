#pragma once

// Wing-based calibration: least-squares fit of the implied-volatility wing
// on a log-moneyness window, algebraic inversion to (lambda1, delta1), and
// recovery of the Stein-Stein vol-vol sigma or the fOU Hurst exponent H.

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gaussvol {

struct IvPoint {
    double k = 0.0;   // log-moneyness log(K/s0) - rT
    double iv = 0.0;  // Black-Scholes implied volatility
};

struct IvSlice {
    double T = 0.0;
    double s0 = 1.0;
    double r = 0.0;
    std::vector<IvPoint> points;
    std::string source;  // free-form provenance note (file name, scheme, seed)
};

// Fit window on the small-strike wing; k_lo < k_hi < 0.
struct FitWindow {
    double k_lo = 0.0;
    double k_hi = 0.0;
};

struct WingFit {
    double L = 0.0;
    double M = 0.0;
    double residual = 0.0;  // RMS of iv - (L sqrt(-k) + M) over the window
    bool degenerate = false;  // L <= 0
    int points_used = 0;
};

// Ordinary least squares of iv against {sqrt(-k), 1} on the window points.
WingFit fit_wing(const IvSlice& slice, const FitWindow& window);

// Closed-form inversion of the n1 = 1 wing coefficients:
//   lambda1 = 64 T^2 L^4 / (4 - T^2 L^4)^2,
//   delta1  = 4 sqrt(2T) M sqrt(4 + T^2 L^4) / (4 - T^2 L^4);
// requires T^2 L^4 < 4 (otherwise no Gaussian model matches).
std::pair<double, double> invert_wing(double L, double M, double T);

// Which time-zero law the frequency equation should assume when recovering
// sigma: the stationary specialization is sigma-free after normalization, so
// no fixed-point iteration is needed in either mode.
enum class Sigma0Mode { stationary, deterministic };

// sigma = sqrt(lambda1 (w1^2 + q^2)) with w1 the first frequency root for
// the given mode; q must be known a priori.
double recover_sigma(double lambda1, double q, double T, Sigma0Mode sigma0_mode);

struct HurstRow {
    double H = 0.0;
    double lambda1 = 0.0;
};

struct HurstTable {
    double q = 0.0;
    double sigma = 0.0;
    double T = 0.0;
    std::vector<HurstRow> rows;  // ascending in H, lambda1 strictly decreasing
};

// lambda1 per H by Nystrom + Richardson on the stationary fOU covariance
// (analytic stationary OU at H = 0.5). Asserts the strict monotone shape.
HurstTable build_hurst_table(double q, double sigma, double T,
                             const std::vector<double>& H_grid);

struct HurstMatch {
    double H = 0.0;
    std::optional<std::string> warning;  // set when lambda1 is far outside the table
};

// Row with minimal |lambda1 - row.lambda1|; ties break toward smaller H.
HurstMatch recover_hurst(double lambda1, const HurstTable& table);

// Leftmost window of the given length whose points show no convexity flag:
// a window is flagged when the quadratic coefficient of a least-squares
// parabola through its points is positive and exceeds three of its own
// standard errors (so smooth near-money curvature is rejected while pure
// Monte Carlo noise is not).
FitWindow auto_window(const IvSlice& slice, double length = 0.15);

struct CalibrationMode {
    enum class Kind { stein_stein, fou };
    Kind kind = Kind::stein_stein;
    double q = 0.0;
    double sigma = 0.0;  // fOU only: known vol-vol used to build the table
    Sigma0Mode sigma0_mode = Sigma0Mode::stationary;
    const HurstTable* table = nullptr;  // optional prebuilt table (fOU)
    // Optional reference coefficients for the bias diagnostic; when absent
    // the fitted (L, M) are used and the diagnostic reduces to scaled fit
    // residuals.
    std::optional<double> reference_L;
    std::optional<double> reference_M;
};

struct CalibrationReport {
    WingFit fit;
    FitWindow window;
    double lambda1 = 0.0;
    double delta1 = 0.0;
    std::string method;       // "stein_stein" or "fou"
    double recovered = 0.0;   // sigma or H
    // Gap diagnostic (iv - (L sqrt(-k) + M)) * sqrt(-k) per window point,
    // against the reference coefficients when provided.
    std::vector<double> bias_values;
    double bias_min = 0.0;
    double bias_max = 0.0;
    std::vector<std::string> warnings;
};

CalibrationReport calibrate_end_to_end(const IvSlice& slice,
                                       const std::optional<FitWindow>& window,
                                       const CalibrationMode& mode);

}  // namespace gaussvol
