#include "gaussvol/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gaussvol/errors.hpp"
#include "gaussvol/model.hpp"
#include "gaussvol/spectrum.hpp"

namespace gaussvol {

namespace {

void check_slice(const IvSlice& slice) {
    if (!(slice.T > 0.0)) throw ValidationError("iv slice: T must be positive");
    if (!(slice.s0 > 0.0)) throw ValidationError("iv slice: s0 must be positive");
    if (!std::isfinite(slice.r)) throw ValidationError("iv slice: r must be finite");
    for (const IvPoint& p : slice.points) {
        if (!std::isfinite(p.k)) throw ValidationError("iv slice: non-finite log-moneyness");
        if (!(p.iv > 0.0) || !std::isfinite(p.iv))
            throw ValidationError("iv slice: implied vols must be positive and finite");
    }
}

void check_window(const FitWindow& window) {
    if (!(window.k_lo < window.k_hi) || !(window.k_hi < 0.0))
        throw ValidationError("fit window: need k_lo < k_hi < 0");
}

// Window points sorted ascending in k, with duplicate abscissae rejected.
std::vector<IvPoint> window_points(const IvSlice& slice, const FitWindow& window) {
    std::vector<IvPoint> pts;
    for (const IvPoint& p : slice.points)
        if (p.k >= window.k_lo && p.k <= window.k_hi) pts.push_back(p);
    std::sort(pts.begin(), pts.end(),
              [](const IvPoint& a, const IvPoint& b) { return a.k < b.k; });
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].k > pts[i - 1].k))
            throw ValidationError("iv slice: duplicate log-moneyness values in window");
    return pts;
}

WingFit fit_points(const std::vector<IvPoint>& pts) {
    if (pts.size() < 4)
        throw ValidationError("wing fit: need at least 4 points inside the window");
    // Normal equations for iv ~ L x + M with x = sqrt(-k).
    double sxx = 0.0, sx = 0.0, sxy = 0.0, sy = 0.0;
    const double n = static_cast<double>(pts.size());
    for (const IvPoint& p : pts) {
        const double x = std::sqrt(-p.k);
        sxx += x * x;
        sx += x;
        sxy += x * p.iv;
        sy += p.iv;
    }
    const double det = n * sxx - sx * sx;
    if (!(det > 0.0) || !std::isfinite(det))
        throw NumericalError("wing fit: singular design matrix");
    WingFit fit;
    fit.L = (n * sxy - sx * sy) / det;
    fit.M = (sxx * sy - sx * sxy) / det;
    fit.points_used = static_cast<int>(pts.size());
    double ss = 0.0;
    for (const IvPoint& p : pts) {
        const double resid = p.iv - (fit.L * std::sqrt(-p.k) + fit.M);
        ss += resid * resid;
    }
    fit.residual = std::sqrt(ss / n);
    fit.degenerate = !(fit.L > 0.0);
    return fit;
}

// True when the window still bends upward like the near-money smile instead
// of following the concave wing shape: the quadratic coefficient of a least
// squares fit iv ~ a + b k + c k^2 is positive and significant against the
// fit's own residual noise. Point-wise second differences would conflate
// structured curvature with per-point noise (their ratio is grid-dependent);
// the regression coefficient separates the two.
bool convexity_flag(const std::vector<IvPoint>& pts) {
    const std::size_t n = pts.size();
    if (n < 4) return false;
    double k_bar = 0.0;
    for (const IvPoint& p : pts) k_bar += p.k;
    k_bar /= static_cast<double>(n);

    // Centered normal equations for the basis {1, x, x^2}, x = k - k_bar.
    double s1 = static_cast<double>(n), sx = 0.0, sx2 = 0.0, sx3 = 0.0, sx4 = 0.0;
    double sy = 0.0, sxy = 0.0, sx2y = 0.0;
    for (const IvPoint& p : pts) {
        const double x = p.k - k_bar;
        const double x2 = x * x;
        sx += x;
        sx2 += x2;
        sx3 += x2 * x;
        sx4 += x2 * x2;
        sy += p.iv;
        sxy += x * p.iv;
        sx2y += x2 * p.iv;
    }
    const auto det3 = [](double a11, double a12, double a13, double a21, double a22,
                         double a23, double a31, double a32, double a33) {
        return a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31) +
               a13 * (a21 * a32 - a22 * a31);
    };
    const double det = det3(s1, sx, sx2, sx, sx2, sx3, sx2, sx3, sx4);
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) return false;
    // Cramer column replacements; [M^-1]_cc = cof_cc / det for the variance.
    const double a_hat = det3(sy, sx, sx2, sxy, sx2, sx3, sx2y, sx3, sx4) / det;
    const double b_hat = det3(s1, sy, sx2, sx, sxy, sx3, sx2, sx2y, sx4) / det;
    const double c_hat = det3(s1, sx, sy, sx, sx2, sxy, sx2, sx3, sx2y) / det;
    const double cof_cc = s1 * sx2 - sx * sx;
    double rss = 0.0;
    for (const IvPoint& p : pts) {
        const double x = p.k - k_bar;
        const double resid = p.iv - (a_hat + b_hat * x + c_hat * x * x);
        rss += resid * resid;
    }
    const double dof = static_cast<double>(n) - 3.0;
    const double sigma_sq = std::max(rss / dof, 1e-12);
    const double var_c = sigma_sq * cof_cc / det;
    if (!(var_c > 0.0) || !std::isfinite(var_c)) return false;
    return c_hat > 3.0 * std::sqrt(var_c);
}

}  // namespace

WingFit fit_wing(const IvSlice& slice, const FitWindow& window) {
    check_slice(slice);
    check_window(window);
    return fit_points(window_points(slice, window));
}

std::pair<double, double> invert_wing(double L, double M, double T) {
    if (!(T > 0.0)) throw ValidationError("wing inversion: T must be positive");
    if (!(L > 0.0)) throw ValidationError("wing inversion: L must be positive");
    if (!std::isfinite(M)) throw ValidationError("wing inversion: M must be finite");
    const double u = T * T * L * L * L * L;
    if (!(u < 4.0))
        throw ValidationError(
            "wing inversion: T^2 L^4 >= 4 is outside the model-attainable domain");
    const double lambda1 = 64.0 * u / ((4.0 - u) * (4.0 - u));
    const double delta1 = 4.0 * std::sqrt(2.0 * T) * M * std::sqrt(4.0 + u) / (4.0 - u);
    return {lambda1, delta1};
}

double recover_sigma(double lambda1, double q, double T, Sigma0Mode sigma0_mode) {
    if (!(lambda1 > 0.0)) throw ValidationError("sigma recovery: lambda1 must be positive");
    if (!(q > 0.0)) throw ValidationError("sigma recovery: q must be positive");
    if (!(T > 0.0)) throw ValidationError("sigma recovery: T must be positive");
    // After dividing out sigma^2 the frequency equation no longer involves
    // sigma in either mode, so the first root can be located with a unit
    // vol-vol placeholder: stationary uses sigma0^2 = sigma^2 / (2q),
    // deterministic uses sigma0 = 0.
    const double sigma0 =
        sigma0_mode == Sigma0Mode::stationary ? 1.0 / std::sqrt(2.0 * q) : 0.0;
    const OuRoots roots = ou_frequencies(q, 1.0, sigma0, T, 1);
    const double w1 = roots.w.at(0);
    return std::sqrt(lambda1 * (w1 * w1 + q * q));
}

HurstTable build_hurst_table(double q, double sigma, double T,
                             const std::vector<double>& H_grid) {
    if (!(q > 0.0)) throw ValidationError("hurst table: q must be positive");
    if (!(sigma > 0.0)) throw ValidationError("hurst table: sigma must be positive");
    if (!(T > 0.0)) throw ValidationError("hurst table: T must be positive");
    if (H_grid.empty()) throw ValidationError("hurst table: empty H grid");
    HurstTable table;
    table.q = q;
    table.sigma = sigma;
    table.T = T;
    table.rows.reserve(H_grid.size());
    const std::vector<int> grids = {512, 1024};
    double prev_H = -std::numeric_limits<double>::infinity();
    for (double H : H_grid) {
        if (!(H >= 0.5) || !(H < 1.0))
            throw ValidationError("hurst table: H grid must lie in [0.5, 1)");
        if (!(H > prev_H)) throw ValidationError("hurst table: H grid must be increasing");
        prev_H = H;
        HurstRow row;
        row.H = H;
        if (std::abs(H - 0.5) < 1e-12) {
            // H = 0.5 is exactly the stationary OU kernel; use the analytic
            // eigenvalue so the table anchor carries no quadrature error.
            const double sigma0 = sigma / std::sqrt(2.0 * q);
            row.lambda1 = ou_spectrum(q, sigma, sigma0, 0.0, 0.0, T, 1).eigenvalues.at(0);
        } else {
            ModelSpec model;
            model.T = T;
            model.s0 = 1.0;
            model.r = 0.0;
            model.mean = MeanFunction{ConstantMean{0.0}};
            model.kernel = CovarianceKernel{FouStationaryKernel{q, sigma, H}};
            row.lambda1 =
                nystrom_spectrum(model.kernel, model.mean, T, grids, 1).eigenvalues.at(0);
        }
        table.rows.push_back(row);
    }
    for (std::size_t i = 1; i < table.rows.size(); ++i)
        if (!(table.rows[i].lambda1 < table.rows[i - 1].lambda1))
            throw NumericalError(
                "hurst table: lambda1 failed to decrease strictly in H; "
                "refine the quadrature grids");
    return table;
}

HurstMatch recover_hurst(double lambda1, const HurstTable& table) {
    if (!(lambda1 > 0.0)) throw ValidationError("hurst recovery: lambda1 must be positive");
    if (table.rows.empty()) throw ValidationError("hurst recovery: empty table");
    HurstMatch match;
    double best = std::numeric_limits<double>::infinity();
    for (const HurstRow& row : table.rows) {
        const double dist = std::abs(lambda1 - row.lambda1);
        if (dist < best) {  // strict: ties keep the earlier (smaller) H
            best = dist;
            match.H = row.H;
        }
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const HurstRow& row : table.rows) {
        lo = std::min(lo, row.lambda1);
        hi = std::max(hi, row.lambda1);
    }
    if (lambda1 > 1.2 * hi || lambda1 < 0.8 * lo) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "hurst recovery: lambda1 = %.6g lies far outside the table range "
                      "[%.6g, %.6g]; recovered H is an extrapolated endpoint",
                      lambda1, lo, hi);
        match.warning = std::string(buf);
    }
    return match;
}

FitWindow auto_window(const IvSlice& slice, double length) {
    check_slice(slice);
    if (!(length > 0.0)) throw ValidationError("auto window: length must be positive");
    std::vector<IvPoint> pts;
    for (const IvPoint& p : slice.points)
        if (p.k < 0.0) pts.push_back(p);
    std::sort(pts.begin(), pts.end(),
              [](const IvPoint& a, const IvPoint& b) { return a.k < b.k; });
    if (pts.size() < 4)
        throw ValidationError("auto window: need at least 4 points with k < 0");

    std::optional<FitWindow> fallback;
    for (std::size_t start = 0; start < pts.size(); ++start) {
        FitWindow candidate{pts[start].k, pts[start].k + length};
        if (!(candidate.k_hi < 0.0)) break;
        std::vector<IvPoint> inside;
        for (std::size_t j = start; j < pts.size() && pts[j].k <= candidate.k_hi; ++j)
            inside.push_back(pts[j]);
        if (inside.size() < 4) continue;
        if (!fallback) fallback = candidate;
        if (!convexity_flag(inside)) return candidate;
    }
    if (fallback) return *fallback;
    throw ValidationError("auto window: no window of the requested length holds 4 points");
}

CalibrationReport calibrate_end_to_end(const IvSlice& slice,
                                       const std::optional<FitWindow>& window,
                                       const CalibrationMode& mode) {
    check_slice(slice);
    CalibrationReport report;
    report.window = window ? *window : auto_window(slice);
    if (!window) report.warnings.push_back("window auto-selected");
    check_window(report.window);
    if (report.window.k_hi > -0.7)
        report.warnings.push_back(
            "window upper edge above -0.7: wing asymptotics may not dominate yet, "
            "recovered parameters can carry regime bias");

    report.fit = fit_wing(slice, report.window);
    if (report.fit.degenerate)
        report.warnings.push_back("wing fit degenerate: fitted L is not positive");

    const auto [lambda1, delta1] = invert_wing(report.fit.L, report.fit.M, slice.T);
    report.lambda1 = lambda1;
    report.delta1 = delta1;

    switch (mode.kind) {
        case CalibrationMode::Kind::stein_stein:
            report.method = "stein_stein";
            report.recovered = recover_sigma(lambda1, mode.q, slice.T, mode.sigma0_mode);
            break;
        case CalibrationMode::Kind::fou: {
            report.method = "fou";
            HurstTable built;
            const HurstTable* table = mode.table;
            if (table == nullptr) {
                std::vector<double> grid;
                for (int i = 0; i < 50; ++i) grid.push_back(0.50 + 0.01 * i);
                built = build_hurst_table(mode.q, mode.sigma, slice.T, grid);
                table = &built;
            }
            const HurstMatch match = recover_hurst(lambda1, *table);
            report.recovered = match.H;
            if (match.warning) report.warnings.push_back(*match.warning);
            break;
        }
    }

    const double L_ref = mode.reference_L.value_or(report.fit.L);
    const double M_ref = mode.reference_M.value_or(report.fit.M);
    const std::vector<IvPoint> pts = window_points(slice, report.window);
    report.bias_min = std::numeric_limits<double>::infinity();
    report.bias_max = -std::numeric_limits<double>::infinity();
    for (const IvPoint& p : pts) {
        const double x = std::sqrt(-p.k);
        const double gap = (p.iv - (L_ref * x + M_ref)) * x;
        report.bias_values.push_back(gap);
        report.bias_min = std::min(report.bias_min, gap);
        report.bias_max = std::max(report.bias_max, gap);
    }
    return report;
}

}  // namespace gaussvol
