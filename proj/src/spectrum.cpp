#include "gaussvol/spectrum.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "gaussvol/errors.hpp"

namespace gaussvol {

namespace {

constexpr double kPi = std::numbers::pi;

// Frequency equation for the OU covariance eigenproblem. For sigma0 = 0 the
// reduced form w*cos(wT) + q*sin(wT) = 0 is used (same roots, better scaled).
struct FreqEquation {
    double q, sigma, sigma0, T;
    bool reduced;  // sigma0 == 0

    double operator()(double w) const {
        const double c = std::cos(w * T), s = std::sin(w * T);
        if (reduced) return w * c + q * s;
        const double s2 = sigma * sigma;
        return s2 * w * c + (q * s2 - (w * w + q * q) * sigma0 * sigma0) * s;
    }
    double deriv(double w) const {
        const double c = std::cos(w * T), s = std::sin(w * T);
        if (reduced) return c - w * T * s + q * T * c;
        const double s2 = sigma * sigma, s02 = sigma0 * sigma0;
        return s2 * c - s2 * w * T * s - 2.0 * w * s02 * s +
               (q * s2 - (w * w + q * q) * s02) * T * c;
    }
    // Magnitude envelope of the two terms, for a relative residual check.
    double scale(double w) const {
        if (reduced) return std::abs(w) + q;
        const double s2 = sigma * sigma;
        return s2 * std::abs(w) + std::abs(q * s2 - (w * w + q * q) * sigma0 * sigma0);
    }
};

double bisect_root(const FreqEquation& f, double lo, double hi) {
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > 4.0 * 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double w = 0.5 * (lo + hi);
    // Safeguarded Newton polish.
    for (int it = 0; it < 3; ++it) {
        const double d = f.deriv(w);
        if (d == 0.0) break;
        const double step = f(w) / d;
        const double w_next = w - step;
        if (w_next <= lo || w_next >= hi) break;
        w = w_next;
    }
    return w;
}

// Simpson integration of fn over [0,T] with an even number of subintervals.
template <typename F>
double simpson(const F& fn, double T, int intervals) {
    if (intervals % 2 != 0) ++intervals;
    const double h = T / intervals;
    double acc = fn(0.0) + fn(T);
    for (int i = 1; i < intervals; ++i) acc += fn(h * i) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double clamp_tau(double s, double sum_d2) {
    double tau = s - sum_d2;
    if (tau < 0.0) {
        if (tau < -1e-6 * std::max(s, 1e-300) && tau < -1e-10)
            throw NumericalError("spectrum: sum of delta_n^2 exceeds the mean's squared norm");
        tau = 0.0;
    }
    return tau;
}

void fix_sign(Spectrum::OuMode& mode, double T) {
    // Convention: integral of e_n over [0,T] >= 0; tie-break e_n(0+) >= 0.
    const double w = mode.w;
    const double integral = mode.a * std::sin(w * T) / w + mode.b * (1.0 - std::cos(w * T)) / w;
    double keyed = integral;
    if (std::abs(keyed) < 1e-14 * (std::abs(mode.a) + std::abs(mode.b)) * T) keyed = mode.a;
    if (mode.K * keyed < 0.0) mode.K = -mode.K;
}

}  // namespace

double Spectrum::eigenfunction(std::size_t n, double t) const {
    if (n < ou_modes.size()) {
        const OuMode& m = ou_modes[n];
        return m.K * (m.a * std::cos(m.w * t) + m.b * std::sin(m.w * t));
    }
    if (n >= efuns.size()) throw ValidationError("spectrum: eigenfunction index out of range");
    const auto& g = grid;
    const auto& e = efuns[n];
    if (t <= g.front()) return e.front();
    if (t >= g.back()) return e.back();
    const auto it = std::upper_bound(g.begin(), g.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - g.begin());
    const double wgt = (t - g[i - 1]) / (g[i] - g[i - 1]);
    return e[i - 1] + wgt * (e[i] - e[i - 1]);
}

OuRoots ou_frequencies(double q, double sigma, double sigma0, double T, int count) {
    if (!(q > 0.0) || !(sigma > 0.0) || sigma0 < 0.0 || !(T > 0.0))
        throw ValidationError("ou_frequencies: need q > 0, sigma > 0, sigma0 >= 0, T > 0");
    if (count < 1) throw ValidationError("ou_frequencies: count must be >= 1");

    const FreqEquation f{q, sigma, sigma0, T, sigma0 == 0.0};
    OuRoots roots;
    roots.sigma0_zero = (sigma0 == 0.0);
    roots.w.reserve(count);
    roots.K.reserve(count);

    const int scan = 64;
    int interval = 1;
    const int interval_limit = count + 64;
    while (static_cast<int>(roots.w.size()) < count) {
        if (interval > interval_limit)
            throw NumericalError("ou_frequencies: root scan exhausted its interval budget");
        const double lo = (interval - 1) * kPi / T;
        const double hi = interval * kPi / T;
        double prev_w = lo + (hi - lo) * 1e-9;  // avoid the trivial zero at w = 0
        double prev_f = f(prev_w);
        for (int j = 1; j <= scan; ++j) {
            const double wj = lo + (hi - lo) * (j == scan ? 1.0 - 1e-12 : double(j) / scan);
            const double fj = f(wj);
            if ((prev_f <= 0.0) != (fj <= 0.0)) {
                const double w = bisect_root(f, prev_w, wj);
                if (roots.w.empty() || w > roots.w.back() * (1.0 + 1e-12)) {
                    if (std::abs(f(w)) > 1e-12 * f.scale(w))
                        throw NumericalError("ou_frequencies: root failed the residual check");
                    roots.w.push_back(w);
                    if (static_cast<int>(roots.w.size()) == count) break;
                }
            }
            prev_w = wj;
            prev_f = fj;
        }
        ++interval;
    }

    // Normalizers: e_n = K*(a cos(wt) + b sin(wt)) with a = sigma0^2 w,
    // b = sigma^2 - q sigma0^2 (a = 0, b = 1 when sigma0 = 0), and
    //   1/K^2 = a^2 (T/2 + sin(2wT)/(4w)) + b^2 (T/2 - sin(2wT)/(4w))
    //         + a b (1 - cos(2wT)) / (2w).
    for (const double w : roots.w) {
        const double a = roots.sigma0_zero ? 0.0 : sigma0 * sigma0 * w;
        const double b = roots.sigma0_zero ? 1.0 : sigma * sigma - q * sigma0 * sigma0;
        const double s2w = std::sin(2.0 * w * T), c2w = std::cos(2.0 * w * T);
        const double inv_K2 = a * a * (T / 2.0 + s2w / (4.0 * w)) +
                              b * b * (T / 2.0 - s2w / (4.0 * w)) +
                              a * b * (1.0 - c2w) / (2.0 * w);
        if (!(inv_K2 > 0.0))
            throw NumericalError("ou_frequencies: degenerate eigenfunction normalizer");
        roots.K.push_back(1.0 / std::sqrt(inv_K2));
    }
    return roots;
}

double delta1_stein_stein(double q, double sigma, double sigma0, double m, double m0,
                          double T) {
    const OuRoots roots = ou_frequencies(q, sigma, sigma0, T, 1);
    const double w = roots.w[0];
    Spectrum::OuMode mode;
    mode.w = w;
    mode.K = roots.K[0];
    mode.a = roots.sigma0_zero ? 0.0 : sigma0 * sigma0 * w;
    mode.b = roots.sigma0_zero ? 1.0 : sigma * sigma - q * sigma0 * sigma0;
    fix_sign(mode, T);

    const double cwT = std::cos(w * T), swT = std::sin(w * T), eqT = std::exp(-q * T);
    // Exponential-weighted trigonometric moments over [0,T].
    const double Ic = (q - eqT * (q * cwT - w * swT)) / (q * q + w * w);
    const double Is = (w - eqT * (q * swT + w * cwT)) / (q * q + w * w);
    const double const_part = mode.a * swT / w + mode.b * (1.0 - cwT) / w;
    return mode.K * (m * const_part + (m0 - m) * (mode.a * Ic + mode.b * Is));
}

Spectrum ou_spectrum(double q, double sigma, double sigma0, double m, double m0,
                     double T, int count) {
    if (!(q > 0.0) || !(sigma > 0.0) || sigma0 < 0.0 || !(T > 0.0))
        throw ValidationError("ou_spectrum: need q > 0, sigma > 0, sigma0 >= 0, T > 0");

    constexpr int kCap = 512;
    const double s2 = sigma * sigma;
    const double trace =
        s2 * T / (2.0 * q) + (sigma0 * sigma0 - s2 / (2.0 * q)) * (1.0 - std::exp(-2.0 * q * T)) / (2.0 * q);

    int modes = count > 0 ? count : kCap;
    OuRoots roots = ou_frequencies(q, sigma, sigma0, T, modes);

    Spectrum spec;
    spec.T = T;
    spec.trace = trace;
    spec.eigenvalues.reserve(modes);
    double cum = 0.0;
    int retained = 0;
    for (int n = 0; n < modes; ++n) {
        const double lam = s2 / (roots.w[n] * roots.w[n] + q * q);
        if (count <= 0 && retained > 0) {
            if (lam / spec.eigenvalues[0] < 1e-8 || cum >= 0.9999 * trace) break;
        }
        spec.eigenvalues.push_back(lam);
        cum += lam;
        ++retained;
    }
    spec.truncation_count = retained;

    spec.ou_modes.resize(retained);
    for (int n = 0; n < retained; ++n) {
        Spectrum::OuMode& mode = spec.ou_modes[n];
        mode.w = roots.w[n];
        mode.K = roots.K[n];
        mode.a = roots.sigma0_zero ? 0.0 : sigma0 * sigma0 * mode.w;
        mode.b = roots.sigma0_zero ? 1.0 : s2 - q * sigma0 * sigma0;
        fix_sign(mode, T);
    }

    // Mean-projection coefficients: closed form for n = 1, Simpson quadrature
    // resolved against each mode's oscillation for n >= 2.
    spec.delta_coeffs.resize(retained);
    if (retained > 0) spec.delta_coeffs[0] = delta1_stein_stein(q, sigma, sigma0, m, m0, T);
    auto mean_at = [&](double t) { return m + (m0 - m) * std::exp(-q * t); };
    for (int n = 1; n < retained; ++n) {
        const Spectrum::OuMode& mode = spec.ou_modes[n];
        const int periods = static_cast<int>(std::ceil(mode.w * T / (2.0 * kPi)));
        const int intervals = std::max(4096, 256 * periods);
        spec.delta_coeffs[n] = simpson(
            [&](double t) {
                return mean_at(t) * mode.K * (mode.a * std::cos(mode.w * t) + mode.b * std::sin(mode.w * t));
            },
            T, intervals);
    }

    // s = integral of m(t)^2 in closed form.
    const double dm = m0 - m;
    spec.s = m * m * T + 2.0 * m * dm * (1.0 - std::exp(-q * T)) / q +
             dm * dm * (1.0 - std::exp(-2.0 * q * T)) / (2.0 * q);
    double sum_d2 = 0.0;
    for (const double d : spec.delta_coeffs) sum_d2 += d * d;
    spec.tau = clamp_tau(spec.s, sum_d2);

    const EigenvalueGroups groups = group_multiplicities(spec.eigenvalues, 1e-8);
    spec.multiplicities = groups.multiplicities;
    spec.distinct_values = groups.distinct_values;

    // Uniform samples of the leading modes for plotting and serialization;
    // eigenfunction() keeps evaluating every retained mode analytically, so
    // the samples are a convenience, not the source of truth.
    const int pts = 2049;
    const int sampled = std::min(retained, 8);
    spec.grid.resize(pts);
    spec.efuns.assign(sampled, std::vector<double>(pts));
    for (int i = 0; i < pts; ++i) spec.grid[i] = T * double(i) / double(pts - 1);
    for (int n = 0; n < sampled; ++n)
        for (int i = 0; i < pts; ++i)
            spec.efuns[n][i] = spec.eigenfunction(n, spec.grid[i]);
    return spec;
}

Spectrum nystrom_spectrum(const CovarianceKernel& kernel, const MeanFunction& mean,
                          double T, const std::vector<int>& grid_sizes, int count) {
    if (!(T > 0.0)) throw ValidationError("nystrom_spectrum: T must be > 0");
    if (grid_sizes.size() < 2)
        throw ValidationError("nystrom_spectrum: need at least two grid sizes");
    for (std::size_t i = 0; i < grid_sizes.size(); ++i) {
        if (grid_sizes[i] < 8) throw ValidationError("nystrom_spectrum: grid size too small");
        if (i > 0 && grid_sizes[i] <= grid_sizes[i - 1])
            throw ValidationError("nystrom_spectrum: grid sizes must be strictly increasing");
    }

    ModelSpec probe;
    probe.kernel = kernel;
    probe.T = T;
    const bool stationary = kernel.is_stationary();

    struct Level {
        std::vector<double> lambda;  // descending
        Eigen::MatrixXd vectors;     // columns matched to lambda (finest only)
        std::vector<double> weights;
        std::vector<double> grid;
    };

    auto solve_level = [&](int N, bool want_vectors) {
        const int pts = N + 1;
        const double h = T / N;
        Level lv;
        lv.grid.resize(pts);
        lv.weights.resize(pts);
        for (int i = 0; i < pts; ++i) {
            lv.grid[i] = h * i;
            lv.weights[i] = (i == 0 || i == N) ? h / 2.0 : h;
        }
        Eigen::MatrixXd A(pts, pts);
        if (stationary) {
            std::vector<double> row(pts);
            for (int j = 0; j < pts; ++j) row[j] = evaluate_kernel(probe, 0.0, lv.grid[j]);
            for (int i = 0; i < pts; ++i)
                for (int j = i; j < pts; ++j) {
                    const double v = std::sqrt(lv.weights[i] * lv.weights[j]) * row[j - i];
                    A(i, j) = v;
                    A(j, i) = v;
                }
        } else {
            for (int i = 0; i < pts; ++i)
                for (int j = i; j < pts; ++j) {
                    const double v = std::sqrt(lv.weights[i] * lv.weights[j]) *
                                     evaluate_kernel(probe, lv.grid[i], lv.grid[j]);
                    A(i, j) = v;
                    A(j, i) = v;
                }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            A, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw NumericalError("nystrom_spectrum: eigensolver failed to converge");
        const auto& ev = es.eigenvalues();  // ascending
        lv.lambda.resize(pts);
        for (int i = 0; i < pts; ++i) lv.lambda[i] = ev[pts - 1 - i];
        const double top = std::max(lv.lambda[0], 0.0);
        if (lv.lambda.back() < -1e-10 * std::max(top, 1e-300))
            throw ValidationError("nystrom_spectrum: kernel is not positive semidefinite");
        if (want_vectors) {
            lv.vectors.resize(pts, pts);
            for (int i = 0; i < pts; ++i) lv.vectors.col(i) = es.eigenvectors().col(pts - 1 - i);
        }
        return lv;
    };

    const int N_coarse = grid_sizes[grid_sizes.size() - 2];
    const int N_fine = grid_sizes.back();
    const Level coarse = solve_level(N_coarse, false);
    Level fine = solve_level(N_fine, true);

    // Richardson extrapolation across the two finest levels; the trapezoid
    // Nystrom eigenvalue error is O(N^-2) for smooth kernels.
    const double ratio = double(N_fine) / double(N_coarse);
    const double r2 = ratio * ratio;
    const int avail = static_cast<int>(std::min(coarse.lambda.size(), fine.lambda.size()));
    std::vector<double> lambda(avail);
    for (int n = 0; n < avail; ++n)
        lambda[n] = (r2 * fine.lambda[n] - coarse.lambda[n]) / (r2 - 1.0);

    Spectrum spec;
    spec.T = T;
    {
        double tr = 0.0;
        for (std::size_t i = 0; i < fine.grid.size(); ++i)
            tr += fine.weights[i] * evaluate_kernel(probe, fine.grid[i], fine.grid[i]);
        spec.trace = tr;
    }

    constexpr int kCap = 512;
    const int limit = std::min(count > 0 ? count : kCap, avail);
    double cum = 0.0;
    for (int n = 0; n < limit; ++n) {
        const double lam = lambda[n];
        if (!(lam > 0.0)) break;
        if (n > 0 && count <= 0 && (lam / lambda[0] < 1e-8 || cum >= 0.9999 * spec.trace)) break;
        spec.eigenvalues.push_back(lam);
        cum += lam;
    }
    const int retained = static_cast<int>(spec.eigenvalues.size());
    if (retained == 0) throw NumericalError("nystrom_spectrum: no positive eigenvalues retained");
    spec.truncation_count = retained;

    // Eigenfunctions from the finest grid: e_n(t_i) = v_i / sqrt(w_i), already
    // orthonormal under the quadrature inner product.
    const int pts = static_cast<int>(fine.grid.size());
    spec.grid = fine.grid;
    spec.efuns.assign(retained, std::vector<double>(pts));
    spec.delta_coeffs.assign(retained, 0.0);
    for (int n = 0; n < retained; ++n) {
        auto& e = spec.efuns[n];
        for (int i = 0; i < pts; ++i) e[i] = fine.vectors(i, n) / std::sqrt(fine.weights[i]);
        double integral = 0.0;
        for (int i = 0; i < pts; ++i) integral += fine.weights[i] * e[i];
        double keyed = integral;
        if (std::abs(keyed) < 1e-12 * T) keyed = e[1];  // tie-break near t = 0+
        if (keyed < 0.0)
            for (double& v : e) v = -v;
        double d = 0.0;
        for (int i = 0; i < pts; ++i) d += fine.weights[i] * mean(fine.grid[i]) * e[i];
        spec.delta_coeffs[n] = d;
    }

    double s = 0.0;
    for (int i = 0; i < pts; ++i) {
        const double mv = mean(fine.grid[i]);
        s += fine.weights[i] * mv * mv;
    }
    spec.s = s;
    double sum_d2 = 0.0;
    for (const double d : spec.delta_coeffs) sum_d2 += d * d;
    spec.tau = clamp_tau(spec.s, sum_d2);

    const EigenvalueGroups groups = group_multiplicities(spec.eigenvalues, 1e-4);
    spec.multiplicities = groups.multiplicities;
    spec.distinct_values = groups.distinct_values;
    return spec;
}

EigenvalueGroups group_multiplicities(const std::vector<double>& eigenvalues,
                                      double tolerance) {
    EigenvalueGroups out;
    if (eigenvalues.empty()) return out;
    double group_sum = eigenvalues[0];
    int group_size = 1;
    for (std::size_t i = 1; i < eigenvalues.size(); ++i) {
        if (eigenvalues[i] > eigenvalues[i - 1] * (1.0 + 1e-12))
            throw ValidationError("group_multiplicities: eigenvalues must be non-increasing");
        const double gap = (eigenvalues[i - 1] - eigenvalues[i]) /
                           std::max(std::abs(eigenvalues[i - 1]), 1e-300);
        if (gap < tolerance) {
            group_sum += eigenvalues[i];
            ++group_size;
        } else {
            out.multiplicities.push_back(group_size);
            out.distinct_values.push_back(group_sum / group_size);
            group_sum = eigenvalues[i];
            group_size = 1;
        }
    }
    out.multiplicities.push_back(group_size);
    out.distinct_values.push_back(group_sum / group_size);
    return out;
}

namespace {

// (q, sigma, sigma0, m, m0) of the analytic OU path, when representable.
struct AnalyticOuParams {
    double q = 0.0, sigma = 0.0, sigma0 = 0.0, m = 0.0, m0 = 0.0;
};

std::optional<AnalyticOuParams> analytic_ou_params(const ModelSpec& spec) {
    AnalyticOuParams p;
    bool stationary_kernel = false;
    if (const auto* st = std::get_if<OuStationaryKernel>(&spec.kernel.value)) {
        p.q = st->q;
        p.sigma = st->sigma;
        p.sigma0 = st->sigma / std::sqrt(2.0 * st->q);
        stationary_kernel = true;
    } else if (const auto* rs = std::get_if<OuRandomStartKernel>(&spec.kernel.value)) {
        p.q = rs->q;
        p.sigma = rs->sigma;
        p.sigma0 = rs->sigma0;
    } else if (const auto* ds = std::get_if<OuDeterministicStartKernel>(&spec.kernel.value)) {
        p.q = ds->q;
        p.sigma = ds->sigma;
        p.sigma0 = 0.0;
    } else {
        return std::nullopt;
    }
    if (!(p.sigma > 0.0)) return std::nullopt;
    if (const auto* c = std::get_if<ConstantMean>(&spec.mean.value)) {
        p.m = c->level;
        p.m0 = c->level;
    } else if (const auto* o = std::get_if<OuRelaxationMean>(&spec.mean.value)) {
        if (std::abs(o->q - p.q) > 1e-12 * std::max(1.0, p.q)) return std::nullopt;
        if (stationary_kernel && o->m0 != o->m) return std::nullopt;
        p.m = o->m;
        p.m0 = o->m0;
    } else {
        return std::nullopt;
    }
    return p;
}

}  // namespace

bool has_analytic_spectrum(const ModelSpec& spec) {
    return analytic_ou_params(spec).has_value();
}

Spectrum model_spectrum(const ModelSpec& spec, const std::vector<int>& grid_sizes,
                        int count) {
    validate(spec);
    if (const auto p = analytic_ou_params(spec))
        return ou_spectrum(p->q, p->sigma, p->sigma0, p->m, p->m0, spec.T, count);
    return nystrom_spectrum(spec.kernel, spec.mean, spec.T, grid_sizes, count);
}

}  // namespace gaussvol
