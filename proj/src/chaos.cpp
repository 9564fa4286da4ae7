#include "gaussvol/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gaussvol/errors.hpp"
#include "gaussvol/rng.hpp"

namespace gaussvol {

namespace {

constexpr double kPi = std::numbers::pi;

double log_2_sqrt_2pi() { return std::log(2.0) + 0.5 * std::log(2.0 * kPi); }

}  // namespace

ChaosConstants chaos_constants(const Spectrum& spec, double T) {
    if (!(T > 0.0)) throw ValidationError("chaos_constants: T must be > 0");
    if (spec.eigenvalues.empty() || spec.distinct_values.empty())
        throw ValidationError("chaos_constants: empty spectrum");
    if (spec.delta_coeffs.size() != spec.eigenvalues.size())
        throw ValidationError("chaos_constants: delta/eigenvalue size mismatch");

    ChaosConstants c;
    c.T = T;
    c.lambda1 = spec.distinct_values[0];
    c.n1 = spec.multiplicities[0];
    c.tau = spec.tau;
    c.s = spec.s;
    if (!(c.lambda1 > 0.0)) throw ValidationError("chaos_constants: lambda1 must be > 0");

    // Group-level noncentrality norms D_k^2 = sum of delta_n^2 within group k.
    const std::size_t groups = spec.distinct_values.size();
    std::vector<double> D2(groups, 0.0);
    std::size_t mode = 0;
    for (std::size_t k = 0; k < groups; ++k)
        for (int j = 0; j < spec.multiplicities[k]; ++j, ++mode)
            D2[k] += spec.delta_coeffs[mode] * spec.delta_coeffs[mode];

    c.sum_delta_top = D2[0];
    c.delta = c.sum_delta_top / c.lambda1;
    c.centered = c.sum_delta_top < 1e-30;
    c.B_tilde = std::sqrt(std::max(c.delta * T / c.lambda1, 0.0));
    c.C_tilde = T / (2.0 * c.lambda1);

    // Product constant over the lower groups, assembled in log space:
    //   log A = sum_{k>=2} [ n_k/2 log(lambda1/(lambda1-rho_k))
    //                        + D_k^2 / (2 (lambda1 - rho_k)) ]
    // plus the first-order tail correction (trace remainder)/(2 lambda1)
    // standing in for the modes dropped by truncation.
    double logA = 0.0;
    for (std::size_t k = 1; k < groups; ++k) {
        const double rho = spec.distinct_values[k];
        if (rho >= c.lambda1)
            throw ValidationError("chaos_constants: lower eigenvalue group reaches lambda1");
        const double gap = c.lambda1 - rho;
        logA += 0.5 * spec.multiplicities[k] * std::log(c.lambda1 / gap) + D2[k] / (2.0 * gap);
    }
    double retained = 0.0;
    for (const double lam : spec.eigenvalues) retained += lam;
    const double tail = std::max(spec.trace - retained, 0.0);
    logA += tail / (2.0 * c.lambda1);
    c.A = std::exp(logA);

    double sum_d2_all = 0.0;
    for (const double d : spec.delta_coeffs) sum_d2_all += d * d;

    double logC;
    if (c.centered) {
        logC = logA - 0.5 * c.n1 * std::log(2.0 * c.lambda1) - std::lgamma(0.5 * c.n1);
    } else {
        logC = logA - log_2_sqrt_2pi() - 0.5 * std::log(c.lambda1) -
               0.25 * (c.n1 - 1) * std::log(c.sum_delta_top) +
               (c.s - sum_d2_all - c.sum_delta_top) / (2.0 * c.lambda1);
    }
    c.C = std::exp(logC);
    c.mean_gamma = spec.trace + spec.s;
    return c;
}

double log_bessel_i(double nu, double t) {
    if (t < 0.0) throw ValidationError("log_bessel_i: argument must be >= 0");
    if (t == 0.0)
        return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (t <= 30.0) {
        // I_nu(t) = (t/2)^nu / Gamma(nu+1) * [1 + sum_k prod_j (t^2/4)/(j (j+nu))]
        const double x2 = t * t / 4.0;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 500; ++k) {
            term *= x2 / (double(k) * (double(k) + nu));
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return nu * std::log(t / 2.0) - std::lgamma(nu + 1.0) + std::log(sum);
    }
    // Large-argument expansion
    //   I_nu(t) ~ e^t / sqrt(2 pi t) * sum_k term_k,
    //   term_k = -term_{k-1} (mu - (2k-1)^2) / (8 k t),  mu = 4 nu^2.
    // Twelve terms leave a truncation error well below 1e-12 at t >= 30.
    const double mu = 4.0 * nu * nu;
    double term = 1.0, series = 1.0;
    for (int k = 1; k <= 12; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (8.0 * k * t);
        series += term;
        if (term == 0.0) break;  // terminating (half-integer) orders
    }
    return t - 0.5 * std::log(2.0 * kPi * t) + std::log(series);
}

double noncentral_chi2_log_density(double x, int n, double lambda) {
    if (!(x > 0.0)) throw ValidationError("noncentral_chi2_density: x must be > 0");
    if (n < 1) throw ValidationError("noncentral_chi2_density: n must be >= 1");
    if (lambda < 0.0) throw ValidationError("noncentral_chi2_density: lambda must be >= 0");
    if (lambda == 0.0) {
        return (0.5 * n - 1.0) * std::log(x) - 0.5 * x - 0.5 * n * std::log(2.0) -
               std::lgamma(0.5 * n);
    }
    const double nu = 0.5 * n - 1.0;
    return -std::log(2.0) + (0.25 * n - 0.5) * (std::log(x) - std::log(lambda)) -
           0.5 * (x + lambda) + log_bessel_i(nu, std::sqrt(lambda * x));
}

double noncentral_chi2_density(double x, int n, double lambda) {
    return std::exp(noncentral_chi2_log_density(x, n, lambda));
}

double noncentral_chi2_log_density_asymptotic(double x, int n, double lambda) {
    if (!(x > 0.0)) throw ValidationError("noncentral_chi2_density_asymptotic: x must be > 0");
    if (n < 1) throw ValidationError("noncentral_chi2_density_asymptotic: n must be >= 1");
    if (!(lambda > 0.0))
        throw ValidationError(
            "noncentral_chi2_density_asymptotic: lambda must be > 0 (use the central branch)");
    return -log_2_sqrt_2pi() - 0.25 * (n - 1) * std::log(lambda) +
           0.25 * (n - 3) * std::log(x) + std::sqrt(lambda * x) - 0.5 * (x + lambda);
}

double noncentral_chi2_density_asymptotic(double x, int n, double lambda) {
    return std::exp(noncentral_chi2_log_density_asymptotic(x, n, lambda));
}

GammaDensityValue gamma_density_asymptotic(double x, const ChaosConstants& c) {
    if (!(x > 0.0)) throw ValidationError("gamma_density_asymptotic: x must be > 0");
    GammaDensityValue out;
    out.centered_branch = c.centered;
    const double logC = std::log(c.C);
    double logp;
    if (c.centered) {
        logp = logC + 0.5 * (c.n1 - 2) * std::log(x) - x / (2.0 * c.lambda1);
    } else {
        logp = logC + 0.25 * (c.n1 - 3) * std::log(x) +
               std::sqrt(c.delta / c.lambda1) * std::sqrt(x) - x / (2.0 * c.lambda1);
    }
    out.value = std::exp(logp);
    return out;
}

double mixing_density_asymptotic(double y, const ChaosConstants& c, double t) {
    if (!(y > 0.0)) throw ValidationError("mixing_density_asymptotic: y must be > 0");
    if (!(t > 0.0)) throw ValidationError("mixing_density_asymptotic: t must be > 0");
    const double Ct = t / (2.0 * c.lambda1);
    if (c.centered) {
        const double logp = std::log(2.0 * c.C) + 0.5 * c.n1 * std::log(t) +
                            (c.n1 - 1) * std::log(y) - Ct * y * y;
        return std::exp(logp);
    }
    const double Bt = std::sqrt(c.delta * t / c.lambda1);
    const double logp = std::log(2.0 * c.C) + 0.25 * (c.n1 + 1) * std::log(t) +
                        0.5 * (c.n1 - 1) * std::log(y) + Bt * y - Ct * y * y;
    return std::exp(logp);
}

double mixing_crossover(const ChaosConstants& c) {
    return 3.0 * std::sqrt(c.mean_gamma / c.T);
}

std::vector<double> sample_integrated_variance(const Spectrum& spec, std::size_t count,
                                               std::uint64_t seed) {
    if (count < 1) throw ValidationError("sample_integrated_variance: count must be >= 1");
    const std::size_t n_modes = spec.eigenvalues.size();
    std::vector<double> lam(spec.eigenvalues.begin(), spec.eigenvalues.end());
    std::vector<double> shift(n_modes);
    for (std::size_t n = 0; n < n_modes; ++n)
        shift[n] = spec.delta_coeffs[n] / std::sqrt(spec.eigenvalues[n]);

    const rng::Philox4x32 gen(seed);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        double acc = spec.tau;
        for (std::size_t h = 0; 2 * h < n_modes; ++h) {
            const rng::NormalPair z =
                rng::normal_pair(gen, i, static_cast<std::uint32_t>(h), rng::Stream::kl_sample);
            const double u0 = z.z0 + shift[2 * h];
            acc += lam[2 * h] * u0 * u0;
            if (2 * h + 1 < n_modes) {
                const double u1 = z.z1 + shift[2 * h + 1];
                acc += lam[2 * h + 1] * u1 * u1;
            }
        }
        out[i] = acc;
    }
    return out;
}

}  // namespace gaussvol
