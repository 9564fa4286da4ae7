#pragma once

// Second-chaos representation of the integrated variance
//   Gamma_T = integral of X_t^2 dt = sum_n lambda_n (Z_n + delta_n/sqrt(lambda_n))^2 + tau
// and the constants and density asymptotics of its right tail.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gaussvol/spectrum.hpp"

namespace gaussvol {

// Tail-asymptotic constants of Gamma_T derived from a truncated spectrum.
struct ChaosConstants {
    double lambda1 = 0.0;   // top eigenvalue (group representative)
    int n1 = 1;             // multiplicity of the top eigenvalue
    double delta = 0.0;     // noncentrality ratio: sum_{n<=n1} delta_n^2 / lambda1
    double A = 1.0;         // infinite-product constant over the lower modes
    double C = 0.0;         // density prefactor (branch depends on `centered`)
    double tau = 0.0;       // deterministic remainder s - sum delta_n^2
    double s = 0.0;         // integral of m(t)^2
    double B_tilde = 0.0;   // sqrt(delta * T / lambda1)
    double C_tilde = 0.0;   // T / (2 lambda1)
    bool centered = false;  // true when the top-group noncentrality vanishes
    double T = 0.0;
    double sum_delta_top = 0.0;  // sum_{n<=n1} delta_n^2
    double mean_gamma = 0.0;     // E[Gamma_T] = trace + s
};

ChaosConstants chaos_constants(const Spectrum& spec, double T);

// log I_nu(t) for the modified Bessel function of the first kind: scaled
// power series below t = 30, uniform large-argument asymptotic above.
double log_bessel_i(double nu, double t);

// Density of the noncentral chi-square with n degrees of freedom and
// noncentrality lambda (central Gamma form when lambda = 0). The log form
// stays finite deep in the tail where the density itself underflows.
double noncentral_chi2_density(double x, int n, double lambda);
double noncentral_chi2_log_density(double x, int n, double lambda);

// Leading large-x form (1/(2 sqrt(2 pi))) lambda^{-(n-1)/4} x^{(n-3)/4}
// exp(sqrt(lambda x)) exp(-(x+lambda)/2); requires lambda > 0.
double noncentral_chi2_density_asymptotic(double x, int n, double lambda);
double noncentral_chi2_log_density_asymptotic(double x, int n, double lambda);

// Tail-asymptotic density of Gamma_T at x, with the branch that produced it.
struct GammaDensityValue {
    double value = 0.0;
    bool centered_branch = false;
};
GammaDensityValue gamma_density_asymptotic(double x, const ChaosConstants& constants);

// Tail-asymptotic density of the mixing variable sqrt(Gamma_t / t) at y,
// obtained from the Gamma_T form through p~_t(y) = 2 t y p_t(t y^2).
double mixing_density_asymptotic(double y, const ChaosConstants& constants, double t);

// Crossover point y* = 3 sqrt(E[Gamma_T]/T) beyond which the asymptotic
// mixing density is treated as valid.
double mixing_crossover(const ChaosConstants& constants);

// I.i.d. samples of Gamma_T via the truncated KL representation; fully
// deterministic for a fixed seed via the counter-based generator.
std::vector<double> sample_integrated_variance(const Spectrum& spec, std::size_t count,
                                               std::uint64_t seed);

}  // namespace gaussvol
