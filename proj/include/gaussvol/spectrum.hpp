#pragma once

// Karhunen-Loeve spectral decomposition of Gaussian covariance operators on
// [0, T]: analytic eigenpairs for the Ornstein-Uhlenbeck family, and a
// Nystrom + Richardson path for arbitrary kernels.

#include <cstddef>
#include <string>
#include <vector>

#include "gaussvol/model.hpp"

namespace gaussvol {

// Eigen-decomposition of the covariance operator, truncated to
// `truncation_count` modes, together with the mean-projection data needed by
// the tail asymptotics.
struct Spectrum {
    // Analytic description of one OU-family eigenfunction,
    // e_n(t) = K * (a*cos(w t) + b*sin(w t)); empty for numeric spectra.
    struct OuMode {
        double w = 0.0;  // angular frequency
        double K = 0.0;  // signed normalizer (sign fixed by the convention below)
        double a = 0.0;  // cosine coefficient before normalization
        double b = 0.0;  // sine coefficient before normalization
    };

    std::vector<double> eigenvalues;    // lambda_1 >= lambda_2 >= ... > 0
    std::vector<double> delta_coeffs;   // delta_n = <m, e_n> in L2[0,T]
    std::vector<int> multiplicities;    // group sizes n_1, n_2, ...
    std::vector<double> distinct_values;  // rho_1 > rho_2 > ... (group means)
    double s = 0.0;     // integral of m(t)^2 over [0,T]
    double tau = 0.0;   // s - sum delta_n^2, clamped at 0 from below
    double trace = 0.0; // integral of Q(t,t) over [0,T]
    int truncation_count = 0;
    double T = 0.0;

    std::vector<double> grid;                 // uniform sample grid on [0,T]
    std::vector<std::vector<double>> efuns;   // efuns[n][i] = e_n(grid[i])
    std::vector<OuMode> ou_modes;             // analytic modes, if available

    bool has_analytic() const { return !ou_modes.empty(); }

    // e_n(t): analytic form when available, otherwise linear interpolation of
    // the stored grid samples.
    double eigenfunction(std::size_t n, double t) const;
};

// Positive roots of the OU frequency equation together with eigenfunction
// normalizers. The n-th root lies in ((n-1)pi/T, n*pi/T).
struct OuRoots {
    std::vector<double> w;  // ascending positive roots
    std::vector<double> K;  // signed normalizers for e_n = K*(a cos + b sin)
    bool sigma0_zero = false;
};

// First `count` positive roots of the frequency equation
//   sigma^2 w cos(wT) + (q sigma^2 - (w^2+q^2) sigma0^2) sin(wT) = 0
// (reducing to w cos(wT) + q sin(wT) = 0 when sigma0 = 0), each bracketed in
// its interval and refined to near machine precision, with normalizers.
OuRoots ou_frequencies(double q, double sigma, double sigma0, double T, int count);

// Analytic KL spectrum of the OU process dX = q(m - X)dt + sigma dZ started
// at X_0 ~ N(m0, sigma0^2): lambda_n = sigma^2/(w_n^2 + q^2) with the
// matching trigonometric eigenfunctions; delta_1 by closed form, higher
// delta_n by adaptive Simpson quadrature. `count` <= 0 selects the automatic
// truncation policy (lambda_n/lambda_1 < 1e-8 or 99.99% of trace, cap 512).
Spectrum ou_spectrum(double q, double sigma, double sigma0, double m, double m0,
                     double T, int count);

// Closed-form first projection coefficient delta_1 = <m, e_1> for the OU
// model above (mean m(t) = m + (m0 - m) e^{-qt}).
double delta1_stein_stein(double q, double sigma, double sigma0, double m,
                          double m0, double T);

// Nystrom discretization with trapezoid weights on each grid size (grid size
// = number of subintervals), symmetrized eigenproblem, and Richardson
// extrapolation across the last two grid sizes. Eigenfunctions and
// delta-coefficients come from the finest grid.
Spectrum nystrom_spectrum(const CovarianceKernel& kernel, const MeanFunction& mean,
                          double T, const std::vector<int>& grid_sizes, int count);

// True when the model admits the analytic OU spectral path: an OU-family
// kernel paired with a mean the OU relaxation form can represent.
bool has_analytic_spectrum(const ModelSpec& spec);

// Spectrum of the model's covariance operator: the analytic OU path when
// available, otherwise Nystrom on the given grid sizes. `count` <= 0 selects
// the automatic truncation policy.
Spectrum model_spectrum(const ModelSpec& spec, const std::vector<int>& grid_sizes,
                        int count);

// Contiguous grouping of a non-increasing eigenvalue list: neighbors whose
// relative gap is below `tolerance` share a group; returns group sizes and
// group means.
struct EigenvalueGroups {
    std::vector<int> multiplicities;
    std::vector<double> distinct_values;
};

EigenvalueGroups group_multiplicities(const std::vector<double>& eigenvalues,
                                      double tolerance);

}  // namespace gaussvol
