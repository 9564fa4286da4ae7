#pragma once

// Implied-volatility wing expansions: the three-term extreme-strike formula
// I(k) ~ L sqrt|k| + M + ((1-n1)/4) log|k|/sqrt|k|, its n1 = 1 closed form,
// and the general density-tail-to-implied-volatility transfer.

#include "gaussvol/chaos.hpp"

namespace gaussvol {

enum class WingDirection { large_strike, small_strike };

struct WingExpansion {
    double L = 0.0;             // coefficient of sqrt|k|
    double M = 0.0;             // constant term
    double loglog_coeff = 0.0;  // coefficient of log|k|/sqrt|k|, equals (1-n1)/4
    WingDirection direction = WingDirection::large_strike;
    double T = 0.0;
    // Input snapshot.
    double lambda1 = 0.0;
    int n1 = 1;
    double delta = 0.0;
    double B_tilde = 0.0;
    double C_tilde = 0.0;
};

// Wing coefficients from the chaos constants; by model symmetry the two
// directions share identical coefficients.
WingExpansion wing_expansion(const ChaosConstants& constants, double T,
                             WingDirection direction);

// I(k) = L sqrt|k| + M + loglog_coeff * log|k|/sqrt|k|. The expansion is
// asymptotic; callers are expected to stay at |k| >= 1 (the CLI warns when a
// requested grid goes closer to the money).
double evaluate_wing(const WingExpansion& exp, double k);

// Closed-form (L, M) for a simple top eigenvalue, algebraically equal to
// wing_expansion at n1 = 1 with delta = delta1^2/lambda1:
//   a = sqrt(sqrt(4+lambda1)+sqrt(lambda1)), b = sqrt(sqrt(4+lambda1)-sqrt(lambda1)),
//   L = 2 lambda1^{1/4} / (sqrt(T) (a+b)),
//   M = sqrt(2) delta1 / (sqrt(T) (4+lambda1)^{1/4} (a+b)).
struct CorollaryCoefficients {
    double L = 0.0;
    double M = 0.0;
};
CorollaryCoefficients corollary_coefficients(double lambda1, double delta1, double T);

// Implied volatility from a density tail of the form p(K) ~ K^alpha h(K)
// with alpha < -2 and slowly varying h: with l = log(K/(s0 e^{rT})) and
// G = -(alpha+2) l - log_h,
//   I = sqrt(2/T) [ sqrt(l + G - log(G)/2) - sqrt(G - log(G)/2) ].
// The log-moneyness form reaches strikes whose level K = e^l overflows.
double folal_transfer(double alpha, double log_h, double K, double T, double s0, double r);
double folal_transfer_log(double alpha, double log_h, double l, double T);

// Density-tail inputs matching the chaos constants: the power-law exponent
// alpha and the slowly varying factor log h(l) = log_power * log(l)
// + sqrt_coeff * sqrt(l), expressed in l = log(K/(s0 e^{rT})).
struct DensityTailInputs {
    double alpha = 0.0;
    double log_power = 0.0;   // (n1 - 3) / 4
    double sqrt_coeff = 0.0;  // B_tilde sqrt(2) / (T^{1/4} (8 C_tilde + T)^{1/4})
    double log_h(double l) const;
};
DensityTailInputs density_tail_inputs(const ChaosConstants& constants, double T);

}  // namespace gaussvol
