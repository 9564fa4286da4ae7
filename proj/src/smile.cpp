#include "gaussvol/smile.hpp"

#include <cmath>

#include "gaussvol/errors.hpp"

namespace gaussvol {

WingExpansion wing_expansion(const ChaosConstants& constants, double T,
                             WingDirection direction) {
    if (!(T > 0.0)) throw ValidationError("wing_expansion: T must be > 0");
    if (!(constants.lambda1 > 0.0))
        throw ValidationError("wing_expansion: lambda1 must be > 0");

    const double C_tilde = T / (2.0 * constants.lambda1);
    const double B_tilde = std::sqrt(std::max(constants.delta * T / constants.lambda1, 0.0));
    const double u = 8.0 * C_tilde + T;
    const double p = std::sqrt(u);
    const double rT = std::sqrt(T);

    WingExpansion w;
    w.direction = direction;
    w.T = T;
    w.lambda1 = constants.lambda1;
    w.n1 = constants.n1;
    w.delta = constants.delta;
    w.B_tilde = B_tilde;
    w.C_tilde = C_tilde;
    w.L = std::pow(T, -0.75) * (std::sqrt(p + rT) - std::sqrt(p - rT));
    w.M = std::sqrt(2.0) * B_tilde / rT * std::pow(u, -0.25) *
          (1.0 / std::sqrt(p - rT) - 1.0 / std::sqrt(p + rT));
    w.loglog_coeff = 0.25 * (1.0 - constants.n1);
    return w;
}

double evaluate_wing(const WingExpansion& exp, double k) {
    const double a = std::abs(k);
    if (!(a > 0.0)) throw ValidationError("evaluate_wing: k must be nonzero");
    const double root = std::sqrt(a);
    return exp.L * root + exp.M + exp.loglog_coeff * std::log(a) / root;
}

CorollaryCoefficients corollary_coefficients(double lambda1, double delta1, double T) {
    if (!(lambda1 > 0.0)) throw ValidationError("corollary_coefficients: lambda1 must be > 0");
    if (!(T > 0.0)) throw ValidationError("corollary_coefficients: T must be > 0");
    const double root = std::sqrt(4.0 + lambda1);
    const double a = std::sqrt(root + std::sqrt(lambda1));
    const double b = std::sqrt(root - std::sqrt(lambda1));
    CorollaryCoefficients out;
    out.L = 2.0 * std::pow(lambda1, 0.25) / (std::sqrt(T) * (a + b));
    out.M = std::sqrt(2.0) * delta1 / (std::sqrt(T) * std::pow(4.0 + lambda1, 0.25) * (a + b));
    return out;
}

double folal_transfer_log(double alpha, double log_h, double l, double T) {
    if (!(alpha < -2.0)) throw ValidationError("folal_transfer: alpha must be < -2");
    if (!(T > 0.0)) throw ValidationError("folal_transfer: need T > 0");
    if (!(l > 0.0))
        throw ValidationError("folal_transfer: strike must exceed the forward");
    const double G = -(alpha + 2.0) * l - log_h;
    if (!(G > 0.0))
        throw NumericalError("folal_transfer: strike too close to the forward for the tail regime");
    const double half_log = 0.5 * std::log(G);
    const double inner = G - half_log;
    const double outer = l + inner;
    if (!(inner > 0.0) || !(outer > 0.0))
        throw NumericalError("folal_transfer: tail expression left its domain");
    return std::sqrt(2.0 / T) * (std::sqrt(outer) - std::sqrt(inner));
}

double folal_transfer(double alpha, double log_h, double K, double T, double s0, double r) {
    if (!(T > 0.0) || !(s0 > 0.0)) throw ValidationError("folal_transfer: need T > 0, s0 > 0");
    const double forward = s0 * std::exp(r * T);
    if (!(K > forward))
        throw ValidationError("folal_transfer: strike must exceed the forward");
    return folal_transfer_log(alpha, log_h, std::log(K / forward), T);
}

double DensityTailInputs::log_h(double l) const {
    return log_power * std::log(l) + sqrt_coeff * std::sqrt(l);
}

DensityTailInputs density_tail_inputs(const ChaosConstants& constants, double T) {
    if (!(T > 0.0)) throw ValidationError("density_tail_inputs: T must be > 0");
    const double C_tilde = T / (2.0 * constants.lambda1);
    const double B_tilde = std::sqrt(std::max(constants.delta * T / constants.lambda1, 0.0));
    const double u = 8.0 * C_tilde + T;
    DensityTailInputs out;
    out.alpha = -(1.5 + std::sqrt(u) / (2.0 * std::sqrt(T)));
    out.log_power = 0.25 * (constants.n1 - 3.0);
    out.sqrt_coeff = B_tilde * std::sqrt(2.0) / (std::pow(T, 0.25) * std::pow(u, 0.25));
    return out;
}

}  // namespace gaussvol
