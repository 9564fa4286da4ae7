#pragma once

// Monte Carlo pricers for Gaussian volatility models: Euler path simulation
// (Brownian or fractional-Brownian volatility driver via circulant
// embedding), the KL-mixture conditioning pricer, Black-Scholes utilities,
// and the toy moment-explosion probe.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gaussvol/model.hpp"
#include "gaussvol/spectrum.hpp"

namespace gaussvol {

enum class Scheme { euler_path, kl_mixture };

struct SimConfig {
    std::size_t n_paths = 1'000'000;
    int n_steps = 1'000;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::euler_path;
    bool antithetic = false;  // antithetic reflection of the price driver W only
    int threads = 1;
};

struct PricedPoint {
    double k = 0.0;       // log(K / (s0 e^{rT}))
    double strike = 0.0;
    double price = 0.0;   // call price
    double std_err = 0.0; // MC standard error of the reported price
    std::optional<double> iv;  // empty when inversion is undefined at this price
};

// Black-Scholes call/put prices; sigma = 0 returns the discounted intrinsic.
double bs_call(double s0, double K, double sigma, double T, double r);
double bs_put(double s0, double K, double sigma, double T, double r);

// Implied volatility by safeguarded Newton with a maintained bracket;
// terminates at |price error| < 1e-12 * s0. Throws ValidationError when the
// price sits outside the no-arbitrage band.
double bs_implied_vol(double price, double s0, double K, double T, double r);
double bs_implied_vol_put(double price, double s0, double K, double T, double r);

// Black-Scholes vega (same for call and put); useful for converting price
// standard errors into implied-volatility standard errors.
double bs_vega(double s0, double K, double sigma, double T, double r);

// Stationary fractional Gaussian increments on a uniform n_steps-grid over
// [0, T] by circulant embedding (exact in law). Returns n_paths * n_steps
// doubles, path-major. H = 0.5 reduces to i.i.d. N(0, T/n) increments.
std::vector<double> simulate_fbm_increments(double H, int n_steps, double T,
                                            std::size_t n_paths, std::uint64_t seed);

// Euler path pricer: X by Euler on dX = q(m - X)dt + sigma dZ (Z Brownian or
// fBm per the kernel variant, X_0 from the kernel's time-zero law), log S by
// Euler with the left-endpoint X in both the drift and diffusion terms,
// discounted payoffs averaged across paths. Prices the out-of-the-money side
// and reports the call via parity.
std::vector<PricedPoint> price_calls_euler(const ModelSpec& spec,
                                           const std::vector<double>& strikes,
                                           const SimConfig& config);

// Mixture pricer: conditioning on the volatility path reduces the call to
// E[BS(s0, K, sqrt(Gamma_T/T), T, r)] over KL samples of Gamma_T.
std::vector<PricedPoint> price_calls_mixture(const Spectrum& spectrum,
                                             const ModelSpec& spec,
                                             const std::vector<double>& strikes,
                                             const SimConfig& config);

// Tuning knobs of the deterministic mixture pricer below: length of the
// Fourier-cosine expansion of the integrated-variance density, the composite
// Gauss-Legendre rule (panels x panel_order nodes) integrating the
// conditional Black-Scholes price against it, and the support cutoff
// mean + tail_width * lambda_1 (the density tail decays like
// exp(-x / (2 lambda_1)), so 90 widths leave ~1e-19 of mass outside).
struct CosConfig {
    int n_terms = 16384;
    int panels = 160;
    int panel_order = 16;
    double tail_width = 90.0;
};

// Deterministic counterpart of price_calls_mixture: recovers the density of
// the sampled integrated-variance law (same truncated spectrum, shift and
// tau compensation as the KL sampler) by Fourier-cosine inversion of its
// characteristic function, then integrates the conditional Black-Scholes
// price against it. No Monte Carlo noise; std_err is reported as 0. The
// inversion needs a smooth mixture, so spectra with fewer than 3 modes are
// rejected.
std::vector<PricedPoint> price_calls_cos(const Spectrum& spectrum,
                                         const ModelSpec& spec,
                                         const std::vector<double>& strikes,
                                         const CosConfig& config = {});

// Sample mean and standard error of the discounted terminal price
// e^{-rT} S_T under the Euler scheme (config.scheme must be euler_path).
// This is the honest martingale diagnostic: price_calls_euler reports calls
// through put-call parity, which holds identically in that estimator, so
// E[e^{-rT} S_T] = s0 has to be checked on the simulated terminal values
// themselves.
struct DiscountedMean {
    double mean = 0.0;
    double std_err = 0.0;
};
DiscountedMean discounted_terminal_mean(const ModelSpec& spec, const SimConfig& config);

// Gauss-Hermite rule for weight exp(-x^2): nodes from the Jacobi matrix,
// log-weights through the Christoffel function (stable at large n where the
// raw weights underflow).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> log_weights;
};
GaussHermiteRule gauss_hermite_rule(int n);

// Toy two-Gaussian model S_1 = exp(sigma X W - sigma^2 X^2 / 2): classifies
// E[S_1^p] as finite or divergent per p by comparing log of the quadrature
// estimate under node doubling (240 -> 480); growth > 0.3 marks divergence
// (the cut sits between the near-critical finite plateau and the log(2)/2
// growth of the exactly-critical sum).
struct MomentProbeResult {
    double p = 0.0;
    bool finite = true;
    double growth = 0.0;  // logQ(480) - logQ(240)
};
std::vector<MomentProbeResult> moment_explosion_probe(double sigma,
                                                      const std::vector<double>& p_grid);

}  // namespace gaussvol
