#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gaussvol/chaos.hpp"
#include "gaussvol/errors.hpp"
#include "gaussvol/spectrum.hpp"

using namespace gaussvol;

namespace {

constexpr double kQ = 7.0;
constexpr double kSigma = 1.2;
constexpr double kT = 1.0 / 12.0;
const double kSigma0Stat = kSigma / std::sqrt(2.0 * kQ);

// Frozen high-precision anchors for the stationary one-month model, mean 0.2.
constexpr double kLambda1 = 0.00713337272763248;
constexpr double kDeltaRatio = 0.4665184971328733;  // delta_1^2 / lambda_1
constexpr double kA = 1.1107397086180844;
constexpr double kC = 2.0775032180538457;
constexpr double kBTilde = 2.3345132994745024;
constexpr double kCTilde = 5.841089237530357;

Spectrum stein_stein_spectrum(double mean_level = 0.2) {
    return ou_spectrum(kQ, kSigma, kSigma0Stat, mean_level, mean_level, kT, 0);
}

// Hand-built spectrum for targeted structural tests.
Spectrum synthetic_spectrum(std::vector<double> eigenvalues, std::vector<double> deltas,
                            std::vector<int> multiplicities,
                            std::vector<double> distinct, double s, double tau,
                            double trace, double T) {
    Spectrum sp;
    sp.eigenvalues = std::move(eigenvalues);
    sp.delta_coeffs = std::move(deltas);
    sp.multiplicities = std::move(multiplicities);
    sp.distinct_values = std::move(distinct);
    sp.s = s;
    sp.tau = tau;
    sp.trace = trace;
    sp.truncation_count = int(sp.eigenvalues.size());
    sp.T = T;
    return sp;
}

// Integral of the noncentral chi-square density over (0, inf) by Simpson in
// the substitution x = u^2 (removes the n = 1 endpoint singularity; the
// u -> 0 limit of 2u f(u^2) is 2 e^{-lambda/2} / sqrt(2 pi) for n = 1 and
// zero for n >= 2).
double chi2_mass(int n, double lambda) {
    const double U = std::sqrt(200.0);
    const int intervals = 40000;
    const double h = U / intervals;
    const double at_zero =
        n == 1 ? 2.0 * std::exp(-0.5 * lambda) / std::sqrt(2 * 3.14159265358979323846)
               : 0.0;
    auto g = [&](double u) {
        return u == 0.0 ? at_zero : 2.0 * u * noncentral_chi2_density(u * u, n, lambda);
    };
    double acc = g(0.0) + g(U);
    for (int i = 1; i < intervals; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * g(i * h);
    return acc * h / 3.0;
}

}  // namespace

TEST_CASE("log Bessel I against the Boost oracle") {
    for (double nu : {-0.5, 0.0, 0.5, 1.0, 2.5}) {
        for (double t : {0.1, 1.0, 10.0, 29.0, 31.0, 100.0, 600.0}) {
            const double oracle = std::log(boost::math::cyl_bessel_i(nu, t));
            CHECK(log_bessel_i(nu, t) == doctest::Approx(oracle).epsilon(1e-10));
        }
    }
}

TEST_CASE("noncentral chi-square density") {
    SUBCASE("central one-degree value at x = 1") {
        CHECK(noncentral_chi2_density(1.0, 1, 0.0) ==
              doctest::Approx(std::exp(-0.5) / std::sqrt(2 * 3.14159265358979323846))
                  .epsilon(1e-12));
    }

    SUBCASE("densities integrate to one") {
        CHECK(chi2_mass(1, 0.5) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(chi2_mass(2, 1.0) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(chi2_mass(3, 0.0) == doctest::Approx(1.0).epsilon(1e-8));
    }

    SUBCASE("continuous as the noncentrality vanishes") {
        const double central = noncentral_chi2_density(2.0, 3, 0.0);
        const double near = noncentral_chi2_density(2.0, 3, 1e-10);
        CHECK(std::abs(near - central) < 1e-8 * central);
    }

    SUBCASE("central three-degree closed form") {
        const double x = 2.7;
        const double expected =
            std::sqrt(x / (2 * 3.14159265358979323846)) * std::exp(-x / 2);
        CHECK(noncentral_chi2_density(x, 3, 0.0) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("noncentral chi-square tail asymptotic") {
    SUBCASE("one degree of freedom has the exact ratio 1 + exp(-2 sqrt(lambda x))") {
        // I_{-1/2}(t) = sqrt(2/(pi t)) cosh t makes the exact-to-asymptotic
        // ratio algebraically 1 + e^{-2t} with t = sqrt(lambda x).
        const double lambda = 1.0;
        for (double x : {25.0, 100.0, 225.0}) {
            const double ratio = noncentral_chi2_density(x, 1, lambda) /
                                 noncentral_chi2_density_asymptotic(x, 1, lambda);
            const double expected = 1.0 + std::exp(-2.0 * std::sqrt(lambda * x));
            CHECK(std::abs(ratio - expected) < 1e-12 * ratio);
        }
    }

    SUBCASE("relative error contracts along x in {100, 400, 1600}") {
        // The densities underflow near x = 1600, so the ratio is taken in log
        // space; lambda = 0.05 keeps the gap e^{-2 sqrt(lambda x)} above
        // rounding noise across the whole ladder.
        const double lambda = 0.05;
        double prev = 1e9;
        for (double x : {100.0, 400.0, 1600.0}) {
            const double gap = std::abs(std::expm1(
                noncentral_chi2_log_density(x, 1, lambda) -
                noncentral_chi2_log_density_asymptotic(x, 1, lambda)));
            CHECK(gap < prev);
            CHECK(gap > 1e-12);  // still resolvable, not rounding noise
            prev = gap;
        }
    }

    SUBCASE("zero noncentrality is rejected") {
        CHECK_THROWS_AS(noncentral_chi2_density_asymptotic(10.0, 1, 0.0), ValidationError);
    }
}

TEST_CASE("chaos constants: frozen anchors for the one-month model") {
    const auto sp = stein_stein_spectrum();
    const auto c = chaos_constants(sp, kT);

    CHECK(c.lambda1 == doctest::Approx(kLambda1).epsilon(1e-12));
    CHECK(c.n1 == 1);
    CHECK(c.delta == doctest::Approx(kDeltaRatio).epsilon(1e-10));
    CHECK(c.A == doctest::Approx(kA).epsilon(1e-10));
    CHECK(c.C == doctest::Approx(kC).epsilon(1e-9));
    CHECK(c.B_tilde == doctest::Approx(kBTilde).epsilon(1e-10));
    CHECK(c.C_tilde == doctest::Approx(kCTilde).epsilon(1e-10));
    CHECK(!c.centered);
    CHECK(c.A >= 1.0);
    CHECK(c.tau >= 0.0);
    CHECK(c.mean_gamma == doctest::Approx(sp.trace + sp.s).epsilon(1e-12));
    CHECK(c.sum_delta_top ==
          doctest::Approx(sp.delta_coeffs[0] * sp.delta_coeffs[0]).epsilon(1e-12));
    CHECK(c.B_tilde ==
          doctest::Approx(std::sqrt(c.delta * kT / c.lambda1)).epsilon(1e-12));
    CHECK(c.C_tilde == doctest::Approx(kT / (2 * c.lambda1)).epsilon(1e-12));
}

TEST_CASE("chaos constants: structural properties") {
    SUBCASE("single centered mode collapses to the scaled chi-square") {
        const auto sp = synthetic_spectrum({0.5}, {0.0}, {1}, {0.5}, 0.0, 0.0, 0.5, 1.0);
        const auto c = chaos_constants(sp, 1.0);
        CHECK(c.A == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(c.centered);
        CHECK(c.B_tilde == 0.0);
        // C is the prefactor of x^{-1/2} e^{-x/(2 lambda1)} for
        // lambda1 chi^2_1, i.e. 1/sqrt(2 pi lambda1).
        CHECK(c.C == doctest::Approx(1.0 / std::sqrt(3.14159265358979323846)).epsilon(1e-13));
    }

    SUBCASE("product constant exceeds one with lower modes present") {
        const auto c = chaos_constants(stein_stein_spectrum(0.0), kT);
        CHECK(c.A > 1.0);
        CHECK(c.centered);
        CHECK(c.B_tilde == 0.0);
        CHECK(c.delta == 0.0);
    }

    SUBCASE("doubling the truncation leaves A and delta essentially fixed") {
        const auto sp256 = ou_spectrum(kQ, kSigma, kSigma0Stat, 0.2, 0.2, kT, 256);
        const auto sp512 = ou_spectrum(kQ, kSigma, kSigma0Stat, 0.2, 0.2, kT, 512);
        const auto c256 = chaos_constants(sp256, kT);
        const auto c512 = chaos_constants(sp512, kT);
        CHECK(std::abs(c512.A - c256.A) < 1e-8 * c256.A);
        CHECK(std::abs(c512.delta - c256.delta) < 1e-8 * std::max(c256.delta, 1e-30));
    }

    SUBCASE("a second group at the top eigenvalue is rejected") {
        const auto sp =
            synthetic_spectrum({0.5, 0.5}, {0.0, 0.0}, {1, 1}, {0.5, 0.5}, 0.0, 0.0, 1.0, 1.0);
        CHECK_THROWS_AS(chaos_constants(sp, 1.0), ValidationError);
    }

    SUBCASE("noncentrality ratio is invariant under rotations of a degenerate pair") {
        const double a = 0.21, b = -0.13;
        const double theta = 0.777;
        const double ar = a * std::cos(theta) + b * std::sin(theta);
        const double br = -a * std::sin(theta) + b * std::cos(theta);
        const double s = a * a + b * b;
        const auto c1 = chaos_constants(
            synthetic_spectrum({1.0, 1.0}, {a, b}, {2}, {1.0}, s, 0.0, 2.0, 1.0), 1.0);
        const auto c2 = chaos_constants(
            synthetic_spectrum({1.0, 1.0}, {ar, br}, {2}, {1.0}, s, 0.0, 2.0, 1.0), 1.0);
        CHECK(c1.n1 == 2);
        CHECK(c1.delta == doctest::Approx(c2.delta).epsilon(1e-12));
        CHECK(c1.C == doctest::Approx(c2.C).epsilon(1e-12));
        CHECK(c1.A == doctest::Approx(c2.A).epsilon(1e-12));
    }

    SUBCASE("vanishing noncentrality meets the centered branch at half the prefactor") {
        // The noncentral asymptotic keeps only the e^{+sqrt(lambda x)} half of
        // cosh; at zero noncentrality both halves contribute equally, so the
        // centered prefactor is exactly twice the delta -> 0 limit.
        const auto c_eps = chaos_constants(stein_stein_spectrum(1e-10), kT);
        const auto c_zero = chaos_constants(stein_stein_spectrum(0.0), kT);
        CHECK(!c_eps.centered);
        CHECK(c_zero.centered);
        CHECK(c_eps.C / c_zero.C == doctest::Approx(0.5).epsilon(1e-6));
    }
}

TEST_CASE("tail density asymptotics") {
    const auto sp = stein_stein_spectrum();
    const auto c = chaos_constants(sp, kT);

    SUBCASE("value agrees with the assembled closed form") {
        const double x = 50.0;
        const auto v = gamma_density_asymptotic(x, c);
        CHECK(!v.centered_branch);
        const double expected =
            c.C * std::pow(x, (c.n1 - 3) / 4.0) *
            std::exp(std::sqrt(c.delta / c.lambda1 * x) - x / (2 * c.lambda1));
        CHECK(v.value == doctest::Approx(expected).epsilon(1e-12));
    }

    SUBCASE("log-density slope approaches -1/(2 lambda1)") {
        // A centered single mode with lambda1 = 0.5 keeps the density in
        // floating-point range out to x ~ 700, far enough for the slope to
        // settle near the exponential rate.
        Spectrum one = synthetic_spectrum({0.5}, {0.0}, {1}, {0.5}, 0.0, 0.0, 0.5, 1.0);
        const auto cs = chaos_constants(one, 1.0);
        const double x1 = 400.0, x2 = 700.0;
        const double slope = (std::log(gamma_density_asymptotic(x2, cs).value) -
                              std::log(gamma_density_asymptotic(x1, cs).value)) /
                             (x2 - x1);
        CHECK(slope == doctest::Approx(-1.0 / (2 * cs.lambda1)).epsilon(1e-2));
    }

    SUBCASE("centered branch engages for the zero-mean model") {
        const auto c0 = chaos_constants(stein_stein_spectrum(0.0), kT);
        const auto v = gamma_density_asymptotic(10.0, c0);
        CHECK(v.centered_branch);
        const double expected = c0.C * std::pow(10.0, (c0.n1 - 2) / 2.0) *
                                std::exp(-10.0 / (2 * c0.lambda1));
        CHECK(v.value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("mixing-variable asymptotics") {
    const auto sp = stein_stein_spectrum();
    const auto c = chaos_constants(sp, kT);

    SUBCASE("change of variables identity at y = 3") {
        const double y = 3.0;
        const double direct = mixing_density_asymptotic(y, c, kT);
        const double via_gamma =
            2 * kT * y * gamma_density_asymptotic(kT * y * y, c).value;
        CHECK(direct == doctest::Approx(via_gamma).epsilon(1e-12));
    }

    SUBCASE("crossover point") {
        CHECK(mixing_crossover(c) ==
              doctest::Approx(3.0 * std::sqrt(c.mean_gamma / kT)).epsilon(1e-12));
    }

    SUBCASE("asymptotic tail mass beyond the crossover is subunit") {
        // Integrate the asymptotic mixing density from y* outward; a valid
        // density approximation cannot carry more than unit mass there.
        const double y_star = mixing_crossover(c);
        const int n_pts = 20000;
        const double y_hi = y_star + 40.0;
        const double h = (y_hi - y_star) / n_pts;
        double acc = 0.5 * (mixing_density_asymptotic(y_star, c, kT) +
                            mixing_density_asymptotic(y_hi, c, kT));
        for (int i = 1; i < n_pts; ++i)
            acc += mixing_density_asymptotic(y_star + i * h, c, kT);
        CHECK(acc * h < 1.0);
        CHECK(acc * h > 0.0);
    }
}

TEST_CASE("integrated-variance sampler") {
    const auto sp = ou_spectrum(kQ, kSigma, kSigma0Stat, 0.2, 0.2, kT, 64);

    SUBCASE("sample mean matches the truncated expectation") {
        const std::size_t n = 200000;
        const auto samples = sample_integrated_variance(sp, n, 2024);
        REQUIRE(samples.size() == n);
        double sum_d2 = 0.0;
        for (double d : sp.delta_coeffs) sum_d2 += d * d;
        const double expected =
            sp.tau + sum_d2 +
            std::accumulate(sp.eigenvalues.begin(), sp.eigenvalues.end(), 0.0);
        double mean = 0.0, var = 0.0;
        for (double x : samples) mean += x;
        mean /= double(n);
        for (double x : samples) var += (x - mean) * (x - mean);
        var /= double(n - 1);
        const double se = std::sqrt(var / double(n));
        CHECK(std::abs(mean - expected) < 3.0 * se);
    }

    SUBCASE("samples respect the deterministic floor") {
        const auto samples = sample_integrated_variance(sp, 5000, 7);
        for (double x : samples) CHECK(x >= sp.tau);
    }

    SUBCASE("fixed seed reproduces, different seed does not") {
        const auto a = sample_integrated_variance(sp, 1000, 42);
        const auto b = sample_integrated_variance(sp, 1000, 42);
        const auto d = sample_integrated_variance(sp, 1000, 43);
        CHECK(a == b);
        CHECK(a != d);
    }
}
