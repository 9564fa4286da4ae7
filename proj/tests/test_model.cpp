#include <cmath>
#include <vector>

#include "doctest.h"
#include "gaussvol/errors.hpp"
#include "gaussvol/model.hpp"

using namespace gaussvol;

namespace {

ModelSpec make_spec(CovarianceKernel kernel, MeanFunction mean, double T) {
    ModelSpec spec;
    spec.kernel = std::move(kernel);
    spec.mean = std::move(mean);
    spec.T = T;
    return spec;
}

ModelSpec make_spec(CovarianceKernel kernel, double T) {
    return make_spec(std::move(kernel), MeanFunction{ConstantMean{0.0}}, T);
}

}  // namespace

TEST_CASE("mean function variants evaluate as documented") {
    MeanFunction constant{ConstantMean{0.25}};
    CHECK(constant(0.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(constant(0.7) == doctest::Approx(0.25).epsilon(1e-15));

    MeanFunction relax{OuRelaxationMean{0.1, 0.3, 2.0}};
    CHECK(relax(0.0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(relax(1.0) == doctest::Approx(0.3 + (0.1 - 0.3) * std::exp(-2.0)).epsilon(1e-15));
    // Relaxes monotonically toward the long-run level.
    CHECK(std::abs(relax(5.0) - 0.3) < std::abs(relax(1.0) - 0.3));

    MeanFunction tab{TabulatedMean{{0.0, 0.5, 1.0}, {1.0, 2.0, 4.0}}};
    CHECK(tab(0.25) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(tab(0.75) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(tab(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(tab(1.0) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("named kernels match their closed forms") {
    const double T = 0.8;

    SUBCASE("scaled Brownian motion") {
        auto spec = make_spec(CovarianceKernel{BrownianMotionKernel{1.5}}, T);
        CHECK(evaluate_kernel(spec, 0.3, 0.6) == doctest::Approx(1.5 * 1.5 * 0.3).epsilon(1e-15));
        CHECK(evaluate_kernel(spec, 0.0, 0.5) == doctest::Approx(0.0));
    }

    SUBCASE("Brownian bridge vanishes at the pin") {
        auto spec = make_spec(CovarianceKernel{BrownianBridgeKernel{1.0}}, T);
        CHECK(evaluate_kernel(spec, T, T) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(evaluate_kernel(spec, 0.2, 0.4) ==
              doctest::Approx(0.2 - 0.2 * 0.4 / T).epsilon(1e-14));
    }

    SUBCASE("OU from a deterministic start has zero variance at t = 0") {
        const double q = 3.0, sigma = 0.9;
        auto spec = make_spec(CovarianceKernel{OuDeterministicStartKernel{q, sigma}}, T);
        CHECK(evaluate_kernel(spec, 0.0, 0.0) == doctest::Approx(0.0).epsilon(1e-14));
        const double t = 0.5;
        const double expected = sigma * sigma / (2 * q) * (1.0 - std::exp(-2 * q * t));
        CHECK(evaluate_kernel(spec, t, t) == doctest::Approx(expected).epsilon(1e-14));
    }

    SUBCASE("stationary OU depends only on the gap") {
        const double q = 7.0, sigma = 1.2;
        auto spec = make_spec(CovarianceKernel{OuStationaryKernel{q, sigma}}, T);
        const double expected = sigma * sigma / (2 * q) * std::exp(-q * 0.3);
        CHECK(evaluate_kernel(spec, 0.1, 0.4) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(evaluate_kernel(spec, 0.5, 0.2) ==
              doctest::Approx(evaluate_kernel(spec, 0.0, 0.3)).epsilon(1e-14));
        CHECK(spec.kernel.is_stationary());
    }

    SUBCASE("random-start OU interpolates deterministic and stationary") {
        const double q = 2.0, sigma = 0.8;
        const double sd_stat = sigma / std::sqrt(2 * q);
        auto stat_start =
            make_spec(CovarianceKernel{OuRandomStartKernel{q, sigma, sd_stat}}, T);
        auto stationary = make_spec(CovarianceKernel{OuStationaryKernel{q, sigma}}, T);
        for (double t : {0.0, 0.2, 0.6}) {
            for (double s : {0.1, 0.5}) {
                CHECK(evaluate_kernel(stat_start, t, s) ==
                      doctest::Approx(evaluate_kernel(stationary, t, s)).epsilon(1e-13));
            }
        }
        auto zero_start = make_spec(CovarianceKernel{OuRandomStartKernel{q, sigma, 0.0}}, T);
        auto det = make_spec(CovarianceKernel{OuDeterministicStartKernel{q, sigma}}, T);
        CHECK(evaluate_kernel(zero_start, 0.3, 0.5) ==
              doctest::Approx(evaluate_kernel(det, 0.3, 0.5)).epsilon(1e-14));
    }
}

TEST_CASE("kernel symmetry holds across variants") {
    const double T = 0.6;
    std::vector<ModelSpec> specs;
    specs.push_back(make_spec(CovarianceKernel{BrownianMotionKernel{1.0}}, T));
    specs.push_back(make_spec(CovarianceKernel{BrownianBridgeKernel{0.7}}, T));
    specs.push_back(make_spec(CovarianceKernel{OuDeterministicStartKernel{4.0, 1.1}}, T));
    specs.push_back(make_spec(CovarianceKernel{OuRandomStartKernel{4.0, 1.1, 0.2}}, T));
    specs.push_back(make_spec(CovarianceKernel{OuStationaryKernel{4.0, 1.1}}, T));
    specs.push_back(make_spec(CovarianceKernel{FouStationaryKernel{4.0, 1.1, 0.7}}, T));

    const std::vector<double> pts = {0.0, 0.13, 0.29, 0.41, 0.6};
    for (const auto& spec : specs) {
        for (double t : pts) {
            for (double s : pts) {
                CHECK(std::abs(evaluate_kernel(spec, t, s) - evaluate_kernel(spec, s, t)) <
                      1e-14);
            }
        }
    }
}

TEST_CASE("fractional OU stationary covariance") {
    const double q = 7.0, sigma = 1.2;

    SUBCASE("variance at lag zero matches the closed form") {
        for (double H : {0.55, 0.7, 0.85}) {
            const double expected =
                sigma * sigma * H * std::tgamma(2 * H) * std::pow(q, -2 * H);
            CHECK(fou_stationary_covariance(q, sigma, H, 0.0) ==
                  doctest::Approx(expected).epsilon(1e-12));
        }
    }

    SUBCASE("H near one half approaches the exponential kernel") {
        const double H = 0.5 + 1e-7;
        for (double tau : {0.0, 0.05, 0.2}) {
            const double ou = sigma * sigma / (2 * q) * std::exp(-q * tau);
            CHECK(fou_stationary_covariance(q, sigma, H, tau) ==
                  doctest::Approx(ou).epsilon(1e-4));
        }
    }

    SUBCASE("covariance decreases in the lag and stays positive") {
        double prev = fou_stationary_covariance(q, sigma, 0.7, 0.0);
        for (double tau : {0.02, 0.05, 0.1, 0.3, 1.0}) {
            const double c = fou_stationary_covariance(q, sigma, 0.7, tau);
            CHECK(c > 0.0);
            CHECK(c < prev);
            prev = c;
        }
    }

    SUBCASE("symmetric in the sign of the lag") {
        CHECK(fou_stationary_covariance(q, sigma, 0.65, -0.17) ==
              doctest::Approx(fou_stationary_covariance(q, sigma, 0.65, 0.17))
                  .epsilon(1e-14));
    }
}

TEST_CASE("validation rejects malformed specifications") {
    auto good = make_spec(CovarianceKernel{OuStationaryKernel{7.0, 1.2}}, 0.5);
    CHECK_NOTHROW(validate(good));

    SUBCASE("non-positive maturity") {
        auto bad = good;
        bad.T = 0.0;
        CHECK_THROWS_AS(validate(bad), ValidationError);
    }

    SUBCASE("non-positive spot") {
        auto bad = good;
        bad.s0 = -1.0;
        CHECK_THROWS_AS(validate(bad), ValidationError);
    }

    SUBCASE("Hurst exponent out of range") {
        auto bad = make_spec(CovarianceKernel{FouStationaryKernel{7.0, 1.2, 0.4}}, 0.5);
        CHECK_THROWS_AS(validate(bad), ValidationError);
        auto bad2 = make_spec(CovarianceKernel{FouStationaryKernel{7.0, 1.2, 1.0}}, 0.5);
        CHECK_THROWS_AS(validate(bad2), ValidationError);
    }

    SUBCASE("tabulated kernel must be symmetric") {
        TabulatedKernel tk;
        tk.grid = {0.0, 0.25, 0.5};
        tk.matrix = {{1.0, 0.5, 0.2}, {0.4, 1.0, 0.5}, {0.2, 0.5, 1.0}};
        auto bad = make_spec(CovarianceKernel{tk}, 0.5);
        CHECK_THROWS_AS(validate(bad), ValidationError);
    }

    SUBCASE("tabulated kernel must be positive semidefinite") {
        TabulatedKernel tk;
        tk.grid = {0.0, 0.25, 0.5};
        // Symmetric but with a strongly negative eigenvalue.
        tk.matrix = {{1.0, 2.0, 0.0}, {2.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
        auto bad = make_spec(CovarianceKernel{tk}, 0.5);
        CHECK_THROWS_AS(validate(bad), ValidationError);
    }

    SUBCASE("tabulated grid must cover the maturity") {
        TabulatedKernel tk;
        tk.grid = {0.0, 0.2};
        tk.matrix = {{1.0, 0.5}, {0.5, 1.0}};
        auto bad = make_spec(CovarianceKernel{tk}, 0.5);
        CHECK_THROWS_AS(validate(bad), ValidationError);
    }

    SUBCASE("kernel evaluation outside the time domain") {
        CHECK_THROWS_AS(evaluate_kernel(good, -0.01, 0.2), ValidationError);
        CHECK_THROWS_AS(evaluate_kernel(good, 0.2, 0.51), ValidationError);
    }
}

TEST_CASE("tabulated kernel interpolates its samples") {
    TabulatedKernel tk;
    tk.grid = {0.0, 0.5, 1.0};
    // Samples of Q(t,s) = (1+t)(1+s) restricted to the grid: rank one, PSD.
    tk.matrix.resize(3, std::vector<double>(3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            tk.matrix[i][j] = (1.0 + tk.grid[i]) * (1.0 + tk.grid[j]);
    auto spec = make_spec(CovarianceKernel{tk}, 1.0);
    CHECK_NOTHROW(validate(spec));
    CHECK(evaluate_kernel(spec, 0.5, 1.0) == doctest::Approx(1.5 * 2.0).epsilon(1e-14));
    // Bilinear interpolation of a bilinear function is exact.
    CHECK(evaluate_kernel(spec, 0.25, 0.75) ==
          doctest::Approx(1.25 * 1.75).epsilon(1e-13));
}

TEST_CASE("martingale tail bound") {
    SUBCASE("stationary OU: peak variance sits at sigma^2/(2q)") {
        auto spec = make_spec(CovarianceKernel{OuStationaryKernel{7.0, 1.2}}, 1.0 / 12);
        const double peak = 1.2 * 1.2 / 14.0;
        CHECK(martingale_delta_bound(spec) == doctest::Approx(1.0 / (2 * peak)).epsilon(1e-12));
    }

    SUBCASE("Brownian motion: peak variance sits at T") {
        auto spec = make_spec(CovarianceKernel{BrownianMotionKernel{1.0}}, 1.0);
        CHECK(martingale_delta_bound(spec) == doctest::Approx(0.5).epsilon(1e-12));
    }
}
