#include "gaussvol/experiments.hpp"

#include <cmath>
#include <string>

#include "gaussvol/chaos.hpp"
#include "gaussvol/smile.hpp"
#include "gaussvol/spectrum.hpp"

namespace gaussvol {

namespace ref = reference;

ModelSpec stein_stein_model(double T) {
    ModelSpec model;
    model.T = T;
    model.s0 = 1.0;
    model.r = 0.0;
    model.mean = MeanFunction{ConstantMean{ref::kMeanLevel}};
    model.kernel = CovarianceKernel{OuStationaryKernel{ref::kRate, ref::kVolVol}};
    return model;
}

ModelSpec fou_model(double H, double T) {
    ModelSpec model;
    model.T = T;
    model.s0 = 1.0;
    model.r = 0.0;
    model.mean = MeanFunction{ConstantMean{ref::kMeanLevel}};
    model.kernel = CovarianceKernel{FouStationaryKernel{ref::kRate, ref::kVolVol, H}};
    return model;
}

std::vector<double> k_grid(double lo, double hi, double step) {
    std::vector<double> ks;
    for (double k = lo; k <= hi + 1e-12; k += step) ks.push_back(k);
    return ks;
}

IvSlice slice_from_points(const std::vector<PricedPoint>& points, double T,
                          double s0, double r) {
    IvSlice slice;
    slice.T = T;
    slice.s0 = s0;
    slice.r = r;
    for (const PricedPoint& p : points)
        if (p.iv) slice.points.push_back(IvPoint{p.k, *p.iv});
    slice.source = "priced points";
    return slice;
}

HurstTable reference_hurst_table() {
    HurstTable table;
    table.q = ref::kTableQ;
    table.sigma = ref::kTableSigma;
    table.T = ref::kTableT;
    for (std::size_t i = 0; i < ref::kLambda1ByH.size(); ++i)
        table.rows.push_back(
            {ref::kTableHStart + ref::kTableHStep * static_cast<double>(i),
             ref::kLambda1ByH[i]});
    return table;
}

SigmaRunResult run_sigma_experiment(const reference::SigmaExperiment& exp,
                                    std::uint64_t user_seed, int threads) {
    SigmaRunResult result;
    result.effective_seed = user_seed + exp.seed_offset;

    const ModelSpec model = stein_stein_model(exp.T);
    std::vector<double> strikes;
    for (double k : k_grid(exp.grid_lo, exp.grid_hi, exp.grid_step))
        strikes.push_back(std::exp(k));  // forward = 1 (s0 = 1, r = 0)

    SimConfig config;
    config.n_paths = ref::kPaths;
    config.n_steps = ref::kSteps;
    config.seed = result.effective_seed;
    config.scheme = Scheme::euler_path;
    config.threads = threads;
    result.points = price_calls_euler(model, strikes, config);

    const IvSlice slice = slice_from_points(result.points, exp.T, 1.0, 0.0);

    // Model-implied closed-form coefficients for the wing-gap diagnostic.
    const double sigma0 = ref::kVolVol / std::sqrt(2.0 * ref::kRate);
    const Spectrum spectrum = ou_spectrum(ref::kRate, ref::kVolVol, sigma0,
                                          ref::kMeanLevel, ref::kMeanLevel, exp.T, 0);
    const ChaosConstants constants = chaos_constants(spectrum, exp.T);
    const WingExpansion wing =
        wing_expansion(constants, exp.T, WingDirection::small_strike);
    result.L_ref = wing.L;
    result.M_ref = wing.M;

    CalibrationMode mode;
    mode.kind = CalibrationMode::Kind::stein_stein;
    mode.q = ref::kRate;
    mode.sigma0_mode = Sigma0Mode::stationary;
    mode.reference_L = wing.L;
    mode.reference_M = wing.M;

    const FitWindow window{exp.window_lo, exp.window_hi};
    result.report = calibrate_end_to_end(slice, window, mode);
    result.recovered_sigma = result.report.recovered;
    result.sigma_in_band =
        result.recovered_sigma >= exp.band_lo && result.recovered_sigma <= exp.band_hi;
    result.bias_in_band = result.report.bias_min >= ref::kBiasLo &&
                          result.report.bias_max <= ref::kBiasHi;
    return result;
}

HurstRunResult run_hurst_experiment(const reference::HurstExperiment& exp,
                                    std::uint64_t user_seed, int threads) {
    HurstRunResult result;
    result.effective_seed = user_seed + exp.seed_offset;

    const ModelSpec model = fou_model(exp.true_H, ref::kHurstT);
    std::vector<double> strikes;
    for (double k : k_grid(exp.grid_lo, exp.grid_hi, exp.grid_step))
        strikes.push_back(std::exp(k));

    SimConfig config;
    config.n_paths = ref::kPaths;
    config.n_steps = ref::kSteps;
    config.seed = result.effective_seed;
    config.scheme = Scheme::euler_path;
    config.threads = threads;
    result.points = price_calls_euler(model, strikes, config);

    const IvSlice slice = slice_from_points(result.points, ref::kHurstT, 1.0, 0.0);

    const HurstTable table = reference_hurst_table();
    CalibrationMode mode;
    mode.kind = CalibrationMode::Kind::fou;
    mode.q = ref::kRate;
    mode.sigma = ref::kVolVol;
    mode.table = &table;

    const FitWindow window{exp.window_lo, exp.window_hi};
    result.report = calibrate_end_to_end(slice, window, mode);
    result.recovered_H = result.report.recovered;
    result.lambda1 = result.report.lambda1;
    result.in_tolerance = std::abs(result.recovered_H - exp.reference_H) <= exp.tolerance;
    return result;
}

TableRunResult run_table_experiment() {
    TableRunResult result;
    std::vector<double> grid;
    for (std::size_t i = 0; i < ref::kLambda1ByH.size(); ++i)
        grid.push_back(ref::kTableHStart + ref::kTableHStep * static_cast<double>(i));
    result.table = build_hurst_table(ref::kTableQ, ref::kTableSigma, ref::kTableT, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double err = std::abs(result.table.rows[i].lambda1 - ref::kLambda1ByH[i]);
        result.max_abs_error = std::max(result.max_abs_error, err);
    }
    result.pass = result.max_abs_error <= ref::kTableTolerance;
    return result;
}

}  // namespace gaussvol
