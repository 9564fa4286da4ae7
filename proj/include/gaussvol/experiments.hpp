#pragma once

// Canned reproduction experiments: full pipeline runs (simulate -> slice ->
// calibrate) against the frozen reference values. Shared by the `reproduce`
// subcommand and the acceptance suite.

#include <cstdint>
#include <vector>

#include "gaussvol/calibrate.hpp"
#include "gaussvol/model.hpp"
#include "gaussvol/pricing.hpp"
#include "gaussvol/reference.hpp"

namespace gaussvol {

// Stationary Stein-Stein test model (mean level, q, sigma from `reference`).
ModelSpec stein_stein_model(double T);

// Stationary fOU test model with Hurst exponent H.
ModelSpec fou_model(double H, double T);

// Log-moneyness grid {lo, lo+step, ...} up to hi (inclusive within 1e-12).
std::vector<double> k_grid(double lo, double hi, double step);

// IV slice assembled from priced points (points without an impliedable
// price are skipped).
IvSlice slice_from_points(const std::vector<PricedPoint>& points, double T,
                          double s0, double r);

// The frozen lambda1-vs-H rows as a lookup table.
HurstTable reference_hurst_table();

struct SigmaRunResult {
    std::uint64_t effective_seed = 0;
    std::vector<PricedPoint> points;
    CalibrationReport report;
    double recovered_sigma = 0.0;
    double L_ref = 0.0, M_ref = 0.0;  // model-implied wing coefficients
    bool sigma_in_band = false;
    bool bias_in_band = false;  // wing-gap diagnostic vs [kBiasLo, kBiasHi]
};

// Euler run + wing calibration recovering sigma on the experiment's window;
// effective seed = user_seed + experiment seed_offset.
SigmaRunResult run_sigma_experiment(const reference::SigmaExperiment& exp,
                                    std::uint64_t user_seed, int threads);

struct HurstRunResult {
    std::uint64_t effective_seed = 0;
    std::vector<PricedPoint> points;
    CalibrationReport report;
    double recovered_H = 0.0;
    double lambda1 = 0.0;
    bool in_tolerance = false;
};

// fOU Euler run + wing calibration recovering H via the reference table.
HurstRunResult run_hurst_experiment(const reference::HurstExperiment& exp,
                                    std::uint64_t user_seed, int threads);

struct TableRunResult {
    HurstTable table;
    double max_abs_error = 0.0;
    bool pass = false;
};

// Rebuilds the 50-row lambda1-vs-H table and compares it to the frozen rows.
TableRunResult run_table_experiment();

}  // namespace gaussvol
