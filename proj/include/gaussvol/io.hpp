#pragma once

// File formats: JSON documents for model specs, spectra, chaos constants,
// calibration reports and Hurst tables; RFC-4180-style CSV for strike
// lists, IV slices and priced points; raw little-endian float64 streams
// for Monte Carlo samples; and per-output run manifests.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gaussvol/calibrate.hpp"
#include "gaussvol/chaos.hpp"
#include "gaussvol/model.hpp"
#include "gaussvol/pricing.hpp"
#include "gaussvol/spectrum.hpp"

namespace gaussvol {

// ---------------- JSON documents ----------------

ModelSpec read_model(const std::string& path);
void write_model(const ModelSpec& spec, const std::string& path);

// Optional provenance stored alongside a cached spectrum.
struct SpectrumMeta {
    std::string model_fingerprint;  // content hash of the model document
    std::vector<int> grid_sizes;    // Nystrom grids (empty for analytic)
    std::string method;             // "analytic_ou" or "nystrom"
};

Spectrum read_spectrum(const std::string& path);
void write_spectrum(const Spectrum& spec, const SpectrumMeta& meta,
                    const std::string& path);

ChaosConstants read_chaos(const std::string& path);
void write_chaos(const ChaosConstants& constants, const std::string& path);

HurstTable read_hurst_table(const std::string& path);
void write_hurst_table(const HurstTable& table, const std::string& path);

CalibrationReport read_calibration_report(const std::string& path);
void write_calibration_report(const CalibrationReport& report, const std::string& path);

// ---------------- CSV ----------------

// Strike list: single column with header `strike` (absolute strikes) or
// `k` (log-moneyness, converted using the forward), or headerless numbers
// treated as absolute strikes.
std::vector<double> read_strikes(const std::string& path, double forward);

// IV slice: header `k,iv` taken verbatim, or `strike,price` converted
// through Black-Scholes call-price inversion (points whose price admits
// no implied volatility are dropped and counted in `source`).
IvSlice read_iv_slice(const std::string& path, double T, double s0, double r);
void write_iv_slice(const IvSlice& slice, const std::string& path);

// Priced points: columns `k,strike,price,std_err,iv` (iv empty when the
// inversion was undefined).
void write_priced_points(const std::vector<PricedPoint>& points, const std::string& path);
std::vector<PricedPoint> read_priced_points(const std::string& path);

// Asymptotic smile curve: columns `k,iv_asymptotic`.
void write_smile_curve(const std::vector<double>& k, const std::vector<double>& iv,
                       const std::string& path);

// ---------------- Binary samples ----------------

// Raw little-endian IEEE-754 float64, no header.
void write_samples(const std::vector<double>& samples, const std::string& path);
std::vector<double> read_samples(const std::string& path);

// ---------------- Run manifests ----------------

struct ManifestFile {
    std::string path;
    std::string fnv1a64;  // content hash, 16 hex digits
};

struct RunManifest {
    std::string subcommand;
    std::string tool_version;
    std::vector<std::string> argv;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::vector<ManifestFile> inputs;
    std::vector<ManifestFile> outputs;
    double wall_clock_seconds = 0.0;
    std::string created_utc;
};

// FNV-1a 64-bit hash of a file's bytes, as 16 lowercase hex digits.
std::string hash_file(const std::string& path);

// Writes `<out_path>.manifest.json` describing how `out_path` was produced.
void write_manifest(const RunManifest& manifest, const std::string& out_path);

}  // namespace gaussvol
