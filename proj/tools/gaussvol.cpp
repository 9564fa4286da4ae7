// gaussvol: spectral analysis, tail asymptotics, Monte Carlo pricing and
// wing calibration for Gaussian stochastic volatility models.
//
// Subcommands: spectrum, chaos, smile, price, calibrate, table, reproduce.
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gaussvol/calibrate.hpp"
#include "gaussvol/chaos.hpp"
#include "gaussvol/errors.hpp"
#include "gaussvol/experiments.hpp"
#include "gaussvol/io.hpp"
#include "gaussvol/model.hpp"
#include "gaussvol/pricing.hpp"
#include "gaussvol/reference.hpp"
#include "gaussvol/smile.hpp"
#include "gaussvol/spectrum.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

using gaussvol::ValidationError;

// ---------------- small parsers ----------------

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError(what + ": not a number: '" + s + "'");
    }
}

std::vector<int> parse_grid_sizes(const std::string& s) {
    std::vector<int> grids;
    for (const std::string& tok : split(s, ',')) {
        const double v = to_double(tok, "--grids");
        if (v < 2 || v != std::floor(v))
            throw ValidationError("--grids: entries must be integers >= 2");
        grids.push_back(static_cast<int>(v));
    }
    return grids;
}

std::vector<double> parse_k_grid(const std::string& s) {
    const auto toks = split(s, ':');
    if (toks.size() != 3)
        throw ValidationError("--k-grid: expected lo:hi:step, e.g. -4:-0.5:0.05");
    const double lo = to_double(toks[0], "--k-grid");
    const double hi = to_double(toks[1], "--k-grid");
    const double step = to_double(toks[2], "--k-grid");
    if (!(step > 0.0)) throw ValidationError("--k-grid: step must be positive");
    if (!(lo <= hi)) throw ValidationError("--k-grid: need lo <= hi");
    return gaussvol::k_grid(lo, hi, step);
}

gaussvol::FitWindow parse_window(const std::string& s) {
    const auto toks = split(s, ':');
    if (toks.size() != 2)
        throw ValidationError("--window: expected lo:hi, e.g. -0.85:-0.70");
    return {to_double(toks[0], "--window"), to_double(toks[1], "--window")};
}

int resolve_threads(int cli_threads) {
    if (cli_threads > 0) return cli_threads;
    if (const char* env = std::getenv("GAUSSVOL_THREADS")) {
        const double v = to_double(env, "GAUSSVOL_THREADS");
        if (v >= 1 && v == std::floor(v)) return static_cast<int>(v);
        throw ValidationError("GAUSSVOL_THREADS must be a positive integer");
    }
    return 1;
}

// ---------------- manifest plumbing ----------------

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

class ManifestWriter {
  public:
    ManifestWriter(std::string subcommand, int argc, char** argv)
        : start_(std::chrono::steady_clock::now()) {
        manifest_.subcommand = std::move(subcommand);
        manifest_.tool_version = std::string("gaussvol ") + kVersion;
        for (int i = 0; i < argc; ++i) manifest_.argv.emplace_back(argv[i]);
    }

    void seed(std::uint64_t s) { manifest_.seed = s; }
    void threads(int t) { manifest_.threads = t; }
    void input(const std::string& path) {
        manifest_.inputs.push_back({path, gaussvol::hash_file(path)});
    }
    void output(const std::string& path) {
        manifest_.outputs.push_back({path, gaussvol::hash_file(path)});
    }

    // Writes <primary_out>.manifest.json.
    void finish(const std::string& primary_out) {
        const auto stop = std::chrono::steady_clock::now();
        manifest_.wall_clock_seconds =
            std::chrono::duration<double>(stop - start_).count();
        manifest_.created_utc = utc_now();
        gaussvol::write_manifest(manifest_, primary_out);
    }

  private:
    gaussvol::RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

std::string default_out(const std::string& out, const char* fallback) {
    return out.empty() ? fallback : out;
}

// ---------------- subcommand options ----------------

struct Options {
    // global
    std::uint64_t seed = gaussvol::reference::kDefaultSeed;
    int threads = 0;  // 0 = unset (env fallback, then 1)
    std::string out;

    // spectrum / price
    std::string model_path;
    int modes = 0;  // 0 = automatic truncation
    std::string grids = "512,1024";

    // chaos / smile
    std::string spectrum_path;
    std::uint64_t sample_count = 0;
    std::string chaos_path;
    std::string direction = "small";
    std::string k_grid_spec = "-4:-0.5:0.05";

    // price
    std::string scheme = "mixture";
    std::string strikes_file;
    std::uint64_t paths = 1'000'000;
    int steps = 1'000;
    bool antithetic = false;

    // calibrate
    std::string slice_path;
    std::string window_spec;
    std::string mode = "stein-stein";
    double q = 0.0;
    double sigma = 0.0;
    std::string table_path;
    double T = 0.0;
    double s0 = 1.0;
    double r = 0.0;
    std::string sigma0_mode = "stationary";
    double ref_L = 0.0, ref_M = 0.0;
    bool have_ref_L = false, have_ref_M = false;

    // table
    std::string h_grid_spec = "0.50:0.99:0.01";

    // reproduce
    std::string experiment = "all";
};

// ---------------- subcommand implementations ----------------

int cmd_spectrum(const Options& opt, int argc, char** argv) {
    const std::string out = default_out(opt.out, "spectrum.json");
    ManifestWriter manifest("spectrum", argc, argv);
    manifest.threads(resolve_threads(opt.threads));
    manifest.input(opt.model_path);

    const gaussvol::ModelSpec model = gaussvol::read_model(opt.model_path);
    const std::vector<int> grids = parse_grid_sizes(opt.grids);
    const gaussvol::Spectrum spec = gaussvol::model_spectrum(model, grids, opt.modes);

    gaussvol::SpectrumMeta meta;
    meta.model_fingerprint = gaussvol::hash_file(opt.model_path);
    const bool analytic = gaussvol::has_analytic_spectrum(model);
    meta.method = analytic ? "analytic_ou" : "nystrom";
    if (!analytic) meta.grid_sizes = grids;

    gaussvol::write_spectrum(spec, meta, out);
    manifest.output(out);
    manifest.finish(out);
    std::cout << "spectrum: " << spec.truncation_count << " modes, lambda1 = "
              << (spec.eigenvalues.empty() ? 0.0 : spec.eigenvalues[0])
              << ", method = " << meta.method << " -> " << out << "\n";
    return 0;
}

int cmd_chaos(const Options& opt, int argc, char** argv) {
    const bool sampling = opt.sample_count > 0;
    const std::string out = default_out(opt.out, sampling ? "samples.bin" : "chaos.json");
    ManifestWriter manifest("chaos", argc, argv);
    manifest.threads(resolve_threads(opt.threads));
    manifest.input(opt.spectrum_path);

    const gaussvol::Spectrum spec = gaussvol::read_spectrum(opt.spectrum_path);
    if (sampling) {
        manifest.seed(opt.seed);
        const std::vector<double> samples =
            gaussvol::sample_integrated_variance(spec, opt.sample_count, opt.seed);
        gaussvol::write_samples(samples, out);
        std::cout << "chaos: wrote " << samples.size() << " integrated-variance samples -> "
                  << out << "\n";
    } else {
        const gaussvol::ChaosConstants constants = gaussvol::chaos_constants(spec, spec.T);
        gaussvol::write_chaos(constants, out);
        std::cout << "chaos: lambda1 = " << constants.lambda1 << ", n1 = " << constants.n1
                  << ", delta = " << constants.delta << (constants.centered ? " (centered)" : "")
                  << " -> " << out << "\n";
    }
    manifest.output(out);
    manifest.finish(out);
    return 0;
}

int cmd_smile(const Options& opt, int argc, char** argv) {
    const std::string out = default_out(opt.out, "curve.csv");
    ManifestWriter manifest("smile", argc, argv);
    manifest.threads(resolve_threads(opt.threads));
    manifest.input(opt.chaos_path);

    const gaussvol::ChaosConstants constants = gaussvol::read_chaos(opt.chaos_path);
    gaussvol::WingDirection direction;
    if (opt.direction == "small")
        direction = gaussvol::WingDirection::small_strike;
    else if (opt.direction == "large")
        direction = gaussvol::WingDirection::large_strike;
    else
        throw ValidationError("--direction must be 'small' or 'large'");

    const gaussvol::WingExpansion wing =
        gaussvol::wing_expansion(constants, constants.T, direction);
    const std::vector<double> ks = parse_k_grid(opt.k_grid_spec);
    std::vector<double> ivs;
    ivs.reserve(ks.size());
    for (double k : ks) ivs.push_back(gaussvol::evaluate_wing(wing, k));
    gaussvol::write_smile_curve(ks, ivs, out);

    manifest.output(out);
    manifest.finish(out);
    std::cout << "smile: L = " << wing.L << ", M = " << wing.M
              << ", loglog coefficient = " << wing.loglog_coeff << "; " << ks.size()
              << " points -> " << out << "\n";
    return 0;
}

int cmd_price(const Options& opt, int argc, char** argv) {
    const std::string out = default_out(opt.out, "points.csv");
    ManifestWriter manifest("price", argc, argv);
    const int threads = resolve_threads(opt.threads);
    manifest.threads(threads);
    manifest.seed(opt.seed);
    manifest.input(opt.model_path);
    manifest.input(opt.strikes_file);

    const gaussvol::ModelSpec model = gaussvol::read_model(opt.model_path);
    const double forward = model.s0 * std::exp(model.r * model.T);
    const std::vector<double> strikes = gaussvol::read_strikes(opt.strikes_file, forward);

    gaussvol::SimConfig config;
    config.n_paths = opt.paths;
    config.n_steps = opt.steps;
    config.seed = opt.seed;
    config.antithetic = opt.antithetic;
    config.threads = threads;

    std::vector<gaussvol::PricedPoint> points;
    if (opt.scheme == "euler") {
        config.scheme = gaussvol::Scheme::euler_path;
        points = gaussvol::price_calls_euler(model, strikes, config);
    } else if (opt.scheme == "mixture") {
        config.scheme = gaussvol::Scheme::kl_mixture;
        gaussvol::Spectrum spectrum;
        if (!opt.spectrum_path.empty()) {
            manifest.input(opt.spectrum_path);
            spectrum = gaussvol::read_spectrum(opt.spectrum_path);
        } else {
            spectrum = gaussvol::model_spectrum(model, parse_grid_sizes(opt.grids), opt.modes);
        }
        points = gaussvol::price_calls_mixture(spectrum, model, strikes, config);
    } else {
        throw ValidationError("--scheme must be 'euler' or 'mixture'");
    }

    gaussvol::write_priced_points(points, out);
    manifest.output(out);
    manifest.finish(out);

    std::size_t with_iv = 0;
    for (const auto& p : points)
        if (p.iv) ++with_iv;
    std::cout << "price: " << points.size() << " strikes (" << with_iv
              << " with implied vol), scheme = " << opt.scheme << ", seed = " << opt.seed
              << " -> " << out << "\n";
    return 0;
}

int cmd_calibrate(const Options& opt, int argc, char** argv) {
    const std::string out = default_out(opt.out, "report.json");
    ManifestWriter manifest("calibrate", argc, argv);
    manifest.threads(resolve_threads(opt.threads));
    manifest.input(opt.slice_path);

    if (!(opt.T > 0.0))
        throw ValidationError("calibrate: --T (slice maturity) must be given and positive");
    const gaussvol::IvSlice slice =
        gaussvol::read_iv_slice(opt.slice_path, opt.T, opt.s0, opt.r);

    std::optional<gaussvol::FitWindow> window;
    if (!opt.window_spec.empty()) window = parse_window(opt.window_spec);

    gaussvol::CalibrationMode mode;
    gaussvol::HurstTable table;
    if (opt.mode == "stein-stein") {
        mode.kind = gaussvol::CalibrationMode::Kind::stein_stein;
        if (!(opt.q > 0.0))
            throw ValidationError("calibrate: stein-stein mode needs --q > 0");
        mode.q = opt.q;
        if (opt.sigma0_mode == "stationary")
            mode.sigma0_mode = gaussvol::Sigma0Mode::stationary;
        else if (opt.sigma0_mode == "deterministic")
            mode.sigma0_mode = gaussvol::Sigma0Mode::deterministic;
        else
            throw ValidationError("--sigma0-mode must be 'stationary' or 'deterministic'");
    } else if (opt.mode == "fou") {
        mode.kind = gaussvol::CalibrationMode::Kind::fou;
        if (!opt.table_path.empty()) {
            manifest.input(opt.table_path);
            table = gaussvol::read_hurst_table(opt.table_path);
            mode.table = &table;
        } else {
            if (!(opt.q > 0.0) || !(opt.sigma > 0.0))
                throw ValidationError(
                    "calibrate: fou mode needs --table, or --q and --sigma to build one");
            mode.q = opt.q;
            mode.sigma = opt.sigma;
        }
    } else {
        throw ValidationError("--mode must be 'stein-stein' or 'fou'");
    }
    if (opt.have_ref_L) mode.reference_L = opt.ref_L;
    if (opt.have_ref_M) mode.reference_M = opt.ref_M;

    const gaussvol::CalibrationReport report =
        gaussvol::calibrate_end_to_end(slice, window, mode);
    gaussvol::write_calibration_report(report, out);
    manifest.output(out);
    manifest.finish(out);

    std::cout << "calibrate: L = " << report.fit.L << ", M = " << report.fit.M
              << " (rms residual " << report.fit.residual << ")\n"
              << "  lambda1 = " << report.lambda1 << ", delta1 = " << report.delta1 << "\n"
              << "  " << (report.method == "stein_stein" ? "sigma" : "H") << " = "
              << report.recovered << " -> " << out << "\n";
    for (const std::string& w : report.warnings) std::cout << "  warning: " << w << "\n";
    return 0;
}

int cmd_table(const Options& opt, int argc, char** argv) {
    const std::string out = default_out(opt.out, "hurst_table.json");
    ManifestWriter manifest("table", argc, argv);
    manifest.threads(resolve_threads(opt.threads));

    if (!(opt.q > 0.0) || !(opt.sigma > 0.0) || !(opt.T > 0.0))
        throw ValidationError("table: needs --q > 0, --sigma > 0, --T > 0");
    const auto toks = split(opt.h_grid_spec, ':');
    if (toks.size() != 3)
        throw ValidationError("--h-grid: expected lo:hi:step, e.g. 0.50:0.99:0.01");
    const double lo = to_double(toks[0], "--h-grid");
    const double hi = to_double(toks[1], "--h-grid");
    const double step = to_double(toks[2], "--h-grid");
    if (!(step > 0.0)) throw ValidationError("--h-grid: step must be positive");
    std::vector<double> grid;
    for (double H = lo; H <= hi + 1e-12; H += step) grid.push_back(H);

    const gaussvol::HurstTable table =
        gaussvol::build_hurst_table(opt.q, opt.sigma, opt.T, grid);
    gaussvol::write_hurst_table(table, out);
    manifest.output(out);
    manifest.finish(out);
    std::cout << "table: " << table.rows.size() << " rows, lambda1 range ["
              << table.rows.back().lambda1 << ", " << table.rows.front().lambda1 << "] -> "
              << out << "\n";
    return 0;
}

// ---------------- reproduce ----------------

nlohmann::json sigma_experiment_json(const gaussvol::reference::SigmaExperiment& exp,
                                     std::uint64_t user_seed, int threads) {
    const gaussvol::SigmaRunResult run =
        gaussvol::run_sigma_experiment(exp, user_seed, threads);
    nlohmann::json j;
    j["name"] = exp.name;
    j["kind"] = "sigma";
    j["true_sigma"] = gaussvol::reference::kVolVol;
    j["recovered_sigma"] = run.recovered_sigma;
    j["reference_sigma"] = exp.reference_sigma;
    j["band"] = {exp.band_lo, exp.band_hi};
    j["pass"] = run.sigma_in_band;
    j["lambda1"] = run.report.lambda1;
    j["delta1"] = run.report.delta1;
    j["fit_L"] = run.report.fit.L;
    j["fit_M"] = run.report.fit.M;
    j["model_L"] = run.L_ref;
    j["model_M"] = run.M_ref;
    j["wing_gap_min"] = run.report.bias_min;
    j["wing_gap_max"] = run.report.bias_max;
    j["wing_gap_band"] = {gaussvol::reference::kBiasLo, gaussvol::reference::kBiasHi};
    j["wing_gap_pass"] = run.bias_in_band;
    j["effective_seed"] = run.effective_seed;
    j["warnings"] = run.report.warnings;
    std::cout << exp.name << ": recovered sigma = " << run.recovered_sigma
              << " (reference " << exp.reference_sigma << ", band [" << exp.band_lo << ", "
              << exp.band_hi << "]) " << (run.sigma_in_band ? "PASS" : "FAIL") << "\n"
              << "  wing gap in [" << run.report.bias_min << ", " << run.report.bias_max
              << "] (band [" << gaussvol::reference::kBiasLo << ", "
              << gaussvol::reference::kBiasHi << "]) "
              << (run.bias_in_band ? "PASS" : "FAIL") << "\n";
    return j;
}

nlohmann::json hurst_experiment_json(const gaussvol::reference::HurstExperiment& exp,
                                     std::uint64_t user_seed, int threads) {
    const gaussvol::HurstRunResult run =
        gaussvol::run_hurst_experiment(exp, user_seed, threads);
    nlohmann::json j;
    j["name"] = exp.name;
    j["kind"] = "hurst";
    j["true_H"] = exp.true_H;
    j["recovered_H"] = run.recovered_H;
    j["reference_H"] = exp.reference_H;
    j["tolerance"] = exp.tolerance;
    j["pass"] = run.in_tolerance;
    j["lambda1_measured"] = run.lambda1;
    j["effective_seed"] = run.effective_seed;
    j["warnings"] = run.report.warnings;
    std::cout << exp.name << ": recovered H = " << run.recovered_H << " (reference "
              << exp.reference_H << " +/- " << exp.tolerance << ", measured lambda1 = "
              << run.lambda1 << ") " << (run.in_tolerance ? "PASS" : "FAIL") << "\n";
    return j;
}

nlohmann::json table_experiment_json() {
    const gaussvol::TableRunResult run = gaussvol::run_table_experiment();
    nlohmann::json j;
    j["name"] = "table";
    j["kind"] = "table";
    j["max_abs_error"] = run.max_abs_error;
    j["tolerance"] = gaussvol::reference::kTableTolerance;
    j["pass"] = run.pass;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < run.table.rows.size(); ++i)
        rows.push_back({{"H", run.table.rows[i].H},
                        {"lambda1", run.table.rows[i].lambda1},
                        {"reference", gaussvol::reference::kLambda1ByH[i]}});
    j["rows"] = rows;
    std::cout << "table: max |lambda1 - reference| = " << run.max_abs_error
              << " (tolerance " << gaussvol::reference::kTableTolerance << ") "
              << (run.pass ? "PASS" : "FAIL") << "\n";
    return j;
}

int cmd_reproduce(const Options& opt, int argc, char** argv) {
    const std::string out = default_out(opt.out, "reproduce_summary.json");
    ManifestWriter manifest("reproduce", argc, argv);
    const int threads = resolve_threads(opt.threads);
    manifest.threads(threads);
    manifest.seed(opt.seed);

    namespace ref = gaussvol::reference;
    nlohmann::json experiments = nlohmann::json::array();
    const std::string& which = opt.experiment;
    bool matched = false;

    if (which == "all" || which == "table") {
        experiments.push_back(table_experiment_json());
        matched = true;
    }
    if (which == "all" || which == "sigma-1m") {
        experiments.push_back(sigma_experiment_json(ref::kSigma1m, opt.seed, threads));
        matched = true;
    }
    if (which == "all" || which == "sigma-3m") {
        experiments.push_back(sigma_experiment_json(ref::kSigma3m, opt.seed, threads));
        matched = true;
    }
    for (const auto& exp : ref::kHurstExperiments) {
        if (which == "all" || which == exp.name) {
            experiments.push_back(hurst_experiment_json(exp, opt.seed, threads));
            matched = true;
        }
    }
    if (!matched)
        throw ValidationError(
            "--experiment must be one of: all, table, sigma-1m, sigma-3m, "
            "hurst-055, hurst-070, hurst-080");

    bool all_pass = true;
    for (const auto& e : experiments) {
        if (!e.at("pass").get<bool>()) all_pass = false;
        if (e.contains("wing_gap_pass") && !e.at("wing_gap_pass").get<bool>())
            all_pass = false;
    }

    nlohmann::json summary;
    summary["seed"] = opt.seed;
    summary["experiments"] = experiments;
    summary["all_pass"] = all_pass;
    {
        std::ofstream fout(out, std::ios::binary);
        if (!fout) throw ValidationError("cannot open " + out + " for writing");
        fout << summary.dump(2) << '\n';
    }
    manifest.output(out);
    manifest.finish(out);
    std::cout << "reproduce: " << (all_pass ? "all targets reproduced" : "TARGETS MISSED")
              << " -> " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extreme-strike asymptotics toolkit for Gaussian stochastic "
                 "volatility models"};
    app.set_version_flag("--version", std::string("gaussvol ") + kVersion);
    app.require_subcommand(1);
    app.fallthrough(true);

    Options opt;
    app.add_option("--seed", opt.seed, "Random seed (default 42)");
    app.add_option("--threads", opt.threads,
                   "Worker threads (default: GAUSSVOL_THREADS or 1)");
    app.add_option("--out", opt.out, "Output path (subcommand-specific default)");

    CLI::App* spectrum = app.add_subcommand(
        "spectrum", "Eigen-decomposition of the model's covariance operator");
    spectrum->add_option("--model", opt.model_path, "Model spec JSON")->required();
    spectrum->add_option("--modes", opt.modes, "Modes to retain (0 = automatic)");
    spectrum->add_option("--grids", opt.grids, "Quadrature grid sizes, e.g. 512,1024");

    CLI::App* chaos = app.add_subcommand(
        "chaos", "Tail-asymptotic constants or samples of the integrated variance");
    chaos->add_option("--spectrum", opt.spectrum_path, "Spectrum JSON")->required();
    chaos->add_option("--sample", opt.sample_count,
                      "Write this many integrated-variance samples instead of constants");

    CLI::App* smile = app.add_subcommand(
        "smile", "Asymptotic implied-volatility wing curve from chaos constants");
    smile->add_option("--chaos", opt.chaos_path, "Chaos constants JSON")->required();
    smile->add_option("--direction", opt.direction, "Wing: 'small' or 'large'");
    smile->add_option("--k-grid", opt.k_grid_spec, "Log-moneyness grid lo:hi:step");

    CLI::App* price = app.add_subcommand("price", "Monte Carlo option pricer");
    price->add_option("--model", opt.model_path, "Model spec JSON")->required();
    price->add_option("--scheme", opt.scheme, "'euler' or 'mixture'");
    price->add_option("--strikes-file", opt.strikes_file, "CSV of strikes (or k values)")
        ->required();
    price->add_option("--spectrum", opt.spectrum_path,
                      "Precomputed spectrum JSON (mixture scheme)");
    price->add_option("--paths", opt.paths, "Monte Carlo paths");
    price->add_option("--steps", opt.steps, "Time steps per path");
    price->add_flag("--antithetic", opt.antithetic, "Antithetic price driver");
    price->add_option("--modes", opt.modes, "Spectrum modes (0 = automatic)");
    price->add_option("--grids", opt.grids, "Spectrum quadrature grids");

    CLI::App* calibrate = app.add_subcommand(
        "calibrate", "Wing-fit calibration of sigma (Stein-Stein) or H (fOU)");
    calibrate->add_option("--slice", opt.slice_path, "Slice CSV: k,iv or strike,price")
        ->required();
    calibrate->add_option("--window", opt.window_spec,
                          "Fit window lo:hi (default: automatic)");
    calibrate->add_option("--mode", opt.mode, "'stein-stein' or 'fou'");
    calibrate->add_option("--q", opt.q, "Mean-reversion rate (known a priori)");
    calibrate->add_option("--sigma", opt.sigma, "Vol-vol (fou table construction)");
    calibrate->add_option("--table", opt.table_path, "Prebuilt lambda1-vs-H table JSON");
    calibrate->add_option("--T", opt.T, "Slice maturity in years")->required();
    calibrate->add_option("--s0", opt.s0, "Spot (default 1)");
    calibrate->add_option("--r", opt.r, "Rate (default 0)");
    calibrate->add_option("--sigma0-mode", opt.sigma0_mode,
                          "'stationary' or 'deterministic' start");
    auto* refL = calibrate->add_option("--ref-L", opt.ref_L,
                                       "Reference L for the wing-gap diagnostic");
    auto* refM = calibrate->add_option("--ref-M", opt.ref_M,
                                       "Reference M for the wing-gap diagnostic");

    CLI::App* table = app.add_subcommand(
        "table", "lambda1-vs-H lookup table for stationary fOU volatility");
    table->add_option("--q", opt.q, "Mean-reversion rate")->required();
    table->add_option("--sigma", opt.sigma, "Vol-vol")->required();
    table->add_option("--T", opt.T, "Maturity in years")->required();
    table->add_option("--h-grid", opt.h_grid_spec, "H grid lo:hi:step");

    CLI::App* reproduce = app.add_subcommand(
        "reproduce", "Re-run the reference experiments and compare to frozen targets");
    reproduce->add_option("--experiment", opt.experiment,
                          "all | table | sigma-1m | sigma-3m | hurst-055 | hurst-070 | "
                          "hurst-080");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        opt.have_ref_L = refL->count() > 0;
        opt.have_ref_M = refM->count() > 0;
        if (spectrum->parsed()) return cmd_spectrum(opt, argc, argv);
        if (chaos->parsed()) return cmd_chaos(opt, argc, argv);
        if (smile->parsed()) return cmd_smile(opt, argc, argv);
        if (price->parsed()) return cmd_price(opt, argc, argv);
        if (calibrate->parsed()) return cmd_calibrate(opt, argc, argv);
        if (table->parsed()) return cmd_table(opt, argc, argv);
        if (reproduce->parsed()) return cmd_reproduce(opt, argc, argv);
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const gaussvol::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const gaussvol::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
