#include "gaussvol/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gaussvol/errors.hpp"

namespace gaussvol {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(path + ": invalid JSON: " + std::string(e.what()));
    }
    return j;
}

void dump_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw ValidationError("write failed: " + path);
}

[[noreturn]] void bad_document(const std::string& path, const std::exception& e) {
    throw ValidationError(path + ": malformed document: " + std::string(e.what()));
}

// ---------------- model <-> json ----------------

json mean_to_json(const MeanFunction& mean) {
    json j;
    if (const auto* c = std::get_if<ConstantMean>(&mean.value)) {
        j["variant"] = "constant";
        j["level"] = c->level;
    } else if (const auto* o = std::get_if<OuRelaxationMean>(&mean.value)) {
        j["variant"] = "ou_relaxation";
        j["m0"] = o->m0;
        j["m"] = o->m;
        j["q"] = o->q;
    } else {
        const auto& t = std::get<TabulatedMean>(mean.value);
        j["variant"] = "tabulated";
        j["grid"] = t.grid;
        j["values"] = t.values;
    }
    return j;
}

MeanFunction mean_from_json(const json& j) {
    const std::string variant = j.at("variant").get<std::string>();
    MeanFunction mean;
    if (variant == "constant") {
        mean.value = ConstantMean{j.at("level").get<double>()};
    } else if (variant == "ou_relaxation") {
        mean.value = OuRelaxationMean{j.at("m0").get<double>(), j.at("m").get<double>(),
                                      j.at("q").get<double>()};
    } else if (variant == "tabulated") {
        TabulatedMean t;
        t.grid = j.at("grid").get<std::vector<double>>();
        t.values = j.at("values").get<std::vector<double>>();
        mean.value = std::move(t);
    } else {
        throw ValidationError("unknown mean variant: " + variant);
    }
    return mean;
}

json kernel_to_json(const CovarianceKernel& kernel) {
    json j;
    j["variant"] = kernel.variant_name();
    if (const auto* bm = std::get_if<BrownianMotionKernel>(&kernel.value)) {
        j["scale"] = bm->scale;
    } else if (const auto* bb = std::get_if<BrownianBridgeKernel>(&kernel.value)) {
        j["scale"] = bb->scale;
    } else if (const auto* od = std::get_if<OuDeterministicStartKernel>(&kernel.value)) {
        j["q"] = od->q;
        j["sigma"] = od->sigma;
    } else if (const auto* orr = std::get_if<OuRandomStartKernel>(&kernel.value)) {
        j["q"] = orr->q;
        j["sigma"] = orr->sigma;
        j["sigma0"] = orr->sigma0;
    } else if (const auto* os = std::get_if<OuStationaryKernel>(&kernel.value)) {
        j["q"] = os->q;
        j["sigma"] = os->sigma;
    } else if (const auto* fo = std::get_if<FouStationaryKernel>(&kernel.value)) {
        j["q"] = fo->q;
        j["sigma"] = fo->sigma;
        j["H"] = fo->H;
    } else {
        const auto& t = std::get<TabulatedKernel>(kernel.value);
        j["grid"] = t.grid;
        j["matrix"] = t.matrix;
    }
    return j;
}

CovarianceKernel kernel_from_json(const json& j) {
    const std::string variant = j.at("variant").get<std::string>();
    CovarianceKernel kernel;
    if (variant == "brownian_motion") {
        kernel.value = BrownianMotionKernel{j.at("scale").get<double>()};
    } else if (variant == "brownian_bridge") {
        kernel.value = BrownianBridgeKernel{j.at("scale").get<double>()};
    } else if (variant == "ou_deterministic_start") {
        kernel.value =
            OuDeterministicStartKernel{j.at("q").get<double>(), j.at("sigma").get<double>()};
    } else if (variant == "ou_random_start") {
        kernel.value = OuRandomStartKernel{j.at("q").get<double>(), j.at("sigma").get<double>(),
                                           j.at("sigma0").get<double>()};
    } else if (variant == "ou_stationary") {
        kernel.value =
            OuStationaryKernel{j.at("q").get<double>(), j.at("sigma").get<double>()};
    } else if (variant == "fou_stationary") {
        kernel.value = FouStationaryKernel{j.at("q").get<double>(), j.at("sigma").get<double>(),
                                           j.at("H").get<double>()};
    } else if (variant == "tabulated") {
        TabulatedKernel t;
        t.grid = j.at("grid").get<std::vector<double>>();
        t.matrix = j.at("matrix").get<std::vector<std::vector<double>>>();
        kernel.value = std::move(t);
    } else {
        throw ValidationError("unknown kernel variant: " + variant);
    }
    return kernel;
}

// ---------------- CSV plumbing ----------------

// RFC-4180-style parse: quoted fields with "" escapes, CRLF or LF rows;
// fully empty rows are skipped.
std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        any = false;
    };
    auto end_row = [&] {
        end_field();
        const bool empty_row =
            row.size() == 1 && row[0].find_first_not_of(" \t") == std::string::npos;
        if (!empty_row) rows.push_back(row);
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !any && field.empty()) {
            quoted = true;
            any = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_row();
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw ValidationError(path + ": unterminated quoted CSV field");
    if (!field.empty() && field.back() == '\r') field.pop_back();
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

std::vector<std::vector<std::string>> read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path);
}

std::string lower_trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) return "";
    std::string out = s.substr(a, b - a + 1);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

double parse_number(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        while (used < s.size() && (s[used] == ' ' || s[used] == '\t')) ++used;
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError(path + ": line " + std::to_string(line) +
                              ": not a number: '" + s + "'");
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace

// ---------------- model files ----------------

ModelSpec read_model(const std::string& path) {
    const json j = load_json(path);
    try {
        ModelSpec spec;
        spec.T = j.at("T").get<double>();
        spec.s0 = j.at("s0").get<double>();
        spec.r = j.at("r").get<double>();
        spec.mean = mean_from_json(j.at("mean"));
        spec.kernel = kernel_from_json(j.at("kernel"));
        validate(spec);
        return spec;
    } catch (const json::exception& e) {
        bad_document(path, e);
    }
}

void write_model(const ModelSpec& spec, const std::string& path) {
    json j;
    j["T"] = spec.T;
    j["s0"] = spec.s0;
    j["r"] = spec.r;
    j["mean"] = mean_to_json(spec.mean);
    j["kernel"] = kernel_to_json(spec.kernel);
    dump_json(j, path);
}

// ---------------- spectrum files ----------------

void write_spectrum(const Spectrum& spec, const SpectrumMeta& meta,
                    const std::string& path) {
    json j;
    j["T"] = spec.T;
    j["eigenvalues"] = spec.eigenvalues;
    j["delta_coeffs"] = spec.delta_coeffs;
    j["multiplicities"] = spec.multiplicities;
    j["distinct_values"] = spec.distinct_values;
    j["s"] = spec.s;
    j["tau"] = spec.tau;
    j["trace"] = spec.trace;
    j["truncation_count"] = spec.truncation_count;
    j["grid"] = spec.grid;
    j["eigenfunctions"] = spec.efuns;
    if (!spec.ou_modes.empty()) {
        json modes = json::array();
        for (const Spectrum::OuMode& m : spec.ou_modes)
            modes.push_back({{"w", m.w}, {"K", m.K}, {"a", m.a}, {"b", m.b}});
        j["ou_modes"] = modes;
    }
    json md;
    md["model_fingerprint"] = meta.model_fingerprint;
    md["grid_sizes"] = meta.grid_sizes;
    md["method"] = meta.method;
    j["metadata"] = md;
    dump_json(j, path);
}

Spectrum read_spectrum(const std::string& path) {
    const json j = load_json(path);
    try {
        Spectrum spec;
        spec.T = j.at("T").get<double>();
        spec.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        spec.delta_coeffs = j.at("delta_coeffs").get<std::vector<double>>();
        spec.multiplicities = j.at("multiplicities").get<std::vector<int>>();
        spec.distinct_values = j.at("distinct_values").get<std::vector<double>>();
        spec.s = j.at("s").get<double>();
        spec.tau = j.at("tau").get<double>();
        spec.trace = j.at("trace").get<double>();
        spec.truncation_count = j.at("truncation_count").get<int>();
        spec.grid = j.at("grid").get<std::vector<double>>();
        spec.efuns = j.at("eigenfunctions").get<std::vector<std::vector<double>>>();
        if (j.contains("ou_modes")) {
            for (const json& m : j.at("ou_modes"))
                spec.ou_modes.push_back({m.at("w").get<double>(), m.at("K").get<double>(),
                                         m.at("a").get<double>(), m.at("b").get<double>()});
        }
        return spec;
    } catch (const json::exception& e) {
        bad_document(path, e);
    }
}

// ---------------- chaos files ----------------

void write_chaos(const ChaosConstants& constants, const std::string& path) {
    json j;
    j["lambda1"] = constants.lambda1;
    j["n1"] = constants.n1;
    j["delta"] = constants.delta;
    j["A"] = constants.A;
    j["C"] = constants.C;
    j["tau"] = constants.tau;
    j["s"] = constants.s;
    j["B_tilde"] = constants.B_tilde;
    j["C_tilde"] = constants.C_tilde;
    j["centered"] = constants.centered;
    j["T"] = constants.T;
    j["sum_delta_top"] = constants.sum_delta_top;
    j["mean_gamma"] = constants.mean_gamma;
    dump_json(j, path);
}

ChaosConstants read_chaos(const std::string& path) {
    const json j = load_json(path);
    try {
        ChaosConstants c;
        c.lambda1 = j.at("lambda1").get<double>();
        c.n1 = j.at("n1").get<int>();
        c.delta = j.at("delta").get<double>();
        c.A = j.at("A").get<double>();
        c.C = j.at("C").get<double>();
        c.tau = j.at("tau").get<double>();
        c.s = j.at("s").get<double>();
        c.B_tilde = j.at("B_tilde").get<double>();
        c.C_tilde = j.at("C_tilde").get<double>();
        c.centered = j.at("centered").get<bool>();
        c.T = j.at("T").get<double>();
        c.sum_delta_top = j.at("sum_delta_top").get<double>();
        c.mean_gamma = j.at("mean_gamma").get<double>();
        return c;
    } catch (const json::exception& e) {
        bad_document(path, e);
    }
}

// ---------------- calibration files ----------------

void write_hurst_table(const HurstTable& table, const std::string& path) {
    json j;
    j["q"] = table.q;
    j["sigma"] = table.sigma;
    j["T"] = table.T;
    json rows = json::array();
    for (const HurstRow& row : table.rows)
        rows.push_back({{"H", row.H}, {"lambda1", row.lambda1}});
    j["rows"] = rows;
    dump_json(j, path);
}

HurstTable read_hurst_table(const std::string& path) {
    const json j = load_json(path);
    try {
        HurstTable table;
        table.q = j.at("q").get<double>();
        table.sigma = j.at("sigma").get<double>();
        table.T = j.at("T").get<double>();
        for (const json& row : j.at("rows"))
            table.rows.push_back({row.at("H").get<double>(), row.at("lambda1").get<double>()});
        return table;
    } catch (const json::exception& e) {
        bad_document(path, e);
    }
}

void write_calibration_report(const CalibrationReport& report, const std::string& path) {
    json j;
    j["fit"] = {{"L", report.fit.L},
                {"M", report.fit.M},
                {"residual", report.fit.residual},
                {"degenerate", report.fit.degenerate},
                {"points_used", report.fit.points_used}};
    j["window"] = {{"k_lo", report.window.k_lo}, {"k_hi", report.window.k_hi}};
    j["lambda1"] = report.lambda1;
    j["delta1"] = report.delta1;
    j["method"] = report.method;
    j["recovered"] = report.recovered;
    j["bias"] = {{"values", report.bias_values},
                 {"min", report.bias_min},
                 {"max", report.bias_max}};
    j["warnings"] = report.warnings;
    dump_json(j, path);
}

CalibrationReport read_calibration_report(const std::string& path) {
    const json j = load_json(path);
    try {
        CalibrationReport r;
        const json& fit = j.at("fit");
        r.fit.L = fit.at("L").get<double>();
        r.fit.M = fit.at("M").get<double>();
        r.fit.residual = fit.at("residual").get<double>();
        r.fit.degenerate = fit.at("degenerate").get<bool>();
        r.fit.points_used = fit.at("points_used").get<int>();
        r.window.k_lo = j.at("window").at("k_lo").get<double>();
        r.window.k_hi = j.at("window").at("k_hi").get<double>();
        r.lambda1 = j.at("lambda1").get<double>();
        r.delta1 = j.at("delta1").get<double>();
        r.method = j.at("method").get<std::string>();
        r.recovered = j.at("recovered").get<double>();
        r.bias_values = j.at("bias").at("values").get<std::vector<double>>();
        r.bias_min = j.at("bias").at("min").get<double>();
        r.bias_max = j.at("bias").at("max").get<double>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        bad_document(path, e);
    }
}

// ---------------- CSV files ----------------

std::vector<double> read_strikes(const std::string& path, double forward) {
    const auto rows = read_csv_file(path);
    if (rows.empty()) throw ValidationError(path + ": empty strikes file");
    std::vector<double> strikes;
    std::size_t start = 0;
    bool log_moneyness = false;
    const std::string head = lower_trim(rows[0].at(0));
    if (head == "strike" || head == "k") {
        log_moneyness = (head == "k");
        start = 1;
    }
    for (std::size_t i = start; i < rows.size(); ++i) {
        if (rows[i].size() != 1)
            throw ValidationError(path + ": strikes file must have exactly one column");
        const double v = parse_number(rows[i][0], path, i + 1);
        strikes.push_back(log_moneyness ? forward * std::exp(v) : v);
    }
    if (strikes.empty()) throw ValidationError(path + ": no strikes found");
    return strikes;
}

IvSlice read_iv_slice(const std::string& path, double T, double s0, double r) {
    const auto rows = read_csv_file(path);
    if (rows.size() < 2)
        throw ValidationError(path + ": slice needs a header row and data rows");
    if (rows[0].size() < 2)
        throw ValidationError(path + ": slice needs two columns");
    const std::string c0 = lower_trim(rows[0][0]);
    const std::string c1 = lower_trim(rows[0][1]);

    IvSlice slice;
    slice.T = T;
    slice.s0 = s0;
    slice.r = r;
    const double forward = s0 * std::exp(r * T);
    std::size_t dropped = 0;

    if (c0 == "k" && c1 == "iv") {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            IvPoint p;
            p.k = parse_number(rows[i].at(0), path, i + 1);
            p.iv = parse_number(rows[i].at(1), path, i + 1);
            slice.points.push_back(p);
        }
        slice.source = path;
    } else if (c0 == "strike" && c1 == "price") {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double strike = parse_number(rows[i].at(0), path, i + 1);
            const double price = parse_number(rows[i].at(1), path, i + 1);
            if (!(strike > 0.0))
                throw ValidationError(path + ": line " + std::to_string(i + 1) +
                                      ": strike must be positive");
            try {
                IvPoint p;
                p.iv = bs_implied_vol(price, s0, strike, T, r);
                p.k = std::log(strike / forward);
                slice.points.push_back(p);
            } catch (const ValidationError&) {
                ++dropped;  // price outside the no-arbitrage band: no IV exists
            }
        }
        slice.source = path + " (call prices; " + std::to_string(dropped) +
                       " dropped in IV inversion)";
    } else {
        throw ValidationError(path + ": slice header must be `k,iv` or `strike,price`");
    }
    if (slice.points.empty()) throw ValidationError(path + ": no usable slice points");
    return slice;
}

void write_iv_slice(const IvSlice& slice, const std::string& path) {
    std::string text = "k,iv\n";
    for (const IvPoint& p : slice.points)
        text += format_double(p.k) + "," + format_double(p.iv) + "\n";
    write_text(text, path);
}

void write_priced_points(const std::vector<PricedPoint>& points, const std::string& path) {
    std::string text = "k,strike,price,std_err,iv\n";
    for (const PricedPoint& p : points) {
        text += format_double(p.k) + "," + format_double(p.strike) + "," +
                format_double(p.price) + "," + format_double(p.std_err) + ",";
        if (p.iv) text += format_double(*p.iv);
        text += "\n";
    }
    write_text(text, path);
}

std::vector<PricedPoint> read_priced_points(const std::string& path) {
    const auto rows = read_csv_file(path);
    if (rows.empty() || rows[0].size() != 5 || lower_trim(rows[0][0]) != "k" ||
        lower_trim(rows[0][1]) != "strike" || lower_trim(rows[0][2]) != "price" ||
        lower_trim(rows[0][3]) != "std_err" || lower_trim(rows[0][4]) != "iv")
        throw ValidationError(path + ": expected header k,strike,price,std_err,iv");
    std::vector<PricedPoint> points;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 5)
            throw ValidationError(path + ": line " + std::to_string(i + 1) +
                                  ": expected 5 columns");
        PricedPoint p;
        p.k = parse_number(rows[i][0], path, i + 1);
        p.strike = parse_number(rows[i][1], path, i + 1);
        p.price = parse_number(rows[i][2], path, i + 1);
        p.std_err = parse_number(rows[i][3], path, i + 1);
        if (!lower_trim(rows[i][4]).empty())
            p.iv = parse_number(rows[i][4], path, i + 1);
        points.push_back(p);
    }
    return points;
}

void write_smile_curve(const std::vector<double>& k, const std::vector<double>& iv,
                       const std::string& path) {
    if (k.size() != iv.size())
        throw ValidationError("smile curve: k and iv lengths differ");
    std::string text = "k,iv_asymptotic\n";
    for (std::size_t i = 0; i < k.size(); ++i)
        text += format_double(k[i]) + "," + format_double(iv[i]) + "\n";
    write_text(text, path);
}

// ---------------- binary samples ----------------

void write_samples(const std::vector<double>& samples, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    for (double v : samples) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof(bits));
        unsigned char bytes[8];
        for (int b = 0; b < 8; ++b)
            bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFFu);
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
    if (!out) throw ValidationError("write failed: " + path);
}

std::vector<double> read_samples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::vector<double> samples;
    unsigned char bytes[8];
    while (in.read(reinterpret_cast<char*>(bytes), 8)) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        double v = 0.0;
        std::memcpy(&v, &bits, sizeof(v));
        samples.push_back(v);
    }
    if (in.gcount() != 0)
        throw ValidationError(path + ": trailing bytes are not a whole float64");
    return samples;
}

// ---------------- run manifests ----------------

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::uint64_t h = 14695981039346656037ull;  // FNV-1a offset basis
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;  // FNV prime
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void write_manifest(const RunManifest& manifest, const std::string& out_path) {
    json j;
    j["subcommand"] = manifest.subcommand;
    j["tool_version"] = manifest.tool_version;
    j["argv"] = manifest.argv;
    if (manifest.seed)
        j["seed"] = *manifest.seed;
    else
        j["seed"] = nullptr;
    j["threads"] = manifest.threads;
    json inputs = json::array();
    for (const ManifestFile& f : manifest.inputs)
        inputs.push_back({{"path", f.path}, {"fnv1a64", f.fnv1a64}});
    j["inputs"] = inputs;
    json outputs = json::array();
    for (const ManifestFile& f : manifest.outputs)
        outputs.push_back({{"path", f.path}, {"fnv1a64", f.fnv1a64}});
    j["outputs"] = outputs;
    j["wall_clock_seconds"] = manifest.wall_clock_seconds;
    j["created_utc"] = manifest.created_utc;
    dump_json(j, out_path + ".manifest.json");
}

}  // namespace gaussvol
