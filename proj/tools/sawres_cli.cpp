#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sawres/sawres.hpp"

namespace fs = std::filesystem;
using namespace sawres;

namespace
{

constexpr std::uint64_t kDefaultSeed = 1;

enum ExitCode
{
    kOk = 0,
    kFailure = 1,
    kIo = 2,
    kNotConverged = 3,
};

struct GlobalOptions
{
    std::string material_path;
    std::uint64_t seed = kDefaultSeed;
    std::string out;
    std::string format = "json";
    bool verbose = false;
};

MaterialParams material(const GlobalOptions &g)
{
    return g.material_path.empty() ? MaterialParams{} : load_material(g.material_path);
}

void emit(const GlobalOptions &g, const std::string &text)
{
    if (g.out.empty())
    {
        std::cout << text;
        return;
    }
    std::ofstream out(g.out, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + g.out + "'");
    out << text;
    if (!out)
        throw IoError("write failed for '" + g.out + "'");
}

void write_file(const fs::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << text;
}

/// Explicit --plot path, else next to --out, else in the working directory.
fs::path plot_path(const GlobalOptions &g, const std::string &explicit_path, const std::string &kind)
{
    if (!explicit_path.empty())
        return explicit_path;
    if (!g.out.empty())
    {
        fs::path p(g.out);
        return p.parent_path() / (p.stem().string() + "_plot.csv");
    }
    return "sawres_" + kind + "_plot.csv";
}

DeviceTable device_table(const std::string &path)
{
    return path.empty() ? load_bundled_device_table() : load_device_table(path);
}

std::vector<std::string> split_names(const std::string &list)
{
    std::vector<std::string> names;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            names.push_back(item);
    return names;
}

// ---------------------------------------------------------------------------

struct DesignArgs
{
    std::string geometry;
    std::string window = "narrowest";
    double band_lo = 0.0;
    double band_hi = 0.0;
    bool quiet = false;
};

int cmd_design(const GlobalOptions &g, const DesignArgs &a)
{
    const DeviceGeometry geom = load_geometry(a.geometry);
    const MaterialParams mat = material(g);
    ModeWindow window;
    if (a.window == "first-stopband")
        window.kind = WindowKind::first_stopband;
    else if (a.window == "idt")
        window.kind = WindowKind::idt_bandwidth;
    else if (a.window == "explicit")
        window = ModeWindow::explicit_range(a.band_lo, a.band_hi);

    DesignReport rep;
    rep.name = fs::path(a.geometry).stem().string();
    rep.derived = derive_params(geom, mat);
    rep.window = resolve_window(rep.derived, window);
    rep.modes = mode_frequencies(rep.derived, window);
    emit(g, write_report(rep, parse_report_format(g.format)));

    if (!a.quiet)
    {
        const DerivedParams &d = rep.derived;
        std::fprintf(stderr,
                     "%-14s %s\n%-14s %.6g GHz\n%-14s %.6g um\n%-14s %.6g mm\n%-14s %.6g MHz\n%-14s %.6g MHz\n"
                     "%-14s %.6g MHz\n%-14s %.6g\n%-14s %.8f\n%-14s %zu in [%.6g, %.6g] GHz\n",
                     "device", rep.name.c_str(), "f0", d.f0 / 1e9, "Lp", d.lp * 1e6, "Lc", d.lc * 1e3, "FSR",
                     d.fsr / 1e6, "df_1SB", d.df_1sb / 1e6, "df_IDT", d.df_idt / 1e6, "Qg", d.qg, "R", d.r, "modes",
                     rep.modes.size(), rep.window.lo / 1e9, rep.window.hi / 1e9);
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs
{
    std::string device;
    std::string table;
    int comb = 1;
    std::vector<std::string> modes; // "f0,qi,qe"
    double span_linewidths = 10.0;
    double f_lo = 0.0;
    double f_hi = 0.0;
    int points = 2001;
    double noise = 0.0;
    double amp0 = 1.0;
    double amp_slope = 0.0;
    double phase0 = 0.0;
    double delay = 0.0;
    double power_dbm = 0.0;
    double attenuation_db = 0.0;
};

ModeParams parse_mode(const std::string &text)
{
    ModeParams m;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &m.f0, &m.qi, &m.qe, &tail) != 3)
        throw ValidationError("mode", "expected F0,QI,QE, got '" + text + "'");
    m.validate();
    return m;
}

int cmd_synth(const GlobalOptions &g, const SynthArgs &a)
{
    std::vector<ModeParams> modes;
    for (const auto &m : a.modes)
        modes.push_back(parse_mode(m));
    if (!a.device.empty())
    {
        const DeviceRecord &rec = device_table(a.table).at(a.device);
        const double fsr = derive_params(rec.geometry, material(g)).fsr;
        for (int k = 0; k < a.comb; ++k)
            modes.push_back({rec.f0_meas + (k - 0.5 * (a.comb - 1)) * fsr, rec.qi_meas, rec.qe_meas});
    }
    if (modes.empty())
        throw ValidationError("mode", "give --device or at least one --mode");

    double lo = a.f_lo;
    double hi = a.f_hi;
    if (!(hi > lo))
    {
        lo = HUGE_VAL;
        hi = -HUGE_VAL;
        for (const auto &m : modes)
        {
            lo = std::min(lo, m.f0 - a.span_linewidths * m.linewidth());
            hi = std::max(hi, m.f0 + a.span_linewidths * m.linewidth());
        }
    }

    const BackgroundModel bg{a.amp0, a.amp_slope, a.phase0, a.delay, 0.5 * (lo + hi)};
    ComplexTrace trace = synth_trace(modes, bg, linear_grid(lo, hi, a.points), a.noise, g.seed);
    trace.meta.power_dbm = a.power_dbm;
    trace.meta.attenuation_db = a.attenuation_db;
    trace.meta.temperature = material(g).temperature;

    if (g.out.empty())
        write_trace(std::cout, trace, TraceFormat::csv);
    else
        write_trace(g.out, trace, trace_format_for(g.out));
    if (g.verbose)
        std::fprintf(stderr, "synth: %zu mode(s), %d points, seed %llu\n", modes.size(), a.points,
                     static_cast<unsigned long long>(g.seed));
    return kOk;
}

// ---------------------------------------------------------------------------

FitConfig fit_config(int max_iter, double window)
{
    FitConfig c;
    c.max_iter = max_iter;
    c.window_linewidths = window;
    return c;
}

struct FitArgs
{
    std::string trace;
    int bootstrap = 0;
    int max_iter = 200;
    double window = 10.0;
    std::string plot;
};

int cmd_fit(const GlobalOptions &g, const FitArgs &a)
{
    const ComplexTrace trace = read_trace(a.trace);
    const FitConfig config = fit_config(a.max_iter, a.window);
    FitResult fit = fit_resonance(trace, config);
    const ReportFormat format = parse_report_format(g.format);

    std::string report;
    if (a.bootstrap > 0)
    {
        const BootstrapErrors bs = bootstrap_errors(trace, fit, a.bootstrap, g.seed, config);
        fit.sigma.f0 = bs.f0;
        fit.sigma.qi = bs.qi;
        fit.sigma.qe = bs.qe;
        const std::vector<FitResult> one{fit};
        report = write_report(one, format);
        const std::string method =
            "bootstrap replicates=" + std::to_string(bs.replicates) + " seed=" + std::to_string(g.seed);
        if (format == ReportFormat::json)
        {
            auto doc = nlohmann::ordered_json::parse(report);
            doc["sigma_method"] = method;
            report = doc.dump(2) + "\n";
        }
        else
        {
            const auto eol = report.find('\n');
            report.insert(eol + 1, "# sigma_method " + method + "\n");
        }
    }
    else
    {
        const std::vector<FitResult> one{fit};
        report = write_report(one, format);
    }
    emit(g, report);

    if (!a.plot.empty())
    {
        const FitVector p = to_fit_vector(fit.mode, fit.bg);
        std::vector<PlotPoint> pts;
        for (Eigen::Index i = 0; i < trace.size(); ++i)
            pts.push_back({trace.freqs[i], std::abs(trace.s11[i]),
                           std::abs(resonator_model(trace.freqs[i], p, fit.bg.f_ref))});
        write_file(a.plot, write_plot_csv(pts, "freq_hz", "abs_s11"));
    }
    if (g.verbose)
        std::fprintf(stderr, "fit: %d iterations, gradient cosine %.2e\n", fit.n_iter, fit.gradient_cosine);
    if (!fit.converged)
    {
        std::fprintf(stderr, "{\"error\":\"not_converged\",\"message\":\"fit did not converge\"}\n");
        return kNotConverged;
    }
    return kOk;
}

int cmd_fit_multimode(const GlobalOptions &g, const FitArgs &a)
{
    const ComplexTrace trace = read_trace(a.trace);
    const std::vector<FitResult> fits = fit_multimode(trace, fit_config(a.max_iter, a.window));
    emit(g, write_report(fits, parse_report_format(g.format)));
    std::size_t failed = 0;
    std::size_t overlapping = 0;
    for (const auto &f : fits)
    {
        failed += !f.converged;
        overlapping += f.window_overlap;
    }
    if (overlapping)
        std::fprintf(stderr, "warning: %zu fit window(s) overlap a neighbouring mode\n", overlapping);
    if (g.verbose)
        std::fprintf(stderr, "fit-multimode: %zu dips\n", fits.size());
    if (failed)
    {
        std::fprintf(stderr, "{\"error\":\"not_converged\",\"message\":\"%zu of %zu fits did not converge\"}\n", failed,
                     fits.size());
        return kNotConverged;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct ExtractArgs
{
    std::string table;
    std::string devices;
    std::string plot;
    int plot_points = 200;

    // tls
    std::string data;
    double attenuation_db = 67.0;
    double f0 = 4.449e9;
    std::optional<double> n0_gamma2;
    std::optional<double> p_c_dbm;
    std::optional<double> q_rl;
    std::string convention = "per-length";
};

std::vector<const DeviceRecord *> pick(const DeviceTable &table, const std::string &list,
                                       const std::vector<std::string> &fallback)
{
    std::vector<const DeviceRecord *> out;
    for (const auto &name : list.empty() ? fallback : split_names(list))
        out.push_back(&table.at(name));
    return out;
}

int cmd_extract_rs_alpha(const GlobalOptions &g, const ExtractArgs &a)
{
    const DeviceTable table = device_table(a.table);
    std::vector<std::string> r_series;
    for (const auto &rec : table.records)
        if (!rec.name.empty() && rec.name[0] == 'r')
            r_series.push_back(rec.name);
    const auto devices = pick(table, a.devices, r_series);
    if (devices.empty())
        throw ValidationError("devices", "no devices selected");

    const MaterialParams mat = material(g);
    std::vector<RsAlphaSample> data;
    for (const auto *rec : devices)
        data.push_back({rec->geometry.mirror_separation(), rec->f0_meas, rec->qi_meas});
    const DeviceGeometry &tmpl = devices.front()->geometry;
    const RsAlphaFit fit = fit_rs_alpha(data, tmpl, mat);
    emit(g, write_report(fit, parse_report_format(g.format)));

    // Measured points with the model at each device, then a smooth curve.
    double f_mean = 0.0;
    double d_max = 0.0;
    for (const auto &s : data)
    {
        f_mean += s.f0_meas / static_cast<double>(data.size());
        d_max = std::max(d_max, s.d);
    }
    std::vector<PlotPoint> pts;
    for (const auto &s : data)
        pts.push_back({s.d, s.qi_meas, model_qi(tmpl, mat, s.d, s.f0_meas, fit.rs_mag, fit.alpha_p)});
    for (int i = 0; i < a.plot_points; ++i)
    {
        const double d = 1.2 * d_max * (i + 1) / a.plot_points;
        pts.push_back({d, std::nan(""), model_qi(tmpl, mat, d, f_mean, fit.rs_mag, fit.alpha_p)});
    }
    const fs::path plot = plot_path(g, a.plot, "rs_alpha");
    write_file(plot, write_plot_csv(pts, "d_m", "qi"));
    if (g.verbose)
        std::fprintf(stderr, "extract rs-alpha: %zu devices, plot %s\n", data.size(), plot.string().c_str());
    return fit.converged ? kOk : kNotConverged;
}

int cmd_extract_powerlaw(const GlobalOptions &g, const ExtractArgs &a)
{
    const DeviceTable table = device_table(a.table);
    const auto devices = pick(table, a.devices, {"q1", "q2", "q3", "q4", "q5", "q6", "q7", "r6"});
    std::vector<PowerLawSample> data;
    for (const auto *rec : devices)
        data.push_back({rec->f0_meas, rec->qi_meas});
    const PowerLaw fit = fit_powerlaw(data);
    emit(g, write_report(fit, parse_report_format(g.format)));

    double f_lo = HUGE_VAL;
    double f_hi = 0.0;
    std::vector<PlotPoint> pts;
    for (const auto &s : data)
    {
        pts.push_back({s.f0 / 1e9, s.qi, fit(s.f0)});
        f_lo = std::min(f_lo, s.f0);
        f_hi = std::max(f_hi, s.f0);
    }
    for (int i = 0; i < a.plot_points; ++i)
    {
        const double f = 0.8 * f_lo * std::pow(1.25 * f_hi / (0.8 * f_lo), i / (a.plot_points - 1.0));
        pts.push_back({f / 1e9, std::nan(""), fit(f)});
    }
    const fs::path plot = plot_path(g, a.plot, "powerlaw");
    write_file(plot, write_plot_csv(pts, "f_ghz", "qi"));
    return kOk;
}

/// Two-column CSV `p_dbm,qi` with `#` comments.
std::vector<TlsSample> read_tls_data(const std::string &path)
{
    std::istringstream in(read_text_file(path));
    std::vector<TlsSample> out;
    std::string line;
    std::size_t n = 0;
    bool header = false;
    while (std::getline(in, line))
    {
        ++n;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        if (!header)
        {
            if (line != "p_dbm,qi")
                throw ParseError(n, "expected header 'p_dbm,qi'");
            header = true;
            continue;
        }
        TlsSample s;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf%c", &s.p_dbm_at_instrument, &s.qi_meas, &tail) != 2)
            throw ParseError(n, "expected 2 numeric fields");
        if (!std::isfinite(s.p_dbm_at_instrument) || !std::isfinite(s.qi_meas))
            throw ParseError(n, "non-finite value");
        out.push_back(s);
    }
    return out;
}

int cmd_extract_tls(const GlobalOptions &g, const ExtractArgs &a)
{
    const MaterialParams mat = material(g);
    TlsParams ctx;
    ctx.rho = mat.rho;
    ctx.v = mat.v;
    ctx.temperature = mat.temperature;
    ctx.f0 = a.f0;
    ctx.n0_gamma2 = a.n0_gamma2.value_or(0.0);
    ctx.p_c = a.p_c_dbm ? dbm_to_watts(*a.p_c_dbm) : 0.0;
    ctx.q_rl = a.q_rl.value_or(0.0);
    const TlsConvention convention =
        a.convention == "as-printed" ? TlsConvention::as_printed : TlsConvention::per_length;

    std::vector<TlsSample> data;
    TlsFit fit;
    if (!a.data.empty())
    {
        data = read_tls_data(a.data);
        fit = fit_tls(data, a.attenuation_db, ctx);
    }
    else
    {
        // Model curve from given constants, no measurement to fit.
        if (!(a.n0_gamma2 && a.p_c_dbm && a.q_rl))
            throw ValidationError("data", "give a data file or all of --n0-gamma2, --p-c-dbm, --q-rl");
        ctx.validate();
        fit.params = ctx;
        fit.converged = true;
    }
    emit(g, write_report(fit, parse_report_format(g.format)));

    const double att = std::abs(a.attenuation_db);
    double p_lo = -100.0;
    double p_hi = 20.0;
    std::vector<PlotPoint> pts;
    for (const auto &s : data)
    {
        pts.push_back({s.p_dbm_at_instrument - att, s.qi_meas,
                       tls_qi(dbm_to_watts(s.p_dbm_at_instrument - att), fit.params, convention)});
        p_lo = std::min(p_lo, s.p_dbm_at_instrument);
        p_hi = std::max(p_hi, s.p_dbm_at_instrument);
    }
    for (int i = 0; i < a.plot_points; ++i)
    {
        const double p = p_lo - att + (p_hi - p_lo) * i / (a.plot_points - 1.0);
        pts.push_back({p, std::nan(""), tls_qi(dbm_to_watts(p), fit.params, convention)});
    }
    const fs::path plot = plot_path(g, a.plot, "tls");
    write_file(plot, write_plot_csv(pts, "p_sample_dbm", "qi"));
    return fit.converged ? kOk : kNotConverged;
}

// ---------------------------------------------------------------------------

int cmd_table(const GlobalOptions &g, const std::string &table_path)
{
    const DeviceTable table = device_table(table_path);
    for (const auto &w : table.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    emit(g, write_report(table, material(g), parse_report_format(g.format)));
    return kOk;
}

void print_error(const char *kind, const std::string &message, const std::string &field = {}, std::size_t line = 0)
{
    nlohmann::ordered_json doc;
    doc["error"] = kind;
    doc["message"] = message;
    if (!field.empty())
        doc["field"] = field;
    if (line)
        doc["line"] = line;
    std::cerr << doc.dump() << '\n';
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Surface acoustic wave resonator design, synthesis and Q extraction"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--material", g.material_path, "Material JSON (v_m_per_s, rho_kg_per_m3, rs_mag, temperature_k)");
    app.add_option("--seed", g.seed, "Seed for noise and resampling")->capture_default_str();
    app.add_option("--out", g.out, "Output file (default stdout)");
    app.add_option("--format", g.format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "Progress on stderr");

    int code = kOk;

    DesignArgs design;
    auto *c_design = app.add_subcommand("design", "Derived cavity parameters and mode frequencies");
    c_design->add_option("geometry", design.geometry, "Geometry JSON")->required();
    c_design->add_option("--window", design.window, "Mode window")
        ->check(CLI::IsMember({"narrowest", "first-stopband", "idt", "explicit"}))
        ->capture_default_str();
    c_design->add_option("--band-lo", design.band_lo, "Explicit window low edge [Hz]");
    c_design->add_option("--band-hi", design.band_hi, "Explicit window high edge [Hz]");
    c_design->add_flag("--quiet", design.quiet, "Skip the summary table on stderr");
    c_design->callback([&] { code = cmd_design(g, design); });

    SynthArgs synth;
    auto *c_synth = app.add_subcommand("synth", "Synthesise a reflection trace (.s1p or .csv by --out extension)");
    c_synth->add_option("--device", synth.device, "Device name from the table (uses its f0, Qi, Qe)");
    c_synth->add_option("--table", synth.table, "Device table JSON (default bundled)");
    c_synth->add_option("--comb", synth.comb, "Number of modes one FSR apart around the device f0")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_synth->add_option("--mode", synth.modes, "Mode as F0,QI,QE (repeatable)");
    c_synth->add_option("--span-linewidths", synth.span_linewidths, "Half span around the modes in loaded linewidths")
        ->capture_default_str();
    c_synth->add_option("--f-lo", synth.f_lo, "Grid start [Hz], overrides the span");
    c_synth->add_option("--f-hi", synth.f_hi, "Grid end [Hz]");
    c_synth->add_option("--points", synth.points, "Grid points")->capture_default_str();
    c_synth->add_option("--noise", synth.noise, "Complex noise sigma (E|n|^2 = sigma^2)")->capture_default_str();
    c_synth->add_option("--amp0", synth.amp0, "Background magnitude")->capture_default_str();
    c_synth->add_option("--amp-slope", synth.amp_slope, "Background magnitude slope [1/Hz]");
    c_synth->add_option("--phase0", synth.phase0, "Background phase at the grid centre [rad]");
    c_synth->add_option("--delay", synth.delay, "Electrical delay [s]");
    c_synth->add_option("--power-dbm", synth.power_dbm, "Drive power recorded in the trace");
    c_synth->add_option("--attenuation-db", synth.attenuation_db, "Line attenuation recorded in the trace");
    c_synth->callback([&] { code = cmd_synth(g, synth); });

    FitArgs fit;
    auto *c_fit = app.add_subcommand("fit", "Fit a single resonance");
    c_fit->add_option("trace", fit.trace, "Trace file (.s1p or .csv)")->required();
    c_fit->add_option("--bootstrap", fit.bootstrap, "Residual-bootstrap replicates for Q errors (uses --seed)");
    c_fit->add_option("--max-iter", fit.max_iter, "Iteration cap")->capture_default_str();
    c_fit->add_option("--plot", fit.plot, "Write freq_hz,abs_s11,abs_s11_fit CSV");
    c_fit->callback([&] { code = cmd_fit(g, fit); });

    FitArgs multi;
    auto *c_multi = app.add_subcommand("fit-multimode", "Find and fit every resonance in a trace");
    c_multi->add_option("trace", multi.trace, "Trace file (.s1p or .csv)")->required();
    c_multi->add_option("--window", multi.window, "Half window per mode in loaded linewidths")->capture_default_str();
    c_multi->add_option("--max-iter", multi.max_iter, "Iteration cap")->capture_default_str();
    c_multi->callback([&] { code = cmd_fit_multimode(g, multi); });

    ExtractArgs ex;
    auto *c_extract = app.add_subcommand("extract", "Loss-model extraction with plot data");
    c_extract->require_subcommand(1);
    auto add_common = [&](CLI::App *c, const char *default_devices) {
        c->add_option("--table", ex.table, "Device table JSON (default bundled)");
        c->add_option("--devices", ex.devices, std::string("Comma-separated device names (default ") +
                                                    default_devices + ")");
        c->add_option("--plot", ex.plot, "Plot CSV path (default next to --out)");
        c->add_option("--plot-points", ex.plot_points, "Curve samples in the plot CSV")
            ->check(CLI::Range(2, 100000))
            ->capture_default_str();
    };
    auto *c_rs = c_extract->add_subcommand("rs-alpha", "Electrode reflectivity and propagation loss from Qi(d)");
    add_common(c_rs, "r-series");
    c_rs->callback([&] { code = cmd_extract_rs_alpha(g, ex); });

    auto *c_pl = c_extract->add_subcommand("powerlaw", "Qi/1e3 = c1 (f/GHz)^-c2");
    add_common(c_pl, "q1..q7,r6");
    c_pl->callback([&] { code = cmd_extract_powerlaw(g, ex); });

    auto *c_tls = c_extract->add_subcommand("tls", "Two-level-system saturation fit of Qi(P)");
    c_tls->add_option("data", ex.data, "CSV with header p_dbm,qi (power at the instrument)");
    c_tls->add_option("--attenuation-db", ex.attenuation_db, "Instrument-to-sample attenuation [dB]")
        ->capture_default_str();
    c_tls->add_option("--f0", ex.f0, "Mode frequency [Hz]")->capture_default_str();
    c_tls->add_option("--n0-gamma2", ex.n0_gamma2, "n0 gamma^2 [J/m^3] (start value, or model constant)");
    c_tls->add_option("--p-c-dbm", ex.p_c_dbm, "Critical power at the sample [dBm]");
    c_tls->add_option("--q-rl", ex.q_rl, "Residual-loss Q");
    c_tls->add_option("--convention", ex.convention, "Attenuation convention for the plotted curve")
        ->check(CLI::IsMember({"per-length", "as-printed"}))
        ->capture_default_str();
    c_tls->add_option("--plot", ex.plot, "Plot CSV path (default next to --out)");
    c_tls->add_option("--plot-points", ex.plot_points, "Curve samples in the plot CSV")
        ->check(CLI::Range(2, 100000))
        ->capture_default_str();
    c_tls->callback([&] { code = cmd_extract_tls(g, ex); });

    std::string table_path;
    auto *c_table = app.add_subcommand("table", "Device table with derived quantities");
    c_table->add_option("--table", table_path, "Device table JSON (default bundled)");
    c_table->callback([&] { code = cmd_table(g, table_path); });

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e);
    }
    catch (const IoError &e)
    {
        print_error(e.kind(), e.what());
        return kIo;
    }
    catch (const ValidationError &e)
    {
        print_error(e.kind(), e.what(), e.field());
        return kFailure;
    }
    catch (const ParseError &e)
    {
        print_error(e.kind(), e.what(), {}, e.line());
        return kFailure;
    }
    catch (const Error &e)
    {
        print_error(e.kind(), e.what());
        return kFailure;
    }
    catch (const std::exception &e)
    {
        print_error("internal", e.what());
        return kFailure;
    }
    return code;
}
