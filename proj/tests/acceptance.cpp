// Acceptance criteria, one PASS/FAIL line each. With a criterion number as
// argument only that criterion runs; the exit status is nonzero on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sawres/sawres.hpp"
#include "test_support.hpp"

using namespace sawres;
using sawres::testing::log_uniform;
using sawres::testing::rel_err;
using sawres::testing::uniform;

namespace
{

struct Outcome
{
    bool pass;
    std::string detail;
};

std::string fmt(const char *format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome rs_alpha_extraction()
{
    const auto t0 = std::chrono::steady_clock::now();
    const DeviceTable table = load_bundled_device_table();
    std::vector<RsAlphaSample> data;
    for (const auto &rec : table.records)
        if (rec.name[0] == 'r')
            data.push_back({rec.geometry.mirror_separation(), rec.f0_meas, rec.qi_meas});
    const RsAlphaFit fit = fit_rs_alpha(data, table.at("r1").geometry, MaterialParams{});
    const double elapsed = seconds_since(t0);
    const double upper_per_mm = fit.alpha_upper() / 1e3;
    const bool pass = data.size() == 10 && fit.converged && fit.rs_mag >= 0.0015 && fit.rs_mag <= 0.0026 &&
                      upper_per_mm <= 0.015 && elapsed < 1.0;
    return {pass, fmt("|r_s| = %.6f +- %.6f, alpha_p = %.3g +- %.3g /m (upper %.4f /mm), %.3f s", fit.rs_mag,
                      fit.rs_sigma, fit.alpha_p, fit.alpha_sigma, upper_per_mm, elapsed)};
}

Outcome forward_consistency()
{
    const DeviceTable table = load_bundled_device_table();
    MaterialParams mat;
    mat.rs_mag = 0.002;
    const double q6 = predict_qi(derive_params(table.at("r6").geometry, mat), 12.5, mat);
    const double q9 = predict_qi(derive_params(table.at("r9").geometry, mat), 12.5, mat);
    const double e6 = rel_err(q6, table.at("r6").qi_meas);
    const double e9 = rel_err(q9, table.at("r9").qi_meas);
    return {e6 < 0.05 && e9 < 0.10,
            fmt("r6 %.0f vs %.0f (%.2f%%), r9 %.0f vs %.0f (%.2f%%)", q6, table.at("r6").qi_meas, 100 * e6, q9,
                table.at("r9").qi_meas, 100 * e9)};
}

Outcome power_law()
{
    const auto t0 = std::chrono::steady_clock::now();
    const DeviceTable table = load_bundled_device_table();
    std::vector<PowerLawSample> data;
    for (const char *name : {"q1", "q2", "q3", "q4", "q5", "q6", "q7", "r6"})
        data.push_back({table.at(name).f0_meas, table.at(name).qi_meas});
    const PowerLaw fit = fit_powerlaw(data);
    const double elapsed = seconds_since(t0);
    const bool pass = std::abs(fit.c1 - 719.0) <= 170.0 && std::abs(fit.c2 - 2.07) <= 0.26 && elapsed < 1.0;
    return {pass, fmt("c1 = %.1f +- %.1f, c2 = %.3f +- %.3f, %.4f s", fit.c1, fit.c1_sigma, fit.c2, fit.c2_sigma,
                      elapsed)};
}

Outcome tls_closure()
{
    TlsParams p;
    p.n0_gamma2 = 4.5e4;
    p.p_c = dbm_to_watts(-65.7);
    p.q_rl = 5.75e4;
    p.rho = 2650.0;
    p.temperature = 0.010;
    p.f0 = 4.449e9;
    const double qi0 = tls_qi(0.0, p);
    bool monotone = true;
    double prev = qi0;
    for (double dbm = -160.0; dbm <= 0.0; dbm += 0.5)
    {
        const double q = tls_qi(dbm_to_watts(dbm), p);
        monotone = monotone && q > prev;
        prev = q;
    }
    const double err = rel_err(qi0, 34500.0);
    return {err < 0.05 && monotone,
            fmt("Qi(P -> 0) = %.0f (%.2f%% from 34500), monotone %s", qi0, 100 * err, monotone ? "yes" : "no")};
}

Outcome fitter_round_trip()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240501);
    std::vector<double> qi_err, qe_err;
    double worst_f0 = 0.0;
    int converged = 0;
    const int cases = 200;
    for (int k = 0; k < cases; ++k)
    {
        const auto c = sawres::testing::random_single_mode(rng, 9000 + static_cast<std::uint64_t>(k), 30.0);
        const FitResult fit = fit_resonance(c.trace);
        converged += fit.converged;
        qi_err.push_back(rel_err(fit.mode.qi, c.truth.qi));
        qe_err.push_back(rel_err(fit.mode.qe, c.truth.qe));
        worst_f0 = std::max(worst_f0, std::abs(fit.mode.f0 - c.truth.f0) / c.truth.linewidth());
    }
    const double elapsed = seconds_since(t0);
    const double mqi = median(qi_err);
    const double mqe = median(qe_err);
    const bool pass = mqi < 0.02 && mqe < 0.02 && worst_f0 < 0.1 && elapsed < 30.0;
    return {pass, fmt("median |dQi/Qi| = %.3f%%, |dQe/Qe| = %.3f%%, worst f0 error %.4f linewidths, %d/%d converged, "
                      "%.2f s",
                      100 * mqi, 100 * mqe, worst_f0, converged, cases, elapsed)};
}

Outcome multimode_comb()
{
    // Device q7: 4.42 GHz, Qi ~ 40.2e3, Qe ~ 528e3, modes one FSR apart.
    const DeviceTable table = load_bundled_device_table();
    const DeviceRecord &q7 = table.at("q7");
    const double fsr = derive_params(q7.geometry, MaterialParams{}).fsr;
    std::mt19937_64 rng(18);
    std::vector<ModeParams> modes;
    for (int k = 0; k < 18; ++k)
        modes.push_back({q7.f0_meas + (k - 8.5) * fsr, q7.qi_meas * uniform(rng, 0.9, 1.1),
                         q7.qe_meas * uniform(rng, 0.8, 1.2)});
    const BackgroundModel bg{0.2, 0.0, 0.9, 20e-9, q7.f0_meas};
    const double span = 19.0 * fsr;
    const Eigen::VectorXd grid = linear_grid(q7.f0_meas - 0.5 * span, q7.f0_meas + 0.5 * span, 40001);
    const ComplexTrace trace = synth_trace(modes, bg, grid, 0.002 * bg.amp0, 2);

    const auto fits = fit_multimode(trace);
    int converged = 0;
    double worst = 0.0;
    if (fits.size() == modes.size())
        for (std::size_t k = 0; k < fits.size(); ++k)
        {
            converged += fits[k].converged;
            worst = std::max(worst, rel_err(fits[k].mode.qi, modes[k].qi));
        }
    const bool pass = fits.size() == 18 && converged == 18 && worst < 0.02;
    return {pass, fmt("%zu fits (FSR %.3f MHz), %d converged, worst |dQi/Qi| = %.3f%%", fits.size(), fsr / 1e6,
                      converged, 100 * worst)};
}

Outcome lineshape_invariants()
{
    std::mt19937_64 rng(7);
    int failures = 0;
    double worst_width = 0.0;
    for (int trial = 0; trial < 1000; ++trial)
    {
        ModeParams m{log_uniform(rng, 1e8, 1e10), log_uniform(rng, 1e3, 1e7), 0.0};
        m.qe = m.qi / log_uniform(rng, 0.05, 20.0);
        const double lw = m.linewidth();
        const double at_f0 = std::abs(s11_single(m.f0, m.f0, m.qi, m.qe));
        for (int k = 0; k < 50; ++k)
        {
            const double f = m.f0 + uniform(rng, -50.0, 50.0) * lw;
            const double mag = std::abs(s11_single(f, m.f0, m.qi, m.qe));
            failures += mag > 1.0 + 1e-15 || mag < at_f0 - 1e-15;
        }
        failures += std::abs(s11_single(m.f0, m.f0, m.qi, m.qi)) > 1e-15;

        // Full width at half depth of 1 - |S11|^2, by bisection on each side.
        auto depth = [&](double f) { return 1.0 - std::norm(s11_single(f, m.f0, m.qi, m.qe)); };
        const double half = 0.5 * depth(m.f0);
        auto edge = [&](double dir) {
            double in = m.f0, out = m.f0 + dir * 10.0 * lw;
            for (int i = 0; i < 200; ++i)
            {
                const double mid = 0.5 * (in + out);
                (depth(mid) > half ? in : out) = mid;
            }
            return 0.5 * (in + out);
        };
        const double werr = rel_err(edge(1.0) - edge(-1.0), lw);
        worst_width = std::max(worst_width, werr);
        failures += werr >= 0.01;
    }
    return {failures == 0, fmt("1000 draws, %d violations, worst linewidth mismatch %.2e", failures, worst_width)};
}

Outcome jacobian_check()
{
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const double f0 = log_uniform(rng, 3e8, 6e9);
        const double qi = log_uniform(rng, 1e4, 1e6);
        const double qe = qi / log_uniform(rng, 0.1, 10.0);
        const double lw = f0 * (1.0 / qi + 1.0 / qe);
        FitVector p;
        p << f0, std::log(qi), std::log(qe), uniform(rng, 0.2, 2.0), uniform(rng, -0.05, 0.05) / lw,
            uniform(rng, -3.0, 3.0), uniform(rng, -0.05, 0.05) / lw;
        const double f_ref = f0 + uniform(rng, -2.0, 2.0) * lw;
        const double f = f0 + uniform(rng, -5.0, 5.0) * lw;
        const auto g = resonator_model_gradient(f, p, f_ref);
        const FitVectorT<long double> pl = p.cast<long double>();
        const long double steps[kFitParamCount] = {1e-6L * lw, 1e-6L, 1e-6L, 1e-6L, 1e-6L / lw, 1e-6L, 1e-6L / lw};
        for (int j = 0; j < kFitParamCount; ++j)
        {
            FitVectorT<long double> up = pl, down = pl;
            up[j] += steps[j];
            down[j] -= steps[j];
            const auto fd = (resonator_model<long double>(f, up, f_ref) - resonator_model<long double>(f, down, f_ref)) /
                            (2.0L * steps[j]);
            const std::complex<double> fdd(static_cast<double>(fd.real()), static_cast<double>(fd.imag()));
            worst = std::max(worst, std::abs(g[j] - fdd) / std::abs(fdd));
        }
    }
    return {worst < 1e-6, fmt("100 points x 7 parameters, worst relative error %.2e", worst)};
}

Outcome table_integrity()
{
    const DeviceTable table = load_bundled_device_table();
    std::string bad;
    for (const auto &rec : table.records)
        if (!(rec.product_mismatch() < 0.01))
            bad += fmt(" %s(%.2f%%)", rec.name.c_str(), 100 * rec.product_mismatch());
    return {table.records.size() == 18 && bad.empty(),
            bad.empty() ? std::string("all 18 rows within 1%") : "rows outside 1%:" + bad};
}

struct Criterion
{
    const char *title;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char **argv)
{
    const std::vector<Criterion> criteria{
        {"loss-model extraction from the r-series", rs_alpha_extraction},
        {"forward consistency of predict_qi", forward_consistency},
        {"frequency power law", power_law},
        {"TLS closure", tls_closure},
        {"fitter round trip", fitter_round_trip},
        {"18-mode comb", multimode_comb},
        {"lineshape invariants", lineshape_invariants},
        {"analytic Jacobian", jacobian_check},
        {"table product column", table_integrity},
    };

    std::vector<std::size_t> selected;
    if (argc > 1)
    {
        const int k = std::atoi(argv[1]);
        if (k < 1 || k > static_cast<int>(criteria.size()))
        {
            std::fprintf(stderr, "usage: %s [1-%zu]\n", argv[0], criteria.size());
            return 2;
        }
        selected.push_back(static_cast<std::size_t>(k - 1));
    }
    else
        for (std::size_t k = 0; k < criteria.size(); ++k)
            selected.push_back(k);

    int failed = 0;
    for (const std::size_t k : selected)
    {
        Outcome o;
        try
        {
            o = criteria[k].run();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].title, o.detail.c_str());
    }
    return failed ? 1 : 0;
}
