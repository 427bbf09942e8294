#include "sawres/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/QR>

#include "sawres/constants.hpp"
#include "sawres/levenberg_marquardt.hpp"
#include "validate.hpp"

namespace sawres
{

void FitConfig::validate() const
{
    detail::require_at_least("max_iter", max_iter, 1);
    detail::require_positive("rel_tolerance", rel_tolerance);
    detail::require_positive("gradient_tolerance", gradient_tolerance);
    detail::require_positive("initial_damping", initial_damping);
    if (!(damping_up > 1.0))
        throw ValidationError("damping_up", "must be > 1");
    if (!(damping_down > 0.0 && damping_down < 1.0))
        throw ValidationError("damping_down", "must lie in (0, 1)");
    detail::require_positive("window_linewidths", window_linewidths);
    detail::require_non_negative("min_prominence_sigma", min_prominence_sigma);
    detail::require_non_negative("min_prominence", min_prominence);
}

namespace
{

double wrap_phase(double phi)
{
    phi = std::remainder(phi, 2.0 * constants::pi);
    return phi <= -constants::pi ? phi + 2.0 * constants::pi : phi;
}

double median(std::vector<double> values)
{
    if (values.empty())
        return 0.0;
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

/// Gaussian-equivalent noise on a sampled curve from the MAD of second
/// differences, insensitive to slowly varying structure.
double noise_floor(const Eigen::VectorXd &y)
{
    if (y.size() < 3)
        return 0.0;
    std::vector<double> d2(static_cast<std::size_t>(y.size() - 2));
    for (Eigen::Index i = 1; i + 1 < y.size(); ++i)
        d2[static_cast<std::size_t>(i - 1)] = std::abs(y[i + 1] - 2.0 * y[i] + y[i - 1]);
    return 1.4826 * median(std::move(d2)) / std::sqrt(6.0);
}

Eigen::VectorXd moving_average(const Eigen::VectorXd &y, Eigen::Index half_width)
{
    if (half_width <= 0)
        return y;
    const Eigen::Index n = y.size();
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half_width);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half_width);
        out[i] = y.segment(lo, hi - lo + 1).mean();
    }
    return out;
}

double unwrapped_mean_phase(const Eigen::VectorXcd &s, Eigen::Index first, Eigen::Index count)
{
    double prev = std::arg(s[first]);
    double acc = prev;
    double sum = prev;
    for (Eigen::Index i = first + 1; i < first + count; ++i)
    {
        const double phi = std::arg(s[i]);
        acc += wrap_phase(phi - prev);
        prev = phi;
        sum += acc;
    }
    return sum / static_cast<double>(count);
}

/// Frequency at which `y` (sampled on `f`) first rises to `level` walking
/// away from `start` in direction `step`; nullopt if it never does.
std::optional<double> crossing(const Eigen::VectorXd &f, const Eigen::VectorXd &y, Eigen::Index start, int step,
                               double level)
{
    for (Eigen::Index i = start; i + step >= 0 && i + step < f.size(); i += step)
    {
        const Eigen::Index j = i + step;
        if (y[j] >= level)
        {
            const double t = (level - y[i]) / (y[j] - y[i]);
            return f[i] + t * (f[j] - f[i]);
        }
    }
    return std::nullopt;
}

BackgroundModel rereference(const BackgroundModel &bg, double f_ref)
{
    BackgroundModel out = bg;
    const double shift = f_ref - bg.f_ref;
    out.amp0 = bg.amp0 + bg.amp_slope * shift;
    out.phase0 = wrap_phase(bg.phase0 - 2.0 * constants::pi * bg.delay * shift);
    out.f_ref = f_ref;
    return out;
}

double trace_centre(const ComplexTrace &trace)
{
    return 0.5 * (trace.freqs[0] + trace.freqs[trace.size() - 1]);
}

} // namespace

FitVector to_fit_vector(const ModeParams &mode, const BackgroundModel &bg)
{
    FitVector p;
    p[kF0] = mode.f0;
    p[kLogQi] = std::log(mode.qi);
    p[kLogQe] = std::log(mode.qe);
    p[kAmp0] = bg.amp0;
    p[kAmpSlope] = bg.amp_slope;
    p[kPhase0] = bg.phase0;
    p[kDelay] = bg.delay;
    return p;
}

Eigen::MatrixXd model_jacobian(const Eigen::VectorXd &freqs, const FitVector &p, double f_ref)
{
    Eigen::MatrixXd jac(2 * freqs.size(), kFitParamCount);
    for (Eigen::Index i = 0; i < freqs.size(); ++i)
    {
        const auto g = resonator_model_gradient(freqs[i], p, f_ref);
        jac.row(2 * i) = g.real();
        jac.row(2 * i + 1) = g.imag();
    }
    return jac;
}

ResonanceGuess initial_guess(const ComplexTrace &trace)
{
    trace.validate();
    const Eigen::Index n = trace.size();
    if (n < 5)
        throw ValidationError("trace", "initial guess needs at least 5 points");

    const Eigen::VectorXd &f = trace.freqs;
    const Eigen::VectorXd mag = trace.s11.cwiseAbs();
    const double f_ref = trace_centre(trace);
    const Eigen::Index edge = std::max<Eigen::Index>(2, n / 10);

    // Affine magnitude through both edges.
    Eigen::MatrixXd design(2 * edge, 2);
    Eigen::VectorXd target(2 * edge);
    for (Eigen::Index k = 0; k < edge; ++k)
    {
        const Eigen::Index lo = k;
        const Eigen::Index hi = n - edge + k;
        design.row(k) << 1.0, f[lo] - f_ref;
        design.row(edge + k) << 1.0, f[hi] - f_ref;
        target[k] = mag[lo];
        target[edge + k] = mag[hi];
    }
    const Eigen::Vector2d line = design.colPivHouseholderQr().solve(target);

    // Linear phase from the edge means; the resonance itself may wind the
    // phase by 2 pi between the edges, so the difference is wrapped.
    const double f_left = f.head(edge).mean();
    const double f_right = f.tail(edge).mean();
    const double phi_left = unwrapped_mean_phase(trace.s11, 0, edge);
    const double phi_right = unwrapped_mean_phase(trace.s11, n - edge, edge);
    const double delay = -wrap_phase(phi_right - phi_left) / (2.0 * constants::pi * (f_right - f_left));

    ResonanceGuess guess;
    guess.bg.amp0 = std::abs(line[0]);
    guess.bg.amp_slope = line[0] < 0 ? -line[1] : line[1];
    guess.bg.delay = delay;
    guess.bg.phase0 = wrap_phase(phi_left + 2.0 * constants::pi * delay * (f_left - f_ref));
    guess.bg.f_ref = f_ref;

    Eigen::VectorXcd normalised(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const std::complex<double> b = guess.bg(f[i]);
        if (!(std::abs(b) > 1e-12))
            throw NoDipFoundError("background estimate vanishes inside the trace");
        normalised[i] = trace.s11[i] / b;
    }

    const Eigen::Index half_width = n / 400;
    const Eigen::VectorXd power = moving_average(normalised.cwiseAbs2(), half_width);
    Eigen::Index imin = 0;
    power.minCoeff(&imin);

    const Eigen::Index lo = std::max<Eigen::Index>(0, imin - half_width);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, imin + half_width);
    const std::complex<double> m0 = normalised.segment(lo, hi - lo + 1).mean();
    const double depth = 1.0 - std::abs(m0);
    const double noise = noise_floor(mag);
    if (!(depth > 1e-9) || guess.bg.amp0 * depth < 3.0 * noise)
        throw NoDipFoundError("no resonance dip above 3x the noise floor (depth " + std::to_string(depth) +
                              ", noise " + std::to_string(noise / guess.bg.amp0) + ")");

    const double f0 = f[imin];
    const double level = 0.5 * (1.0 + std::norm(m0));
    const auto left = crossing(f, power, imin, -1, level);
    const auto right = crossing(f, power, imin, +1, level);
    double fwhm = 0.5 * (f[n - 1] - f[0]);
    if (left && right)
        fwhm = *right - *left;
    else if (left)
        fwhm = 2.0 * (f0 - *left);
    else if (right)
        fwhm = 2.0 * (*right - f0);
    fwhm = std::max(fwhm, f[1] - f[0]);

    // On resonance the normalised response is (1 - u)/(1 + u), u = Qi/Qe.
    const double r = std::clamp(std::copysign(std::abs(m0), m0.real()), -0.98, 0.98);
    const double u = (1.0 - r) / (1.0 + r);
    const double ql = f0 / fwhm;
    guess.mode.f0 = f0;
    guess.mode.qi = ql * (1.0 + u);
    guess.mode.qe = guess.mode.qi / u;
    return guess;
}

FitResult fit_resonance(const ComplexTrace &trace, const FitConfig &config, const std::optional<ResonanceGuess> &guess)
{
    trace.validate();
    config.validate();
    const ResonanceGuess start = guess ? *guess : initial_guess(trace);
    start.mode.validate();

    const double f_ref = trace_centre(trace);
    const BackgroundModel bg0 = rereference(start.bg, f_ref);
    const Eigen::Index n = trace.size();

    auto evaluate = [&](const Eigen::VectorXd &x, Eigen::VectorXd &r, Eigen::MatrixXd *jac) {
        const FitVector p = x;
        r.resize(2 * n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const std::complex<double> diff = resonator_model(trace.freqs[i], p, f_ref) - trace.s11[i];
            r[2 * i] = diff.real();
            r[2 * i + 1] = diff.imag();
        }
        if (jac)
            *jac = model_jacobian(trace.freqs, p, f_ref);
    };

    LmOptions options;
    options.max_iter = config.max_iter;
    options.step_tolerance = config.rel_tolerance;
    options.initial_damping = config.initial_damping;
    options.damping_up = config.damping_up;
    options.damping_down = config.damping_down;
    const LmSummary summary = levenberg_marquardt(evaluate, to_fit_vector(start.mode, bg0), options);
    const FitVector p = summary.x;
    FitResult out;
    out.mode = {p[kF0], std::exp(p[kLogQi]), std::exp(p[kLogQe])};
    out.bg = {p[kAmp0], p[kAmpSlope], p[kPhase0], p[kDelay], f_ref};
    if (out.bg.amp0 < 0.0)
    {
        out.bg.amp0 = -out.bg.amp0;
        out.bg.amp_slope = -out.bg.amp_slope;
        out.bg.phase0 += constants::pi;
    }
    out.bg.phase0 = wrap_phase(out.bg.phase0);

    out.residual_norm = std::sqrt(summary.residual.squaredNorm() / static_cast<double>(n));
    out.gradient_cosine = summary.gradient_cosine();
    out.n_iter = summary.iterations;
    // With a noiseless trace the residual is rounding error and its angle to
    // the Jacobian columns carries no information.
    const bool exact = out.residual_norm <= 1e-12 * out.bg.amp0;
    out.converged = summary.stop != LmStop::max_iter && (out.gradient_cosine <= config.gradient_tolerance || exact);

    Eigen::MatrixXd cov;
    try
    {
        cov = linearized_covariance(summary.jacobian, summary.residual);
    }
    catch (const DegenerateFitError &)
    {
        // An unfinished fit can sit where a parameter has no leverage; it is
        // already flagged, so it is returned without error bars.
        if (out.converged)
            throw;
        return out;
    }
    auto sd = [&](int k) { return std::sqrt(std::max(0.0, cov(k, k))); };
    out.sigma = {sd(kF0), out.mode.qi * sd(kLogQi), out.mode.qe * sd(kLogQe), sd(kAmp0), sd(kAmpSlope),
                 sd(kPhase0), sd(kDelay)};
    return out;
}

std::vector<Eigen::Index> find_dips(const ComplexTrace &trace, const FitConfig &config)
{
    trace.validate();
    config.validate();
    const Eigen::VectorXd mag = trace.s11.cwiseAbs();
    const Eigen::Index n = mag.size();
    std::vector<double> mags(mag.data(), mag.data() + n);
    const double threshold =
        std::max(config.min_prominence_sigma * noise_floor(mag), config.min_prominence * median(mags));

    struct Candidate
    {
        Eigen::Index index;
        double prominence;
        double half_width; // samples
    };
    std::vector<Candidate> candidates;
    for (Eigen::Index i = 1; i + 1 < n; ++i)
    {
        if (!(mag[i] < mag[i - 1] && mag[i] <= mag[i + 1]))
            continue;
        double left_max = mag[i];
        for (Eigen::Index j = i - 1; j >= 0 && mag[j] >= mag[i]; --j)
            left_max = std::max(left_max, mag[j]);
        double right_max = mag[i];
        for (Eigen::Index j = i + 1; j < n && mag[j] >= mag[i]; ++j)
            right_max = std::max(right_max, mag[j]);
        const double prominence = std::min(left_max, right_max) - mag[i];
        if (!(prominence > threshold))
            continue;

        const double half = mag[i] + 0.5 * prominence;
        Eigen::Index lo = i;
        while (lo > 0 && mag[lo] < half)
            --lo;
        Eigen::Index hi = i;
        while (hi + 1 < n && mag[hi] < half)
            ++hi;
        // Single-sample spikes are noise, not resonances.
        if (hi - lo < 3)
            continue;
        candidates.push_back({i, prominence, 0.5 * static_cast<double>(hi - lo)});
    }

    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate &a, const Candidate &b) { return a.prominence > b.prominence; });
    std::vector<Candidate> accepted;
    for (const auto &c : candidates)
    {
        const bool clash = std::any_of(accepted.begin(), accepted.end(), [&](const Candidate &a) {
            return std::abs(static_cast<double>(a.index - c.index)) < a.half_width + c.half_width;
        });
        if (!clash)
            accepted.push_back(c);
    }

    std::vector<Eigen::Index> dips;
    for (const auto &c : accepted)
        dips.push_back(c.index);
    std::sort(dips.begin(), dips.end());
    return dips;
}

std::vector<FitResult> fit_multimode(const ComplexTrace &trace, const FitConfig &config)
{
    const std::vector<Eigen::Index> dips = find_dips(trace, config);
    const Eigen::VectorXd &f = trace.freqs;
    const Eigen::VectorXd mag = trace.s11.cwiseAbs();
    const Eigen::Index n = trace.size();

    struct Window
    {
        Eigen::Index lo;
        Eigen::Index hi;
        double linewidth;
    };
    std::vector<Window> windows;
    for (const Eigen::Index i : dips)
    {
        // Local baseline: the highest magnitude between this dip and its neighbours.
        const auto it = std::find(dips.begin(), dips.end(), i);
        const Eigen::Index left_bound = it == dips.begin() ? 0 : *(it - 1);
        const Eigen::Index right_bound = (it + 1) == dips.end() ? n - 1 : *(it + 1);
        const double baseline = std::min(mag.segment(left_bound, i - left_bound + 1).maxCoeff(),
                                         mag.segment(i, right_bound - i + 1).maxCoeff());
        const Eigen::VectorXd power = (mag / baseline).cwiseAbs2();
        const double level = 0.5 * (1.0 + power[i]);
        const auto left = crossing(f, power, i, -1, level);
        const auto right = crossing(f, power, i, +1, level);
        double linewidth = 0.0;
        if (left && right)
            linewidth = *right - *left;
        else if (left || right)
            linewidth = 2.0 * std::abs(f[i] - (left ? *left : *right));
        linewidth = std::max(linewidth, 2.0 * (f[std::min(i + 1, n - 1)] - f[std::max<Eigen::Index>(i - 1, 0)]));

        const double half = config.window_linewidths * linewidth;
        auto lo = static_cast<Eigen::Index>(std::lower_bound(f.data(), f.data() + n, f[i] - half) - f.data());
        auto hi = static_cast<Eigen::Index>(std::upper_bound(f.data(), f.data() + n, f[i] + half) - f.data()) - 1;
        lo = std::min(lo, std::max<Eigen::Index>(0, i - 5));
        hi = std::max(hi, std::min<Eigen::Index>(n - 1, i + 5));
        windows.push_back({lo, hi, linewidth});
    }

    std::vector<FitResult> results;
    for (std::size_t k = 0; k < windows.size(); ++k)
    {
        const Window &w = windows[k];
        const bool overlap = (k > 0 && windows[k - 1].hi >= w.lo) || (k + 1 < windows.size() && w.hi >= windows[k + 1].lo);
        const ComplexTrace local = trace.slice(w.lo, w.hi - w.lo + 1);
        FitResult fit;
        try
        {
            fit = fit_resonance(local, config);
        }
        catch (const Error &)
        {
            const Eigen::Index i = dips[k];
            fit.mode = {f[i], f[i] / w.linewidth, f[i] / w.linewidth};
            fit.bg = {mag[i] > 0 ? mag[i] : 1.0, 0.0, 0.0, 0.0, f[i]};
            fit.converged = false;
        }
        fit.window_overlap = overlap;
        results.push_back(fit);
    }
    std::sort(results.begin(), results.end(),
              [](const FitResult &a, const FitResult &b) { return a.mode.f0 < b.mode.f0; });
    return results;
}

BootstrapErrors bootstrap_errors(const ComplexTrace &trace, const FitResult &fit, int replicates, std::uint64_t seed,
                                 const FitConfig &config)
{
    detail::require_at_least("replicates", replicates, 2);
    const Eigen::Index n = trace.size();
    const FitVector p = to_fit_vector(fit.mode, fit.bg);
    Eigen::VectorXcd model(n);
    for (Eigen::Index i = 0; i < n; ++i)
        model[i] = resonator_model(trace.freqs[i], p, fit.bg.f_ref);
    const Eigen::VectorXcd residual = trace.s11 - model;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    Eigen::MatrixXd draws(replicates, 3);
    const ResonanceGuess start{fit.mode, fit.bg};
    for (int b = 0; b < replicates; ++b)
    {
        ComplexTrace resampled = trace;
        for (Eigen::Index i = 0; i < n; ++i)
            resampled.s11[i] = model[i] + residual[pick(rng)];
        const FitResult refit = fit_resonance(resampled, config, start);
        draws.row(b) << refit.mode.f0, refit.mode.qi, refit.mode.qe;
    }
    const Eigen::RowVector3d mean = draws.colwise().mean();
    const Eigen::RowVector3d sd =
        ((draws.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(replicates - 1)).cwiseSqrt();
    return {sd[0], sd[1], sd[2], replicates};
}

} // namespace sawres
