#include "sawres/response.hpp"

#include <cmath>

#include "sawres/constants.hpp"
#include "validate.hpp"

namespace sawres
{

using detail::require_finite;
using detail::require_positive;

void ModeParams::validate() const
{
    require_positive("f0", f0);
    require_positive("qi", qi);
    require_positive("qe", qe);
}

void BackgroundModel::validate() const
{
    require_positive("amp0", amp0);
    require_finite("amp_slope", amp_slope);
    require_finite("phase0", phase0);
    require_finite("delay", delay);
    require_finite("f_ref", f_ref);
}

void ComplexTrace::validate() const
{
    if (freqs.size() != s11.size())
        throw ValidationError("s11", "length " + std::to_string(s11.size()) + " does not match freqs length " +
                                         std::to_string(freqs.size()));
    if (freqs.size() < 2)
        throw ValidationError("freqs", "trace needs at least 2 points");
    for (Eigen::Index i = 0; i < freqs.size(); ++i)
    {
        if (!std::isfinite(freqs[i]) || !std::isfinite(s11[i].real()) || !std::isfinite(s11[i].imag()))
            throw ValidationError("trace", "non-finite value at index " + std::to_string(i));
        if (i > 0 && !(freqs[i] > freqs[i - 1]))
            throw ValidationError("freqs", "not strictly increasing at index " + std::to_string(i));
    }
}

ComplexTrace ComplexTrace::slice(Eigen::Index first, Eigen::Index count) const
{
    if (first < 0 || count < 0 || first + count > freqs.size())
        throw ValidationError("slice", "range [" + std::to_string(first) + ", " + std::to_string(first + count) +
                                           ") outside trace of length " + std::to_string(freqs.size()));
    return {freqs.segment(first, count), s11.segment(first, count), meta};
}

Eigen::VectorXd linear_grid(double f_lo, double f_hi, Eigen::Index points)
{
    require_finite("f_lo", f_lo);
    require_finite("f_hi", f_hi);
    if (points < 2)
        throw ValidationError("points", "grid needs at least 2 points");
    if (!(f_hi > f_lo))
        throw ValidationError("f_hi", "must exceed f_lo");
    return Eigen::VectorXd::LinSpaced(points, f_lo, f_hi);
}

namespace
{

std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform in (0, 1], 53 bits.
double to_unit_interval(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

} // namespace

std::complex<double> complex_noise(std::uint64_t seed, std::uint64_t index, double sigma)
{
    if (sigma == 0.0)
        return {0.0, 0.0};
    const std::uint64_t key = splitmix64(seed ^ splitmix64(index));
    const double u1 = to_unit_interval(splitmix64(key));
    const double u2 = to_unit_interval(splitmix64(key + 1));
    // Box-Muller; each quadrature gets sigma / sqrt(2).
    const double radius = sigma * std::sqrt(-std::log(u1));
    const double angle = 2.0 * constants::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

ComplexTrace synth_trace(std::span<const ModeParams> modes, const BackgroundModel &bg, const Eigen::VectorXd &grid,
                         double noise_sigma, std::uint64_t seed)
{
    for (const auto &mode : modes)
        mode.validate();
    bg.validate();
    detail::require_non_negative("noise_sigma", noise_sigma);

    ComplexTrace trace;
    trace.freqs = grid;
    trace.s11.resize(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i)
    {
        const double f = grid[i];
        std::complex<double> value = bg(f);
        for (const auto &mode : modes)
            value *= s11_single(f, mode.f0, mode.qi, mode.qe);
        trace.s11[i] = value + complex_noise(seed, static_cast<std::uint64_t>(i), noise_sigma);
    }
    trace.validate();
    return trace;
}

ComplexTrace remove_background(const ComplexTrace &trace, const BackgroundModel &bg)
{
    trace.validate();
    ComplexTrace out = trace;
    for (Eigen::Index i = 0; i < trace.size(); ++i)
    {
        const std::complex<double> b = bg(trace.freqs[i]);
        if (!(std::abs(b) >= 1e-12))
            throw SingularBackgroundError("background magnitude below 1e-12 at f = " + std::to_string(trace.freqs[i]) +
                                          " Hz");
        out.s11[i] = trace.s11[i] / b;
    }
    return out;
}

} // namespace sawres
