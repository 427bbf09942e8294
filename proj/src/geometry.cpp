#include "sawres/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sawres/constants.hpp"
#include "validate.hpp"

namespace sawres
{

using detail::require_at_least;
using detail::require_non_negative;
using detail::require_positive;

void MaterialParams::validate() const
{
    require_positive("v", v);
    require_positive("rho", rho);
    require_positive("rs_mag", rs_mag);
    if (!(rs_mag < 1.0))
        throw ValidationError("rs_mag", "must be < 1");
    require_positive("temperature", temperature);
}

void DeviceGeometry::validate() const
{
    require_positive("a", a);
    require_non_negative("aperture", aperture);
    require_non_negative("film_thickness", film_thickness);
    require_at_least("nt", nt, 2);
    require_at_least("ng", ng, 1);
    require_at_least("m_half_waves", m_half_waves, 1);
}

double one_minus_tanh(double x)
{
    if (x < 0.0)
        return 1.0 - std::tanh(x);
    return 2.0 / (std::exp(2.0 * x) + 1.0);
}

double grating_q(double cavity_length, double lambda0, double rs_mag, int ng)
{
    // pi Lc / (lambda0 (1 - tanh x)) == pi Lc / lambda0 * (exp(2x) + 1) / 2
    const double x = rs_mag * ng;
    const double geometric = constants::pi * cavity_length / lambda0;
    const double log_q = std::log(geometric) + 2.0 * x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
    if (log_q >= std::log(std::numeric_limits<double>::max()))
        return std::numeric_limits<double>::max();
    return geometric / one_minus_tanh(x);
}

DerivedParams derive_params(const DeviceGeometry &geom, const MaterialParams &mat)
{
    geom.validate();
    mat.validate();

    DerivedParams out;
    out.lambda0 = geom.wavelength();
    out.f0 = mat.v / out.lambda0;
    out.lp = geom.a / mat.rs_mag;
    out.d = geom.mirror_separation();
    out.lc = out.d + 2.0 * out.lp;
    out.fsr = mat.v / out.lc;
    out.r = std::tanh(geom.ng * mat.rs_mag);
    out.df_1sb = 2.0 * out.f0 * mat.rs_mag / constants::pi;
    out.df_idt = 1.8 * out.f0 / geom.nt;
    out.qg = grating_q(out.lc, out.lambda0, mat.rs_mag, geom.ng);
    return out;
}

FrequencyBand resolve_window(const DerivedParams &derived, const ModeWindow &window)
{
    auto centred = [&](double width) { return FrequencyBand{derived.f0 - 0.5 * width, derived.f0 + 0.5 * width}; };
    switch (window.kind)
    {
    case WindowKind::first_stopband:
        return centred(derived.df_1sb);
    case WindowKind::idt_bandwidth:
        return centred(derived.df_idt);
    case WindowKind::narrowest:
        return centred(std::min(derived.df_1sb, derived.df_idt));
    case WindowKind::explicit_band:
        detail::require_finite("window.lo", window.band.lo);
        detail::require_finite("window.hi", window.band.hi);
        return window.band;
    }
    return {};
}

std::vector<double> mode_frequencies(const DerivedParams &derived, const ModeWindow &window)
{
    require_positive("fsr", derived.fsr);
    require_positive("f0", derived.f0);
    const FrequencyBand band = resolve_window(derived, window);
    std::vector<double> modes;
    if (band.hi < band.lo)
        return modes;

    // Offsets are taken relative to f0 so symmetric windows give symmetric k ranges.
    constexpr double slack = 1e-12;
    const auto k_lo = static_cast<long long>(std::ceil((band.lo - derived.f0) / derived.fsr - slack));
    const auto k_hi = static_cast<long long>(std::floor((band.hi - derived.f0) / derived.fsr + slack));
    for (long long k = k_lo; k <= k_hi; ++k)
        modes.push_back(derived.f0 + static_cast<double>(k) * derived.fsr);
    return modes;
}

double external_q(const DeviceGeometry &geom, const DerivedParams &derived, double c_e)
{
    require_positive("c_e", c_e);
    require_positive("lc", derived.lc);
    require_at_least("nt", geom.nt, 2);
    const double nt = geom.nt;
    return c_e * derived.lc / (nt * nt);
}

double calibrate_external_q(double qe_measured, const DeviceGeometry &geom, const DerivedParams &derived)
{
    require_positive("qe_measured", qe_measured);
    require_positive("lc", derived.lc);
    require_at_least("nt", geom.nt, 2);
    const double nt = geom.nt;
    return qe_measured * nt * nt / derived.lc;
}

} // namespace sawres
