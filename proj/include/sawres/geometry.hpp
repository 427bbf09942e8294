#pragma once

#include <vector>

namespace sawres
{

/// Substrate and electrode properties shared by every device on a chip.
struct MaterialParams
{
    double v = 3100.0;          // SAW phase velocity [m/s]
    double rho = 2650.0;        // substrate mass density [kg/m^3], ST-X quartz
    double rs_mag = 0.002;      // per-electrode reflectivity |r_s|
    double temperature = 0.010; // [K]

    void validate() const;
};

/// Lithographic description of a one-port Fabry-Perot SAW resonator.
///
/// Electrodes and gaps are both `a` wide, so the design wavelength is 4a and
/// the mirror separation is an integer number of half wavelengths.
struct DeviceGeometry
{
    double a = 0.0;              // electrode/space width [m]
    double aperture = 0.0;       // transducer aperture W [m], metadata
    int nt = 0;                  // electrodes in the IDT
    int ng = 0;                  // electrodes per mirror
    int m_half_waves = 0;        // d = m * lambda0 / 2
    double film_thickness = 0.0; // metal thickness h [m], metadata

    double wavelength() const { return 4.0 * a; }
    double mirror_separation() const { return m_half_waves * 2.0 * a; }

    void validate() const;
};

struct DerivedParams
{
    double lambda0 = 0.0; // [m]
    double f0 = 0.0;      // nominal centre frequency v / lambda0 [Hz]
    double lp = 0.0;      // mirror penetration depth [m]
    double d = 0.0;       // mirror separation [m]
    double lc = 0.0;      // effective cavity length d + 2 Lp [m]
    double fsr = 0.0;     // free spectral range [Hz]
    double r = 0.0;       // mirror reflectivity tanh(Ng |r_s|)
    double df_1sb = 0.0;  // first-stopband width [Hz]
    double df_idt = 0.0;  // IDT bandwidth [Hz]
    double qg = 0.0;      // grating-limited quality factor
};

/// 1 - tanh(x) evaluated as 2 / (exp(2x) + 1); no cancellation for large x.
double one_minus_tanh(double x);

/// Grating-limited Q. Saturates at the largest finite double when the
/// mirror transmission underflows.
double grating_q(double cavity_length, double lambda0, double rs_mag, int ng);

DerivedParams derive_params(const DeviceGeometry &geom, const MaterialParams &mat);

struct FrequencyBand
{
    double lo = 0.0;
    double hi = 0.0;
};

enum class WindowKind
{
    first_stopband,
    idt_bandwidth,
    narrowest, // min(first stopband, IDT bandwidth), the default
    explicit_band,
};

struct ModeWindow
{
    WindowKind kind = WindowKind::narrowest;
    FrequencyBand band{}; // used only for explicit_band

    static ModeWindow explicit_range(double lo, double hi) { return {WindowKind::explicit_band, {lo, hi}}; }
};

FrequencyBand resolve_window(const DerivedParams &derived, const ModeWindow &window);

/// Longitudinal modes f0 + k FSR inside the window, ascending.
std::vector<double> mode_frequencies(const DerivedParams &derived, const ModeWindow &window = {});

/// Qe estimate from the Qe ~ Lc / Nt^2 scaling law.
double external_q(const DeviceGeometry &geom, const DerivedParams &derived, double c_e);

/// Scaling-law constant that makes external_q() reproduce `qe_measured`.
double calibrate_external_q(double qe_measured, const DeviceGeometry &geom, const DerivedParams &derived);

} // namespace sawres
