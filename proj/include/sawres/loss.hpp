#pragma once

#include <span>
#include <vector>

#include "sawres/geometry.hpp"
#include "sawres/response.hpp"

namespace sawres
{

// ---------------------------------------------------------------------------
// Grating + propagation loss budget
// ---------------------------------------------------------------------------

struct LossBudget
{
    double qg = 0.0;
    double alpha_p = 0.0; // [1/m]
    double qi_pred = 0.0;
};

/// Propagation-loss-limited Q, pi f0 / (v alpha_p); infinite for alpha_p = 0.
double propagation_q(double f0, double v, double alpha_p);

/// Qi = (1/Qg + v alpha_p / (pi f0))^-1 at the nominal f0 of `derived`.
double predict_qi(const DerivedParams &derived, double alpha_p, const MaterialParams &mat);

LossBudget loss_budget(const DerivedParams &derived, double alpha_p, const MaterialParams &mat);

struct RsAlphaSample
{
    double d = 0.0;       // mirror separation [m]
    double f0_meas = 0.0; // [Hz]
    double qi_meas = 0.0;
};

struct RsAlphaFit
{
    double rs_mag = 0.0;
    double alpha_p = 0.0; // [1/m]
    double rs_sigma = 0.0;
    double alpha_sigma = 0.0;
    double residual_rms = 0.0; // RMS of ln(Qi_model / Qi_meas)
    int n_iter = 0;
    bool converged = false;

    /// One-sigma upper bound on alpha_p.
    double alpha_upper() const { return alpha_p + alpha_sigma; }
};

/// Qi of a device with the template's electrode layout, separation `d`, and
/// the given |r_s| and alpha_p, using `f0` for the propagation term.
double model_qi(const DeviceGeometry &geom_template, const MaterialParams &mat, double d, double f0, double rs_mag,
                double alpha_p);

/// Least squares of ln Qi over (ln |r_s|, ln alpha_p). Needs at least four
/// devices spanning a factor 5 in d. Standard errors are reported for the
/// linear parameters, so a fit that runs alpha_p to zero still carries a
/// finite upper limit.
RsAlphaFit fit_rs_alpha(std::span<const RsAlphaSample> dataset, const DeviceGeometry &geom_template,
                        const MaterialParams &mat);

// ---------------------------------------------------------------------------
// Frequency power law  Qi / 1e3 = c1 (f / GHz)^-c2
// ---------------------------------------------------------------------------

struct PowerLawSample
{
    double f0 = 0.0; // [Hz]
    double qi = 0.0;
};

struct PowerLaw
{
    double c1 = 0.0; // [1e3 GHz^c2]
    double c2 = 0.0;
    double c1_sigma = 0.0;
    double c2_sigma = 0.0;

    /// Qi at frequency f [Hz].
    double operator()(double f) const;
};

/// Ordinary least squares of ln(Qi/1e3) on ln(f/GHz). Standard errors are
/// zero when there are no residual degrees of freedom.
PowerLaw fit_powerlaw(std::span<const PowerLawSample> dataset);

// ---------------------------------------------------------------------------
// Two-level-system saturation
// ---------------------------------------------------------------------------

enum class TlsConvention
{
    per_length, // 2 pi^2 f0 n0 gamma^2 / (rho v^3): attenuation per metre (default)
    as_printed, // 2 pi^2 f0 n0 gamma^2 / (rho v^2): a rate, kept for comparison
};

struct TlsParams
{
    double n0_gamma2 = 0.0;     // [J/m^3]
    double p_c = 0.0;           // critical power at the sample [W]
    double q_rl = 0.0;          // residual-loss Q
    double rho = 2650.0;        // [kg/m^3]
    double v = 3100.0;          // [m/s]
    double f0 = 0.0;            // [Hz]
    double temperature = 0.010; // [K]

    void validate() const;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

double tls_alpha(double p_at_sample, const TlsParams &ctx, TlsConvention convention = TlsConvention::per_length);

/// Qi(P) = (v alpha_TLS / (pi f0) + 1 / Q_rl)^-1
double tls_qi(double p_at_sample, const TlsParams &ctx, TlsConvention convention = TlsConvention::per_length);

struct TlsSample
{
    double p_dbm_at_instrument = 0.0;
    double qi_meas = 0.0;
};

struct TlsFit
{
    TlsParams params;
    double n0_gamma2_sigma = 0.0;
    double p_c_sigma = 0.0;
    double q_rl_sigma = 0.0;
    double residual_rms = 0.0; // RMS of ln(Qi_model / Qi_meas)
    int n_iter = 0;
    bool converged = false;

    double qi_low_power() const { return tls_qi(0.0, params); }
};

/// Fits (n0 gamma^2, P_c, Q_rl) on log-Q residuals. `attenuation_db` is the
/// instrument-to-sample loss as a positive number of dB. `ctx` supplies rho,
/// v, f0 and T; positive n0_gamma2 / p_c / q_rl in it seed the search.
TlsFit fit_tls(std::span<const TlsSample> dataset, double attenuation_db, const TlsParams &ctx);

// ---------------------------------------------------------------------------
// Derived estimators
// ---------------------------------------------------------------------------

/// Mean phonon number of a resonantly driven one-port mode,
/// n = 4 Ql^2 P / (Qe hbar w0^2).
double phonon_number(double p_at_sample, const ModeParams &mode);

/// l = 1 / alpha_p; throws InfinitePathError for alpha_p = 0.
double mean_free_path(double alpha_p);

/// g / 2 pi = e beta V0_rms / (2 pi hbar), in Hz.
double coupling_estimate(double beta, double v0_rms);

} // namespace sawres
