#pragma once

#include <complex>
#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "sawres/lineshape.hpp"

namespace sawres
{

struct ModeParams
{
    double f0 = 0.0; // [Hz]
    double qi = 0.0;
    double qe = 0.0;

    /// 1/Ql = 1/Qi + 1/Qe
    double loaded_q() const { return 1.0 / (1.0 / qi + 1.0 / qe); }
    double linewidth() const { return f0 / loaded_q(); }

    void validate() const;
};

/// Measurement-setup response, (amp0 + amp_slope (f - f_ref)) exp(i (phase0 - 2 pi delay (f - f_ref))).
struct BackgroundModel
{
    double amp0 = 1.0;      // magnitude at f_ref
    double amp_slope = 0.0; // [1/Hz]
    double phase0 = 0.0;    // phase at f_ref [rad]
    double delay = 0.0;     // group delay [s]
    double f_ref = 0.0;     // band centre the other terms refer to [Hz]

    std::complex<double> operator()(double f) const
    {
        return background_value(f, amp0, amp_slope, phase0, delay, f_ref);
    }

    static BackgroundModel unit() { return {}; }

    void validate() const;
};

struct TraceMeta
{
    double power_dbm = 0.0;      // drive power at the instrument
    double attenuation_db = 0.0; // line attenuation between instrument and sample
    double temperature = 0.010;  // [K]
};

struct ComplexTrace
{
    Eigen::VectorXd freqs;  // strictly increasing [Hz]
    Eigen::VectorXcd s11;
    TraceMeta meta{};

    Eigen::Index size() const { return freqs.size(); }

    /// Throws ValidationError unless the grid is strictly increasing, finite,
    /// has at least two points and matches the sample count.
    void validate() const;

    /// Copy of samples [first, first + count).
    ComplexTrace slice(Eigen::Index first, Eigen::Index count) const;
};

Eigen::VectorXd linear_grid(double f_lo, double f_hi, Eigen::Index points);

/// Circular complex Gaussian sample with E|n|^2 = sigma^2, determined only by
/// (seed, index) so chunked or parallel evaluation matches sequential output.
std::complex<double> complex_noise(std::uint64_t seed, std::uint64_t index, double sigma);

/// bg(f) * prod_k s11_single(f, mode_k) + noise. Modes compose
/// multiplicatively, which is accurate only for well-separated modes.
ComplexTrace synth_trace(std::span<const ModeParams> modes, const BackgroundModel &bg, const Eigen::VectorXd &grid,
                         double noise_sigma = 0.0, std::uint64_t seed = 0);

/// Pointwise division by bg(f); metadata kept.
ComplexTrace remove_background(const ComplexTrace &trace, const BackgroundModel &bg);

} // namespace sawres
