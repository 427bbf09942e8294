#pragma once

#include <complex>

#include <Eigen/Core>

#include "sawres/constants.hpp"

// Scalar-generic resonator lineshape, background and their parameter
// derivatives. Instantiated with double by the library; tests instantiate
// long double for finite-difference oracles.

namespace sawres
{

/// Layout of the real parameter vector used by the resonance fitter.
enum FitIndex : int
{
    kF0 = 0,
    kLogQi = 1,
    kLogQe = 2,
    kAmp0 = 3,
    kAmpSlope = 4,
    kPhase0 = 5,
    kDelay = 6,
    kFitParamCount = 7,
};

template <typename Scalar>
using FitVectorT = Eigen::Matrix<Scalar, kFitParamCount, 1>;
using FitVector = FitVectorT<double>;

template <typename Scalar>
using ModelGradientT = Eigen::Matrix<std::complex<Scalar>, 1, kFitParamCount>;

/// One-port reflection close to a single resonance:
///   S11 = ((Qe - Qi)/Qe + 2i Qi (f - f0)/f) / ((Qe + Qi)/Qe + 2i Qi (f - f0)/f)
template <typename Scalar>
std::complex<Scalar> s11_single(Scalar f, Scalar f0, Scalar qi, Scalar qe)
{
    const Scalar u = qi / qe;
    const Scalar x = Scalar(2) * qi * (f - f0) / f;
    return std::complex<Scalar>(Scalar(1) - u, x) / std::complex<Scalar>(Scalar(1) + u, x);
}

/// Instrument response: affine magnitude and linear (delay) phase about f_ref.
template <typename Scalar>
std::complex<Scalar> background_value(Scalar f, Scalar amp0, Scalar amp_slope, Scalar phase0, Scalar delay, Scalar f_ref)
{
    using std::cos;
    using std::sin;
    const Scalar df = f - f_ref;
    const Scalar gain = amp0 + amp_slope * df;
    const Scalar theta = phase0 - Scalar(2) * Scalar(constants::pi) * delay * df;
    return {gain * cos(theta), gain * sin(theta)};
}

template <typename Scalar>
std::complex<Scalar> resonator_model(Scalar f, const FitVectorT<Scalar> &p, Scalar f_ref)
{
    using std::exp;
    return background_value(f, p[kAmp0], p[kAmpSlope], p[kPhase0], p[kDelay], f_ref) *
           s11_single(f, p[kF0], exp(p[kLogQi]), exp(p[kLogQe]));
}

/// Analytic d(model)/d(p) at one frequency.
template <typename Scalar>
ModelGradientT<Scalar> resonator_model_gradient(Scalar f, const FitVectorT<Scalar> &p, Scalar f_ref)
{
    using std::exp;
    using C = std::complex<Scalar>;
    const Scalar qi = exp(p[kLogQi]);
    const Scalar qe = exp(p[kLogQe]);
    const Scalar u = qi / qe;
    const Scalar x = Scalar(2) * qi * (f - p[kF0]) / f;

    // M = (A + ix) / (C + ix), A = 1 - u, C = 1 + u
    const C den(Scalar(1) + u, x);
    const C num(Scalar(1) - u, x);
    const C den2 = den * den;
    const C m = num / den;
    const C dm_dx = C(0, Scalar(2) * u) / den2;
    const C dm_du = Scalar(-2) * C(Scalar(1), x) / den2;

    const C bg = background_value(f, p[kAmp0], p[kAmpSlope], p[kPhase0], p[kDelay], f_ref);
    const Scalar df = f - f_ref;
    const Scalar theta = p[kPhase0] - Scalar(2) * Scalar(constants::pi) * p[kDelay] * df;
    const C unit_phasor(std::cos(theta), std::sin(theta));

    ModelGradientT<Scalar> g;
    g[kF0] = bg * dm_dx * (Scalar(-2) * qi / f);
    g[kLogQi] = bg * (dm_du * u + dm_dx * x);
    g[kLogQe] = bg * (-dm_du * u);
    g[kAmp0] = unit_phasor * m;
    g[kAmpSlope] = unit_phasor * df * m;
    g[kPhase0] = C(0, 1) * bg * m;
    g[kDelay] = C(0, Scalar(-2) * Scalar(constants::pi) * df) * bg * m;
    return g;
}

} // namespace sawres
