#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sawres/dataio.hpp"
#include "sawres/response.hpp"

namespace sawres::testing
{

inline double rel_err(double got, double want)
{
    return std::abs(got - want) / std::abs(want);
}

inline double log_uniform(std::mt19937_64 &rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

inline double uniform(std::mt19937_64 &rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Grid of `points` samples spanning +-`half_linewidths` loaded linewidths of `mode`.
inline Eigen::VectorXd grid_around(const ModeParams &mode, double half_linewidths, Eigen::Index points,
                                   double centre_offset = 0.0)
{
    const double half = half_linewidths * mode.linewidth();
    const double centre = mode.f0 + centre_offset * mode.linewidth();
    return linear_grid(centre - half, centre + half, points);
}

/// A single-mode synthetic measurement with its ground truth.
struct SyntheticCase
{
    ModeParams truth;
    BackgroundModel bg;
    ComplexTrace trace;
};

/// Qi log-uniform in [1e4, 1e6], Qi/Qe log-uniform in [0.1, 10] with Qe kept in
/// the same range, random background, complex noise at `snr_db` below amp0,
/// sampled over +-10 loaded linewidths.
inline SyntheticCase random_single_mode(std::mt19937_64 &rng, std::uint64_t noise_seed, double snr_db = 30.0,
                                        Eigen::Index points = 2001)
{
    ModeParams mode;
    do
    {
        mode.qi = log_uniform(rng, 1e4, 1e6);
        mode.qe = mode.qi / log_uniform(rng, 0.1, 10.0);
    } while (mode.qe < 1e4 || mode.qe > 1e6);
    mode.f0 = log_uniform(rng, 0.3e9, 5e9);

    BackgroundModel bg;
    bg.amp0 = uniform(rng, 0.05, 1.0);
    bg.f_ref = mode.f0 + uniform(rng, -2.0, 2.0) * mode.linewidth();
    bg.amp_slope = uniform(rng, -0.02, 0.02) * bg.amp0 / mode.linewidth();
    bg.phase0 = uniform(rng, -3.1, 3.1);
    bg.delay = uniform(rng, -0.01, 0.01) / mode.linewidth();

    const double sigma = bg.amp0 * std::pow(10.0, -snr_db / 20.0);
    const Eigen::VectorXd grid = grid_around(mode, 10.0, points, uniform(rng, -0.5, 0.5));
    const ModeParams modes[] = {mode};
    return {mode, bg, synth_trace(modes, bg, grid, sigma, noise_seed)};
}

} // namespace sawres::testing
