#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sawres/response.hpp"

namespace sawres
{

struct FitConfig
{
    int max_iter = 200;
    double rel_tolerance = 1e-10;      // RMS model change of a step, in trace units
    double gradient_tolerance = 1e-6;  // required of a converged fit (gradient cosine)
    double initial_damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.3;
    double window_linewidths = 10.0;   // per-mode half window for fit_multimode
    double min_prominence_sigma = 8.0; // dip detection threshold in noise floors
    double min_prominence = 1e-3;      // and relative to the median magnitude

    void validate() const;
};

struct FitErrors
{
    double f0 = 0.0;
    double qi = 0.0;
    double qe = 0.0;
    double amp0 = 0.0;
    double amp_slope = 0.0;
    double phase0 = 0.0;
    double delay = 0.0;
};

struct FitResult
{
    ModeParams mode;
    BackgroundModel bg;
    FitErrors sigma;
    double residual_norm = 0.0;   // RMS complex residual
    double gradient_cosine = 0.0; // at the returned parameters
    int n_iter = 0;
    bool converged = false;
    bool window_overlap = false;  // set by fit_multimode when windows collide
};

struct ResonanceGuess
{
    ModeParams mode;
    BackgroundModel bg;
};

/// Starting point for fit_resonance from a single-dip trace.
///
/// The background comes from the outer tenth of the trace on each side. f0 is
/// the minimum of the background-normalised magnitude, the loaded Q is taken
/// from the half-depth width of |S11|^2, and the Qi/Qe split from the real
/// part of the normalised response at f0, which is (Qe - Qi)/(Qe + Qi).
/// Throws NoDipFoundError when the dip is shallower than 3 noise floors.
ResonanceGuess initial_guess(const ComplexTrace &trace);

/// Complex least-squares fit of background x single-mode lineshape over
/// (f0, ln Qi, ln Qe, amp0, amp_slope, phase0, delay).
///
/// A non-converged fit is returned with converged = false; singular normal
/// equations throw DegenerateFitError.
FitResult fit_resonance(const ComplexTrace &trace, const FitConfig &config = {},
                        const std::optional<ResonanceGuess> &guess = std::nullopt);

/// Locates dips by prominence, fits each within +-window_linewidths loaded
/// linewidths and returns the fits sorted by f0.
std::vector<FitResult> fit_multimode(const ComplexTrace &trace, const FitConfig &config = {});

/// Dip indices found by the prominence scan, ascending.
std::vector<Eigen::Index> find_dips(const ComplexTrace &trace, const FitConfig &config = {});

struct BootstrapErrors
{
    double f0 = 0.0;
    double qi = 0.0;
    double qe = 0.0;
    int replicates = 0;
};

/// Residual bootstrap around a converged fit: refits `replicates` traces built
/// from the fitted model plus resampled residuals.
BootstrapErrors bootstrap_errors(const ComplexTrace &trace, const FitResult &fit, int replicates,
                                 std::uint64_t seed, const FitConfig &config = {});

/// Packs mode and background into the fitter's parameter vector.
FitVector to_fit_vector(const ModeParams &mode, const BackgroundModel &bg);

/// Stacked real Jacobian, rows (Re, Im) per frequency, of the fit model.
Eigen::MatrixXd model_jacobian(const Eigen::VectorXd &freqs, const FitVector &p, double f_ref);

} // namespace sawres
