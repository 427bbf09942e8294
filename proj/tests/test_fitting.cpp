#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sawres/errors.hpp"
#include "sawres/fitting.hpp"
#include "sawres/levenberg_marquardt.hpp"
#include "test_support.hpp"

using namespace sawres;
using sawres::testing::rel_err;

namespace
{

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

} // namespace

TEST_SUITE("fitting")
{
    TEST_CASE("LM recovers an exponential decay and never raises the cost")
    {
        Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(40, 0.0, 4.0);
        Eigen::VectorXd y = (2.5 * (-1.3 * t.array()).exp() + 0.2).matrix();
        auto eval = [&](const Eigen::VectorXd &x, Eigen::VectorXd &r, Eigen::MatrixXd *j) {
            const Eigen::ArrayXd e = (-x[1] * t.array()).exp();
            r = (x[0] * e + x[2]).matrix() - y;
            if (j)
            {
                j->resize(t.size(), 3);
                j->col(0) = e.matrix();
                j->col(1) = (-x[0] * t.array() * e).matrix();
                j->col(2).setOnes();
            }
        };
        const LmSummary s = levenberg_marquardt(eval, Eigen::Vector3d(1.0, 0.5, 0.0));
        CHECK(s.converged());
        CHECK(s.x[0] == doctest::Approx(2.5).epsilon(1e-8));
        CHECK(s.x[1] == doctest::Approx(1.3).epsilon(1e-8));
        CHECK(s.x[2] == doctest::Approx(0.2).epsilon(1e-8));
        for (std::size_t i = 1; i < s.cost_history.size(); ++i)
            CHECK(s.cost_history[i] < s.cost_history[i - 1]);
    }

    TEST_CASE("LM reports degenerate problems")
    {
        auto flat = [](const Eigen::VectorXd &x, Eigen::VectorXd &r, Eigen::MatrixXd *j) {
            r = Eigen::Vector2d(x[0] - 1.0, x[0] + 1.0);
            if (j)
            {
                j->resize(2, 2);
                *j << 1.0, 0.0, 1.0, 0.0;
            }
        };
        CHECK_THROWS_AS(levenberg_marquardt(flat, Eigen::Vector2d(0.0, 0.0)), DegenerateFitError);

        Eigen::MatrixXd collinear(3, 2);
        collinear << 1.0, 2.0, 2.0, 4.0, 3.0, 6.0;
        CHECK_THROWS_AS(linearized_covariance(collinear, Eigen::Vector3d(0.1, 0.2, 0.3)), DegenerateFitError);
    }

    TEST_CASE("noiseless p1 trace is recovered to machine-level accuracy")
    {
        const ModeParams truth{0.52e9, 453e3, 116e3};
        const BackgroundModel bg{0.6, 1e-7, 1.1, 40e-9, truth.f0};
        const ModeParams modes[] = {truth};
        const ComplexTrace t = synth_trace(modes, bg, sawres::testing::grid_around(truth, 10.0, 1001));
        const FitResult fit = fit_resonance(t);
        CHECK(fit.converged);
        CHECK(rel_err(fit.mode.qi, truth.qi) < 1e-8);
        CHECK(rel_err(fit.mode.qe, truth.qe) < 1e-8);
        CHECK(std::abs(fit.mode.f0 - truth.f0) < 1e-8 * truth.linewidth());
        CHECK(fit.residual_norm < 1e-9);
        CHECK(rel_err(fit.bg.amp0, 0.6) < 1e-7);
    }

    TEST_CASE("initial guess lands near the truth")
    {
        std::mt19937_64 rng(5);
        for (int k = 0; k < 50; ++k)
        {
            const auto c = sawres::testing::random_single_mode(rng, 100 + k);
            const ResonanceGuess g = initial_guess(c.trace);
            CHECK(std::abs(g.mode.f0 - c.truth.f0) < c.truth.linewidth());
            CHECK(g.mode.loaded_q() == doctest::Approx(c.truth.loaded_q()).epsilon(0.5));
            CHECK(g.bg.amp0 == doctest::Approx(c.bg.amp0).epsilon(0.3));
        }
    }

    TEST_CASE("seeded synthetic traces at 30 dB SNR")
    {
        std::mt19937_64 rng(11);
        std::vector<double> qi_err, qe_err;
        int converged = 0;
        for (int k = 0; k < 40; ++k)
        {
            const auto c = sawres::testing::random_single_mode(rng, 1000 + k);
            const FitResult fit = fit_resonance(c.trace);
            converged += fit.converged;
            qi_err.push_back(rel_err(fit.mode.qi, c.truth.qi));
            qe_err.push_back(rel_err(fit.mode.qe, c.truth.qe));
            CHECK(std::abs(fit.mode.f0 - c.truth.f0) < 0.1 * c.truth.linewidth());
            CHECK(fit.sigma.qi > 0.0);
        }
        CHECK(converged == 40);
        CHECK(median(qi_err) < 0.02);
        CHECK(median(qe_err) < 0.02);
    }

    TEST_CASE("reported sigma matches the scatter of repeated noise draws")
    {
        const ModeParams truth{3.1e9, 74.7e3, 657e3};
        const BackgroundModel bg{0.3, 0.0, -0.5, 10e-9, truth.f0};
        const ModeParams modes[] = {truth};
        const Eigen::VectorXd grid = sawres::testing::grid_around(truth, 10.0, 801);
        std::vector<double> qi;
        double sigma_sum = 0.0;
        const int reps = 60;
        for (int k = 0; k < reps; ++k)
        {
            const FitResult fit = fit_resonance(synth_trace(modes, bg, grid, 0.01, 500 + k));
            qi.push_back(fit.mode.qi);
            sigma_sum += fit.sigma.qi;
        }
        double mean = 0.0;
        for (double q : qi)
            mean += q / reps;
        double var = 0.0;
        for (double q : qi)
            var += (q - mean) * (q - mean) / (reps - 1);
        CHECK(std::sqrt(var) == doctest::Approx(sigma_sum / reps).epsilon(0.35));
    }

    TEST_CASE("bootstrap errors agree with the linearised ones")
    {
        const ModeParams truth{3.1e9, 74.7e3, 657e3};
        const BackgroundModel bg{0.3, 0.0, -0.5, 10e-9, truth.f0};
        const ModeParams modes[] = {truth};
        const ComplexTrace t = synth_trace(modes, bg, sawres::testing::grid_around(truth, 10.0, 801), 0.01, 3);
        const FitResult fit = fit_resonance(t);
        const BootstrapErrors a = bootstrap_errors(t, fit, 60, 9);
        const BootstrapErrors b = bootstrap_errors(t, fit, 60, 9);
        CHECK(a.qi == b.qi);
        CHECK(a.replicates == 60);
        CHECK(a.qi == doctest::Approx(fit.sigma.qi).epsilon(0.4));
        CHECK(a.qe == doctest::Approx(fit.sigma.qe).epsilon(0.4));
        CHECK_THROWS_AS(bootstrap_errors(t, fit, 1, 9), ValidationError);
    }

    TEST_CASE("flat trace has no dip")
    {
        const Eigen::VectorXd grid = linear_grid(1e9, 1.001e9, 400);
        const ComplexTrace noise_only = synth_trace({}, BackgroundModel{0.5, 0.0, 0.2, 0.0, 1e9}, grid, 0.005, 1);
        CHECK_THROWS_AS(fit_resonance(noise_only), NoDipFoundError);
        CHECK(find_dips(noise_only).empty());
        CHECK(fit_multimode(noise_only).empty());
    }

    TEST_CASE("invalid configuration is rejected")
    {
        const ModeParams truth{1e9, 1e4, 1e4};
        const ModeParams modes[] = {truth};
        const ComplexTrace t = synth_trace(modes, BackgroundModel::unit(), sawres::testing::grid_around(truth, 10, 201));
        FitConfig bad;
        bad.max_iter = 0;
        CHECK_THROWS_AS(fit_resonance(t, bad), ValidationError);
        bad = {};
        bad.damping_down = 1.5;
        CHECK_THROWS_AS(fit_resonance(t, bad), ValidationError);
    }

    TEST_CASE("iteration cap reports a non-converged fit")
    {
        const ModeParams truth{1e9, 2e4, 5e4};
        const ModeParams modes[] = {truth};
        const ComplexTrace t =
            synth_trace(modes, BackgroundModel::unit(), sawres::testing::grid_around(truth, 10, 401), 1e-3, 4);
        FitConfig capped;
        capped.max_iter = 1;
        ResonanceGuess far{{truth.f0 + 2.0 * truth.linewidth(), 1e5, 1e4}, BackgroundModel::unit()};
        far.bg.f_ref = truth.f0;
        const FitResult fit = fit_resonance(t, capped, far);
        CHECK_FALSE(fit.converged);
        CHECK(fit.n_iter == 1);
    }

    TEST_CASE("three well-separated modes")
    {
        const std::vector<ModeParams> modes{{1.000e9, 5e4, 8e4}, {1.002e9, 3e4, 3e4}, {1.004e9, 8e4, 4e4}};
        const BackgroundModel bg{0.4, 0.0, 0.7, 15e-9, 1.002e9};
        const ComplexTrace t = synth_trace(modes, bg, linear_grid(0.999e9, 1.005e9, 60001), 0.002, 21);
        const auto fits = fit_multimode(t);
        REQUIRE(fits.size() == 3);
        for (std::size_t k = 0; k < 3; ++k)
        {
            CHECK(fits[k].converged);
            CHECK_FALSE(fits[k].window_overlap);
            CHECK(rel_err(fits[k].mode.qi, modes[k].qi) < 0.03);
            CHECK(rel_err(fits[k].mode.qe, modes[k].qe) < 0.03);
        }
    }

    TEST_CASE("colliding windows are flagged")
    {
        const std::vector<ModeParams> modes{{1.0e9, 2e4, 2e4}, {1.0e9 + 4.0 * 1.0e9 / 1e4, 2e4, 2e4}};
        const ComplexTrace t = synth_trace(modes, BackgroundModel::unit(), linear_grid(0.9995e9, 1.0009e9, 4001));
        const auto fits = fit_multimode(t);
        REQUIRE(fits.size() == 2);
        CHECK(fits[0].window_overlap);
        CHECK(fits[1].window_overlap);
    }

    TEST_CASE("a constant complex factor only moves the background")
    {
        std::mt19937_64 rng(23);
        for (int k = 0; k < 20; ++k)
        {
            const auto c = sawres::testing::random_single_mode(rng, 300 + k);
            const std::complex<double> factor = std::polar(sawres::testing::uniform(rng, 0.1, 10.0),
                                                           sawres::testing::uniform(rng, -3.0, 3.0));
            ComplexTrace scaled = c.trace;
            scaled.s11 *= factor;
            const FitResult a = fit_resonance(c.trace);
            const FitResult b = fit_resonance(scaled);
            CHECK(std::abs(a.mode.f0 - b.mode.f0) < 1e-6 * a.mode.linewidth());
            CHECK(rel_err(b.mode.qi, a.mode.qi) < 1e-6);
            CHECK(rel_err(b.mode.qe, a.mode.qe) < 1e-6);
            CHECK(rel_err(b.bg.amp0, a.bg.amp0 * std::abs(factor)) < 1e-6);
        }
    }

    TEST_CASE("one-sigma error bars cover the truth at a plausible rate")
    {
        std::mt19937_64 rng(41);
        int covered_qi = 0, covered_qe = 0;
        const int reps = 200;
        for (int k = 0; k < reps; ++k)
        {
            const auto c = sawres::testing::random_single_mode(rng, 7000 + k);
            const FitResult fit = fit_resonance(c.trace);
            covered_qi += std::abs(fit.mode.qi - c.truth.qi) <= fit.sigma.qi;
            covered_qe += std::abs(fit.mode.qe - c.truth.qe) <= fit.sigma.qe;
        }
        CHECK(covered_qi >= 0.6 * reps);
        CHECK(covered_qe >= 0.6 * reps);
    }

    TEST_CASE("single-mode trace through the multimode path")
    {
        const ModeParams truth{3.1e9, 74.7e3, 657e3};
        const BackgroundModel bg{0.3, 0.0, -0.5, 10e-9, truth.f0};
        const ModeParams modes[] = {truth};
        const ComplexTrace t = synth_trace(modes, bg, sawres::testing::grid_around(truth, 8.0, 1601), 0.005, 2);
        const auto fits = fit_multimode(t);
        REQUIRE(fits.size() == 1);
        const FitResult direct = fit_resonance(t);
        CHECK(fits[0].mode.f0 == direct.mode.f0);
        CHECK(fits[0].mode.qi == direct.mode.qi);
        CHECK(fits[0].mode.qe == direct.mode.qe);
        CHECK(fits[0].sigma.qi == direct.sigma.qi);
    }

    TEST_CASE("averaging the five central modes of a short comb")
    {
        const double fsr = 2.5525e6;
        const double fc = 3.09e9;
        std::mt19937_64 rng(6);
        std::vector<ModeParams> modes;
        for (int k = -4; k <= 4; ++k)
            modes.push_back({fc + k * fsr, 74.7e3 * sawres::testing::uniform(rng, 0.9, 1.1), 657e3});
        const BackgroundModel bg{0.25, 0.0, 1.3, 25e-9, fc};
        const ComplexTrace t = synth_trace(modes, bg, linear_grid(fc - 5.0 * fsr, fc + 5.0 * fsr, 40001), 0.001, 8);
        const auto fits = fit_multimode(t);
        REQUIRE(fits.size() == 9);
        double fitted = 0.0, truth = 0.0;
        for (std::size_t k = 2; k < 7; ++k)
        {
            CHECK(fits[k].converged);
            fitted += fits[k].mode.qi / 5.0;
            truth += modes[k].qi / 5.0;
        }
        CHECK(rel_err(fitted, truth) < 0.01);
    }

    TEST_CASE("noisy p1 round trip")
    {
        const ModeParams truth{0.524e9, 453e3, 116e3};
        const BackgroundModel bg{1.0, 0.0, 0.0, 0.0, truth.f0};
        const ModeParams modes[] = {truth};
        const ComplexTrace t = synth_trace(modes, bg, sawres::testing::grid_around(truth, 10.0, 2001), 0.001, 52);
        const FitResult fit = fit_resonance(t);
        CHECK(fit.converged);
        CHECK(rel_err(fit.mode.qi, truth.qi) < 0.01);
        CHECK(rel_err(fit.mode.qe, truth.qe) < 0.01);
        CHECK(std::abs(fit.mode.f0 - truth.f0) < 0.1 * truth.linewidth());
    }

    TEST_CASE("noiseless guesses are within 20 percent")
    {
        std::mt19937_64 rng(13);
        for (int k = 0; k < 100; ++k)
        {
            auto c = sawres::testing::random_single_mode(rng, 0, 30.0);
            const ModeParams modes[] = {c.truth};
            c.trace = synth_trace(modes, c.bg, c.trace.freqs);
            const ResonanceGuess g = initial_guess(c.trace);
            CHECK(rel_err(g.mode.qi, c.truth.qi) < 0.2);
            CHECK(rel_err(g.mode.qe, c.truth.qe) < 0.2);
            CHECK(std::abs(g.mode.f0 - c.truth.f0) < 0.2 * c.truth.linewidth());
        }
    }

    TEST_CASE("critical coupling guess splits Q evenly")
    {
        const ModeParams truth{2e9, 5e4, 5e4};
        const ModeParams modes[] = {truth};
        const ComplexTrace t = synth_trace(modes, BackgroundModel{0.5, 0.0, 0.4, 0.0, 2e9},
                                           sawres::testing::grid_around(truth, 10.0, 1001));
        const ResonanceGuess g = initial_guess(t);
        CHECK(rel_err(g.mode.qi, g.mode.qe) < 0.1);
    }

    TEST_CASE("all-ones trace has no dip")
    {
        ComplexTrace ones;
        ones.freqs = linear_grid(1e9, 1.001e9, 200);
        ones.s11 = Eigen::VectorXcd::Ones(200);
        CHECK_THROWS_AS(initial_guess(ones), NoDipFoundError);
    }

    TEST_CASE("swapped Qi and Qe in the starting point still reach the truth")
    {
        std::mt19937_64 rng(29);
        int recovered = 0;
        for (int k = 0; k < 100; ++k)
        {
            const auto c = sawres::testing::random_single_mode(rng, 4000 + k);
            ResonanceGuess swapped = initial_guess(c.trace);
            std::swap(swapped.mode.qi, swapped.mode.qe);
            const FitResult fit = fit_resonance(c.trace, {}, swapped);
            recovered += fit.converged && rel_err(fit.mode.qi, c.truth.qi) < 0.1 && rel_err(fit.mode.qe, c.truth.qe) < 0.1;
        }
        CHECK(recovered == 100);
    }
}
