#include "sawres/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "sawres/constants.hpp"
#include "sawres/levenberg_marquardt.hpp"
#include "validate.hpp"

namespace sawres
{

using constants::pi;
using detail::require_non_negative;
using detail::require_positive;

double propagation_q(double f0, double v, double alpha_p)
{
    require_positive("f0", f0);
    require_positive("v", v);
    require_non_negative("alpha_p", alpha_p);
    if (alpha_p == 0.0)
        return std::numeric_limits<double>::infinity();
    return pi * f0 / (v * alpha_p);
}

double predict_qi(const DerivedParams &derived, double alpha_p, const MaterialParams &mat)
{
    mat.validate();
    require_positive("qg", derived.qg);
    require_positive("f0", derived.f0);
    require_non_negative("alpha_p", alpha_p);
    if (alpha_p == 0.0)
        return derived.qg;
    return 1.0 / (1.0 / derived.qg + mat.v * alpha_p / (pi * derived.f0));
}

LossBudget loss_budget(const DerivedParams &derived, double alpha_p, const MaterialParams &mat)
{
    return {derived.qg, alpha_p, predict_qi(derived, alpha_p, mat)};
}

namespace
{

struct RsAlphaModel
{
    double a;
    double lambda0;
    int ng;
    double v;

    // ln Qi and its derivatives w.r.t. rs and alpha (linear parameters).
    struct Value
    {
        double log_qi;
        double d_rs;
        double d_alpha;
    };

    Value operator()(double d, double f0, double rs, double alpha) const
    {
        const double x = rs * ng;
        const double omt = one_minus_tanh(x);
        const double lc = d + 2.0 * a / rs;
        const double inv_qg = lambda0 * omt / (pi * lc);
        const double k = v / (pi * f0);
        const double inv_qi = inv_qg + k * alpha;

        const double d_omt = -omt * (2.0 - omt) * ng;
        const double d_lc = -2.0 * a / (rs * rs);
        const double d_inv_qg = lambda0 / pi * (d_omt / lc - omt * d_lc / (lc * lc));
        return {-std::log(inv_qi), -d_inv_qg / inv_qi, -k / inv_qi};
    }
};

void require_dataset_size(std::size_t size, std::size_t minimum)
{
    if (size < minimum)
        throw ValidationError("dataset", "needs at least " + std::to_string(minimum) + " entries, got " +
                                             std::to_string(size));
}

} // namespace

double model_qi(const DeviceGeometry &geom_template, const MaterialParams &mat, double d, double f0, double rs_mag,
                double alpha_p)
{
    require_positive("d", d);
    require_positive("f0", f0);
    require_positive("rs_mag", rs_mag);
    require_non_negative("alpha_p", alpha_p);
    const RsAlphaModel model{geom_template.a, geom_template.wavelength(), geom_template.ng, mat.v};
    return std::exp(model(d, f0, rs_mag, alpha_p).log_qi);
}

RsAlphaFit fit_rs_alpha(std::span<const RsAlphaSample> dataset, const DeviceGeometry &geom_template,
                        const MaterialParams &mat)
{
    geom_template.validate();
    mat.validate();
    require_dataset_size(dataset.size(), 4);
    double d_min = HUGE_VAL;
    double d_max = 0.0;
    for (const auto &s : dataset)
    {
        require_positive("dataset.d", s.d);
        require_positive("dataset.f0_meas", s.f0_meas);
        require_positive("dataset.qi_meas", s.qi_meas);
        d_min = std::min(d_min, s.d);
        d_max = std::max(d_max, s.d);
    }
    if (d_max == d_min)
        throw DegenerateFitError("all devices share the same mirror separation");
    if (d_max < 5.0 * d_min)
        throw ValidationError("dataset.d", "must span at least a factor 5");

    const RsAlphaModel model{geom_template.a, geom_template.wavelength(), geom_template.ng, mat.v};
    const auto m = static_cast<Eigen::Index>(dataset.size());

    auto evaluate = [&](const Eigen::VectorXd &x, Eigen::VectorXd &r, Eigen::MatrixXd *jac) {
        const double rs = std::exp(x[0]);
        const double alpha = std::exp(x[1]);
        r.resize(m);
        if (jac)
            jac->resize(m, 2);
        for (Eigen::Index i = 0; i < m; ++i)
        {
            const auto &s = dataset[static_cast<std::size_t>(i)];
            const auto val = model(s.d, s.f0_meas, rs, alpha);
            r[i] = val.log_qi - std::log(s.qi_meas);
            if (jac)
                jac->row(i) << val.d_rs * rs, val.d_alpha * alpha;
        }
    };

    // Coarse log grid for the starting point; the cost surface has a long
    // shallow valley in alpha.
    Eigen::Vector2d best(std::log(mat.rs_mag), std::log(1.0));
    double best_cost = HUGE_VAL;
    Eigen::VectorXd r;
    for (int i = 0; i <= 40; ++i)
    {
        for (int j = 0; j <= 40; ++j)
        {
            const Eigen::Vector2d x(std::log(1e-4) + i * std::log(500.0) / 40.0, std::log(1e-3) + j * std::log(1e7) / 40.0);
            evaluate(x, r, nullptr);
            if (r.allFinite() && r.squaredNorm() < best_cost)
            {
                best_cost = r.squaredNorm();
                best = x;
            }
        }
    }

    const LmSummary summary = levenberg_marquardt(evaluate, best);
    RsAlphaFit out;
    out.rs_mag = std::exp(summary.x[0]);
    out.alpha_p = std::exp(summary.x[1]);
    out.n_iter = summary.iterations;
    out.converged = summary.converged();
    out.residual_rms = std::sqrt(summary.residual.squaredNorm() / static_cast<double>(m));

    Eigen::MatrixXd jac_linear(m, 2);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const auto &s = dataset[static_cast<std::size_t>(i)];
        const auto val = model(s.d, s.f0_meas, out.rs_mag, out.alpha_p);
        jac_linear.row(i) << val.d_rs, val.d_alpha;
    }
    const Eigen::MatrixXd cov = linearized_covariance(jac_linear, summary.residual);
    out.rs_sigma = std::sqrt(cov(0, 0));
    out.alpha_sigma = std::sqrt(cov(1, 1));
    return out;
}

double PowerLaw::operator()(double f) const
{
    return 1e3 * c1 * std::pow(f / 1e9, -c2);
}

PowerLaw fit_powerlaw(std::span<const PowerLawSample> dataset)
{
    require_dataset_size(dataset.size(), 2);
    const auto m = static_cast<Eigen::Index>(dataset.size());
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const auto &s = dataset[static_cast<std::size_t>(i)];
        require_positive("dataset.f0", s.f0);
        require_positive("dataset.qi", s.qi);
        design.row(i) << 1.0, std::log(s.f0 / 1e9);
        y[i] = std::log(s.qi / 1e3);
    }
    const Eigen::VectorXd x = design.col(1);
    if ((x.array() - x.mean()).abs().maxCoeff() <= 1e-12)
        throw DegenerateFitError("power-law fit needs at least two distinct frequencies");

    const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd residual = design * beta - y;
    const Eigen::Matrix2d cov = linearized_covariance(design, residual);

    PowerLaw out;
    out.c1 = std::exp(beta[0]);
    out.c2 = -beta[1];
    out.c1_sigma = out.c1 * std::sqrt(cov(0, 0));
    out.c2_sigma = std::sqrt(cov(1, 1));
    return out;
}

void TlsParams::validate() const
{
    require_positive("n0_gamma2", n0_gamma2);
    require_positive("p_c", p_c);
    require_positive("q_rl", q_rl);
    require_positive("rho", rho);
    require_positive("v", v);
    require_positive("f0", f0);
    require_positive("temperature", temperature);
}

double dbm_to_watts(double dbm)
{
    detail::require_finite("dbm", dbm);
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double watts_to_dbm(double watts)
{
    require_positive("watts", watts);
    return 10.0 * std::log10(watts) + 30.0;
}

namespace
{

double tls_alpha_unchecked(double p, const TlsParams &ctx, TlsConvention convention)
{
    const double v_power = convention == TlsConvention::per_length ? ctx.v * ctx.v * ctx.v : ctx.v * ctx.v;
    const double thermal =
        std::tanh(constants::planck * ctx.f0 / (2.0 * constants::boltzmann * ctx.temperature));
    return 2.0 * pi * pi * ctx.f0 * ctx.n0_gamma2 / (ctx.rho * v_power) / std::sqrt(1.0 + p / ctx.p_c) * thermal;
}

double tls_qi_unchecked(double p, const TlsParams &ctx, TlsConvention convention)
{
    return 1.0 / (ctx.v * tls_alpha_unchecked(p, ctx, convention) / (pi * ctx.f0) + 1.0 / ctx.q_rl);
}

} // namespace

double tls_alpha(double p_at_sample, const TlsParams &ctx, TlsConvention convention)
{
    require_non_negative("p_at_sample", p_at_sample);
    ctx.validate();
    return tls_alpha_unchecked(p_at_sample, ctx, convention);
}

double tls_qi(double p_at_sample, const TlsParams &ctx, TlsConvention convention)
{
    require_non_negative("p_at_sample", p_at_sample);
    ctx.validate();
    return tls_qi_unchecked(p_at_sample, ctx, convention);
}

TlsFit fit_tls(std::span<const TlsSample> dataset, double attenuation_db, const TlsParams &ctx)
{
    require_dataset_size(dataset.size(), 4);
    detail::require_finite("attenuation_db", attenuation_db);
    require_positive("rho", ctx.rho);
    require_positive("v", ctx.v);
    require_positive("f0", ctx.f0);
    require_positive("temperature", ctx.temperature);

    const auto m = static_cast<Eigen::Index>(dataset.size());
    Eigen::VectorXd power(m);
    Eigen::VectorXd log_q(m);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const auto &s = dataset[static_cast<std::size_t>(i)];
        require_positive("dataset.qi_meas", s.qi_meas);
        power[i] = dbm_to_watts(s.p_dbm_at_instrument - std::abs(attenuation_db));
        log_q[i] = std::log(s.qi_meas);
    }
    if (power.maxCoeff() < 1e3 * power.minCoeff())
        throw ValidationError("dataset.p_dbm_at_instrument", "insufficient power span, need at least 3 decades");

    auto params_from = [&](const Eigen::VectorXd &x) {
        TlsParams p = ctx;
        p.n0_gamma2 = std::exp(x[0]);
        p.p_c = std::exp(x[1]);
        p.q_rl = std::exp(x[2]);
        return p;
    };
    auto residual = [&](const Eigen::VectorXd &x, Eigen::VectorXd &r) {
        const TlsParams p = params_from(x);
        r.resize(m);
        for (Eigen::Index i = 0; i < m; ++i)
            r[i] = std::log(tls_qi_unchecked(power[i], p, TlsConvention::per_length)) - log_q[i];
    };
    auto evaluate = [&](const Eigen::VectorXd &x, Eigen::VectorXd &r, Eigen::MatrixXd *jac) {
        residual(x, r);
        if (!jac)
            return;
        jac->resize(m, 3);
        Eigen::VectorXd hi;
        Eigen::VectorXd lo;
        constexpr double h = 1e-6;
        for (int k = 0; k < 3; ++k)
        {
            Eigen::VectorXd xp = x;
            Eigen::VectorXd xm = x;
            xp[k] += h;
            xm[k] -= h;
            residual(xp, hi);
            residual(xm, lo);
            jac->col(k) = (hi - lo) / (2.0 * h);
        }
    };

    // Heuristic start: Q_rl just above the highest Qi, TLS loss from the
    // lowest Qi, P_c scanned across the measured power range.
    const double q_max = std::exp(log_q.maxCoeff());
    const double q_min = std::exp(log_q.minCoeff());
    const double q_rl0 = ctx.q_rl > 0 ? ctx.q_rl : 1.05 * q_max;
    const double inv_tls = std::max(1.0 / q_min - 1.0 / q_rl0, 1e-3 / q_rl0);
    TlsParams unit = ctx;
    unit.n0_gamma2 = 1.0;
    unit.p_c = 1.0;
    unit.q_rl = 1.0;
    const double alpha_per_unit = tls_alpha_unchecked(0.0, unit, TlsConvention::per_length);
    const double n0_gamma2_0 = ctx.n0_gamma2 > 0 ? ctx.n0_gamma2 : inv_tls * pi * ctx.f0 / (ctx.v * alpha_per_unit);

    std::vector<double> pc_starts;
    if (ctx.p_c > 0)
        pc_starts.push_back(ctx.p_c);
    const double lp_lo = std::log(power.minCoeff());
    const double lp_hi = std::log(power.maxCoeff());
    for (int k = 0; k <= 8; ++k)
        pc_starts.push_back(std::exp(lp_lo + (lp_hi - lp_lo) * k / 8.0));

    LmSummary best;
    bool have_best = false;
    for (const double pc : pc_starts)
    {
        const Eigen::Vector3d x0(std::log(n0_gamma2_0), std::log(pc), std::log(q_rl0));
        LmSummary s = levenberg_marquardt(evaluate, x0);
        if (!have_best || s.cost < best.cost)
        {
            best = std::move(s);
            have_best = true;
        }
    }

    TlsFit out;
    out.params = params_from(best.x);
    out.n_iter = best.iterations;
    out.converged = best.converged();
    out.residual_rms = std::sqrt(best.residual.squaredNorm() / static_cast<double>(m));
    const Eigen::MatrixXd cov = linearized_covariance(best.jacobian, best.residual);
    out.n0_gamma2_sigma = out.params.n0_gamma2 * std::sqrt(cov(0, 0));
    out.p_c_sigma = out.params.p_c * std::sqrt(cov(1, 1));
    out.q_rl_sigma = out.params.q_rl * std::sqrt(cov(2, 2));
    return out;
}

double phonon_number(double p_at_sample, const ModeParams &mode)
{
    require_non_negative("p_at_sample", p_at_sample);
    mode.validate();
    const double ql = mode.loaded_q();
    const double omega = 2.0 * pi * mode.f0;
    return 4.0 * ql * ql * p_at_sample / (mode.qe * constants::hbar * omega * omega);
}

double mean_free_path(double alpha_p)
{
    require_non_negative("alpha_p", alpha_p);
    if (alpha_p == 0.0)
        throw InfinitePathError("alpha_p = 0 gives an unbounded mean free path");
    return 1.0 / alpha_p;
}

double coupling_estimate(double beta, double v0_rms)
{
    require_non_negative("beta", beta);
    if (beta > 1.0)
        throw ValidationError("beta", "must be <= 1");
    require_non_negative("v0_rms", v0_rms);
    return constants::elementary_charge * beta * v0_rms / (2.0 * pi * constants::hbar);
}

} // namespace sawres
