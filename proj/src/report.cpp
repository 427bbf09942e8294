#include "sawres/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "validate.hpp"

namespace sawres
{

namespace
{

using ojson = nlohmann::ordered_json;

double finite(const char *field, double x)
{
    detail::require_finite(field, x);
    return x;
}

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", finite("value", x));
    return buf;
}

std::string dump(const ojson &doc)
{
    return doc.dump(2) + "\n";
}

// One schema comment, a header row, then rows of already-formatted cells.
std::string csv(const char *schema, const std::vector<std::string> &header,
                const std::vector<std::vector<std::string>> &rows)
{
    std::ostringstream out;
    out << "# schema " << schema << '\n';
    auto line = [&](const std::vector<std::string> &cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(header);
    for (const auto &r : rows)
        line(r);
    return out.str();
}

} // namespace

ReportFormat parse_report_format(const std::string &name)
{
    if (name == "json")
        return ReportFormat::json;
    if (name == "csv")
        return ReportFormat::csv;
    throw ValidationError("format", "expected 'json' or 'csv', got '" + name + "'");
}

std::string write_report(std::span<const FitResult> results, ReportFormat format)
{
    const std::vector<std::string> header{"f0_hz", "qi", "qe", "qi_sigma", "qe_sigma", "residual_rms", "converged"};
    if (format == ReportFormat::csv)
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto &r : results)
            rows.push_back({num(r.mode.f0), num(r.mode.qi), num(r.mode.qe), num(r.sigma.qi), num(r.sigma.qe),
                            num(r.residual_norm), r.converged ? "true" : "false"});
        return csv(kFitSchema, header, rows);
    }
    ojson doc;
    doc["schema"] = kFitSchema;
    doc["results"] = ojson::array();
    for (const auto &r : results)
    {
        ojson rec;
        rec["f0_hz"] = finite("f0_hz", r.mode.f0);
        rec["qi"] = finite("qi", r.mode.qi);
        rec["qe"] = finite("qe", r.mode.qe);
        rec["qi_sigma"] = finite("qi_sigma", r.sigma.qi);
        rec["qe_sigma"] = finite("qe_sigma", r.sigma.qe);
        rec["residual_rms"] = finite("residual_rms", r.residual_norm);
        rec["converged"] = r.converged;
        doc["results"].push_back(rec);
    }
    return dump(doc);
}

std::string write_report(const DesignReport &design, ReportFormat format)
{
    const DerivedParams &d = design.derived;
    const std::vector<std::pair<const char *, double>> fields{
        {"lambda0_m", d.lambda0}, {"f0_hz", d.f0},         {"lp_m", d.lp},
        {"d_m", d.d},             {"lc_m", d.lc},          {"fsr_hz", d.fsr},
        {"r", d.r},               {"df_1sb_hz", d.df_1sb}, {"df_idt_hz", d.df_idt},
        {"qg", d.qg},             {"window_lo_hz", design.window.lo}, {"window_hi_hz", design.window.hi},
    };
    if (format == ReportFormat::csv)
    {
        std::vector<std::string> header{"name"};
        std::vector<std::string> row{design.name};
        for (const auto &[k, v] : fields)
        {
            header.emplace_back(k);
            row.push_back(num(v));
        }
        header.emplace_back("mode_count");
        row.push_back(std::to_string(design.modes.size()));
        return csv(kDesignSchema, header, {row});
    }
    ojson doc;
    doc["schema"] = kDesignSchema;
    doc["name"] = design.name;
    for (const auto &[k, v] : fields)
        doc[k] = finite(k, v);
    doc["mode_count"] = design.modes.size();
    doc["modes_hz"] = ojson::array();
    for (const double f : design.modes)
        doc["modes_hz"].push_back(finite("modes_hz", f));
    return dump(doc);
}

std::string write_report(const RsAlphaFit &fit, ReportFormat format)
{
    const std::vector<std::pair<const char *, double>> fields{
        {"rs_mag", fit.rs_mag},
        {"rs_sigma", fit.rs_sigma},
        {"alpha_p_per_m", fit.alpha_p},
        {"alpha_p_sigma_per_m", fit.alpha_sigma},
        {"alpha_p_upper_per_m", fit.alpha_upper()},
        {"residual_rms_log_q", fit.residual_rms},
    };
    if (format == ReportFormat::csv)
    {
        std::vector<std::string> header;
        std::vector<std::string> row;
        for (const auto &[k, v] : fields)
        {
            header.emplace_back(k);
            row.push_back(num(v));
        }
        header.emplace_back("converged");
        row.emplace_back(fit.converged ? "true" : "false");
        return csv(kRsAlphaSchema, header, {row});
    }
    ojson doc;
    doc["schema"] = kRsAlphaSchema;
    for (const auto &[k, v] : fields)
        doc[k] = finite(k, v);
    doc["n_iter"] = fit.n_iter;
    doc["converged"] = fit.converged;
    return dump(doc);
}

std::string write_report(const PowerLaw &fit, ReportFormat format)
{
    if (format == ReportFormat::csv)
        return csv(kPowerLawSchema, {"c1", "c1_sigma", "c2", "c2_sigma"},
                   {{num(fit.c1), num(fit.c1_sigma), num(fit.c2), num(fit.c2_sigma)}});
    ojson doc;
    doc["schema"] = kPowerLawSchema;
    doc["model"] = "qi / 1e3 = c1 * (f / 1 GHz)^(-c2)";
    doc["c1"] = finite("c1", fit.c1);
    doc["c1_sigma"] = finite("c1_sigma", fit.c1_sigma);
    doc["c2"] = finite("c2", fit.c2);
    doc["c2_sigma"] = finite("c2_sigma", fit.c2_sigma);
    return dump(doc);
}

std::string write_report(const TlsFit &fit, ReportFormat format)
{
    const TlsParams &p = fit.params;
    const std::vector<std::pair<const char *, double>> fields{
        {"n0_gamma2_j_per_m3", p.n0_gamma2},
        {"n0_gamma2_sigma", fit.n0_gamma2_sigma},
        {"p_c_w", p.p_c},
        {"p_c_sigma_w", fit.p_c_sigma},
        {"p_c_dbm", watts_to_dbm(p.p_c)},
        {"q_rl", p.q_rl},
        {"q_rl_sigma", fit.q_rl_sigma},
        {"qi_low_power", fit.qi_low_power()},
        {"f0_hz", p.f0},
        {"rho_kg_per_m3", p.rho},
        {"v_m_per_s", p.v},
        {"temperature_k", p.temperature},
        {"residual_rms_log_q", fit.residual_rms},
    };
    if (format == ReportFormat::csv)
    {
        std::vector<std::string> header;
        std::vector<std::string> row;
        for (const auto &[k, v] : fields)
        {
            header.emplace_back(k);
            row.push_back(num(v));
        }
        header.emplace_back("converged");
        row.emplace_back(fit.converged ? "true" : "false");
        return csv(kTlsSchema, header, {row});
    }
    ojson doc;
    doc["schema"] = kTlsSchema;
    for (const auto &[k, v] : fields)
        doc[k] = finite(k, v);
    doc["n_iter"] = fit.n_iter;
    doc["converged"] = fit.converged;
    return dump(doc);
}

std::string write_report(const DeviceTable &table, const MaterialParams &mat, ReportFormat format)
{
    const std::vector<std::string> header{"name",   "a_m",     "m_half_waves", "f0_meas_hz", "qe_meas",
                                          "qi_meas", "qi_f0_product_hz", "product_mismatch", "f0_nominal_hz",
                                          "lc_m",   "fsr_hz",  "qg"};
    std::vector<std::vector<std::string>> rows;
    ojson doc;
    doc["schema"] = kTableSchema;
    doc["devices"] = ojson::array();
    for (const auto &r : table.records)
    {
        const DerivedParams d = derive_params(r.geometry, mat);
        rows.push_back({r.name, num(r.geometry.a), std::to_string(r.geometry.m_half_waves), num(r.f0_meas),
                        num(r.qe_meas), num(r.qi_meas), num(r.qi_f0_product), num(r.product_mismatch()), num(d.f0),
                        num(d.lc), num(d.fsr), num(d.qg)});
        ojson rec;
        rec["name"] = r.name;
        rec["a_m"] = r.geometry.a;
        rec["m_half_waves"] = r.geometry.m_half_waves;
        rec["f0_meas_hz"] = r.f0_meas;
        rec["qe_meas"] = r.qe_meas;
        rec["qi_meas"] = r.qi_meas;
        rec["qi_f0_product_hz"] = r.qi_f0_product;
        rec["product_mismatch"] = r.product_mismatch();
        rec["f0_nominal_hz"] = finite("f0", d.f0);
        rec["lc_m"] = finite("lc", d.lc);
        rec["fsr_hz"] = finite("fsr", d.fsr);
        rec["qg"] = finite("qg", d.qg);
        doc["devices"].push_back(rec);
    }
    if (format == ReportFormat::csv)
        return csv(kTableSchema, header, rows);
    doc["warnings"] = table.warnings;
    return dump(doc);
}

std::string write_plot_csv(std::span<const PlotPoint> points, const std::string &x_name, const std::string &y_name)
{
    std::ostringstream out;
    out << x_name << ',' << y_name << ',' << y_name << "_fit\n";
    for (const auto &p : points)
        out << num(p.x) << ',' << (std::isnan(p.y) ? std::string() : num(p.y)) << ',' << num(p.y_fit) << '\n';
    return out.str();
}

} // namespace sawres
