#pragma once

#include <span>
#include <string>
#include <vector>

#include "sawres/dataio.hpp"
#include "sawres/fitting.hpp"
#include "sawres/geometry.hpp"
#include "sawres/loss.hpp"

namespace sawres
{

enum class ReportFormat
{
    json,
    csv,
};

/// Parses "json" / "csv"; throws ValidationError otherwise.
ReportFormat parse_report_format(const std::string &name);

// Every report carries a schema tag ("sawres.<kind>/<version>"), keeps a fixed
// field order and prints numbers at round-trip precision. Non-finite values
// are rejected with ValidationError instead of being written.

inline constexpr const char *kFitSchema = "sawres.fit/1";
inline constexpr const char *kDesignSchema = "sawres.design/1";
inline constexpr const char *kRsAlphaSchema = "sawres.rs_alpha/1";
inline constexpr const char *kPowerLawSchema = "sawres.powerlaw/1";
inline constexpr const char *kTlsSchema = "sawres.tls/1";
inline constexpr const char *kTableSchema = "sawres.table/1";

/// Records {f0_hz, qi, qe, qi_sigma, qe_sigma, residual_rms, converged}.
std::string write_report(std::span<const FitResult> results, ReportFormat format);

struct DesignReport
{
    std::string name;
    DerivedParams derived;
    FrequencyBand window;
    std::vector<double> modes;
};
std::string write_report(const DesignReport &design, ReportFormat format);

std::string write_report(const RsAlphaFit &fit, ReportFormat format);
std::string write_report(const PowerLaw &fit, ReportFormat format);
std::string write_report(const TlsFit &fit, ReportFormat format);

/// Device table with derived cavity quantities for the given material.
std::string write_report(const DeviceTable &table, const MaterialParams &mat, ReportFormat format);

struct PlotPoint
{
    double x = 0.0;
    double y = 0.0;     // measured; NaN for curve-only rows, written empty
    double y_fit = 0.0;
};

/// CSV with header `<x_name>,<y_name>,<y_name>_fit`.
std::string write_plot_csv(std::span<const PlotPoint> points, const std::string &x_name, const std::string &y_name);

} // namespace sawres
