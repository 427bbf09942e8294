#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sawres/geometry.hpp"
#include "sawres/response.hpp"

namespace sawres
{

enum class TraceFormat
{
    touchstone_s1p,
    csv,
};

/// .s1p (any case) selects Touchstone, everything else CSV.
TraceFormat trace_format_for(const std::filesystem::path &path);

/// Touchstone v1: `!` comments, `# <unit> S <RI|MA|DB> R <z0>` option line,
/// unit Hz/kHz/MHz/GHz. CSV: `freq_hz,re,im` header, `#` comments.
/// Samples are converted to real/imaginary pairs in Hz.
ComplexTrace parse_trace(std::istream &in, TraceFormat format);
ComplexTrace read_trace(const std::filesystem::path &path, TraceFormat format);
ComplexTrace read_trace(const std::filesystem::path &path);

/// Writes 17 significant digits, so read_trace(write_trace(t)) == t bit for bit.
void write_trace(std::ostream &out, const ComplexTrace &trace, TraceFormat format);
void write_trace(const std::filesystem::path &path, const ComplexTrace &trace, TraceFormat format);

struct DeviceRecord
{
    std::string name;
    DeviceGeometry geometry;
    double f0_meas = 0.0;       // [Hz]
    double qe_meas = 0.0;
    double qi_meas = 0.0;
    double qi_f0_product = 0.0; // [Hz]

    /// |qi_f0_product - qi_meas f0_meas| / qi_f0_product
    double product_mismatch() const;
};

struct DeviceTable
{
    std::vector<DeviceRecord> records;
    std::vector<std::string> warnings;

    const DeviceRecord &at(std::string_view name) const;
};

inline constexpr int kDeviceTableSchemaVersion = 1;

/// Parses the device-table JSON document. Schema violations throw
/// SchemaError naming the row and field; rows whose product column disagrees
/// with qi_meas * f0_meas by more than 1% produce a warning.
DeviceTable parse_device_table(std::string_view json_text);
DeviceTable load_device_table(const std::filesystem::path &path);

/// The 18 devices of the measured resonator table shipped with the library.
DeviceTable load_bundled_device_table();
std::string_view bundled_device_table_json();

/// Single-device geometry file (same field names as a table row).
DeviceGeometry parse_geometry(std::string_view json_text);
DeviceGeometry load_geometry(const std::filesystem::path &path);

/// Material file: v_m_per_s, rho_kg_per_m3, rs_mag, temperature_k. Missing
/// fields keep the defaults of MaterialParams.
MaterialParams parse_material(std::string_view json_text);
MaterialParams load_material(const std::filesystem::path &path);

std::string read_text_file(const std::filesystem::path &path);

} // namespace sawres
