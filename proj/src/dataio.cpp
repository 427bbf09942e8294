#include "sawres/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sawres/constants.hpp"
#include "validate.hpp"

namespace sawres
{

namespace
{

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::string upper(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
    return out;
}

std::vector<std::string_view> split(std::string_view s, bool comma)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto is_sep = [&](char c) { return comma ? c == ',' : std::isspace(static_cast<unsigned char>(c)) != 0; };
    if (comma)
    {
        while (true)
        {
            const std::size_t j = s.find(',', i);
            out.push_back(trim(s.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i)));
            if (j == std::string_view::npos)
                break;
            i = j + 1;
        }
        return out;
    }
    while (i < s.size())
    {
        while (i < s.size() && is_sep(s[i]))
            ++i;
        std::size_t j = i;
        while (j < s.size() && !is_sep(s[j]))
            ++j;
        if (j > i)
            out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_number(std::string_view token, std::size_t line)
{
    if (!token.empty() && token.front() == '+')
        token.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw ParseError(line, "malformed number '" + std::string(token) + "'");
    if (!std::isfinite(value))
        throw ParseError(line, "non-finite value '" + std::string(token) + "'");
    return value;
}

// "meta key=value ..." comment payloads written by write_trace.
void parse_meta(std::string_view comment, TraceMeta &meta, std::size_t line)
{
    const auto tokens = split(trim(comment), false);
    if (tokens.empty() || tokens.front() != "meta")
        return;
    for (std::size_t k = 1; k < tokens.size(); ++k)
    {
        const auto eq = tokens[k].find('=');
        if (eq == std::string_view::npos)
            continue;
        const auto key = tokens[k].substr(0, eq);
        const double value = parse_number(tokens[k].substr(eq + 1), line);
        if (key == "power_dbm")
            meta.power_dbm = value;
        else if (key == "attenuation_db")
            meta.attenuation_db = value;
        else if (key == "temperature_k")
            meta.temperature = value;
    }
}

struct Sample
{
    double f;
    std::complex<double> s;
    std::size_t line;
};

ComplexTrace assemble(const std::vector<Sample> &samples, const TraceMeta &meta)
{
    if (samples.size() < 2)
        throw ParseError(0, "trace needs at least 2 data points, got " + std::to_string(samples.size()));
    ComplexTrace trace;
    trace.meta = meta;
    trace.freqs.resize(static_cast<Eigen::Index>(samples.size()));
    trace.s11.resize(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        if (i > 0 && !(samples[i].f > samples[i - 1].f))
            throw ParseError(samples[i].line, "non-monotone frequencies");
        trace.freqs[static_cast<Eigen::Index>(i)] = samples[i].f;
        trace.s11[static_cast<Eigen::Index>(i)] = samples[i].s;
    }
    return trace;
}

ComplexTrace parse_touchstone(std::istream &in)
{
    double unit = 1e9;
    enum class Format
    {
        ri,
        ma,
        db
    } format = Format::ma;
    bool have_options = false;
    TraceMeta meta;
    std::vector<Sample> samples;

    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw))
    {
        ++line;
        std::string_view text(raw);
        if (const auto bang = text.find('!'); bang != std::string_view::npos)
        {
            parse_meta(text.substr(bang + 1), meta, line);
            text = text.substr(0, bang);
        }
        text = trim(text);
        if (text.empty())
            continue;

        if (text.front() == '#')
        {
            if (have_options)
                continue; // only the first option line counts
            have_options = true;
            const auto tokens = split(text.substr(1), false);
            for (std::size_t k = 0; k < tokens.size(); ++k)
            {
                const std::string tok = upper(tokens[k]);
                if (tok == "HZ")
                    unit = 1.0;
                else if (tok == "KHZ")
                    unit = 1e3;
                else if (tok == "MHZ")
                    unit = 1e6;
                else if (tok == "GHZ")
                    unit = 1e9;
                else if (tok == "S")
                    continue;
                else if (tok == "Y" || tok == "Z" || tok == "H" || tok == "G")
                    throw ParseError(line, "unsupported parameter type '" + tok + "', only S is supported");
                else if (tok == "RI")
                    format = Format::ri;
                else if (tok == "MA")
                    format = Format::ma;
                else if (tok == "DB")
                    format = Format::db;
                else if (tok == "R")
                {
                    // Reference impedance is irrelevant for a single-port reflection.
                    if (k + 1 >= tokens.size())
                        throw ParseError(line, "option 'R' without impedance");
                    parse_number(tokens[++k], line);
                }
                else
                    throw ParseError(line, "unknown option '" + std::string(tokens[k]) + "'");
            }
            continue;
        }

        const auto tokens = split(text, false);
        if (tokens.size() > 3)
            throw ParseError(line, "unsupported n-port file: " + std::to_string(tokens.size()) +
                                       " values per line, a one-port file has 3");
        if (tokens.size() < 3)
            throw ParseError(line, "expected 3 values, got " + std::to_string(tokens.size()));
        const double f = parse_number(tokens[0], line) * unit;
        const double a = parse_number(tokens[1], line);
        const double b = parse_number(tokens[2], line);
        std::complex<double> s;
        const double deg = constants::pi / 180.0;
        switch (format)
        {
        case Format::ri:
            s = {a, b};
            break;
        case Format::ma:
            s = {a * std::cos(b * deg), a * std::sin(b * deg)};
            break;
        case Format::db:
        {
            const double mag = std::pow(10.0, a / 20.0);
            s = {mag * std::cos(b * deg), mag * std::sin(b * deg)};
            break;
        }
        }
        samples.push_back({f, s, line});
    }
    return assemble(samples, meta);
}

ComplexTrace parse_csv(std::istream &in)
{
    TraceMeta meta;
    std::vector<Sample> samples;
    bool have_header = false;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw))
    {
        ++line;
        const std::string_view text = trim(raw);
        if (text.empty())
            continue;
        if (text.front() == '#')
        {
            parse_meta(text.substr(1), meta, line);
            continue;
        }
        const auto fields = split(text, true);
        if (!have_header)
        {
            if (fields.size() != 3 || fields[0] != "freq_hz" || fields[1] != "re" || fields[2] != "im")
                throw ParseError(line, "expected header 'freq_hz,re,im'");
            have_header = true;
            continue;
        }
        if (fields.size() != 3)
            throw ParseError(line, "expected 3 fields, got " + std::to_string(fields.size()));
        samples.push_back({parse_number(fields[0], line),
                           {parse_number(fields[1], line), parse_number(fields[2], line)},
                           line});
    }
    if (!have_header)
        throw ParseError(0, "missing header 'freq_hz,re,im'");
    return assemble(samples, meta);
}

std::string format_number(double x)
{
    if (!std::isfinite(x))
        throw ValidationError("value", "refusing to write a non-finite number");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

TraceFormat trace_format_for(const std::filesystem::path &path)
{
    return upper(path.extension().string()) == ".S1P" ? TraceFormat::touchstone_s1p : TraceFormat::csv;
}

ComplexTrace parse_trace(std::istream &in, TraceFormat format)
{
    return format == TraceFormat::touchstone_s1p ? parse_touchstone(in) : parse_csv(in);
}

ComplexTrace read_trace(const std::filesystem::path &path, TraceFormat format)
{
    const std::string ext = upper(path.extension().string());
    if (ext.size() == 4 && ext.rfind(".S", 0) == 0 && ext.back() == 'P' && ext != ".S1P")
        throw ParseError(0, "unsupported n-port file '" + path.string() + "'");
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    return parse_trace(in, format);
}

ComplexTrace read_trace(const std::filesystem::path &path)
{
    return read_trace(path, trace_format_for(path));
}

void write_trace(std::ostream &out, const ComplexTrace &trace, TraceFormat format)
{
    trace.validate();
    const TraceMeta &m = trace.meta;
    const char comment = format == TraceFormat::touchstone_s1p ? '!' : '#';
    out << comment << " meta power_dbm=" << format_number(m.power_dbm)
        << " attenuation_db=" << format_number(m.attenuation_db) << " temperature_k=" << format_number(m.temperature)
        << '\n';
    const char *sep = ",";
    if (format == TraceFormat::touchstone_s1p)
    {
        out << "# Hz S RI R 50\n";
        sep = " ";
    }
    else
    {
        out << "freq_hz,re,im\n";
    }
    for (Eigen::Index i = 0; i < trace.size(); ++i)
        out << format_number(trace.freqs[i]) << sep << format_number(trace.s11[i].real()) << sep
            << format_number(trace.s11[i].imag()) << '\n';
}

void write_trace(const std::filesystem::path &path, const ComplexTrace &trace, TraceFormat format)
{
    std::ostringstream buffer;
    write_trace(buffer, trace, format);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << buffer.str();
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Device table, geometry and material documents
// ---------------------------------------------------------------------------

double DeviceRecord::product_mismatch() const
{
    return std::abs(qi_f0_product - qi_meas * f0_meas) / qi_f0_product;
}

const DeviceRecord &DeviceTable::at(std::string_view name) const
{
    for (const auto &r : records)
        if (r.name == name)
            return r;
    throw ValidationError("name", "no device named '" + std::string(name) + "'");
}

namespace
{

using nlohmann::json;

class FieldReader
{
public:
    FieldReader(const json &obj, std::string where) : obj_(obj), where_(std::move(where)) {}

    double number(const char *key) const
    {
        const json &v = require(key);
        if (!v.is_number())
            fail(key, "must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x))
            fail(key, "must be finite");
        return x;
    }

    double number_or(const char *key, double fallback) const
    {
        return obj_.contains(key) ? number(key) : fallback;
    }

    int integer(const char *key) const
    {
        const json &v = require(key);
        if (!v.is_number_integer())
            fail(key, "must be an integer");
        return v.get<int>();
    }

    std::string string(const char *key) const
    {
        const json &v = require(key);
        if (!v.is_string())
            fail(key, "must be a string");
        return v.get<std::string>();
    }

    [[noreturn]] void fail(const char *key, const std::string &what) const
    {
        throw SchemaError(where_ + ": field '" + key + "' " + what);
    }

private:
    const json &require(const char *key) const
    {
        if (!obj_.contains(key))
            fail(key, "is missing");
        return obj_.at(key);
    }

    const json &obj_;
    std::string where_;
};

json parse_json(std::string_view text, const char *what)
{
    try
    {
        return json::parse(text.begin(), text.end());
    }
    catch (const json::parse_error &e)
    {
        throw SchemaError(std::string(what) + ": invalid JSON: " + e.what());
    }
}

void check_schema_version(const json &doc, const char *what)
{
    if (!doc.is_object())
        throw SchemaError(std::string(what) + ": top level must be an object");
    if (doc.contains("schema_version"))
    {
        const json &v = doc.at("schema_version");
        if (!v.is_number_integer() || v.get<int>() != kDeviceTableSchemaVersion)
            throw SchemaError(std::string(what) + ": unsupported schema_version " + v.dump());
    }
}

// Struct member names as reported by validate(), paired with file keys.
using KeyMap = std::pair<const char *, const char *>;
constexpr KeyMap geometry_keys[] = {{"a", "a_m"}, {"aperture", "aperture_m"}, {"film_thickness", "film_thickness_m"}};
constexpr KeyMap material_keys[] = {
    {"v", "v_m_per_s"}, {"rho", "rho_kg_per_m3"}, {"temperature", "temperature_k"}};

template <std::size_t N>
const char *json_key(const std::string &field, const KeyMap (&map)[N])
{
    for (const auto &[member, key] : map)
        if (field == member)
            return key;
    return field.c_str();
}

std::string detail_of(const ValidationError &e)
{
    const std::string what = e.what();
    const std::string prefix = e.field() + ": ";
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

DeviceGeometry read_geometry(const FieldReader &r)
{
    DeviceGeometry g;
    g.a = r.number("a_m");
    g.aperture = r.number_or("aperture_m", 0.0);
    g.nt = r.integer("nt");
    g.ng = r.integer("ng");
    g.m_half_waves = r.integer("m_half_waves");
    g.film_thickness = r.number_or("film_thickness_m", 0.0);
    try
    {
        g.validate();
    }
    catch (const ValidationError &e)
    {
        r.fail(json_key(e.field(), geometry_keys), detail_of(e));
    }
    return g;
}

} // namespace

DeviceTable parse_device_table(std::string_view json_text)
{
    DeviceTable table;
    if (trim(json_text).empty())
    {
        table.warnings.push_back("device table is empty");
        return table;
    }
    const json doc = parse_json(json_text, "device table");
    check_schema_version(doc, "device table");
    if (!doc.contains("devices") || !doc.at("devices").is_array())
        throw SchemaError("device table: field 'devices' must be an array");

    std::size_t row = 0;
    for (const json &entry : doc.at("devices"))
    {
        ++row;
        std::string where = "row " + std::to_string(row);
        if (!entry.is_object())
            throw SchemaError(where + ": must be an object");
        if (entry.contains("name") && entry.at("name").is_string())
            where += " (" + entry.at("name").get<std::string>() + ")";
        const FieldReader r(entry, where);

        DeviceRecord rec;
        rec.name = r.string("name");
        rec.geometry = read_geometry(r);
        rec.f0_meas = r.number("f0_meas_hz");
        rec.qe_meas = r.number("qe_meas");
        rec.qi_meas = r.number("qi_meas");
        rec.qi_f0_product = r.number("qi_f0_product_hz");
        if (!(rec.f0_meas > 0))
            r.fail("f0_meas_hz", "must be > 0");
        if (!(rec.qe_meas > 0))
            r.fail("qe_meas", "must be > 0");
        if (!(rec.qi_meas > 0))
            r.fail("qi_meas", "must be > 0");
        if (!(rec.qi_f0_product > 0))
            r.fail("qi_f0_product_hz", "must be > 0");
        if (rec.product_mismatch() >= 0.01)
        {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: qi_f0_product_hz differs from qi_meas * f0_meas by %.2f%%",
                          where.c_str(), 100.0 * rec.product_mismatch());
            table.warnings.emplace_back(buf);
        }
        table.records.push_back(std::move(rec));
    }
    if (table.records.empty())
        table.warnings.push_back("device table has no devices");
    return table;
}

std::string read_text_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DeviceTable load_device_table(const std::filesystem::path &path)
{
    return parse_device_table(read_text_file(path));
}

DeviceTable load_bundled_device_table()
{
    return parse_device_table(bundled_device_table_json());
}

DeviceGeometry parse_geometry(std::string_view json_text)
{
    const json doc = parse_json(json_text, "geometry");
    check_schema_version(doc, "geometry");
    return read_geometry(FieldReader(doc, "geometry"));
}

DeviceGeometry load_geometry(const std::filesystem::path &path)
{
    return parse_geometry(read_text_file(path));
}

MaterialParams parse_material(std::string_view json_text)
{
    const json doc = parse_json(json_text, "material");
    check_schema_version(doc, "material");
    const FieldReader r(doc, "material");
    MaterialParams m;
    m.v = r.number_or("v_m_per_s", m.v);
    m.rho = r.number_or("rho_kg_per_m3", m.rho);
    m.rs_mag = r.number_or("rs_mag", m.rs_mag);
    m.temperature = r.number_or("temperature_k", m.temperature);
    try
    {
        m.validate();
    }
    catch (const ValidationError &e)
    {
        r.fail(json_key(e.field(), material_keys), detail_of(e));
    }
    return m;
}

MaterialParams load_material(const std::filesystem::path &path)
{
    return parse_material(read_text_file(path));
}

} // namespace sawres
