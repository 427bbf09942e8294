#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sawres
{

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
    virtual const char *kind() const noexcept { return "error"; }
};

/// Input failed a domain invariant. `field()` names the offending field.
class ValidationError : public Error
{
public:
    ValidationError(std::string field, const std::string &what)
        : Error(field + ": " + what), field_(std::move(field))
    {
    }
    const std::string &field() const noexcept { return field_; }
    const char *kind() const noexcept override { return "validation"; }

private:
    std::string field_;
};

class SingularBackgroundError : public Error
{
public:
    using Error::Error;
    const char *kind() const noexcept override { return "singular_background"; }
};

class NoDipFoundError : public Error
{
public:
    using Error::Error;
    const char *kind() const noexcept override { return "no_dip_found"; }
};

class DegenerateFitError : public Error
{
public:
    using Error::Error;
    const char *kind() const noexcept override { return "degenerate_fit"; }
};

class InfinitePathError : public Error
{
public:
    using Error::Error;
    const char *kind() const noexcept override { return "infinite_path"; }
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error
{
public:
    ParseError(std::size_t line, const std::string &what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }
    const char *kind() const noexcept override { return "parse"; }

private:
    std::size_t line_;
};

class SchemaError : public Error
{
public:
    using Error::Error;
    const char *kind() const noexcept override { return "schema"; }
};

class IoError : public Error
{
public:
    using Error::Error;
    const char *kind() const noexcept override { return "io"; }
};

} // namespace sawres
