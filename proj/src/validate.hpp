#pragma once

#include <cmath>
#include <string>

#include "sawres/errors.hpp"

namespace sawres::detail
{

inline void require_finite(const char *field, double value)
{
    if (!std::isfinite(value))
        throw ValidationError(field, "must be finite, got " + std::to_string(value));
}

inline void require_positive(const char *field, double value)
{
    require_finite(field, value);
    if (!(value > 0.0))
        throw ValidationError(field, "must be > 0, got " + std::to_string(value));
}

inline void require_non_negative(const char *field, double value)
{
    require_finite(field, value);
    if (value < 0.0)
        throw ValidationError(field, "must be >= 0, got " + std::to_string(value));
}

inline void require_at_least(const char *field, long long value, long long minimum)
{
    if (value < minimum)
        throw ValidationError(field, "must be >= " + std::to_string(minimum) + ", got " + std::to_string(value));
}

} // namespace sawres::detail
