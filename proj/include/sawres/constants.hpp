#pragma once

#include <numbers>

// CODATA 2018 exact SI values.
namespace sawres::constants
{
inline constexpr double pi = std::numbers::pi;
inline constexpr double planck = 6.62607015e-34;          // h [J s]
inline constexpr double hbar = planck / (2.0 * pi);       // [J s]
inline constexpr double elementary_charge = 1.602176634e-19; // e [C]
inline constexpr double boltzmann = 1.380649e-23;         // k_B [J/K]
} // namespace sawres::constants
