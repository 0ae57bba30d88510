#pragma once

#include <numbers>

namespace magmix {

inline constexpr double kPi = std::numbers::pi;
/// Vacuum permeability (T·m/A).
inline constexpr double kMu0 = 4.0e-7 * kPi;
/// Electron gyromagnetic ratio in the Landau-Lifshitz form (rad/(s·T)).
inline constexpr double kGammaLL = 1.760859e11;

}  // namespace magmix
