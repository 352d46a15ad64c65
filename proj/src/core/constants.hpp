#pragma once

// Physical constants and unit conventions.
//
// Internal units: frequency MHz, magnetic field mT, time µs. Conversions to
// SI happen only where a formula needs SI (magnetometry) or at file/CLI
// boundaries.

namespace nvkit::constants {

inline constexpr double kPi = 3.14159265358979323846;

// NV ground-state zero-field splitting (MHz).
inline constexpr double kZeroFieldSplitting = 2870.0;

// Electron gyromagnetic ratio, 28.0249514 GHz/T expressed in MHz/mT.
inline constexpr double kGammaElectron = 28.0249514;

// 13C gyromagnetic ratio, 10.7084 MHz/T expressed in MHz/mT.
inline constexpr double kGamma13C = 10.7084e-3;

// Default 14N hyperfine tensor (MHz).
inline constexpr double kN14AParallel = -2.16;
inline constexpr double kN14APerp = -2.7;

// Effective axial 13C coupling of the strongly coupled site (MHz).
inline constexpr double kC13AParallel = 6.43;

inline constexpr double kHbar = 1.054571817e-34;      // J s
inline constexpr double kBohrMagneton = 9.2740100783e-24;  // J/T
inline constexpr double kLandeG = 2.0;

// Carbon atom number density of diamond (cm^-3).
inline constexpr double kCarbonDensityPerCm3 = 1.76e23;

}  // namespace nvkit::constants
