#pragma once

namespace deckchase {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Returns the representative of `angle` (mod 2 pi) closest to `reference`.
double unwrap_near(double angle, double reference);

}  // namespace deckchase
