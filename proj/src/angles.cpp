#include "deckchase/angles.hpp"

#include <cmath>

namespace deckchase {

double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, kTwoPi);
  if (wrapped <= -kPi) {
    wrapped += kTwoPi;
  }
  return wrapped;
}

double unwrap_near(double angle, double reference) {
  return reference + wrap_angle(angle - reference);
}

}  // namespace deckchase
