#include "eflfg/types.hpp"

#include <cmath>

namespace eflfg {

double clipped_squared_loss(double prediction, double target) {
  if (!std::isfinite(prediction) || !std::isfinite(target)) {
    throw std::invalid_argument("clipped_squared_loss: non-finite input");
  }
  const double diff = prediction - target;
  return std::min(diff * diff, 1.0);
}

double squared_error(double prediction, double target) {
  if (!std::isfinite(prediction) || !std::isfinite(target)) {
    throw std::invalid_argument("squared_error: non-finite input");
  }
  const double diff = prediction - target;
  return diff * diff;
}

}  // namespace eflfg
