#include "deckchase/uav_model.hpp"

#include "deckchase/errors.hpp"

#include <fmt/format.h>

namespace deckchase::uav {

Eigen::MatrixXd kronecker_identity(int n, const Eigen::MatrixXd& block) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * block.rows(), n * block.cols());
  for (int i = 0; i < n; ++i) {
    out.block(i * block.rows(), i * block.cols(), block.rows(), block.cols()) = block;
  }
  return out;
}

UavLtiModel::UavLtiModel(double dt_p) : dt_(dt_p) {
  if (!(dt_p > 0.0)) {
    throw InvalidArgument(fmt::format("model step must be positive, got {}", dt_p));
  }
  const double dt2 = dt_p * dt_p;
  axis_transition_ << 1.0, dt_p, dt2 / 2.0,
                      0.0, 1.0, dt_p,
                      0.0, 0.0, 1.0;
  axis_input_ << dt2 * dt_p / 6.0, dt2 / 2.0, dt_p;
  transition_ = kronecker_identity(kAxes, axis_transition_);
  input_ = kronecker_identity(kAxes, axis_input_);
}

UavLtiModel build_model(double dt_p) { return UavLtiModel(dt_p); }

UavState step(const UavLtiModel& model, const UavState& x, const UavInput& u) {
  UavState next;
  next.values = model.transition() * x.values + model.input() * u;
  return next;
}

std::vector<UavState> rollout(const UavLtiModel& model, const UavState& x0,
                              std::span<const UavInput> inputs, int horizon) {
  if (inputs.empty()) {
    throw LengthMismatch("rollout needs at least one input");
  }
  if (horizon < static_cast<int>(inputs.size())) {
    throw LengthMismatch(fmt::format("control horizon {} exceeds prediction horizon {}", inputs.size(), horizon));
  }
  std::vector<UavState> states;
  states.reserve(static_cast<std::size_t>(horizon));
  UavState x = x0;
  for (int m = 0; m < horizon; ++m) {
    const std::size_t idx = std::min(static_cast<std::size_t>(m), inputs.size() - 1);
    x = step(model, x, inputs[idx]);
    states.push_back(x);
  }
  return states;
}

}  // namespace deckchase::uav
