#pragma once

// Discrete LTI prediction model of the multirotor: a triple integrator per
// axis (x, y, z, heading), driven by jerk. The 12x12 transition and 12x4
// input matrices are Kronecker products of the identity with a 3x3 / 3x1
// stencil.

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace deckchase::uav {

inline constexpr int kAxes = 4;
inline constexpr int kOrder = 3;
inline constexpr int kStateDim = kAxes * kOrder;

using Vec12 = Eigen::Matrix<double, kStateDim, 1>;
using Mat12 = Eigen::Matrix<double, kStateDim, kStateDim>;
using Mat12x4 = Eigen::Matrix<double, kStateDim, kAxes>;

enum Axis : int { kAxisX = 0, kAxisY = 1, kAxisZ = 2, kAxisPsi = 3 };

/// Position, first and second derivative per axis, laid out axis-major:
/// (x, xdot, xddot, y, ..., psi, psidot, psiddot). Heading stays unwrapped.
struct UavState {
  Vec12 values = Vec12::Zero();

  static constexpr int index(Axis axis, int derivative) { return axis * kOrder + derivative; }

  double position(Axis axis) const { return values[index(axis, 0)]; }
  double velocity(Axis axis) const { return values[index(axis, 1)]; }
  double acceleration(Axis axis) const { return values[index(axis, 2)]; }
  double& position(Axis axis) { return values[index(axis, 0)]; }
  double& velocity(Axis axis) { return values[index(axis, 1)]; }
  double& acceleration(Axis axis) { return values[index(axis, 2)]; }

  bool finite() const { return values.allFinite(); }
};

/// Jerk per translational axis and heading jerk.
using UavInput = Eigen::Vector4d;

class UavLtiModel {
 public:
  explicit UavLtiModel(double dt_p);

  const Mat12& transition() const { return transition_; }
  const Mat12x4& input() const { return input_; }
  const Eigen::Matrix3d& axis_transition() const { return axis_transition_; }
  const Eigen::Vector3d& axis_input() const { return axis_input_; }
  double dt() const { return dt_; }

 private:
  double dt_;
  Eigen::Matrix3d axis_transition_;
  Eigen::Vector3d axis_input_;
  Mat12 transition_;
  Mat12x4 input_;
};

UavLtiModel build_model(double dt_p);

Eigen::MatrixXd kronecker_identity(int n, const Eigen::MatrixXd& block);

UavState step(const UavLtiModel& model, const UavState& x, const UavInput& u);

/// Rolls the model out for `horizon` steps. `inputs` has the control-horizon
/// length; inputs beyond it are held at the last element.
std::vector<UavState> rollout(const UavLtiModel& model, const UavState& x0,
                              std::span<const UavInput> inputs, int horizon);

}  // namespace deckchase::uav
